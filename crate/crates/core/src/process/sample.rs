//! Exact sequential simulation of `(X, S)` at sorted points.

use super::{BridgeOutside, ProcessKind, ProcessSpec};
use crate::mc::Stream;
use rand::Rng;
use rand_distr::StandardNormal;

fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// Brownian motion and its integral, both started at 0, advanced over steps.
struct BmWalk {
    at: f64,
    w: f64,
    s: f64,
}

impl BmWalk {
    fn new() -> Self {
        BmWalk { at: 0.0, w: 0.0, s: 0.0 }
    }

    /// Advance to distance `to >= at`. Over a step `h` the increment `B(h)` and
    /// `∫_0^h B` have variances `h`, `h^3 / 3` and covariance `h^2 / 2`.
    fn advance(&mut self, to: f64, rng: &mut Stream) {
        let h = to - self.at;
        if h <= 0.0 {
            return;
        }
        let (z1, z2) = (normal(rng), normal(rng));
        let r = h.sqrt();
        let j = h * r * (0.5 * z1 + z2 / 12f64.sqrt());
        self.s += self.w * h + j;
        self.w += r * z1;
        self.at = to;
    }
}

pub(super) fn realize(spec: &ProcessSpec, points: &[f64], rng: &mut Stream) -> (Vec<f64>, Vec<f64>) {
    match spec.kind {
        ProcessKind::BrownianMotion => two_sided_bm(spec.anchor, points, rng),
        ProcessKind::BrownianBridge { horizon } => bridge(spec, horizon, points, rng),
        ProcessKind::OrnsteinUhlenbeck { rate } => ou(spec.anchor, rate, points, rng),
        ProcessKind::Custom => unreachable!("custom processes are rejected before sampling"),
    }
}

fn two_sided_bm(anchor: f64, points: &[f64], rng: &mut Stream) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let (mut gp, mut g) = (vec![0.0; n], vec![0.0; n]);
    let split = points.partition_point(|&p| p < anchor);
    let mut right = BmWalk::new();
    for i in split..n {
        right.advance(points[i] - anchor, rng);
        gp[i] = right.w;
        g[i] = right.s;
    }
    // the left branch is an independent Brownian motion run backwards from the anchor
    let mut left = BmWalk::new();
    for i in (0..split).rev() {
        left.advance(anchor - points[i], rng);
        gp[i] = left.w;
        g[i] = -left.s;
    }
    (gp, g)
}

fn bridge(spec: &ProcessSpec, horizon: f64, points: &[f64], rng: &mut Stream) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let (mut gp, mut g) = (vec![0.0; n], vec![0.0; n]);
    let mut walk = BmWalk::new();
    // (index, W, S) at clamped positions inside [0, horizon]
    let mut inside = Vec::with_capacity(n);
    for (i, &p) in points.iter().enumerate() {
        let u = p - spec.anchor;
        if (0.0..=horizon).contains(&u) {
            walk.advance(u, rng);
            inside.push((i, u, walk.w, walk.s));
        }
    }
    walk.advance(horizon, rng);
    let (wt, st) = (walk.w, walk.s);
    for (i, u, w, s) in inside {
        gp[i] = w - u / horizon * wt;
        g[i] = s - u * u / (2.0 * horizon) * wt;
    }
    if spec.bridge_outside == BridgeOutside::HoldConstant {
        let end = st - 0.5 * horizon * wt;
        for (i, &p) in points.iter().enumerate() {
            if p - spec.anchor > horizon {
                g[i] = end;
            }
        }
    }
    (gp, g)
}

/// `2x - 3 + 4e^{-x} - e^{-2x}`, the scaled conditional variance of the OU integral.
fn ou_integral_residual(x: f64) -> f64 {
    if x < 1e-3 {
        x * x * x * (2.0 / 3.0 - x * (0.5 - x * 7.0 / 30.0))
    } else {
        2.0 * x - 3.0 + 4.0 * (-x).exp() - (-2.0 * x).exp()
    }
}

fn ou(anchor: f64, rate: f64, points: &[f64], rng: &mut Stream) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let var = 1.0 / (2.0 * rate);
    // walk the points with the anchor merged in; integrals are relative to the start
    let split = points.partition_point(|&p| p < anchor);
    let order = (0..split).map(Some).chain([None]).chain((split..n).map(Some));
    let mut x = var.sqrt() * normal(rng);
    let mut int = 0.0;
    let mut at = if split > 0 { points[0] } else { anchor };
    let mut anchor_int = 0.0;
    let (mut gp, mut g) = (vec![0.0; n], vec![0.0; n]);
    for slot in order {
        let pos = slot.map_or(anchor, |i| points[i]);
        let h = pos - at;
        if h > 0.0 {
            let xr = rate * h;
            let rho = (-xr).exp();
            let one_minus = -(-xr).exp_m1();
            let vx = var * one_minus * (1.0 + rho);
            let vj = var / (rate * rate) * ou_integral_residual(xr);
            let cxj = var * one_minus * one_minus / rate;
            let l11 = vx.sqrt();
            let l21 = cxj / l11;
            let l22 = (vj - l21 * l21).max(0.0).sqrt();
            let (z1, z2) = (normal(rng), normal(rng));
            int += x * one_minus / rate + l21 * z1 + l22 * z2;
            x = rho * x + l11 * z1;
            at = pos;
        }
        match slot {
            Some(i) => {
                gp[i] = x;
                g[i] = int;
            }
            None => anchor_int = int,
        }
    }
    for v in &mut g {
        *v -= anchor_int;
    }
    (gp, g)
}

#[cfg(test)]
mod tests {
    use super::super::{kernels::Kernel, PathSource, ProcessSpec};
    use crate::mc::{run_trials, stream};

    /// Empirical `Cov` of all pairs of (X, S) entries vs the kernels, in units of
    /// standard errors.
    fn max_z_score(spec: &ProcessSpec, pts: &[f64], trials: u64) -> f64 {
        let n = pts.len();
        let m = 2 * n;
        let sums = run_trials(
            trials,
            99,
            || (vec![0.0; m], vec![0.0; m * m], vec![0.0; m * m]),
            |acc, _, rng| {
                let (gp, g) = spec.realize(pts, rng).unwrap();
                let v: Vec<f64> = gp.iter().chain(&g).copied().collect();
                for i in 0..m {
                    acc.0[i] += v[i];
                    for j in 0..m {
                        let p = v[i] * v[j];
                        acc.1[i * m + j] += p;
                        acc.2[i * m + j] += p * p;
                    }
                }
            },
            |a, b| {
                a.0.iter_mut().zip(b.0).for_each(|(x, y)| *x += y);
                a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
                a.2.iter_mut().zip(b.2).for_each(|(x, y)| *x += y);
            },
        );
        let k = Kernel::of(spec).unwrap();
        let tn = trials as f64;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            assert!((sums.0[i] / tn).abs() < 6.0 / tn.sqrt() + 1e-12, "mean of entry {i}");
            for j in 0..m {
                let (a, b) = (pts[i % n], pts[j % n]);
                let want = match (i < n, j < n) {
                    (true, true) => k.slope(a, b),
                    (true, false) => k.cross(a, b),
                    (false, true) => k.cross(b, a),
                    (false, false) => k.level(a, b),
                };
                let mean = sums.1[i * m + j] / tn;
                let var = sums.2[i * m + j] / tn - mean * mean;
                let se = (var / tn).sqrt();
                if se == 0.0 {
                    assert!((mean - want).abs() < 1e-10, "degenerate entry {i},{j}: {mean} vs {want}");
                    continue;
                }
                worst = worst.max((mean - want).abs() / se);
            }
        }
        worst
    }

    // 60 covariance entries per case; a 4.5 s.e. cut keeps the family-wise false
    // alarm rate negligible while still catching formula errors.
    #[test]
    fn bm_sampler_matches_kernels() {
        let spec = ProcessSpec::brownian_motion().with_domain(-1.0, 2.0).with_anchor(0.2);
        let z = max_z_score(&spec, &[-0.9, -0.3, 0.2, 0.5, 1.7], 40_000);
        assert!(z < 4.5, "z = {z}");
    }

    #[test]
    fn bridge_sampler_matches_kernels() {
        for mode in [super::BridgeOutside::HoldConstant, super::BridgeOutside::Zero] {
            let spec = ProcessSpec::brownian_bridge(1.0).with_domain(0.0, 1.6).with_bridge_outside(mode);
            let z = max_z_score(&spec, &[0.0, 0.3, 0.8, 1.0, 1.4], 40_000);
            assert!(z < 4.5, "z = {z}");
        }
    }

    #[test]
    fn ou_sampler_matches_kernels() {
        let spec = ProcessSpec::ornstein_uhlenbeck(2.0).with_domain(-1.0, 1.0).with_anchor(-0.1);
        let z = max_z_score(&spec, &[-0.8, -0.1, -0.0995, 0.4, 0.41], 40_000);
        assert!(z < 4.5, "z = {z}");
    }

    #[test]
    fn bridge_is_pinned() {
        let spec = ProcessSpec::brownian_bridge(1.5).with_domain(0.0, 1.5);
        for k in 0..200 {
            let (gp, _) = spec.realize(&[0.0, 0.4, 1.5], &mut stream(5, k)).unwrap();
            assert!(gp[0].abs() <= 1e-5 && gp[2].abs() <= 1e-5);
        }
    }

    #[test]
    fn residual_series_matches_closed_form() {
        let x: f64 = 1e-3;
        let exact = 2.0 * x - 3.0 + 4.0 * (-x).exp() - (-2.0 * x).exp();
        assert!((super::ou_integral_residual(x * (1.0 - 1e-12)) - exact).abs() < 1e-6 * exact);
    }
}
