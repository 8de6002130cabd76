use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::hopf::{scan_realized, solve_power_law, union_points, x_lattice, DensePath, RegionTransition};
use crate::mc::{run_trials, Moments};
use crate::process::{DiscreteBm, PathSource};

/// Raw moments up to fourth order, for variances and their standard errors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments4 {
    pub n: u64,
    s: [f64; 4],
}

impl Moments4 {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let mut p = v;
        for s in &mut self.s {
            *s += p;
            p *= v;
        }
    }

    pub fn merge(&mut self, o: Moments4) {
        self.n += o.n;
        for (a, b) in self.s.iter_mut().zip(o.s) {
            *a += b;
        }
    }

    pub fn mean(&self) -> f64 {
        self.s[0] / self.n as f64
    }

    /// Unbiased variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.s[1] - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Large-sample standard error of [`Self::variance`]: `sqrt((μ4 - σ^4) / n)`.
    pub fn variance_error(&self) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let e = |k: usize| self.s[k] / n;
        let mu4 = e(3) - 4.0 * m * e(2) + 6.0 * m * m * e(1) - 3.0 * m.powi(4);
        let var = e(1) - m * m;
        ((mu4 - var * var).max(0.0) / n).sqrt()
    }
}

/// Dense sampling used by the power-law studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseWindow {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub x: f64,
    pub t: f64,
    pub var_w: f64,
    pub var_w_error: f64,
    /// Variance of `t^{-1/(j-1)} sgn(x - y*) |x - y*|^{1/(j-1)}` over the same samples.
    pub var_identity: f64,
    /// `|var_w - var_identity| / max(var_w, var_identity)`.
    pub residual: f64,
    pub mean_w: f64,
    pub mean_y_star: f64,
    pub var_y_star: f64,
    /// `E|x - y*|`.
    pub mean_displacement: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Row {
    w: Moments4,
    ident: Moments4,
    y: Moments4,
    disp: Moments4,
}

/// `Var(w(x, t))` for `H(p) = |p|^j / j` at every `(x, t)` pair, all from the same paths.
pub fn variance_law<P: PathSource + ?Sized>(
    j: f64,
    src: &P,
    points: &[(f64, f64)],
    window: DenseWindow,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<VarianceRow>> {
    if trials < 2 {
        return Err(Error::InvalidArgument("variance needs at least two trials".into()));
    }
    let np = points.len();
    let acc = run_trials(
        trials,
        master_seed,
        || Ok(vec![Row::default(); np]),
        |acc: &mut Result<Vec<Row>>, _k, rng| {
            let Ok(rows) = acc else { return };
            let step = DensePath::sample(src, window.lo, window.hi, window.cells, rng).and_then(|path| {
                points.iter().map(|&(x, t)| solve_power_law(j, &path, x, t)).collect::<Result<Vec<_>>>()
            });
            match step {
                Ok(rs) => {
                    for ((row, r), &(x, t)) in rows.iter_mut().zip(rs).zip(points) {
                        let d = x - r.y_star;
                        let e = 1.0 / (j - 1.0);
                        row.w.push(r.w);
                        row.ident.push(t.powf(-e) * d.signum() * d.abs().powf(e));
                        row.y.push(r.y_star);
                        row.disp.push(d.abs());
                    }
                }
                Err(e) => *acc = Err(e),
            }
        },
        |a, b| match (a.as_mut(), b) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    x.w.merge(y.w);
                    x.ident.merge(y.ident);
                    x.y.merge(y.y);
                    x.disp.merge(y.disp);
                }
            }
            (Ok(_), Err(e)) => *a = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(acc
        .iter()
        .zip(points)
        .map(|(r, &(x, t))| {
            let (a, b) = (r.w.variance(), r.ident.variance());
            let scale = a.abs().max(b.abs());
            VarianceRow {
                x,
                t,
                var_w: a,
                var_w_error: r.w.variance_error(),
                var_identity: b,
                residual: if scale > 0.0 { (a - b).abs() / scale } else { (a - b).abs() },
                mean_w: r.w.mean(),
                mean_y_star: r.y.mean(),
                var_y_star: r.y.variance(),
                mean_displacement: r.disp.mean(),
            }
        })
        .collect())
}

/// Least-squares slope of `log b` against `log a`, over rows where both are positive.
pub fn log_log_slope(a: &[f64], b: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        a.iter().zip(b).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fitted exponents for `Var(y*) ~ E|x - y*|^p` and `Var(w) ~ t^q` over a time grid at
/// fixed `x`; reported, not checked, alongside `3p - 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub p: Option<f64>,
    pub q: Option<f64>,
}

pub fn scaling_fit(rows: &[VarianceRow]) -> ScalingFit {
    let disp: Vec<f64> = rows.iter().map(|r| r.mean_displacement).collect();
    let vy: Vec<f64> = rows.iter().map(|r| r.var_y_star).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let vw: Vec<f64> = rows.iter().map(|r| r.var_w).collect();
    ScalingFit { p: log_log_slope(&disp, &vy), q: log_log_slope(&ts, &vw) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockRow {
    pub t: f64,
    /// Mean shocks per unit `x`.
    pub density: f64,
    pub density_error: f64,
    /// Mean shocks per unit `x` by transition type: I->II, I->III, II->III, other.
    pub by_type: [f64; 4],
    /// Fraction of paths with a shock on the middle step of the `x` lattice.
    pub local_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockComparison {
    pub t_from: f64,
    pub t_to: f64,
    /// Mean of the paired difference `density(t_to) - density(t_from)`.
    pub difference: f64,
    pub difference_error: f64,
    /// One-sided 95% upper confidence bound of the difference.
    pub upper_bound: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockStudy {
    pub rows: Vec<ShockRow>,
    pub comparisons: Vec<ShockComparison>,
}

/// One-sided 95% normal quantile.
const Z95: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Default)]
struct ShockAcc {
    density: Vec<Moments>,
    types: Vec<[f64; 4]>,
    local: Vec<u64>,
    diffs: Vec<Moments>,
}

/// Shock counts per unit `x` for the absolute-value flux at each `t`, every path shared
/// by all times.
pub fn shock_monotonicity_study<P: PathSource + ?Sized>(
    src: &P,
    ts: &[f64],
    x_range: (f64, f64),
    dx: f64,
    step: f64,
    seeds: u64,
    master_seed: u64,
) -> Result<ShockStudy> {
    if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t-grid must be increasing".into()));
    }
    if seeds < 2 {
        return Err(Error::InvalidArgument("need at least two seeds".into()));
    }
    let flux = Flux::AbsoluteValue;
    let xs = x_lattice(x_range, dx)?;
    let width = xs[xs.len() - 1] - xs[0];
    let mut union = Vec::new();
    for &t in ts {
        union.extend(union_points(&flux, t, &xs, step)?);
    }
    union.sort_by(f64::total_cmp);
    union.dedup();
    src.check_points(&union)?;
    let nt = ts.len();
    let mid = xs.len() / 2;
    let init = || {
        Ok(ShockAcc {
            density: vec![Moments::default(); nt],
            types: vec![[0.0; 4]; nt],
            local: vec![0; nt],
            diffs: vec![Moments::default(); nt.saturating_sub(1)],
        })
    };
    let acc = run_trials(
        seeds,
        master_seed,
        init,
        |acc: &mut Result<ShockAcc>, _k, rng| {
            let Ok(a) = acc else { return };
            let (gp, g) = match src.realize(&union, rng) {
                Ok(v) => v,
                Err(e) => {
                    *acc = Err(e);
                    return;
                }
            };
            let mut dens = Vec::with_capacity(nt);
            for (i, &t) in ts.iter().enumerate() {
                let profile = match scan_realized(&flux, t, &xs, step, &union, &gp, &g) {
                    Ok(p) => p,
                    Err(e) => {
                        *acc = Err(e);
                        return;
                    }
                };
                let d = profile.shock_count() as f64 / width;
                dens.push(d);
                a.density[i].push(d);
                for r in profile.rows.iter().filter(|r| r.shock) {
                    let slot = match r.region {
                        Some(RegionTransition::OneToTwo) => 0,
                        Some(RegionTransition::OneToThree) => 1,
                        Some(RegionTransition::TwoToThree) => 2,
                        _ => 3,
                    };
                    a.types[i][slot] += 1.0 / width;
                }
                if profile.rows[mid].shock {
                    a.local[i] += 1;
                }
            }
            for i in 1..nt {
                a.diffs[i - 1].push(dens[i] - dens[i - 1]);
            }
        },
        |a, b| match (a.as_mut(), b) {
            (Ok(a), Ok(b)) => {
                for i in 0..nt {
                    a.density[i].merge(b.density[i]);
                    for s in 0..4 {
                        a.types[i][s] += b.types[i][s];
                    }
                    a.local[i] += b.local[i];
                }
                for (x, y) in a.diffs.iter_mut().zip(b.diffs) {
                    x.merge(y);
                }
            }
            (Ok(_), Err(e)) => *a = Err(e),
            (Err(_), _) => {}
        },
    )?;
    let n = seeds as f64;
    let rows = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| ShockRow {
            t,
            density: acc.density[i].mean(),
            density_error: acc.density[i].std_error(),
            by_type: acc.types[i].map(|v| v / n),
            local_probability: acc.local[i] as f64 / n,
        })
        .collect();
    let comparisons = acc
        .diffs
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let upper_bound = m.mean() + Z95 * m.std_error();
            ShockComparison {
                t_from: ts[i],
                t_to: ts[i + 1],
                difference: m.mean(),
                difference_error: m.std_error(),
                upper_bound,
                decreasing: upper_bound <= 0.0,
            }
        })
        .collect();
    Ok(ShockStudy { rows, comparisons })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub p_left: f64,
    pub p_interior: f64,
    pub p_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyStep {
    pub level: u32,
    pub next: u32,
    /// `|P_M - P_next|` for the left-endpoint case.
    pub difference: f64,
    pub difference_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub level: u32,
    pub reference_level: u32,
    pub alpha: f64,
    /// Frequency of `sup |I_M - I_ref| > alpha`.
    pub empirical: f64,
    /// `3 (Δr)^2 / alpha^4`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub steps: Vec<CauchyStep>,
    pub tail: TailBound,
    /// The last difference is below the first and no step grows by more than two
    /// standard errors.
    pub cauchy_trend: bool,
}

/// Left/interior/right classification of the minimizer of `I_M` over `[x - t, x + t]`.
fn classify_window(path: &DiscreteBm, a: f64, b: f64) -> usize {
    let mut best = (path.integral(a), 0usize);
    let nodes = path.integral_nodes();
    for (i, &v) in nodes.iter().enumerate() {
        let r = path.node(i);
        if r > a && r < b && v <= best.0 {
            best = (v, 1);
        }
    }
    if path.integral(b) <= best.0 {
        best = (path.integral(b), 2);
    }
    best.1
}

/// Case probabilities of the absolute-value solution for dyadic Brownian approximations
/// on `[0, 1]`, with every level cut from the same finest path.
pub fn convergence_study(
    x: f64,
    t: f64,
    levels: &[u32],
    trials: u64,
    master_seed: u64,
    alpha: f64,
) -> Result<ConvergenceStudy> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be increasing".into()));
    }
    if !(x - t >= 0.0 && x + t <= 1.0 && t > 0.0) {
        return Err(Error::InvalidArgument("window [x - t, x + t] must lie in [0, 1]".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let top = *levels.last().expect("nonempty");
    let nl = levels.len();
    #[derive(Clone)]
    struct Acc {
        cases: Vec<[u64; 3]>,
        diffs: Vec<Moments>,
        tail: u64,
    }
    let acc = run_trials(
        trials,
        master_seed,
        || Acc { cases: vec![[0; 3]; nl], diffs: vec![Moments::default(); nl.saturating_sub(1)], tail: 0 },
        |a, _k, rng| {
            let fine = DiscreteBm::sample(top, rng);
            let mut left = Vec::with_capacity(nl);
            for (i, &m) in levels.iter().enumerate() {
                let c = classify_window(&fine.coarsen(m), x - t, x + t);
                a.cases[i][c] += 1;
                left.push(if c == 0 { 1.0 } else { 0.0 });
            }
            for i in 1..nl {
                a.diffs[i - 1].push(left[i - 1] - left[i]);
            }
            let coarse = fine.coarsen(levels[0]);
            let sup = fine
                .integral_nodes()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - coarse.integral(fine.node(i))).abs())
                .fold(0.0, f64::max);
            if sup > alpha {
                a.tail += 1;
            }
        },
        |a, b| {
            for (x, y) in a.cases.iter_mut().zip(b.cases) {
                for s in 0..3 {
                    x[s] += y[s];
                }
            }
            for (x, y) in a.diffs.iter_mut().zip(b.diffs) {
                x.merge(y);
            }
            a.tail += b.tail;
        },
    );
    let n = trials as f64;
    let rows: Vec<ConvergenceRow> = levels
        .iter()
        .zip(&acc.cases)
        .map(|(&level, c)| ConvergenceRow {
            level,
            p_left: c[0] as f64 / n,
            p_interior: c[1] as f64 / n,
            p_right: c[2] as f64 / n,
        })
        .collect();
    let steps: Vec<CauchyStep> = acc
        .diffs
        .iter()
        .enumerate()
        .map(|(i, m)| CauchyStep {
            level: levels[i],
            next: levels[i + 1],
            difference: m.mean().abs(),
            difference_error: m.std_error(),
        })
        .collect();
    let cauchy_trend = steps.len() < 2
        || (steps[steps.len() - 1].difference < steps[0].difference
            && steps.windows(2).all(|w| {
                w[1].difference <= w[0].difference + 2.0 * w[0].difference_error.hypot(w[1].difference_error)
            }));
    let dr = 0.5f64.powi(levels[0] as i32);
    let tail = TailBound {
        level: levels[0],
        reference_level: top,
        alpha,
        empirical: acc.tail as f64 / n,
        bound: 3.0 * dr * dr / alpha.powi(4),
    };
    Ok(ConvergenceStudy { rows, steps, tail, cauchy_trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{DeterministicPath, ProcessSpec};

    #[test]
    fn burgers_identity_and_flat_data() {
        let spec = ProcessSpec::brownian_motion().integrated(true).with_domain(-4.0, 4.0);
        let win = DenseWindow { lo: -4.0, hi: 4.0, cells: 1600 };
        let rows = variance_law(2.0, &spec, &[(0.3, 0.25)], win, 2000, 4).unwrap();
        assert!(rows[0].residual <= 1e-12, "{:?}", rows[0]);
        assert!(rows[0].var_w > 0.0);
        let flat = DeterministicPath::new(|y: f64| y * y / 2.0, |y: f64| y);
        let rows = variance_law(3.0, &flat, &[(0.3, 0.5)], win, 50, 4).unwrap();
        assert!(rows[0].var_w < 1e-12);
    }

    #[test]
    fn fourth_moment_error() {
        let mut m = Moments4::default();
        for v in [1.0, 2.0, 4.0, 7.0] {
            m.push(v);
        }
        assert!((m.mean() - 3.5).abs() < 1e-15);
        assert!((m.variance() - 7.0).abs() < 1e-12);
        assert!(m.variance_error() > 0.0);
    }

    #[test]
    fn slope_fit() {
        let a = [1.0, 2.0, 4.0];
        let b = [3.0, 12.0, 48.0];
        assert!((log_log_slope(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_data_never_shocks() {
        let src = DeterministicPath::new(|y: f64| y, |_| 1.0);
        let s = shock_monotonicity_study(&src, &[0.25, 0.5], (-1.0, 1.0), 0.02, 0.02, 4, 0).unwrap();
        assert!(s.rows.iter().all(|r| r.density == 0.0));
    }

    #[test]
    fn shocks_thin_out_over_time() {
        let spec = ProcessSpec::brownian_motion().integrated(true).with_domain(-3.0, 3.0);
        let s = shock_monotonicity_study(&spec, &[0.25, 0.5], (-1.5, 1.5), 0.01, 0.01, 100, 11).unwrap();
        assert!(s.rows[0].density > s.rows[1].density, "{:?}", s.rows);
        assert!(s.rows.iter().all(|r| r.by_type[3] == 0.0));
    }

    #[test]
    fn convergence_cases_partition() {
        let c = convergence_study(0.5, 0.25, &[2, 4, 6], 2000, 3, 0.5).unwrap();
        for r in &c.rows {
            assert!((r.p_left + r.p_interior + r.p_right - 1.0).abs() < 1e-12);
        }
        assert!(c.tail.empirical <= c.tail.bound);
        assert!(convergence_study(0.5, 0.25, &[4, 4], 10, 0, 0.5).is_err());
    }
}
