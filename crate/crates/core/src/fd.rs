//! Monotone finite-volume reference solver for `w_t + H(w)_x = 0`.

use crate::error::{Error, Result};
use crate::flux::{legendre, Extended, Flux, LegendreTransform};
use crate::hopf::DensePath;
use crate::mc::{run_trials, Moments};
use crate::process::PathSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    LaxFriedrichs,
    /// Needs a convex flux.
    EngquistOsher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    #[default]
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub dx: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
}

impl FdConfig {
    pub fn new(dx: f64) -> Self {
        FdConfig { dx, cfl: 0.9, scheme: Scheme::default(), boundary: Boundary::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Cfl(self.cfl));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx = {} must be positive", self.dx)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdRun {
    pub w: Vec<f64>,
    pub t: f64,
    pub steps: usize,
    pub dt: f64,
    /// Total variation before the first step and after every step.
    pub tv_history: Vec<f64>,
    /// `Σ w_i dx` before the first step and after every step.
    pub mass_history: Vec<f64>,
}

pub fn total_variation(w: &[f64], boundary: Boundary) -> f64 {
    let inner: f64 = w.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    match boundary {
        Boundary::Periodic if w.len() > 1 => inner + (w[0] - w[w.len() - 1]).abs(),
        _ => inner,
    }
}

/// Numerical flux at one interface.
enum NumericalFlux<'a> {
    /// `½(H(a) + H(b)) - (dx / 2dt)(b - a)`.
    Lf { flux: &'a Flux, nu: f64 },
    /// `H` increasing / decreasing everywhere: plain upwinding.
    Upwind { flux: &'a Flux, right: bool },
    /// `H(max(a, p0)) + H(min(b, p0)) - H(p0)` about the minimizer `p0`.
    Eo { flux: &'a Flux, p0: f64, h0: f64 },
}

impl NumericalFlux<'_> {
    fn eval(&self, a: f64, b: f64) -> f64 {
        match *self {
            NumericalFlux::Lf { flux, nu } => 0.5 * (flux.eval(a) + flux.eval(b)) - nu * (b - a),
            NumericalFlux::Upwind { flux, right } => flux.eval(if right { b } else { a }),
            NumericalFlux::Eo { flux, p0, h0 } => flux.eval(a.max(p0)) + flux.eval(b.min(p0)) - h0,
        }
    }
}

fn eo_flux(flux: &Flux) -> NumericalFlux<'_> {
    match flux {
        Flux::Polygonal(poly) => {
            let m = poly.slopes();
            if m[0] >= 0.0 {
                return NumericalFlux::Upwind { flux, right: false };
            }
            if m[m.len() - 1] <= 0.0 {
                return NumericalFlux::Upwind { flux, right: true };
            }
            let c = poly.breakpoints();
            let k = m.iter().position(|&s| s > 0.0).expect("a positive slope") - 1;
            NumericalFlux::Eo { flux, p0: c[k], h0: flux.eval(c[k]) }
        }
        _ => NumericalFlux::Eo { flux, p0: 0.0, h0: 0.0 },
    }
}

/// Advances cell averages `w0` to `t_end` with `Δt = cfl dx / max|H'|`, shortened
/// uniformly so the last step lands on `t_end`.
pub fn evolve(flux: &Flux, w0: &[f64], t_end: f64, cfg: &FdConfig) -> Result<FdRun> {
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must be positive")));
    }
    if w0.len() < 2 {
        return Err(Error::InvalidGrid("need at least two cells".into()));
    }
    let (lo, hi) = w0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let speed = flux.max_speed(lo, hi);
    let steps = if speed > 0.0 { (t_end * speed / (cfg.cfl * cfg.dx)).ceil().max(1.0) as usize } else { 1 };
    let dt = t_end / steps as f64;
    let nf = match cfg.scheme {
        Scheme::LaxFriedrichs => NumericalFlux::Lf { flux, nu: cfg.dx / (2.0 * dt) },
        Scheme::EngquistOsher => eo_flux(flux),
    };
    let n = w0.len();
    let ratio = dt / cfg.dx;
    let mut w = w0.to_vec();
    let mut f = vec![0.0; n + 1];
    let mut tv_history = vec![total_variation(&w, cfg.boundary)];
    let mut mass_history = vec![w.iter().sum::<f64>() * cfg.dx];
    for _ in 0..steps {
        // f[i] sits between cells i - 1 and i
        for (i, fi) in f.iter_mut().enumerate() {
            let (a, b) = match cfg.boundary {
                Boundary::Periodic => (w[(i + n - 1) % n], w[i % n]),
                Boundary::Outflow => (w[i.max(1) - 1], w[i.min(n - 1)]),
            };
            *fi = nf.eval(a, b);
        }
        for i in 0..n {
            w[i] -= ratio * (f[i + 1] - f[i]);
        }
        tv_history.push(total_variation(&w, cfg.boundary));
        mass_history.push(w.iter().sum::<f64>() * cfg.dx);
    }
    Ok(FdRun { w, t: t_end, steps, dt, tv_history, mass_history })
}

/// `t L((x - y)/t)`, with `q` snapped onto the support when it misses by rounding.
fn penalty(l: &LegendreTransform, x: f64, t: f64, y: f64) -> Option<f64> {
    let (lo, hi) = l.finite_support();
    let mut q = (x - y) / t;
    let tol = 1e-9 * (1.0 + q.abs());
    if q < lo && q > lo - tol {
        q = lo;
    } else if q > hi && q < hi + tol {
        q = hi;
    }
    match l.eval(q) {
        Extended::Finite(v) => Some(t * v),
        Extended::PosInf => None,
    }
}

/// Cell averages of the variational solution on the cells of `path`:
/// `(u(r_{i+1}) - u(r_i)) / dx` with `u(r) = min_k g_k + t L((r - r_k)/t)`.
pub fn hopf_lax_cell_averages(flux: &Flux, path: &DensePath, t: f64) -> Result<Vec<f64>> {
    let n = path.len();
    if t == 0.0 {
        return Ok((0..n - 1).map(|i| (path.g[i + 1] - path.g[i]) / path.step).collect());
    }
    let l = legendre(flux);
    let (qlo, qhi) = l.finite_support();
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        let r = path.point(i);
        // y = r - t q with q in the support
        let (k0, k1) = if qlo.is_finite() && qhi.is_finite() {
            let a = ((r - t * qhi - path.start) / path.step).floor().max(0.0) as usize;
            let b = (((r - t * qlo - path.start) / path.step).ceil() as usize).min(n - 1);
            (a, b)
        } else {
            (0, n - 1)
        };
        let mut best = f64::INFINITY;
        for k in k0..=k1 {
            if let Some(p) = penalty(&l, r, t, path.point(k)) {
                best = best.min(path.g[k] + p);
            }
        }
        if !best.is_finite() {
            return Err(Error::PathCoverage { point: r });
        }
        u.push(best);
    }
    Ok(u.windows(2).map(|p| (p[1] - p[0]) / path.step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComparison {
    pub t: f64,
    /// `Σ |w_fd - w_hl| dx` over the observed cells.
    pub l1: f64,
    pub tv_fd: f64,
    pub tv_hl: f64,
    /// Values in the observed cell whose center is nearest `x = 0`.
    pub fd_at_zero: f64,
    pub hl_at_zero: f64,
}

/// Cells of `path` whose centers lie in `observe`, and the one nearest 0.
fn observed(path: &DensePath, observe: (f64, f64)) -> Result<(usize, usize, usize)> {
    let centers: Vec<f64> = (0..path.len() - 1).map(|i| path.point(i) + 0.5 * path.step).collect();
    let a = centers.partition_point(|&c| c < observe.0);
    let b = centers.partition_point(|&c| c <= observe.1);
    if a >= b {
        return Err(Error::InvalidArgument(format!("no cells inside [{}, {}]", observe.0, observe.1)));
    }
    let zero = (a..b).min_by(|&i, &j| centers[i].abs().total_cmp(&centers[j].abs())).expect("nonempty");
    Ok((a, b, zero))
}

/// Runs the scheme from the cell averages of `g'` on the cells of `path` and compares it
/// with the variational solution at every time in `ts` (increasing, `>= 0`).
pub fn compare_path(
    flux: &Flux,
    path: &DensePath,
    ts: &[f64],
    observe: (f64, f64),
    cfg: &FdConfig,
) -> Result<Vec<PathComparison>> {
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("t-grid must be increasing and nonnegative".into()));
    }
    if (cfg.dx - path.step).abs() > 1e-12 * path.step {
        return Err(Error::InvalidGrid(format!("dx = {} but the path step is {}", cfg.dx, path.step)));
    }
    let (a, b, zero) = observed(path, observe)?;
    let mut w = hopf_lax_cell_averages(flux, path, 0.0)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        if t > now {
            w = evolve(flux, &w, t - now, cfg)?.w;
            now = t;
        }
        let hl = hopf_lax_cell_averages(flux, path, t)?;
        let l1 = (a..b).map(|i| (w[i] - hl[i]).abs()).sum::<f64>() * cfg.dx;
        out.push(PathComparison {
            t,
            l1,
            tv_fd: total_variation(&w[a..b], Boundary::Outflow),
            tv_hl: total_variation(&hl[a..b], Boundary::Outflow),
            fd_at_zero: w[zero],
            hl_at_zero: hl[zero],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub l1: f64,
    pub l1_error: f64,
    pub tv_fd: f64,
    pub tv_fd_error: f64,
    pub tv_hl: f64,
    pub tv_hl_error: f64,
    /// Ensemble variance of the value in the cell at `x = 0`.
    pub var_fd_at_zero: f64,
    pub var_hl_at_zero: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathWindow {
    pub lo: f64,
    pub hi: f64,
}

/// Ensemble version of [`compare_path`]: one path of `src` per seed on
/// `[window.lo, window.hi]` with cells of width `cfg.dx`.
#[allow(clippy::too_many_arguments)]
pub fn compare_with_hopf_lax<P: PathSource + ?Sized>(
    flux: &Flux,
    src: &P,
    ts: &[f64],
    window: PathWindow,
    observe: (f64, f64),
    cfg: &FdConfig,
    seeds: u64,
    master_seed: u64,
) -> Result<Vec<ComparisonRow>> {
    cfg.validate()?;
    let cells = ((window.hi - window.lo) / cfg.dx).round() as usize;
    if cells < 2 || ((window.hi - window.lo) / cells as f64 - cfg.dx).abs() > 1e-9 * cfg.dx {
        return Err(Error::InvalidGrid("the path window must be a whole number of cells".into()));
    }
    let cfg = FdConfig { dx: (window.hi - window.lo) / cells as f64, ..*cfg };
    let nt = ts.len();
    type Acc = Result<Vec<[Moments; 5]>>;
    let acc = run_trials(
        seeds,
        master_seed,
        || -> Acc { Ok(vec![[Moments::default(); 5]; nt]) },
        |acc: &mut Acc, _k, rng| {
            let Ok(rows) = acc else { return };
            let res = DensePath::sample(src, window.lo, window.hi, cells, rng)
                .and_then(|path| compare_path(flux, &path, ts, observe, &cfg));
            match res {
                Ok(cs) => {
                    for (m, c) in rows.iter_mut().zip(cs) {
                        for (slot, v) in m.iter_mut().zip([c.l1, c.tv_fd, c.tv_hl, c.fd_at_zero, c.hl_at_zero]) {
                            slot.push(v);
                        }
                    }
                }
                Err(e) => *acc = Err(e),
            }
        },
        |a, b| match (a.as_mut(), b) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    for (p, q) in x.iter_mut().zip(y) {
                        p.merge(q);
                    }
                }
            }
            (Ok(_), Err(e)) => *a = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(ts
        .iter()
        .zip(acc)
        .map(|(&t, m)| ComparisonRow {
            t,
            l1: m[0].mean(),
            l1_error: m[0].std_error(),
            tv_fd: m[1].mean(),
            tv_fd_error: m[1].std_error(),
            tv_hl: m[2].mean(),
            tv_hl_error: m[2].std_error(),
            var_fd_at_zero: m[3].variance(),
            var_hl_at_zero: m[4].variance(),
        })
        .collect())
}

/// Least-squares order of convergence from `(h, error)` pairs.
pub fn convergence_order(h: &[f64], err: &[f64]) -> Option<f64> {
    crate::probability::log_log_slope(h, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn riemann(n: usize, lo: f64, dx: f64, wl: f64, wr: f64) -> Vec<f64> {
        (0..n).map(|i| if lo + (i as f64 + 0.5) * dx < 0.0 { wl } else { wr }).collect()
    }

    #[test]
    fn constant_data_is_preserved() {
        for scheme in [Scheme::LaxFriedrichs, Scheme::EngquistOsher] {
            for boundary in [Boundary::Periodic, Boundary::Outflow] {
                let cfg = FdConfig { scheme, boundary, ..FdConfig::new(0.05) };
                for flux in [Flux::burgers(), Flux::AbsoluteValue] {
                    let r = evolve(&flux, &[0.7; 40], 0.5, &cfg).unwrap();
                    assert!(r.w.iter().all(|&v| v == 0.7), "{scheme:?} {boundary:?}");
                }
            }
        }
    }

    #[test]
    fn cfl_is_checked() {
        let cfg = FdConfig { cfl: 1.2, ..FdConfig::new(0.1) };
        assert!(matches!(evolve(&Flux::burgers(), &[0.0, 1.0], 1.0, &cfg), Err(Error::Cfl(_))));
        let cfg = FdConfig { cfl: 0.0, ..FdConfig::new(0.1) };
        assert!(evolve(&Flux::burgers(), &[0.0, 1.0], 1.0, &cfg).is_err());
    }

    #[test]
    fn burgers_shock_moves_at_half_speed() {
        let dx = 0.005;
        let n = 800;
        let w0 = riemann(n, -2.0, dx, 1.0, 0.0);
        for scheme in [Scheme::LaxFriedrichs, Scheme::EngquistOsher] {
            let r = evolve(&Flux::burgers(), &w0, 0.5, &FdConfig { scheme, ..FdConfig::new(dx) }).unwrap();
            // the shock sits where the mass to its left accounts for the jump
            let mass: f64 = r.w.iter().sum::<f64>() * dx;
            let pos = -2.0 + mass;
            assert!((pos - 0.25).abs() <= 2.0 * dx, "{scheme:?}: {pos}");
            let crossing = r.w.iter().position(|&v| v < 0.5).unwrap();
            let x = -2.0 + crossing as f64 * dx;
            assert!((x - 0.25).abs() <= 2.0 * dx + 0.05, "{scheme:?}: {x}");
        }
    }

    #[test]
    fn periodic_mass_is_conserved_and_tv_decreases() {
        let n = 200;
        let dx = 1.0 / n as f64;
        let w0: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * (i as f64 + 0.5) * dx).sin()).collect();
        for flux in [Flux::burgers(), Flux::AbsoluteValue] {
            let cfg = FdConfig { boundary: Boundary::Periodic, ..FdConfig::new(dx) };
            let r = evolve(&flux, &w0, 0.4, &cfg).unwrap();
            let m0 = r.mass_history[0];
            let scale = w0.iter().map(|v| v.abs()).sum::<f64>() * dx;
            assert!(r.mass_history.iter().all(|m| (m - m0).abs() <= 1e-12 * scale));
            assert!(r.tv_history.windows(2).all(|p| p[1] <= p[0] + 1e-12));
        }
    }

    #[test]
    fn hopf_lax_averages_at_time_zero_are_slopes() {
        let path = DensePath::from_fn(-1.0, 1.0, 40, |y| y * y / 2.0, |y| y);
        let w = hopf_lax_cell_averages(&Flux::burgers(), &path, 0.0).unwrap();
        assert!((w[0] - (-1.0 + 0.025)).abs() < 1e-12);
    }

    #[test]
    fn absolute_value_solution_of_a_monotone_profile() {
        // increasing g: the minimizer is the left end of the window, w(x) = g'(x - t)
        let path = DensePath::from_fn(-2.0, 2.0, 400, f64::exp, f64::exp);
        let w = hopf_lax_cell_averages(&Flux::AbsoluteValue, &path, 0.5).unwrap();
        let i = 200;
        let (a, b) = (path.point(i) - 0.5, path.point(i + 1) - 0.5);
        let exact = (b.exp() - a.exp()) / 0.01;
        assert!((w[i] - exact).abs() < 1e-9, "{} vs {exact}", w[i]);
    }
}
