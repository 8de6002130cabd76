use super::solve::{greatest_argmin, Location, MinimizerResult};
use crate::error::{Error, Result};
use crate::mc::Stream;
use crate::process::PathSource;

/// `g` and `g'` on the uniform grid `y_k = start + k h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePath {
    pub start: f64,
    pub step: f64,
    pub gprime: Vec<f64>,
    pub g: Vec<f64>,
}

impl DensePath {
    pub fn new(start: f64, step: f64, gprime: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || gprime.len() != g.len() || g.is_empty() {
            return Err(Error::InvalidGrid("dense path needs step > 0 and matching non-empty values".into()));
        }
        Ok(DensePath { start, step, gprime, g })
    }

    /// Uniform grid with `cells` steps covering `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, cells: usize, g: impl Fn(f64) -> f64, gprime: impl Fn(f64) -> f64) -> Self {
        let step = (hi - lo) / cells as f64;
        let ys: Vec<f64> = (0..=cells).map(|k| lo + step * k as f64).collect();
        DensePath { start: lo, step, gprime: ys.iter().map(|&y| gprime(y)).collect(), g: ys.iter().map(|&y| g(y)).collect() }
    }

    pub fn sample<P: PathSource + ?Sized>(src: &P, lo: f64, hi: f64, cells: usize, rng: &mut Stream) -> Result<Self> {
        let step = (hi - lo) / cells as f64;
        let ys: Vec<f64> = (0..=cells).map(|k| lo + step * k as f64).collect();
        let (gprime, g) = src.realize(&ys, rng)?;
        Self::new(lo, step, gprime, g)
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.len() - 1)
    }

    pub fn slope_bound(&self) -> f64 {
        self.gprime.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `L(q) = (j-1)/j |q|^{j/(j-1)}` for `H(p) = |p|^j / j`.
pub fn power_law_l(j: f64, q: f64) -> f64 {
    (j - 1.0) / j * q.abs().powf(j / (j - 1.0))
}

/// `L'(q) = sgn(q) |q|^{1/(j-1)}`.
pub fn power_law_l_prime(j: f64, q: f64) -> f64 {
    q.signum() * q.abs().powf(1.0 / (j - 1.0))
}

/// Brute-force greatest minimizer for `H(p) = |p|^j / j` on the window
/// `[x - Qt, x + Qt]`, `Q = (max|g'| + 1)^{j-1}`, clipped to the path.
///
/// A minimizer on the boundary of the searched range is reported as truncation.
pub fn solve_power_law(j: f64, path: &DensePath, x: f64, t: f64) -> Result<MinimizerResult> {
    if !(j >= 2.0 && j.is_finite()) {
        return Err(Error::InvalidFlux(format!("power law needs j >= 2, got {j}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidGrid(format!("t = {t} must be positive")));
    }
    let q = (path.slope_bound() + 1.0).powf(j - 1.0);
    let (wlo, whi) = (x - q * t, x + q * t);
    let last = path.len() - 1;
    let k0 = ((wlo - path.start) / path.step).ceil().max(0.0) as usize;
    let k1 = (((whi - path.start) / path.step).floor().max(-1.0) as i64).min(last as i64);
    if k1 < k0 as i64 || k0 > last {
        return Err(Error::PathCoverage { point: x });
    }
    let k1 = k1 as usize;
    let objective: Vec<f64> = (k0..=k1)
        .map(|k| path.g[k] + t * power_law_l(j, (x - path.point(k)) / t))
        .collect();
    let best = greatest_argmin(&objective);
    let k = k0 + best;
    if best == 0 || best == objective.len() - 1 {
        return Err(Error::WindowTruncated { edge: path.point(k) });
    }
    let y_star = path.point(k);
    let w = power_law_l_prime(j, (x - y_star) / t);
    let d = x - y_star;
    let identity = d.signum() * d.abs().powf(1.0 / (j - 1.0)) * t.powf(-1.0 / (j - 1.0));
    assert!((w - identity).abs() <= 1e-12 * w.abs().max(1.0), "w = {w}, identity = {identity}");
    Ok(MinimizerResult { y_star, index: k, location: Location::Smooth, q_value: objective[best], w, w_left: w })
}

/// Greatest minimizer for Burgers flux (`j = 2`) at many sorted `xs` at once.
///
/// `(x - y_k)^2 / 2t + g_k` is affine in `x` up to the common `x^2 / 2t`, so the minimum
/// over `k` is a lower envelope of lines whose slopes decrease with `k`.
pub fn burgers_profile(path: &DensePath, xs: &[f64], t: f64) -> Result<Vec<MinimizerResult>> {
    if !(t > 0.0) {
        return Err(Error::InvalidGrid(format!("t = {t} must be positive")));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("query points must be sorted".into()));
    }
    let line = |k: usize| {
        let y = path.point(k);
        (-y / t, y * y / (2.0 * t) + path.g[k])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let (a3, b3) = line(k);
        while hull.len() >= 2 {
            let (a1, b1) = line(hull[hull.len() - 2]);
            let (a2, b2) = line(hull[hull.len() - 1]);
            // the middle line never wins once the outer two cross at or before it
            if (b3 - b1) * (a1 - a2) <= (b2 - b1) * (a1 - a3) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let objective = |k: usize, x: f64| {
        let d = x - path.point(k);
        d * d / (2.0 * t) + path.g[k]
    };
    let mut at = 0;
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        while at + 1 < hull.len() && objective(hull[at + 1], x) <= objective(hull[at], x) {
            at += 1;
        }
        let k = hull[at];
        let y_star = path.point(k);
        let w = (x - y_star) / t;
        out.push(MinimizerResult { y_star, index: k, location: Location::Smooth, q_value: objective(k, x), w, w_left: w });
    }
    Ok(out)
}
