//! Finite-dimensional Gaussian vectors: conditioning and orthant probabilities.

use super::bvn::bvn_upper;
use super::normal::{norm_pdf, norm_sf};
use super::quad::integrate_on;
use nalgebra::{DMatrix, DVector};

/// A Gaussian vector given by its mean and (possibly singular) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        assert!(cov.is_square() && cov.nrows() == mean.len(), "mean/covariance shape mismatch");
        Gaussian { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.cov[(i, i)]
    }

    /// Marginal of the listed coordinates, in the listed order.
    pub fn select(&self, idx: &[usize]) -> Gaussian {
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.cov[(idx[a], idx[b])]);
        Gaussian { mean, cov }
    }

    /// Law of the remaining coordinates given `Z_k = value`; coordinate `k` is removed.
    ///
    /// A coordinate with no variance carries no information and is simply dropped.
    pub fn condition_coord(&self, k: usize, value: f64) -> Gaussian {
        let rest: Vec<usize> = (0..self.dim()).filter(|&i| i != k).collect();
        let var = self.cov[(k, k)];
        if var <= 0.0 {
            return self.select(&rest);
        }
        let shift = value - self.mean[k];
        let mean = DVector::from_iterator(
            rest.len(),
            rest.iter().map(|&i| self.mean[i] + self.cov[(i, k)] / var * shift),
        );
        let cov = DMatrix::from_fn(rest.len(), rest.len(), |a, b| {
            let (i, j) = (rest[a], rest[b]);
            self.cov[(i, j)] - self.cov[(i, k)] * self.cov[(k, j)] / var
        });
        Gaussian { mean, cov }
    }

    /// Mean and variance of `c . Z`.
    pub fn linear_moments(&self, c: &DVector<f64>) -> (f64, f64) {
        (c.dot(&self.mean), c.dot(&(&self.cov * c)))
    }

    /// Law of `Z` given `c . Z = value`, or `None` when `c . Z` has no variance.
    pub fn condition_linear(&self, c: &DVector<f64>, value: f64) -> Option<Gaussian> {
        let sc = &self.cov * c;
        let var = c.dot(&sc);
        if !(var > 0.0) {
            return None;
        }
        let mean = &self.mean + &sc * ((value - c.dot(&self.mean)) / var);
        let cov = &self.cov - (&sc * sc.transpose()) / var;
        Some(Gaussian { mean, cov })
    }
}

/// Initial panel edges on `[lo, hi]`: `initial` equal panels, plus a panel of a few
/// widths on each side of every sharp step `(center, width)` inside the range.
fn panel_edges(lo: f64, hi: f64, initial: usize, steps: impl Iterator<Item = (f64, f64)>) -> Vec<f64> {
    let h = (hi - lo) / initial as f64;
    let mut edges: Vec<f64> = (0..=initial).map(|i| lo + h * i as f64).collect();
    for (c, w) in steps {
        if !(c.is_finite() && w.is_finite()) || w >= 0.05 * h {
            continue;
        }
        for e in [c - 6.0 * w, c, c + 6.0 * w] {
            if e > lo && e < hi {
                edges.push(e);
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

/// Orthant probabilities by recursive conditioning.
///
/// The most restrictive coordinate is integrated out with adaptive Gauss-Kronrod
/// quadrature; two-dimensional problems use [`bvn_upper`]. Coordinates whose variance
/// is at most `var_floor` are treated as constants and checked exactly, with
/// `strict` selecting `>` over `>=`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantSolver {
    pub abs_tol: f64,
    /// Standardized cut-off; tails beyond it are dropped (`Φ(-9) ≈ 1e-19`).
    pub z_cut: f64,
    pub var_floor: f64,
    pub max_panels: usize,
}

impl OrthantSolver {
    /// Solver whose variance floor is relative to the given covariance scale.
    pub fn for_scale(max_variance: f64) -> Self {
        OrthantSolver {
            abs_tol: 1e-11,
            z_cut: 9.0,
            var_floor: 1e-12 * max_variance.max(f64::MIN_POSITIVE),
            max_panels: 400,
        }
    }

    pub fn with_tolerance(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    /// `P{Z_i >= b_i for all i}` (`>` where `strict[i]`).
    pub fn upper(&self, g: &Gaussian, bounds: &[f64], strict: &[bool]) -> f64 {
        assert_eq!(bounds.len(), g.dim());
        assert_eq!(strict.len(), g.dim());
        self.upper_raw(g.mean.as_slice(), &g.cov, bounds, strict)
    }

    fn upper_raw(&self, mean: &[f64], cov: &DMatrix<f64>, bounds: &[f64], strict: &[bool]) -> f64 {
        let m = mean.len();
        let mut keep = Vec::with_capacity(m);
        let mut z = Vec::with_capacity(m);
        for i in 0..m {
            let v = cov[(i, i)];
            if v <= self.var_floor {
                let ok = if strict[i] { mean[i] > bounds[i] } else { mean[i] >= bounds[i] };
                if !ok {
                    return 0.0;
                }
                continue;
            }
            let zi = (bounds[i] - mean[i]) / v.sqrt();
            if zi > self.z_cut {
                return 0.0;
            }
            if zi >= -self.z_cut {
                keep.push(i);
                z.push(zi);
            }
        }
        match keep.len() {
            0 => 1.0,
            1 => norm_sf(z[0]),
            2 => {
                let (a, b) = (keep[0], keep[1]);
                let r = cov[(a, b)] / (cov[(a, a)] * cov[(b, b)]).sqrt();
                bvn_upper(z[0], z[1], r)
            }
            _ => {
                let j = (0..keep.len()).max_by(|&a, &b| z[a].total_cmp(&z[b])).expect("nonempty");
                let p = keep[j];
                let sp = cov[(p, p)].sqrt();
                let rest: Vec<usize> = keep.iter().copied().filter(|&i| i != p).collect();
                let n = rest.len();
                let beta: Vec<f64> = rest.iter().map(|&i| cov[(i, p)] / sp).collect();
                let ccov = DMatrix::from_fn(n, n, |a, b| cov[(rest[a], rest[b])] - beta[a] * beta[b]);
                let rb: Vec<f64> = rest.iter().map(|&i| bounds[i]).collect();
                let rs: Vec<bool> = rest.iter().map(|&i| strict[i]).collect();
                let mut cmean = vec![0.0; n];
                // coordinate a crosses its bound at u = (b_a - μ_a) / β_a
                let steps = (0..n).map(|a| ((rb[a] - mean[rest[a]]) / beta[a], ccov[(a, a)].max(0.0).sqrt() / beta[a].abs()));
                let edges = panel_edges(z[j], self.z_cut, 2, steps);
                integrate_on(
                    |u| {
                        for a in 0..n {
                            cmean[a] = mean[rest[a]] + beta[a] * u;
                        }
                        norm_pdf(u) * self.upper_raw(&cmean, &ccov, &rb, &rs)
                    },
                    &edges,
                    self.abs_tol,
                    self.max_panels,
                )
                .value
            }
        }
    }

    /// Integrates `f(s)` against the law of coordinate `k`, passing the conditional
    /// law of the other coordinates given `Z_k = s`.
    ///
    /// A constant coordinate contributes a single evaluation at its mean.
    pub fn integrate_over<F>(&self, g: &Gaussian, k: usize, f: F) -> f64
    where
        F: FnMut(f64, &Gaussian) -> f64,
    {
        self.integrate_over_with_steps(g, k, std::iter::empty(), f)
    }

    /// [`Self::integrate_over`] where `f` is known to change sharply around the
    /// standardized positions `(center, width)` of `steps`.
    fn integrate_over_with_steps<F, S>(&self, g: &Gaussian, k: usize, steps: S, mut f: F) -> f64
    where
        F: FnMut(f64, &Gaussian) -> f64,
        S: Iterator<Item = (f64, f64)>,
    {
        let var = g.variance(k);
        if var <= self.var_floor {
            let s = g.mean[k];
            let rest: Vec<usize> = (0..g.dim()).filter(|&i| i != k).collect();
            return f(s, &g.select(&rest));
        }
        let sd = var.sqrt();
        let edges = panel_edges(-self.z_cut, self.z_cut, 6, steps);
        integrate_on(
            |u| {
                let s = g.mean[k] + sd * u;
                norm_pdf(u) * f(s, &g.condition_coord(k, s))
            },
            &edges,
            self.abs_tol,
            self.max_panels,
        )
        .value
    }

    /// Probability that coordinate `k` is the minimum: `∫ φ_k(s) P{Z_i >= s, i != k | Z_k = s} ds`.
    ///
    /// `strict` is indexed over all coordinates (entry `k` is ignored) and encodes the
    /// tie rule against `k`.
    pub fn min_probability(&self, g: &Gaussian, k: usize, strict: &[bool]) -> f64 {
        let others: Vec<bool> = (0..g.dim()).filter(|&i| i != k).map(|i| strict[i]).collect();
        // given Z_k = m_k + sd_k u, Z_i - Z_k has mean m_i - m_k + (c_ik / sd_k - sd_k) u
        let var_k = g.variance(k);
        let sd_k = var_k.sqrt();
        let steps = (0..g.dim()).filter(|&i| i != k && var_k > self.var_floor).map(|i| {
            let c = g.cov[(i, k)];
            let slope = c / sd_k - sd_k;
            let cond = (g.variance(i) - c * c / var_k).max(0.0).sqrt();
            ((g.mean[k] - g.mean[i]) / slope, cond / slope.abs())
        });
        self.integrate_over_with_steps(g, k, steps, |s, rest| {
            let bounds = vec![s; rest.dim()];
            self.upper(rest, &bounds, &others)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid(n: usize) -> Gaussian {
        Gaussian::new(DVector::zeros(n), DMatrix::identity(n, n))
    }

    #[test]
    fn iid_minimum_is_uniform() {
        for n in 2..=5 {
            let g = iid(n);
            let solver = OrthantSolver::for_scale(1.0);
            let strict = vec![false; n];
            for k in 0..n {
                let p = solver.min_probability(&g, k, &strict);
                assert!((p - 1.0 / n as f64).abs() < 1e-9, "n={n} k={k} p={p}");
            }
        }
    }

    #[test]
    fn equicorrelated_orthant() {
        // P{all > 0} for equicorrelation 1/2 is 1/(n+1).
        for n in 2..=5 {
            let cov = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.5 });
            let g = Gaussian::new(DVector::zeros(n), cov);
            let p = OrthantSolver::for_scale(1.0).upper(&g, &vec![0.0; n], &vec![false; n]);
            assert!((p - 1.0 / (n as f64 + 1.0)).abs() < 1e-9, "n={n} p={p}");
        }
    }

    #[test]
    fn constant_coordinates_are_indicators() {
        let g = Gaussian::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        );
        let solver = OrthantSolver::for_scale(1.0);
        assert!((solver.upper(&g, &[1.0, 0.0], &[false, false]) - 0.5).abs() < 1e-15);
        assert_eq!(solver.upper(&g, &[1.0, 0.0], &[true, false]), 0.0);
    }

    #[test]
    fn linear_conditioning_pins_the_functional() {
        let g = Gaussian::new(
            DVector::from_vec(vec![0.5, -1.0, 2.0]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]),
        );
        let c = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let h = g.condition_linear(&c, 0.25).unwrap();
        let (m, v) = h.linear_moments(&c);
        assert!((m - 0.25).abs() < 1e-14 && v.abs() < 1e-14);
    }

    #[test]
    fn coordinate_conditioning_matches_schur_complement() {
        let g = Gaussian::new(
            DVector::from_vec(vec![0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 1.0]),
        );
        let h = g.condition_coord(0, 2.0);
        assert!((h.mean[0] - 1.5).abs() < 1e-15);
        assert!((h.cov[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn narrow_coordinate_on_a_panel_edge() {
        // the step of P{Z_1 >= s} sits at s = 0, an initial panel edge
        let g = Gaussian::new(DVector::zeros(2), DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8])));
        let solver = OrthantSolver::for_scale(1.0);
        let p0 = solver.min_probability(&g, 0, &[false, true]);
        let p1 = solver.min_probability(&g, 1, &[false, false]);
        assert!((p0 - 0.5).abs() < 1e-9, "{p0}");
        assert!((p0 + p1 - 1.0).abs() < 1e-9);
    }
}
