use super::{kernels::Kernel, ProcessSpec};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Mean and covariance of a Gaussian vector on a point set, with its factorizations.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    points: Vec<f64>,
    mean: DVector<f64>,
    sigma: DMatrix<f64>,
    inverse: DMatrix<f64>,
    chol: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    jitter: f64,
}

/// Lower Cholesky factor, or the row whose pivot is not positive.
fn cholesky(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(j);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

impl CovarianceModel {
    /// Assembles `Σ` from [`super::covariance`] on strictly increasing `points`.
    pub fn build(spec: &ProcessSpec, points: &[f64]) -> Result<Self> {
        spec.validate()?;
        let kernel = Kernel::of(spec)?;
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("points must be strictly increasing".into()));
        }
        for &p in points {
            spec.check(p)?;
        }
        let n = points.len();
        let sigma = DMatrix::from_fn(n, n, |i, j| {
            if spec.integrated {
                kernel.level(points[i], points[j])
            } else {
                kernel.slope(points[i], points[j])
            }
        });
        let mean = DVector::from_fn(n, |i, _| {
            if spec.integrated { spec.drift * (points[i] - spec.anchor) } else { spec.drift }
        });
        Self::from_matrix(points.to_vec(), mean, sigma)
    }

    /// Factorizes a user-supplied covariance.
    ///
    /// The factorization is tried without regularization first, then once with
    /// `1e-12 * max(diag Σ)` added to the diagonal (`1e-12` for an all-zero matrix).
    pub fn from_matrix(points: Vec<f64>, mean: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let n = points.len();
        if mean.len() != n || sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} points but mean has {} entries and Σ is {}x{}",
                mean.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let asym = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (sigma[(i, j)] - sigma[(j, i)]).abs())
            .fold(0.0, f64::max);
        let scale = sigma.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if asym > 1e-12 * scale.max(1e-300) {
            return Err(Error::InvalidArgument("covariance matrix is not symmetric".into()));
        }
        let (chol, jitter) = match cholesky(&sigma) {
            Ok(l) => (l, 0.0),
            Err(_) => {
                let jitter = if scale > 0.0 { 1e-12 * scale } else { 1e-12 };
                let shifted = &sigma + DMatrix::identity(n, n) * jitter;
                match cholesky(&shifted) {
                    Ok(l) => (l, jitter),
                    Err(row) => return Err(Error::SingularCovariance { point: points[row], row }),
                }
            }
        };
        let regularized = &sigma + DMatrix::identity(n, n) * jitter;
        let inverse = {
            let lt = chol.transpose();
            let mut inv = DMatrix::identity(n, n);
            chol.solve_lower_triangular_mut(&mut inv);
            lt.solve_upper_triangular_mut(&mut inv);
            inv
        };
        let eig = SymmetricEigen::new(regularized);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(CovarianceModel { points, mean, sigma, inverse, chol, eigenvalues, eigenvectors, jitter })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `A = (Σ + jitter I)^-1`.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Lower triangular `L` with `L Lᵀ = Σ + jitter I`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Eigenvalues of `Σ + jitter I`, ascending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `μ + L z` with `z` standard normal drawn from `rng`.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;

    #[test]
    fn integrated_bm_matches_unit_lattice_formula() {
        let n = 3usize;
        let pts: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let m = CovarianceModel::build(&ProcessSpec::brownian_motion().integrated(true), &pts).unwrap();
        for i in 1..=n {
            for j in 1..=n {
                let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
                let want = lo * lo * (hi / 2.0 - lo / 6.0) / 27.0;
                assert!((m.sigma()[(i - 1, j - 1)] - want).abs() < 1e-15);
            }
        }
        assert_eq!(m.jitter(), 0.0);
    }

    #[test]
    fn single_point() {
        let m = CovarianceModel::build(&ProcessSpec::brownian_motion().integrated(true), &[1.0]).unwrap();
        assert!((m.sigma()[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.inverse()[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_bridge_needs_jitter() {
        let spec = ProcessSpec::brownian_bridge(2.0);
        let m = CovarianceModel::build(&spec, &[0.0, 2.0]).unwrap();
        assert_eq!(m.sigma(), &DMatrix::zeros(2, 2));
        assert_eq!(m.jitter(), 1e-12);
        let v = m.sample_joint(&mut stream(3, 0));
        assert!(v.iter().all(|x| x.abs() <= 1e-5));
    }

    #[test]
    fn anchor_row_is_jittered_relative_to_scale() {
        let spec = ProcessSpec::brownian_motion().integrated(true);
        let m = CovarianceModel::build(&spec, &[0.0, 0.5, 1.0]).unwrap();
        assert!((m.jitter() - 1e-12 / 3.0).abs() < 1e-27);
    }

    #[test]
    fn factorizations_are_consistent() {
        let spec = ProcessSpec::ornstein_uhlenbeck(1.3).integrated(true);
        let pts: Vec<f64> = (1..=12).map(|i| i as f64 / 12.0).collect();
        let m = CovarianceModel::build(&spec, &pts).unwrap();
        let n = pts.len();
        let id = DMatrix::<f64>::identity(n, n);
        let u = m.eigenvectors();
        assert!((u.transpose() * u - &id).amax() <= 1e-10);
        assert!((m.inverse() * m.sigma() - &id).amax() <= 1e-8);
        assert!((m.chol() * m.chol().transpose() - m.sigma()).amax() <= 1e-14);
        assert!(m.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
        assert!(m.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ProcessSpec::brownian_motion();
        let m = CovarianceModel::build(&spec, &[0.2, 0.4, 0.9]).unwrap();
        assert_eq!(m.sample_joint(&mut stream(11, 5)), m.sample_joint(&mut stream(11, 5)));
    }

    #[test]
    fn singular_matrix_names_the_point() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = CovarianceModel::from_matrix(vec![0.1, 0.7], DVector::zeros(2), sigma).unwrap_err();
        assert_eq!(err, Error::SingularCovariance { point: 0.7, row: 1 });
    }
}
