use super::candidates::CandidateSet;
use super::segment::candidate_probabilities;
use crate::error::{Error, Result};
use crate::numeric::{integrate, norm_cdf, norm_pdf};
use crate::process::CovarianceModel;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Value the interior diagonal of the inverse integrated-walk covariance settles at.
pub const SPECTRUM_REFERENCE: f64 = 14.354;

/// Scaling of `Σ_ij = min(i,j)^2 (max(i,j)/2 - min(i,j)/6)` on the points `i/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Multiplied by `1/N^3`, the covariance of `S(i/N)`.
    Literal,
    /// Unscaled: the integrated walk on unit spacing.
    UnitSpacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub normalization: Normalization,
    /// Diagonal of `A = Σ^-1`.
    pub diag: Vec<f64>,
    /// Eigenvalues of `A`, ascending.
    pub eigenvalues: Vec<f64>,
    pub median_diag: f64,
    /// Fraction of diagonal entries within 1% of the median.
    pub concentration: f64,
    /// `λ_n / λ_⌈n/2⌉`.
    pub eigen_ratio: f64,
    /// Whether the median is within 1% of [`SPECTRUM_REFERENCE`].
    pub matches_reference: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

pub fn spectrum_report(n: usize, normalization: Normalization) -> Result<SpectrumReport> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("spectrum needs N >= 8, got {n}")));
    }
    let scale = match normalization {
        Normalization::Literal => 1.0 / (n as f64).powi(3),
        Normalization::UnitSpacing => 1.0,
    };
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = ((i.min(j) + 1) as f64, (i.max(j) + 1) as f64);
        scale * lo * lo * (hi / 2.0 - lo / 6.0)
    });
    let points: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let model = CovarianceModel::from_matrix(points, DVector::zeros(n), sigma)?;
    let diag: Vec<f64> = model.inverse().diagonal().iter().copied().collect();
    let mut eigenvalues: Vec<f64> = model.eigenvalues().iter().map(|l| 1.0 / l).collect();
    eigenvalues.sort_by(f64::total_cmp);
    let median_diag = median(&diag);
    let concentration =
        diag.iter().filter(|&&d| (d - median_diag).abs() <= 0.01 * median_diag.abs()).count() as f64 / n as f64;
    let eigen_ratio = eigenvalues[n - 1] / eigenvalues[n.div_ceil(2) - 1];
    Ok(SpectrumReport {
        n,
        normalization,
        matches_reference: (median_diag - SPECTRUM_REFERENCE).abs() <= 0.01 * SPECTRUM_REFERENCE,
        diag,
        eigenvalues,
        median_diag,
        concentration,
        eigen_ratio,
    })
}

/// Rotated-coordinate evaluation is limited to this many kept directions.
pub const ROTATED_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedProbabilities {
    pub keep: usize,
    pub flatten: bool,
    /// Per candidate, under the truncated spectrum.
    pub truncated: Vec<f64>,
    /// Per candidate, under the full law.
    pub exact: Vec<f64>,
    pub max_error: f64,
}

/// `Y = μ + V z` with `z` standard normal in the kept directions of `Σ`: the `keep`
/// largest-variance eigenvectors (smallest eigenvalues of `A`). With `flatten` every
/// kept direction gets the largest variance.
pub fn truncated_factor(set: &CandidateSet, keep: usize, flatten: bool) -> Result<DMatrix<f64>> {
    let k = set.len();
    if keep == 0 || keep > k {
        return Err(Error::InvalidArgument(format!("keep = {keep} must be in 1..={k}")));
    }
    let eig = SymmetricEigen::new(set.objective().cov);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    Ok(DMatrix::from_fn(k, keep, |i, j| {
        let lam = if flatten { top } else { eig.eigenvalues[order[j]].max(0.0) };
        eig.eigenvectors[(i, order[j])] * lam.sqrt()
    }))
}

/// `P{candidate k is the greatest minimizer}` for `Y = μ + V z`, integrating over `z`
/// directly: nested quadrature in all but the last coordinate, where the event is an
/// interval.
pub fn rotated_probability(mean: &DVector<f64>, v: &DMatrix<f64>, k: usize) -> Result<f64> {
    let dims = v.ncols();
    if dims > ROTATED_CAP {
        return Err(Error::DimensionCap { dimension: dims, cap: ROTATED_CAP });
    }
    // the widest direction goes innermost, where it is integrated in closed form;
    // outer integrands then stay smooth
    let mut cols: Vec<usize> = (0..dims).collect();
    cols.sort_by(|&a, &b| v.column(a).norm().total_cmp(&v.column(b).norm()));
    // rows: (V_l - V_k) . z >= μ_k - μ_l
    let rows: Vec<(Vec<f64>, f64)> = (0..mean.len())
        .filter(|&l| l != k)
        .map(|l| (cols.iter().map(|&j| v[(l, j)] - v[(k, j)]).collect(), mean[k] - mean[l]))
        .collect();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    Ok(nested(&rows, 0, dims, 1e-12 * scale))
}

fn nested(rows: &[(Vec<f64>, f64)], depth: usize, dims: usize, eps: f64) -> f64 {
    if depth + 1 == dims {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in rows {
            let c = a[depth];
            if c > eps {
                lo = lo.max(b / c);
            } else if c < -eps {
                hi = hi.min(b / c);
            } else if *b > 0.0 {
                return 0.0;
            }
        }
        return if hi > lo { (norm_cdf(hi) - norm_cdf(lo)).max(0.0) } else { 0.0 };
    }
    let mut shifted: Vec<(Vec<f64>, f64)> = rows.to_vec();
    integrate(
        |z| {
            for ((_, b), (a0, b0)) in shifted.iter_mut().zip(rows) {
                *b = b0 - a0[depth] * z;
            }
            norm_pdf(z) * nested(&shifted, depth + 1, dims, eps)
        },
        -9.0,
        9.0,
        8,
        1e-12,
        600,
    )
    .value
}

pub fn truncated_spectrum_probability(set: &CandidateSet, keep: usize, flatten: bool) -> Result<TruncatedProbabilities> {
    let v = truncated_factor(set, keep, flatten)?;
    let mean = set.objective().mean;
    let truncated = (0..set.len()).map(|k| rotated_probability(&mean, &v, k)).collect::<Result<Vec<_>>>()?;
    let exact = candidate_probabilities(set)?;
    let max_error = truncated.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(TruncatedProbabilities { keep, flatten, truncated, exact, max_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::Flux;
    use crate::hopf::VariationalGrid;
    use crate::numeric::{Gaussian, OrthantSolver};
    use crate::process::ProcessSpec;

    #[test]
    fn unit_spacing_reproduces_reference() {
        let r = spectrum_report(100, Normalization::UnitSpacing).unwrap();
        assert!(r.eigenvalues.iter().all(|&l| l > 0.0));
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.concentration >= 0.5);
        assert!(r.matches_reference, "median {}", r.median_diag);
        let lit = spectrum_report(100, Normalization::Literal).unwrap();
        assert!((lit.median_diag / 1e6 - r.median_diag).abs() < 1e-6 * r.median_diag);
        assert!(!lit.matches_reference);
        assert!((lit.concentration - r.concentration).abs() < 1e-12);
        assert!(spectrum_report(7, Normalization::Literal).is_err());
    }

    fn instance() -> CandidateSet {
        let grid = VariationalGrid::build(&Flux::AbsoluteValue, 0.6, 0.3, &[1]).unwrap();
        CandidateSet::from_grid(&grid, &ProcessSpec::brownian_motion().integrated(true)).unwrap()
    }

    #[test]
    fn full_spectrum_is_exact() {
        let set = instance();
        let r = truncated_spectrum_probability(&set, set.len(), false).unwrap();
        assert!(r.max_error < 1e-8, "{:?}", r);
    }

    #[test]
    fn rotation_preserves_probability() {
        let set = instance();
        let v = truncated_factor(&set, 2, false).unwrap();
        let y = set.objective();
        let g = Gaussian::new(y.mean.clone(), &v * v.transpose());
        let solver = OrthantSolver::for_scale(g.cov.diagonal().max());
        for k in 0..set.len() {
            let z = rotated_probability(&y.mean, &v, k).unwrap();
            let direct = solver.min_probability(&g, k, &set.strict_for(k));
            assert!((z - direct).abs() < 1e-6, "k = {k}: {z} vs {direct}");
        }
        let one = truncated_spectrum_probability(&set, 1, false).unwrap();
        assert!((one.truncated.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(truncated_spectrum_probability(&set, 1, true).is_ok());
    }
}
