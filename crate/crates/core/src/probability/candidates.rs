use crate::error::{Error, Result};
use crate::hopf::{Site, VariationalGrid};
use crate::mc::Stream;
use crate::numeric::{Gaussian, OrthantSolver};
use crate::process::PathSource;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Outcome class of a minimization: the interior of a segment or a vertex of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Segment(usize),
    Vertex(usize),
}

impl Class {
    /// Position in a probability vector of length `2N + 1`: segments first.
    pub fn slot(&self, segments: usize) -> usize {
        match *self {
            Class::Segment(i) => i,
            Class::Vertex(j) => segments + j,
        }
    }

    pub fn of_site(site: Site) -> Class {
        match site {
            Site::Vertex(v) => Class::Vertex(v),
            Site::Interior { segment, .. } => Class::Segment(segment),
        }
    }
}

/// Joint Gaussian law of the objective `Y_k = g(r_k) + tL((x - r_k)/t)` over a set of
/// candidate points, together with `G_k = g'(r_k)`.
///
/// The joint vector is ordered `(Y_1, ..., Y_K, G_1, ..., G_K)`.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    sites: Vec<Site>,
    points: Vec<f64>,
    segment_values: Vec<f64>,
    joint: Gaussian,
}

/// Nested quadrature is only attempted up to this many candidates.
pub const QUADRATURE_CAP: usize = 7;

impl CandidateSet {
    pub fn from_grid<P: PathSource + ?Sized>(grid: &VariationalGrid, src: &P) -> Result<Self> {
        src.check_points(grid.points())?;
        let pts = grid.points();
        let k = pts.len();
        let mean = DVector::from_fn(2 * k, |i, _| {
            if i < k {
                src.mean_level(pts[i]) + grid.penalty()[i]
            } else {
                src.mean_slope(pts[i - k])
            }
        });
        let cov = DMatrix::from_fn(2 * k, 2 * k, |i, j| match (i < k, j < k) {
            (true, true) => src.cov_level(pts[i], pts[j]),
            (false, false) => src.cov_slope(pts[i - k], pts[j - k]),
            (false, true) => src.cov_cross(pts[i - k], pts[j]),
            (true, false) => src.cov_cross(pts[j - k], pts[i]),
        });
        Ok(CandidateSet {
            sites: grid.sites().to_vec(),
            points: pts.to_vec(),
            segment_values: grid.segment_values().to_vec(),
            joint: Gaussian::new(mean, cov),
        })
    }

    /// A candidate set with a given law for `Y`; `g'` is taken to be identically zero.
    ///
    /// Candidates are listed left to right; ties go to the later one.
    pub fn custom(sites: Vec<Site>, segment_values: Vec<f64>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let k = sites.len();
        if mean.len() != k || cov.nrows() != k || cov.ncols() != k {
            return Err(Error::InvalidArgument(format!("{k} candidates but mean/covariance do not match")));
        }
        for s in &sites {
            let ok = match *s {
                Site::Interior { segment, .. } => segment < segment_values.len(),
                Site::Vertex(v) => v <= segment_values.len(),
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("site {s:?} is outside the segment layout")));
            }
        }
        let mut jm = DVector::zeros(2 * k);
        jm.rows_mut(0, k).copy_from(&mean);
        let mut jc = DMatrix::zeros(2 * k, 2 * k);
        jc.view_mut((0, 0), (k, k)).copy_from(&cov);
        Ok(CandidateSet {
            sites,
            points: (0..k).map(|i| i as f64).collect(),
            segment_values,
            joint: Gaussian::new(jm, jc),
        })
    }

    /// The candidates at the given (increasing) indices.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.windows(2).any(|w| w[1] <= w[0]) || keep.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidArgument("restriction indices must be increasing and in range".into()));
        }
        let k = self.len();
        let idx: Vec<usize> = keep.iter().copied().chain(keep.iter().map(|&i| i + k)).collect();
        Ok(CandidateSet {
            sites: keep.iter().map(|&i| self.sites[i]).collect(),
            points: keep.iter().map(|&i| self.points[i]).collect(),
            segment_values: self.segment_values.clone(),
            joint: self.joint.select(&idx),
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn segments(&self) -> usize {
        self.segment_values.len()
    }

    pub fn segment_values(&self) -> &[f64] {
        &self.segment_values
    }

    pub fn class(&self, k: usize) -> Class {
        Class::of_site(self.sites[k])
    }

    /// Law of `(Y, G)`.
    pub fn joint(&self) -> &Gaussian {
        &self.joint
    }

    /// Law of `Y` alone.
    pub fn objective(&self) -> Gaussian {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.joint.select(&idx)
    }

    /// Tie rule for candidate `k` being the greatest minimizer: later candidates must be
    /// strictly larger.
    pub fn strict_for(&self, k: usize) -> Vec<bool> {
        (0..self.len()).map(|l| l > k).collect()
    }

    pub(crate) fn solver(&self) -> OrthantSolver {
        let scale = (0..self.len()).map(|i| self.joint.variance(i)).fold(0.0, f64::max);
        OrthantSolver::for_scale(scale)
    }

    pub(crate) fn check_cap(&self) -> Result<()> {
        if self.len() > QUADRATURE_CAP {
            return Err(Error::DimensionCap { dimension: self.len(), cap: QUADRATURE_CAP });
        }
        Ok(())
    }

    /// Matrix square root used for sampling; exact for singular covariances.
    pub(crate) fn sampler(&self) -> JointSampler {
        let eig = SymmetricEigen::new(self.joint.cov.clone());
        let n = self.joint.dim();
        let root = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt());
        JointSampler { mean: self.joint.mean.clone(), root }
    }
}

pub(crate) struct JointSampler {
    mean: DVector<f64>,
    root: DMatrix<f64>,
}

impl JointSampler {
    pub(crate) fn draw(&self, rng: &mut Stream, out: &mut [f64]) {
        let n = self.mean.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.mean[i];
            for (j, zj) in z.iter().enumerate() {
                acc += self.root[(i, j)] * zj;
            }
            *o = acc;
        }
    }
}
