//! Gaussian initial data: Brownian motion, Brownian bridge and Ornstein-Uhlenbeck
//! processes together with their running integrals.
//!
//! The process `X` plays the role of `g'`; its integral `S(y) = ∫_anchor^y X` plays `g`.

mod discrete;
mod kernels;
mod model;
mod sample;

pub use discrete::DiscreteBm;
pub use model::CovarianceModel;

use crate::error::{Error, Result};
use crate::mc::Stream;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    /// Two-sided Brownian motion pinned to 0 at the anchor.
    BrownianMotion,
    /// Brownian motion on `[anchor, anchor + horizon]` conditioned to vanish at both ends.
    BrownianBridge { horizon: f64 },
    /// Stationary Ornstein-Uhlenbeck process with covariance `exp(-rate |t - s|) / (2 rate)`.
    OrnsteinUhlenbeck { rate: f64 },
    /// Covariance supplied as a matrix; see [`CovarianceModel::from_matrix`].
    Custom,
}

/// How the integrated bridge behaves beyond its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BridgeOutside {
    /// The integral keeps its value at the horizon.
    #[default]
    HoldConstant,
    /// Both the bridge and its integral are zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Whether [`covariance`] and [`CovarianceModel::build`] describe the integral.
    pub integrated: bool,
    pub anchor: f64,
    pub domain: (f64, f64),
    /// Constant mean of `X`; the integral then has mean `drift * (y - anchor)`.
    pub drift: f64,
    pub bridge_outside: BridgeOutside,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Self {
        let domain = match kind {
            ProcessKind::BrownianBridge { horizon } => (0.0, horizon),
            _ => (0.0, 1.0),
        };
        ProcessSpec {
            kind,
            integrated: false,
            anchor: 0.0,
            domain,
            drift: 0.0,
            bridge_outside: BridgeOutside::default(),
        }
    }

    pub fn brownian_motion() -> Self {
        Self::new(ProcessKind::BrownianMotion)
    }

    pub fn brownian_bridge(horizon: f64) -> Self {
        Self::new(ProcessKind::BrownianBridge { horizon })
    }

    pub fn ornstein_uhlenbeck(rate: f64) -> Self {
        Self::new(ProcessKind::OrnsteinUhlenbeck { rate })
    }

    pub fn integrated(mut self, integrated: bool) -> Self {
        self.integrated = integrated;
        self
    }

    pub fn with_anchor(mut self, anchor: f64) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_bridge_outside(mut self, mode: BridgeOutside) -> Self {
        self.bridge_outside = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidProcess(format!("domain [{lo}, {hi}] is not a proper interval")));
        }
        if !self.anchor.is_finite() || !self.drift.is_finite() {
            return Err(Error::InvalidProcess("anchor and drift must be finite".into()));
        }
        match self.kind {
            ProcessKind::BrownianBridge { horizon } if !(horizon > 0.0 && horizon.is_finite()) => {
                Err(Error::InvalidProcess(format!("bridge horizon {horizon} must be positive")))
            }
            ProcessKind::OrnsteinUhlenbeck { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(Error::InvalidProcess(format!("OU rate {rate} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.domain.0 && y <= self.domain.1
    }

    fn check(&self, y: f64) -> Result<()> {
        if self.contains(y) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: y, lo: self.domain.0, hi: self.domain.1 })
        }
    }

    fn kernel(&self) -> Result<kernels::Kernel> {
        self.validate()?;
        kernels::Kernel::of(self)
    }
}

/// `Cov(Z(s), Z(t))`, where `Z` is the process or its integral per `spec.integrated`.
pub fn covariance(spec: &ProcessSpec, s: f64, t: f64) -> Result<f64> {
    let k = spec.kernel()?;
    spec.check(s)?;
    spec.check(t)?;
    Ok(if spec.integrated { k.level(s, t) } else { k.slope(s, t) })
}

/// Random initial data `g` with derivative `g'`, described by second-order structure.
pub trait PathSource: Sync {
    fn mean_slope(&self, y: f64) -> f64;
    fn mean_level(&self, y: f64) -> f64;
    /// `Cov(g'(a), g'(b))`.
    fn cov_slope(&self, a: f64, b: f64) -> f64;
    /// `Cov(g'(a), g(b))`.
    fn cov_cross(&self, a: f64, b: f64) -> f64;
    /// `Cov(g(a), g(b))`.
    fn cov_level(&self, a: f64, b: f64) -> f64;

    /// Rejects points where the data is undefined.
    fn check_points(&self, _points: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Draws `(g', g)` at nondecreasing `points`.
    fn realize(&self, points: &[f64], rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_points(points)?;
        joint_model(self, points)?.sample_split(rng)
    }
}

/// Joint model of `(g'(p_1..p_n), g(p_1..p_n))`.
pub(crate) fn joint_model<P: PathSource + ?Sized>(src: &P, points: &[f64]) -> Result<JointModel> {
    let n = points.len();
    let at = |i: usize| points[i % n];
    let mean = DVector::from_fn(2 * n, |i, _| {
        if i < n { src.mean_slope(at(i)) } else { src.mean_level(at(i)) }
    });
    let sigma = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => src.cov_slope(at(i), at(j)),
        (true, false) => src.cov_cross(at(i), at(j)),
        (false, true) => src.cov_cross(at(j), at(i)),
        (false, false) => src.cov_level(at(i), at(j)),
    });
    let labels: Vec<f64> = points.iter().chain(points).copied().collect();
    Ok(JointModel { n, model: CovarianceModel::from_matrix(labels, mean, sigma)? })
}

pub(crate) struct JointModel {
    n: usize,
    model: CovarianceModel,
}

impl JointModel {
    fn sample_split(&self, rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = self.model.sample_joint(rng);
        Ok((v.as_slice()[..self.n].to_vec(), v.as_slice()[self.n..].to_vec()))
    }
}

impl PathSource for ProcessSpec {
    fn mean_slope(&self, _y: f64) -> f64 {
        self.drift
    }

    fn mean_level(&self, y: f64) -> f64 {
        self.drift * (y - self.anchor)
    }

    fn cov_slope(&self, a: f64, b: f64) -> f64 {
        self.kernel().map(|k| k.slope(a, b)).unwrap_or(f64::NAN)
    }

    fn cov_cross(&self, a: f64, b: f64) -> f64 {
        self.kernel().map(|k| k.cross(a, b)).unwrap_or(f64::NAN)
    }

    fn cov_level(&self, a: f64, b: f64) -> f64 {
        self.kernel().map(|k| k.level(a, b)).unwrap_or(f64::NAN)
    }

    fn check_points(&self, points: &[f64]) -> Result<()> {
        self.kernel()?;
        points.iter().try_for_each(|&p| self.check(p))
    }

    /// Exact sequential simulation, linear in the number of points.
    fn realize(&self, points: &[f64], rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_points(points)?;
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("sample points must be nondecreasing".into()));
        }
        let (mut gp, mut g) = sample::realize(self, points, rng);
        for (i, &y) in points.iter().enumerate() {
            gp[i] += self.drift;
            g[i] += self.drift * (y - self.anchor);
        }
        Ok((gp, g))
    }
}

/// Non-random data given by closures.
#[derive(Clone, Copy)]
pub struct DeterministicPath<G, D> {
    pub g: G,
    pub gprime: D,
}

impl<G, D> DeterministicPath<G, D>
where
    G: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    pub fn new(g: G, gprime: D) -> Self {
        DeterministicPath { g, gprime }
    }
}

impl<G, D> PathSource for DeterministicPath<G, D>
where
    G: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    fn mean_slope(&self, y: f64) -> f64 {
        (self.gprime)(y)
    }
    fn mean_level(&self, y: f64) -> f64 {
        (self.g)(y)
    }
    fn cov_slope(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn cov_cross(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn cov_level(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn realize(&self, points: &[f64], _rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((points.iter().map(|&y| (self.gprime)(y)).collect(), points.iter().map(|&y| (self.g)(y)).collect()))
    }
}

/// A random source plus a deterministic mean profile.
#[derive(Clone, Copy)]
pub struct WithMean<P, G, D> {
    pub base: P,
    pub g: G,
    pub gprime: D,
}

impl<P, G, D> PathSource for WithMean<P, G, D>
where
    P: PathSource,
    G: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    fn mean_slope(&self, y: f64) -> f64 {
        self.base.mean_slope(y) + (self.gprime)(y)
    }
    fn mean_level(&self, y: f64) -> f64 {
        self.base.mean_level(y) + (self.g)(y)
    }
    fn cov_slope(&self, a: f64, b: f64) -> f64 {
        self.base.cov_slope(a, b)
    }
    fn cov_cross(&self, a: f64, b: f64) -> f64 {
        self.base.cov_cross(a, b)
    }
    fn cov_level(&self, a: f64, b: f64) -> f64 {
        self.base.cov_level(a, b)
    }
    fn check_points(&self, points: &[f64]) -> Result<()> {
        self.base.check_points(points)
    }
    fn realize(&self, points: &[f64], rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut gp, mut g) = self.base.realize(points, rng)?;
        for (i, &y) in points.iter().enumerate() {
            gp[i] += (self.gprime)(y);
            g[i] += (self.g)(y);
        }
        Ok((gp, g))
    }
}
