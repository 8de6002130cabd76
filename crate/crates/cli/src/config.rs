use eflux::flux::Flux;
use eflux::process::{BridgeOutside, DeterministicPath, PathSource, ProcessSpec, WithMean};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Whole run description. Every section has defaults, so a file only needs the parts a
/// subcommand reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    pub flux: FluxConfig,
    pub process: ProcessConfig,
    pub grid: GridConfig,
    pub sample_path: WindowConfig,
    pub scan: ScanConfig,
    pub segment_probs: SegmentProbsConfig,
    pub cdf: CdfConfig,
    pub shock_density: ShockConfig,
    pub spectrum: SpectrumConfig,
    pub variance_law: VarianceConfig,
    pub converge: ConvergeConfig,
    pub fd_compare: FdCompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            trials: 10_000,
            flux: FluxConfig::AbsoluteValue,
            process: ProcessConfig::default(),
            grid: GridConfig::default(),
            sample_path: WindowConfig::default(),
            scan: ScanConfig::default(),
            segment_probs: SegmentProbsConfig::default(),
            cdf: CdfConfig::default(),
            shock_density: ShockConfig::default(),
            spectrum: SpectrumConfig::default(),
            variance_law: VarianceConfig::default(),
            converge: ConvergeConfig::default(),
            fd_compare: FdCompareConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxConfig {
    AbsoluteValue,
    Burgers,
    PowerLaw { j: f64 },
    Polygonal { slopes: Vec<f64>, breakpoints: Vec<f64> },
}

impl FluxConfig {
    pub fn build(&self) -> Result<Flux, CliError> {
        Ok(match self {
            FluxConfig::AbsoluteValue => Flux::AbsoluteValue,
            FluxConfig::Burgers => Flux::burgers(),
            FluxConfig::PowerLaw { j } => Flux::power_law(*j)?,
            FluxConfig::Polygonal { slopes, breakpoints } => Flux::polygonal(slopes.clone(), breakpoints.clone())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKindConfig {
    BrownianMotion,
    BrownianBridge,
    OrnsteinUhlenbeck,
    /// No randomness: the data is `mean_polynomial` alone.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeOutsideConfig {
    HoldConstant,
    Zero,
}

/// Initial data `g`: the integral of the chosen process plus `Σ c_k y^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessConfig {
    pub kind: ProcessKindConfig,
    pub anchor: f64,
    pub domain: [f64; 2],
    pub horizon: f64,
    pub rate: f64,
    pub drift: f64,
    pub bridge_outside: BridgeOutsideConfig,
    pub mean_polynomial: Vec<f64>,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            kind: ProcessKindConfig::BrownianMotion,
            anchor: 0.0,
            domain: [-3.0, 3.0],
            horizon: 1.0,
            rate: 1.0,
            drift: 0.0,
            bridge_outside: BridgeOutsideConfig::HoldConstant,
            mean_polynomial: Vec::new(),
        }
    }
}

fn poly(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * y + a)
}

fn poly_prime(c: &[f64], y: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &a)| acc * y + k as f64 * a)
}

impl ProcessConfig {
    pub fn spec(&self) -> Result<ProcessSpec, CliError> {
        let base = match self.kind {
            ProcessKindConfig::BrownianMotion => ProcessSpec::brownian_motion(),
            ProcessKindConfig::BrownianBridge => ProcessSpec::brownian_bridge(self.horizon),
            ProcessKindConfig::OrnsteinUhlenbeck => ProcessSpec::ornstein_uhlenbeck(self.rate),
            ProcessKindConfig::Deterministic => {
                return Err(CliError::Config("a deterministic process has no Gaussian law".into()))
            }
        };
        let spec = base
            .integrated(true)
            .with_anchor(self.anchor)
            .with_domain(self.domain[0], self.domain[1])
            .with_drift(self.drift)
            .with_bridge_outside(match self.bridge_outside {
                BridgeOutsideConfig::HoldConstant => BridgeOutside::HoldConstant,
                BridgeOutsideConfig::Zero => BridgeOutside::Zero,
            });
        spec.validate()?;
        Ok(spec)
    }

    pub fn source(&self) -> Result<Box<dyn PathSource>, CliError> {
        let c = self.mean_polynomial.clone();
        let d = self.mean_polynomial.clone();
        let g = move |y: f64| poly(&c, y);
        let gp = move |y: f64| poly_prime(&d, y);
        Ok(match self.kind {
            ProcessKindConfig::Deterministic => Box::new(DeterministicPath::new(g, gp)),
            _ if self.mean_polynomial.is_empty() => Box::new(self.spec()?),
            _ => Box::new(WithMean { base: self.spec()?, g, gprime: gp }),
        })
    }
}

/// Variational grid at one `(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x: f64,
    pub t: f64,
    /// Interior points per segment; overrides `per_segment` when nonempty.
    pub counts: Vec<usize>,
    pub per_segment: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x: 0.5, t: 0.25, counts: Vec::new(), per_segment: 1 }
    }
}

/// Dense sampling window `[lo, hi]` split into `cells` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { lo: -3.0, hi: 3.0, cells: 600 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub t: f64,
    pub x_range: [f64; 2],
    pub dx: f64,
    /// Interior lattice spacing; `dx` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { t: 0.5, x_range: [-1.0, 1.0], dx: 0.01, step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodConfig {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentProbsConfig {
    pub method: MethodConfig,
}

impl Default for SegmentProbsConfig {
    fn default() -> Self {
        SegmentProbsConfig { method: MethodConfig::MonteCarlo }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Segment,
    Vertex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdfConfig {
    pub method: MethodConfig,
    pub target: TargetKind,
    /// 1-based segment or vertex number.
    pub index: usize,
    pub s_range: [f64; 2],
    pub points: usize,
}

impl Default for CdfConfig {
    fn default() -> Self {
        CdfConfig { method: MethodConfig::Quadrature, target: TargetKind::Segment, index: 1, s_range: [-1.0, 1.0], points: 41 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockMethodConfig {
    Quadrature,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockConfig {
    pub method: ShockMethodConfig,
    /// 1-based positions in the grid's point list; all points when empty.
    pub keep: Vec<usize>,
    pub dxs: Vec<f64>,
}

impl Default for ShockConfig {
    fn default() -> Self {
        ShockConfig { method: ShockMethodConfig::Quadrature, keep: Vec::new(), dxs: vec![1e-2, 5e-3, 2.5e-3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub n: Vec<usize>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { n: vec![100, 200] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarianceConfig {
    pub j: f64,
    /// `(x, t)` pairs, all solved on the same paths.
    pub points: Vec<[f64; 2]>,
    pub window: WindowConfig,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            j: 2.0,
            points: vec![[0.0, 0.25], [0.0, 0.5], [0.0, 1.0]],
            window: WindowConfig { lo: -4.0, hi: 4.0, cells: 1600 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    pub x: f64,
    pub t: f64,
    pub levels: Vec<u32>,
    pub alpha: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig { x: 0.5, t: 0.25, levels: vec![4, 6, 8, 10], alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeConfig {
    LaxFriedrichs,
    EngquistOsher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryConfig {
    Periodic,
    Outflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdCompareConfig {
    pub ts: Vec<f64>,
    pub window: [f64; 2],
    pub observe: [f64; 2],
    pub dx: f64,
    pub cfl: f64,
    pub scheme: SchemeConfig,
    pub boundary: BoundaryConfig,
}

impl Default for FdCompareConfig {
    fn default() -> Self {
        FdCompareConfig {
            ts: vec![0.25, 0.5, 0.75, 1.0],
            window: [-3.0, 3.0],
            observe: [-1.0, 1.0],
            dx: 0.02,
            cfl: 0.9,
            scheme: SchemeConfig::LaxFriedrichs,
            boundary: BoundaryConfig::Outflow,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_derivative() {
        let c = [1.0, -2.0, 3.0];
        assert_eq!(poly(&c, 2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(poly_prime(&c, 2.0), -2.0 + 12.0);
        assert_eq!(poly_prime(&[5.0], 1.0), 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("seed = 1\nbogus = 2\n").is_err());
        assert!(RunConfig::parse("[grid]\nx = 0.1\ny = 2\n").is_err());
        assert!(RunConfig::parse("[flux]\nkind = \"power-law\"\nj = 3.0\nk = 1\n").is_err());
        assert!(RunConfig::parse("[flux]\nkind = \"power-law\"\nj = 3.0\n").is_ok());
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }
}
