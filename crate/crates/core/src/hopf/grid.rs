use crate::error::{Error, Result};
use crate::flux::{legendre, Flux, LegendreTransform};
use crate::mc::Stream;
use crate::process::PathSource;

/// Role of a grid point. Segments and vertices are numbered from 0, left to right in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Vertex(usize),
    Interior { segment: usize, index: usize },
}

/// Candidate minimizers for one `(x, t)`: the kinks of `y ↦ tL((x - y)/t)` plus
/// interior points on each affine segment between them.
///
/// With `q`-vertices `m_1 < ... < m_{N+1}` of `L`, the `y`-vertices are
/// `x - m_{N+1} t < ... < x - m_1 t`; on `y`-segment `i` the solution value is the
/// slope of `L` on the mirrored `q`-piece.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalGrid {
    x: f64,
    t: f64,
    points: Vec<f64>,
    sites: Vec<Site>,
    penalty: Vec<f64>,
    vertex_index: Vec<usize>,
    segment_values: Vec<f64>,
    counts: Vec<usize>,
    transform: LegendreTransform,
}

/// Pieces of `L` and the matching `y`-vertices for `(x, t)`.
pub(crate) struct Frame {
    pub(crate) transform: LegendreTransform,
    /// `y`-vertices, increasing.
    pub(crate) vertices: Vec<f64>,
    /// `tL` at each `y`-vertex.
    pub(crate) vertex_penalty: Vec<f64>,
    /// `L'` on each `y`-segment.
    pub(crate) segment_values: Vec<f64>,
}

impl Frame {
    pub(crate) fn new(flux: &Flux, x: f64, t: f64) -> Result<Frame> {
        if !(t > 0.0 && t.is_finite()) || !x.is_finite() {
            return Err(Error::InvalidGrid(format!("need finite x and t > 0, got x = {x}, t = {t}")));
        }
        let transform = legendre(flux);
        let pieces = match transform.pieces() {
            Some(p) if p.iter().all(|p| p.hi > p.lo) => p.to_vec(),
            Some(_) => return Err(Error::UnsupportedFlux("L is finite at a single point only".into())),
            None => {
                return Err(Error::UnsupportedFlux(
                    "the variational grid needs L with finite support; use solve_power_law".into(),
                ))
            }
        };
        let mut qv: Vec<f64> = pieces.iter().map(|p| p.lo).collect();
        qv.push(pieces[pieces.len() - 1].hi);
        let vertices: Vec<f64> = qv.iter().rev().map(|&m| x - m * t).collect();
        let vertex_penalty: Vec<f64> = qv
            .iter()
            .rev()
            .map(|&m| t * transform.eval(m).finite().expect("vertex lies in the support"))
            .collect();
        let segment_values: Vec<f64> = pieces.iter().rev().map(|p| p.slope).collect();
        if vertices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("segments collapse at this t".into()));
        }
        Ok(Frame { transform, vertices, vertex_penalty, segment_values })
    }

    /// `tL((x - r)/t)` for `r` strictly inside `y`-segment `i`.
    pub(crate) fn interior_penalty(&self, x: f64, t: f64, segment: usize, r: f64) -> f64 {
        let pieces = self.transform.pieces().expect("piecewise transform");
        let piece = pieces[pieces.len() - 1 - segment];
        t * piece.eval((x - r) / t)
    }
}

impl VariationalGrid {
    /// Grid with `counts[i]` equally spaced interior points on segment `i`.
    pub fn build(flux: &Flux, x: f64, t: f64, counts: &[usize]) -> Result<Self> {
        let frame = Frame::new(flux, x, t)?;
        let n_seg = frame.segment_values.len();
        if counts.len() != n_seg {
            return Err(Error::InvalidGrid(format!("{n_seg} segments but {} counts", counts.len())));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidGrid("every segment needs at least one interior point".into()));
        }
        let interior: Vec<Vec<f64>> = (0..n_seg)
            .map(|i| {
                let (a, b) = (frame.vertices[i], frame.vertices[i + 1]);
                let n = counts[i];
                (1..=n).map(|j| a + (b - a) * j as f64 / (n + 1) as f64).collect()
            })
            .collect();
        Ok(Self::assemble(frame, x, t, interior))
    }

    /// Grid with the same number of interior points on every segment.
    pub fn uniform(flux: &Flux, x: f64, t: f64, per_segment: usize) -> Result<Self> {
        let n_seg = Frame::new(flux, x, t)?.segment_values.len();
        Self::build(flux, x, t, &vec![per_segment; n_seg])
    }

    /// Grid whose interior points are the lattice points `origin + k h` strictly inside
    /// each segment; lattice points within `1e-9 h` of a vertex are merged into it.
    pub fn on_lattice(flux: &Flux, x: f64, t: f64, origin: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("lattice step {h} must be positive")));
        }
        let frame = Frame::new(flux, x, t)?;
        let tol = 1e-9 * h;
        let interior: Vec<Vec<f64>> = frame
            .vertices
            .windows(2)
            .map(|w| {
                let k0 = ((w[0] - origin) / h).floor() as i64;
                let k1 = ((w[1] - origin) / h).ceil() as i64;
                (k0..=k1)
                    .map(|k| origin + k as f64 * h)
                    .filter(|&r| r > w[0] + tol && r < w[1] - tol)
                    .collect()
            })
            .collect();
        Ok(Self::assemble(frame, x, t, interior))
    }

    /// Grid whose interior points are the given sorted `candidates` strictly inside each
    /// segment; candidates within `tol` of a vertex are merged into it.
    ///
    /// Every `x` of a scan drawing from one candidate set minimizes over that set
    /// restricted to its window, which keeps the greatest minimizer monotone in `x`.
    pub fn from_candidates(flux: &Flux, x: f64, t: f64, candidates: &[f64], tol: f64) -> Result<Self> {
        let frame = Frame::new(flux, x, t)?;
        let interior: Vec<Vec<f64>> = frame
            .vertices
            .windows(2)
            .map(|w| {
                let a = candidates.partition_point(|&r| r <= w[0] + tol);
                let b = candidates.partition_point(|&r| r < w[1] - tol);
                candidates[a..b.max(a)].to_vec()
            })
            .collect();
        Ok(Self::assemble(frame, x, t, interior))
    }

    fn assemble(frame: Frame, x: f64, t: f64, interior: Vec<Vec<f64>>) -> Self {
        let mut points = Vec::new();
        let mut sites = Vec::new();
        let mut penalty = Vec::new();
        let mut vertex_index = Vec::new();
        for (v, &y) in frame.vertices.iter().enumerate() {
            vertex_index.push(points.len());
            points.push(y);
            sites.push(Site::Vertex(v));
            penalty.push(frame.vertex_penalty[v]);
            if let Some(seg) = interior.get(v) {
                for (j, &r) in seg.iter().enumerate() {
                    points.push(r);
                    sites.push(Site::Interior { segment: v, index: j });
                    penalty.push(frame.interior_penalty(x, t, v, r));
                }
            }
        }
        let counts = interior.iter().map(Vec::len).collect();
        VariationalGrid {
            x,
            t,
            points,
            sites,
            penalty,
            vertex_index,
            segment_values: frame.segment_values,
            counts,
            transform: frame.transform,
        }
    }

    /// The transform `L` the grid was built from.
    pub fn legendre(&self) -> &LegendreTransform {
        &self.transform
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// All points, increasing.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `tL((x - r)/t)` at every point; always finite.
    pub fn penalty(&self) -> &[f64] {
        &self.penalty
    }

    pub fn vertices(&self) -> Vec<f64> {
        self.vertex_index.iter().map(|&i| self.points[i]).collect()
    }

    /// Index into [`Self::points`] of each vertex.
    pub fn vertex_indices(&self) -> &[usize] {
        &self.vertex_index
    }

    /// Interior points per segment.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of interior points.
    pub fn interior_total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn segments(&self) -> usize {
        self.segment_values.len()
    }

    /// Solution value `L'` on each segment.
    pub fn segment_values(&self) -> &[f64] {
        &self.segment_values
    }

    /// The interval `[x - m_{N+1} t, x - m_1 t]` outside which `L` is infinite.
    pub fn interval(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }
}

/// Values of `g'` and `g` at the points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub gprime: Vec<f64>,
    pub g: Vec<f64>,
    /// Left limits of `g'` where they differ from `gprime`.
    pub gprime_left: Option<Vec<f64>>,
}

impl SamplePath {
    pub fn new(gprime: Vec<f64>, g: Vec<f64>) -> Self {
        SamplePath { gprime, g, gprime_left: None }
    }

    pub fn with_left_limits(mut self, left: Vec<f64>) -> Self {
        self.gprime_left = Some(left);
        self
    }

    pub fn from_fn(grid: &VariationalGrid, g: impl Fn(f64) -> f64, gprime: impl Fn(f64) -> f64) -> Self {
        Self::new(grid.points().iter().map(|&y| gprime(y)).collect(), grid.points().iter().map(|&y| g(y)).collect())
    }

    pub fn sample<P: PathSource + ?Sized>(grid: &VariationalGrid, src: &P, rng: &mut Stream) -> Result<Self> {
        let (gp, g) = src.realize(grid.points(), rng)?;
        Ok(Self::new(gp, g))
    }

    pub(crate) fn check(&self, grid: &VariationalGrid) -> Result<()> {
        let expected = grid.len();
        for found in [self.gprime.len(), self.g.len()]
            .into_iter()
            .chain(self.gprime_left.as_ref().map(Vec::len))
        {
            if found != expected {
                return Err(Error::PathMismatch { expected, found });
            }
        }
        Ok(())
    }

    /// `Y = g + tL((x - r)/t)` at every grid point.
    pub fn objective(&self, grid: &VariationalGrid) -> Vec<f64> {
        self.g.iter().zip(grid.penalty()).map(|(g, p)| g + p).collect()
    }
}
