use rand::Rng;
use rand_distr::StandardNormal;

/// Piecewise-constant Brownian approximation on a dyadic partition of `[lo, hi]`.
///
/// Node values are built by midpoint (Lévy) refinement: the end value is drawn first,
/// then the midpoints of level 1, 2, ... left to right. A level-`M` path therefore uses
/// exactly the first `2^M` normals of its stream, and the same stream at a finer level
/// refines it: `sample(M', rng).coarsen(M) == sample(M, rng)` for equal streams.
///
/// On cell `[r_i, r_{i+1})` the path equals the node value `W(r_{i+1})`, so the
/// right-end limit `W_M(hi-)` is exactly `W(hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBm {
    lo: f64,
    hi: f64,
    level: u32,
    nodes: Vec<f64>,
}

impl DiscreteBm {
    /// Level-`level` path on `[0, 1]`.
    pub fn sample<R: Rng + ?Sized>(level: u32, rng: &mut R) -> Self {
        Self::sample_on(0.0, 1.0, level, rng)
    }

    pub fn sample_on<R: Rng + ?Sized>(lo: f64, hi: f64, level: u32, rng: &mut R) -> Self {
        assert!(hi > lo, "empty interval");
        assert!(level <= 30, "level {level} is too fine");
        let cells = 1usize << level;
        let mut nodes = vec![0.0; cells + 1];
        let width = hi - lo;
        nodes[cells] = width.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let mut span = cells;
        while span > 1 {
            let half = span / 2;
            // a bridge over `span` cells has midpoint variance span * cell / 4
            let sd = (width * span as f64 / cells as f64 / 4.0).sqrt();
            for left in (0..cells).step_by(span) {
                let z: f64 = rng.sample(StandardNormal);
                nodes[left + half] = 0.5 * (nodes[left] + nodes[left + span]) + sd * z;
            }
            span = half;
        }
        DiscreteBm { lo, hi, level, nodes }
    }

    /// The same path seen on the coarser partition of `level <= self.level()`.
    pub fn coarsen(&self, level: u32) -> Self {
        assert!(level <= self.level, "cannot coarsen to a finer level");
        let stride = 1usize << (self.level - level);
        DiscreteBm {
            lo: self.lo,
            hi: self.hi,
            level,
            nodes: self.nodes.iter().step_by(stride).copied().collect(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Cell width `Δr`.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells() as f64
    }

    /// Partition point `r_i`.
    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    /// Brownian values at the partition points.
    pub fn node_values(&self) -> &[f64] {
        &self.nodes
    }

    fn cell_of(&self, t: f64) -> usize {
        let k = ((t - self.lo) / self.step()).floor();
        (k.max(0.0) as usize).min(self.cells() - 1)
    }

    /// `W_M(t)`; the last cell also covers `t = hi`.
    pub fn w(&self, t: f64) -> f64 {
        self.nodes[self.cell_of(t) + 1]
    }

    /// `I_M` at every partition point.
    pub fn integral_nodes(&self) -> Vec<f64> {
        let h = self.step();
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for v in &self.nodes[1..] {
            acc += v * h;
            out.push(acc);
        }
        out
    }

    /// `I_M(t) = ∫_lo^t W_M`, linear between partition points.
    pub fn integral(&self, t: f64) -> f64 {
        let t = t.clamp(self.lo, self.hi);
        let k = self.cell_of(t);
        let base: f64 = self.nodes[1..=k].iter().sum::<f64>() * self.step();
        base + self.nodes[k + 1] * (t - self.node(k))
    }
}
