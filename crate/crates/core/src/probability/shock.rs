use super::candidates::{CandidateSet, Class};
use super::segment::tie_density;
use crate::error::{Error, Result};
use crate::flux::Extended;
use crate::hopf::{Site, VariationalGrid};
use crate::mc::{run_trials, Moments};
use crate::process::PathSource;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum ShockMethod {
    SmallInstanceQuadrature,
    FiniteDifference { dxs: Vec<f64>, trials: u64 },
}

/// Rates per unit `x` at which the minimizer moves from one class to another as `x`
/// increases, indexed by class slot (segments first, then vertices).
///
/// Interior candidates stay put while the vertices move with `x`, so an interior
/// objective changes at rate `d_i` and a vertex objective at rate `g'(r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockDensityResult {
    pub segments: usize,
    pub rates: DMatrix<f64>,
    /// Zero for quadrature.
    pub std_error: DMatrix<f64>,
    pub total_density: f64,
    pub total_error: f64,
    pub method: ShockMethod,
}

impl ShockDensityResult {
    pub fn rate(&self, from: Class, to: Class) -> f64 {
        self.rates[(from.slot(self.segments), to.slot(self.segments))]
    }

    pub fn error(&self, from: Class, to: Class) -> f64 {
        self.std_error[(from.slot(self.segments), to.slot(self.segments))]
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
        self.rates.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }

    pub fn segment_to_segment(&self) -> DMatrix<f64> {
        let n = self.segments;
        self.block(0..n, 0..n)
    }

    pub fn segment_to_vertex(&self) -> DMatrix<f64> {
        let n = self.segments;
        self.block(0..n, n..2 * n + 1)
    }

    pub fn vertex_to_segment(&self) -> DMatrix<f64> {
        let n = self.segments;
        self.block(n..2 * n + 1, 0..n)
    }

    pub fn vertex_to_vertex(&self) -> DMatrix<f64> {
        let n = self.segments;
        self.block(n..2 * n + 1, n..2 * n + 1)
    }
}

/// Rate of change in `x` of candidate `k`'s objective as a linear functional of `(Y, G)`
/// plus a constant.
fn rate_of(set: &CandidateSet, k: usize) -> (Option<usize>, f64) {
    match set.sites()[k] {
        Site::Interior { segment, .. } => (None, set.segment_values()[segment]),
        Site::Vertex(_) => (Some(set.len() + k), 0.0),
    }
}

/// Density of transitions from candidate `a` to candidate `b`:
/// `E{(ρ_a - ρ_b)_+ δ(Y_b - Y_a) 1{Y_m >= Y_a, m != a, b}}`.
pub fn pair_density(set: &CandidateSet, a: usize, b: usize) -> Result<f64> {
    set.check_cap()?;
    if a == b || a >= set.len() || b >= set.len() {
        return Err(Error::InvalidArgument(format!("bad candidate pair ({a}, {b})")));
    }
    let solver = set.solver();
    let (ra, ca) = rate_of(set, a);
    let (rb, cb) = rate_of(set, b);
    let shift = ca - cb;
    if ra.is_none() && rb.is_none() {
        // both rates are slopes of L: only d_a > d_b can produce a transition
        return Ok(if shift <= 0.0 { 0.0 } else { tie_density(set, &solver, a, b, None, shift) });
    }
    let mut r = DVector::zeros(2 * set.len());
    if let Some(i) = ra {
        r[i] += 1.0;
    }
    if let Some(i) = rb {
        r[i] -= 1.0;
    }
    Ok(tie_density(set, &solver, a, b, Some(&r), shift))
}

/// Transition densities between classes by quadrature of the pairwise tie densities.
pub fn shock_density_quadrature(set: &CandidateSet) -> Result<ShockDensityResult> {
    set.check_cap()?;
    let n = set.segments();
    let mut rates = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    for a in 0..set.len() {
        for b in 0..set.len() {
            let (ca, cb) = (set.class(a), set.class(b));
            if ca == cb {
                continue;
            }
            rates[(ca.slot(n), cb.slot(n))] += pair_density(set, a, b)?;
        }
    }
    let total_density = rates.sum();
    Ok(ShockDensityResult {
        segments: n,
        std_error: DMatrix::zeros(2 * n + 1, 2 * n + 1),
        rates,
        total_density,
        total_error: 0.0,
        method: ShockMethod::SmallInstanceQuadrature,
    })
}

/// Weights `w_l` with `Σ w_l f(h_l)` exact at `h = 0` for polynomials of degree below
/// the number of steps.
pub fn richardson_weights(steps: &[f64]) -> Vec<f64> {
    (0..steps.len())
        .map(|l| {
            (0..steps.len())
                .filter(|&m| m != l)
                .map(|m| steps[m] / (steps[m] - steps[l]))
                .product()
        })
        .collect()
}

/// Transition densities as `P{class A at x, class B at x + Δx} / Δx`, extrapolated to
/// `Δx → 0` over a strictly decreasing sequence of steps.
///
/// `keep` restricts the candidates to a subset of the grid points.
pub fn shock_density_mc<P: PathSource + ?Sized>(
    grid: &VariationalGrid,
    src: &P,
    keep: Option<&[usize]>,
    dxs: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<ShockDensityResult> {
    if dxs.is_empty() || dxs.iter().any(|&h| !(h > 0.0)) || dxs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("Δx sequence must be positive and strictly decreasing".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let all: Vec<usize> = (0..grid.len()).collect();
    let keep = keep.unwrap_or(&all);
    if keep.is_empty() || keep.windows(2).any(|w| w[1] <= w[0]) || keep.iter().any(|&i| i >= grid.len()) {
        return Err(Error::InvalidArgument("candidate subset must be increasing and in range".into()));
    }
    let (x, t) = (grid.x(), grid.t());
    let transform = grid.legendre();
    let pts = grid.points();
    let vertices = grid.vertices();
    let n = grid.segments();

    // path points: the grid plus every vertex shifted by every step
    let mut union: Vec<f64> = pts.to_vec();
    for &h in dxs {
        union.extend(vertices.iter().map(|v| v + h));
    }
    union.sort_by(f64::total_cmp);
    union.dedup();
    src.check_points(&union)?;
    let at = |r: f64| union.binary_search_by(|p| p.total_cmp(&r)).expect("point is in the union");
    let base_idx: Vec<usize> = keep.iter().map(|&k| at(pts[k])).collect();

    // per step: for each kept candidate, (path index, penalty, class after the move)
    type Moved = Option<(usize, f64, Class, f64)>;
    let mut moved: Vec<Vec<Moved>> = Vec::new();
    for &h in dxs {
        let shifted: Vec<f64> = vertices.iter().map(|v| v + h).collect();
        let row = keep
            .iter()
            .map(|&k| match grid.sites()[k] {
                Site::Vertex(v) => Some((at(shifted[v]), grid.penalty()[k], Class::Vertex(v), shifted[v])),
                Site::Interior { .. } => {
                    let r = pts[k];
                    match transform.eval((x + h - r) / t) {
                        Extended::PosInf => None,
                        Extended::Finite(l) => {
                            let seg = shifted.windows(2).position(|w| r > w[0] && r < w[1])?;
                            Some((at(r), t * l, Class::Segment(seg), r))
                        }
                    }
                }
            })
            .collect();
        moved.push(row);
    }
    let weights = richardson_weights(dxs);
    let slots = 2 * n + 1;

    let acc = run_trials(
        trials,
        master_seed,
        || Ok(vec![Moments::default(); slots * slots + 1]),
        |acc: &mut Result<Vec<Moments>>, _k, rng| {
            let Ok(cells) = acc else { return };
            let (_gp, g) = match src.realize(&union, rng) {
                Ok(v) => v,
                Err(e) => {
                    *acc = Err(e);
                    return;
                }
            };
            let y: Vec<f64> = keep.iter().zip(&base_idx).map(|(&k, &i)| g[i] + grid.penalty()[k]).collect();
            let from = Class::of_site(grid.sites()[keep[super::segment::argmin(&y)]]);
            let mut value = vec![0.0; slots * slots];
            for (l, row) in moved.iter().enumerate() {
                let mut best: Option<(f64, f64, Class)> = None;
                for &(i, pen, class, pos) in row.iter().flatten() {
                    let v = g[i] + pen;
                    let better = match best {
                        None => true,
                        Some((bv, bp, _)) => v < bv || (v == bv && pos > bp),
                    };
                    if better {
                        best = Some((v, pos, class));
                    }
                }
                let to = best.expect("some candidate survives the move").2;
                if to != from {
                    value[from.slot(n) * slots + to.slot(n)] += weights[l] / dxs[l];
                }
            }
            let total: f64 = value.iter().sum();
            for (c, v) in cells.iter_mut().zip(value) {
                c.push(v);
            }
            cells[slots * slots].push(total);
        },
        |a, b| match (a.as_mut(), b) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    x.merge(y);
                }
            }
            (Ok(_), Err(e)) => *a = Err(e),
            (Err(_), _) => {}
        },
    )?;
    let rates = DMatrix::from_fn(slots, slots, |i, j| acc[i * slots + j].mean());
    let std_error = DMatrix::from_fn(slots, slots, |i, j| acc[i * slots + j].std_error());
    let total_density = acc[slots * slots].mean();
    let total_error = acc[slots * slots].std_error();
    Ok(ShockDensityResult {
        segments: n,
        rates,
        std_error,
        total_density,
        total_error,
        method: ShockMethod::FiniteDifference { dxs: dxs.to_vec(), trials },
    })
}
