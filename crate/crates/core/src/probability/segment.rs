use super::candidates::{CandidateSet, Class};
use crate::error::{Error, Result};
use crate::flux::{legendre, Flux};
use crate::hopf::{solve_path, Location, SamplePath, VariationalGrid};
use crate::mc::{run_trials, Moments};
use crate::numeric::{norm_pdf, Gaussian, OrthantSolver};
use crate::process::PathSource;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo { trials: u64 },
}

/// Probabilities of the `2N + 1` outcome classes: `N` segment interiors, then `N + 1`
/// vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentProbabilities {
    pub segments: usize,
    pub p: Vec<f64>,
    /// Zero for quadrature.
    pub std_error: Vec<f64>,
    /// `E{g'(y*) 1{y* at vertex j}}`.
    pub vertex_terms: Vec<f64>,
    pub vertex_term_errors: Vec<f64>,
    /// `E{w}`; for Monte Carlo the sample mean of `w`.
    pub expected_w: f64,
    pub expected_w_error: f64,
    pub method: Method,
}

impl SegmentProbabilities {
    pub fn segment(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn vertex(&self, j: usize) -> f64 {
        self.p[self.segments + j]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn class(&self, c: Class) -> f64 {
        self.p[c.slot(self.segments)]
    }
}

#[derive(Debug, Clone)]
struct Tally {
    counts: Vec<u64>,
    w: Moments,
    vertex: Vec<Moments>,
}

impl Tally {
    fn new(segments: usize) -> Self {
        Tally { counts: vec![0; 2 * segments + 1], w: Moments::default(), vertex: vec![Moments::default(); segments + 1] }
    }

    fn record(&mut self, segments: usize, class: Class, w: f64) {
        self.counts[class.slot(segments)] += 1;
        self.w.push(w);
        for (j, m) in self.vertex.iter_mut().enumerate() {
            m.push(if class == Class::Vertex(j) { w } else { 0.0 });
        }
    }

    fn merge(&mut self, other: Tally) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.w.merge(other.w);
        for (a, b) in self.vertex.iter_mut().zip(other.vertex) {
            a.merge(b);
        }
    }

    fn finish(self, segments: usize, trials: u64) -> SegmentProbabilities {
        let n = trials as f64;
        let p: Vec<f64> = self.counts.iter().map(|&c| c as f64 / n).collect();
        SegmentProbabilities {
            segments,
            std_error: p.iter().map(|&q| (q * (1.0 - q) / n).sqrt()).collect(),
            p,
            vertex_terms: self.vertex.iter().map(Moments::mean).collect(),
            vertex_term_errors: self.vertex.iter().map(Moments::std_error).collect(),
            expected_w: self.w.mean(),
            expected_w_error: self.w.std_error(),
            method: Method::MonteCarlo { trials },
        }
    }
}

/// Frequencies of the minimizer's class over sampled paths, each solved on the grid.
///
/// Trial `k` draws its path from stream `k` of `master_seed`.
pub fn segment_probabilities_mc<P: PathSource + ?Sized>(
    grid: &VariationalGrid,
    src: &P,
    trials: u64,
    master_seed: u64,
) -> Result<SegmentProbabilities> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    src.check_points(grid.points())?;
    let n = grid.segments();
    let tally = run_trials(
        trials,
        master_seed,
        || Ok(Tally::new(n)),
        |acc: &mut Result<Tally>, _k, rng| {
            let Ok(t) = acc else { return };
            let step = SamplePath::sample(grid, src, rng).and_then(|path| solve_path(grid, &path));
            match step {
                Ok(r) => {
                    let class = match r.location {
                        Location::SegmentInterior(i) => Class::Segment(i),
                        Location::VertexOfL(v) | Location::Coincident { vertex: v } => Class::Vertex(v),
                        Location::Smooth => unreachable!("grid minimizers are never smooth"),
                    };
                    t.record(n, class, r.w);
                }
                Err(e) => *acc = Err(e),
            }
        },
        |a, b| match (a.as_mut(), b) {
            (Ok(a), Ok(b)) => a.merge(b),
            (Ok(_), Err(e)) => *a = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(tally.finish(n, trials))
}

/// Greatest minimizer of `y`: exact ties go to the later candidate.
pub(crate) fn argmin(y: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..y.len() {
        if y[k] <= y[best] {
            best = k;
        }
    }
    best
}

/// Frequencies of the minimizer's class for draws from the candidate set's Gaussian law.
pub fn candidate_probabilities_mc(set: &CandidateSet, trials: u64, master_seed: u64) -> Result<SegmentProbabilities> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let sampler = set.sampler();
    let k = set.len();
    let n = set.segments();
    let tally = run_trials(
        trials,
        master_seed,
        || (Tally::new(n), vec![0.0; 2 * k]),
        |(t, buf), _i, rng| {
            sampler.draw(rng, buf);
            let best = argmin(&buf[..k]);
            let class = set.class(best);
            let w = match class {
                Class::Segment(i) => set.segment_values()[i],
                Class::Vertex(_) => buf[k + best],
            };
            t.record(n, class, w);
        },
        |(a, _), (b, _)| a.merge(b),
    );
    Ok(tally.0.finish(n, trials))
}

/// `P{candidate k is the greatest minimizer}` for every candidate.
pub fn candidate_probabilities(set: &CandidateSet) -> Result<Vec<f64>> {
    set.check_cap()?;
    let y = set.objective();
    let solver = set.solver();
    Ok((0..set.len()).map(|k| solver.min_probability(&y, k, &set.strict_for(k))).collect())
}

/// `E{δ(Y_l - Y_k) 1{Y_m >= Y_k, m != k, l}}`: the density of a tie between `k` and `l`
/// with everything else above them. Zero when `Y_l - Y_k` has no variance.
pub(crate) fn tie_density(set: &CandidateSet, solver: &OrthantSolver, k: usize, l: usize, rate: Option<&DVector<f64>>, rate_shift: f64) -> f64 {
    let kk = set.len();
    let mut c = DVector::zeros(2 * kk);
    c[l] = 1.0;
    c[k] = -1.0;
    let joint = set.joint();
    let (mu, var) = joint.linear_moments(&c);
    if var <= solver.var_floor {
        return 0.0;
    }
    let sd = var.sqrt();
    let density = norm_pdf(mu / sd) / sd;
    let Some(cond) = joint.condition_linear(&c, 0.0) else { return 0.0 };
    let rest: Vec<usize> = (0..kk).filter(|&m| m != l).collect();
    let pos = rest.iter().position(|&m| m == k).expect("k is kept");
    let strict: Vec<bool> = rest.iter().map(|&m| m > k).collect();
    let others = |g: &Gaussian| solver.min_probability(&g.select(&rest), pos, &strict);
    match rate {
        None => {
            if rate_shift <= 0.0 {
                0.0
            } else {
                density * rate_shift * others(&cond)
            }
        }
        Some(r) => {
            let (rm, rv) = cond.linear_moments(r);
            let rm = rm + rate_shift;
            if rv <= solver.var_floor {
                return if rm <= 0.0 { 0.0 } else { density * rm * others(&cond) };
            }
            let rs = rv.sqrt();
            let lo = (-rm / rs).max(-solver.z_cut);
            if lo >= solver.z_cut {
                return 0.0;
            }
            let inner = crate::numeric::integrate(
                |u| {
                    let value = rm + rs * u;
                    let g = cond.condition_linear(r, value - rate_shift).unwrap_or_else(|| cond.clone());
                    value * norm_pdf(u) * others(&g)
                },
                lo,
                solver.z_cut,
                4,
                solver.abs_tol,
                solver.max_panels,
            )
            .value;
            density * inner
        }
    }
}

/// `P{candidate k is the minimum}` and `E{G_k 1{k is the minimum}}`, the latter by
/// Gaussian integration by parts over the tie densities.
fn vertex_term(set: &CandidateSet, solver: &OrthantSolver, k: usize, p_k: f64) -> f64 {
    let kk = set.len();
    let joint = set.joint();
    let g = kk + k;
    let mut acc = joint.mean[g] * p_k;
    for l in 0..kk {
        if l == k {
            continue;
        }
        let weight = joint.cov[(g, l)] - joint.cov[(g, k)];
        if weight == 0.0 {
            continue;
        }
        acc += weight * tie_density(set, solver, k, l, None, 1.0);
    }
    acc
}

/// Class probabilities and `E{w}` by nested quadrature; at most [`super::QUADRATURE_CAP`]
/// candidates.
pub fn segment_probabilities_quadrature(set: &CandidateSet) -> Result<SegmentProbabilities> {
    let per = candidate_probabilities(set)?;
    let n = set.segments();
    let solver = set.solver();
    let mut p = vec![0.0; 2 * n + 1];
    let mut vertex_terms = vec![0.0; n + 1];
    for (k, &pk) in per.iter().enumerate() {
        let class = set.class(k);
        p[class.slot(n)] += pk;
        if let Class::Vertex(j) = class {
            vertex_terms[j] += vertex_term(set, &solver, k, pk);
        }
    }
    let expected_w = (0..n).map(|i| p[i] * set.segment_values()[i]).sum::<f64>() + vertex_terms.iter().sum::<f64>();
    Ok(SegmentProbabilities {
        segments: n,
        std_error: vec![0.0; 2 * n + 1],
        p,
        vertex_term_errors: vec![0.0; n + 1],
        vertex_terms,
        expected_w,
        expected_w_error: 0.0,
        method: Method::Quadrature,
    })
}

/// Breakpoints `c_1 < ... < c_N` of the flux, i.e. the slopes of `L`.
fn slopes_of_l(flux: &Flux) -> Result<Vec<f64>> {
    let l = legendre(flux);
    let pieces = l.pieces().ok_or_else(|| Error::UnsupportedFlux("needs a flux with polygonal L".into()))?;
    Ok(pieces.iter().map(|p| p.slope).collect())
}

/// `E{w} = Σ_i p_i c_{N+1-i} + Σ_j E{g'(r_j) 1{vertex j}}` with segments numbered left to
/// right in `y`. Segment `i` of the grid carries `w = c_{N+1-i}`.
pub fn expected_solution(probs: &SegmentProbabilities, flux: &Flux) -> Result<f64> {
    let c = slopes_of_l(flux)?;
    check_layout(probs, &c)?;
    let n = c.len();
    Ok((0..n).map(|i| probs.p[i] * c[n - 1 - i]).sum::<f64>() + probs.vertex_terms.iter().sum::<f64>())
}

/// The same sum with the opposite sign on the segment part, kept for comparison.
pub fn expected_solution_negated(probs: &SegmentProbabilities, flux: &Flux) -> Result<f64> {
    let c = slopes_of_l(flux)?;
    check_layout(probs, &c)?;
    let n = c.len();
    Ok(-(0..n).map(|i| probs.p[i] * c[n - 1 - i]).sum::<f64>() + probs.vertex_terms.iter().sum::<f64>())
}

fn check_layout(probs: &SegmentProbabilities, c: &[f64]) -> Result<()> {
    if probs.segments != c.len() {
        return Err(Error::InvalidArgument(format!(
            "probabilities have {} segments but the flux has {}",
            probs.segments,
            c.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfTarget {
    /// Minimum of `Y` over the interior candidates of a segment.
    SegmentMinimum(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub target: CdfTarget,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
}

fn target_indices(set: &CandidateSet, target: CdfTarget) -> Result<Vec<usize>> {
    let want = match target {
        CdfTarget::SegmentMinimum(i) => Class::Segment(i),
        CdfTarget::Vertex(j) => Class::Vertex(j),
    };
    let idx: Vec<usize> = (0..set.len()).filter(|&k| set.class(k) == want).collect();
    if idx.is_empty() {
        return Err(Error::InvalidArgument(format!("no candidates for {target:?}")));
    }
    Ok(idx)
}

/// `F(s) = P{min_{k in target} Y_k <= s}` by quadrature.
pub fn minimum_cdf(set: &CandidateSet, target: CdfTarget, s: &[f64]) -> Result<CdfCurve> {
    let idx = target_indices(set, target)?;
    if idx.len() > super::candidates::QUADRATURE_CAP {
        return Err(Error::DimensionCap { dimension: idx.len(), cap: super::candidates::QUADRATURE_CAP });
    }
    let y = set.objective().select(&idx);
    let solver = set.solver();
    let strict = vec![true; idx.len()];
    let values = s
        .iter()
        .map(|&v| (1.0 - solver.upper(&y, &vec![v; idx.len()], &strict)).clamp(0.0, 1.0))
        .collect();
    Ok(CdfCurve { target, s: s.to_vec(), values, method: Method::Quadrature })
}

/// `F(s)` as the empirical distribution of the target minimum.
pub fn minimum_cdf_mc(set: &CandidateSet, target: CdfTarget, s: &[f64], trials: u64, master_seed: u64) -> Result<CdfCurve> {
    let idx = target_indices(set, target)?;
    let sampler = set.sampler();
    let dim = set.joint().dim();
    let (counts, _) = run_trials(
        trials,
        master_seed,
        || (vec![0u64; s.len()], vec![0.0; dim]),
        |(c, buf), _k, rng| {
            sampler.draw(rng, buf);
            let m = idx.iter().map(|&i| buf[i]).fold(f64::INFINITY, f64::min);
            for (cj, &v) in c.iter_mut().zip(s) {
                if m <= v {
                    *cj += 1;
                }
            }
        },
        |(a, _), (b, _)| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        },
    );
    let values = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Ok(CdfCurve { target, s: s.to_vec(), values, method: Method::MonteCarlo { trials } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::Site;
    use crate::mc::stream;
    use crate::process::{DeterministicPath, ProcessSpec};
    use nalgebra::DMatrix;

    fn interior(segment: usize) -> Site {
        Site::Interior { segment, index: 0 }
    }

    #[test]
    fn single_candidate_is_certain() {
        let set = CandidateSet::custom(vec![interior(0)], vec![0.5], DVector::from_element(1, 0.3), DMatrix::identity(1, 1)).unwrap();
        let p = segment_probabilities_quadrature(&set).unwrap();
        assert!((p.segment(0) - 1.0).abs() < 1e-12);
        assert!((p.expected_w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_iid_candidates_split_evenly() {
        let set = CandidateSet::custom(
            vec![interior(0), interior(1)],
            vec![1.0, -1.0],
            DVector::from_element(2, 0.7),
            DMatrix::identity(2, 2) * 2.0,
        )
        .unwrap();
        let p = segment_probabilities_quadrature(&set).unwrap();
        assert!((p.segment(0) - 0.5).abs() < 1e-6 && (p.segment(1) - 0.5).abs() < 1e-6);
        assert!(p.expected_w.abs() < 1e-6);
        let mc = candidate_probabilities_mc(&set, 40_000, 1).unwrap();
        assert!((mc.segment(0) - 0.5).abs() <= 3.0 * mc.std_error[0]);
        assert_eq!(mc.total(), 1.0);
    }

    #[test]
    fn deterministic_path_concentrates_on_one_segment() {
        let flux = Flux::polygonal(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5]).unwrap();
        let grid = VariationalGrid::build(&flux, 0.0, 2.0, &[3, 3]).unwrap();
        let src = DeterministicPath::new(|y: f64| (y - 1.2).powi(2), |y: f64| 2.0 * (y - 1.2));
        let p = segment_probabilities_mc(&grid, &src, 50, 3).unwrap();
        assert_eq!(p.segment(1), 1.0);
        assert_eq!(p.total(), 1.0);
        let direct = solve_path(&grid, &SamplePath::sample(&grid, &src, &mut stream(0, 0)).unwrap()).unwrap();
        assert_eq!(expected_solution(&p, &flux).unwrap(), direct.w);
        assert_eq!(p.expected_w, direct.w);
    }

    #[test]
    fn difference_orthant_cross_check() {
        // P{k is min} = P{Y_l - Y_k >= 0 for all l}, an orthant of the differences
        let grid = VariationalGrid::build(&Flux::AbsoluteValue, 0.5, 0.3, &[2]).unwrap();
        let set = CandidateSet::from_grid(&grid, &ProcessSpec::brownian_motion().integrated(true)).unwrap();
        let per = candidate_probabilities(&set).unwrap();
        let y = set.objective();
        let n = set.len();
        for (k, &pk) in per.iter().enumerate() {
            let rows: Vec<usize> = (0..n).filter(|&l| l != k).collect();
            let c = DMatrix::from_fn(rows.len(), n, |a, b| {
                if b == rows[a] {
                    1.0
                } else if b == k {
                    -1.0
                } else {
                    0.0
                }
            });
            let d = Gaussian::new(&c * &y.mean, &c * &y.cov * c.transpose());
            let solver = OrthantSolver::for_scale(d.cov.diagonal().max());
            let q = solver.upper(&d, &vec![0.0; rows.len()], &vec![false; rows.len()]);
            assert!((q - pk).abs() < 1e-8, "k = {k}: {q} vs {pk}");
        }
        assert!((per.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn vertex_terms_match_sampling() {
        let grid = VariationalGrid::build(&Flux::AbsoluteValue, 0.5, 0.3, &[1]).unwrap();
        let set = CandidateSet::from_grid(&grid, &ProcessSpec::brownian_motion().integrated(true)).unwrap();
        let q = segment_probabilities_quadrature(&set).unwrap();
        let mc = candidate_probabilities_mc(&set, 200_000, 5).unwrap();
        for j in 0..2 {
            let (a, b, se) = (q.vertex_terms[j], mc.vertex_terms[j], mc.vertex_term_errors[j]);
            assert!((a - b).abs() <= 4.0 * se, "vertex {j}: {a} vs {b} ± {se}");
        }
        assert!((q.expected_w - mc.expected_w).abs() <= 4.0 * mc.expected_w_error);
    }

    #[test]
    fn cdf_of_two_iid_minimum() {
        let set = CandidateSet::custom(
            vec![interior(0), interior(0)],
            vec![0.0],
            DVector::zeros(2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let s: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        let c = minimum_cdf(&set, CdfTarget::SegmentMinimum(0), &s).unwrap();
        assert!((c.values[20] - 0.75).abs() < 1e-12);
        assert!(c.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.values[0] < 1e-6 && c.values[40] > 1.0 - 1e-6);
        let one = CandidateSet::custom(vec![Site::Vertex(0)], vec![0.0], DVector::from_element(1, 1.5), DMatrix::identity(1, 1) * 4.0).unwrap();
        let c = minimum_cdf(&one, CdfTarget::Vertex(0), &[1.5]).unwrap();
        assert!((c.values[0] - 0.5).abs() < 1e-15);
    }
}
