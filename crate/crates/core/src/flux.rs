//! Convex flux functions `H` and their Legendre transforms `L(q) = sup_p (pq - H(p))`.

use crate::error::{Error, Result};

/// A point of the extended real line. Only `+∞` is ever needed.
///
/// The derived ordering puts every finite value below `PosInf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Extended {
    Finite(f64),
    PosInf,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInf => None,
        }
    }
}

impl std::ops::Add<f64> for Extended {
    type Output = Extended;

    fn add(self, v: f64) -> Extended {
        match self {
            Extended::Finite(a) => Extended::Finite(a + v),
            Extended::PosInf => Extended::PosInf,
        }
    }
}

/// Convex piecewise-linear flux.
///
/// `slopes` are `m_1 < ... < m_{N+1}`, `breakpoints` are `c_1 < ... < c_N`, and
/// `base_value` pins the additive constant as `H(c_1)` (or `H(0)` when `N = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalFlux {
    slopes: Vec<f64>,
    breakpoints: Vec<f64>,
    base_value: f64,
}

impl PolygonalFlux {
    pub fn new(slopes: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidFlux(format!(
                "{} slopes need {} breakpoints, got {}",
                slopes.len(),
                slopes.len().saturating_sub(1),
                breakpoints.len()
            )));
        }
        if slopes.iter().chain(&breakpoints).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFlux("slopes and breakpoints must be finite".into()));
        }
        if slopes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFlux("slopes must be strictly increasing".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFlux("breakpoints must be strictly increasing".into()));
        }
        Ok(PolygonalFlux { slopes, breakpoints, base_value: 0.0 })
    }

    pub fn with_base_value(mut self, value: f64) -> Self {
        self.base_value = value;
        self
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    /// Number of breakpoints `N`.
    pub fn n(&self) -> usize {
        self.breakpoints.len()
    }

    /// `H(c_i)` for every breakpoint.
    pub fn breakpoint_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        let mut h = self.base_value;
        for (i, &c) in self.breakpoints.iter().enumerate() {
            if i > 0 {
                h += self.slopes[i] * (c - self.breakpoints[i - 1]);
            }
            out.push(h);
        }
        out
    }

    pub fn eval(&self, p: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.slopes[0] * p + self.base_value;
        }
        let values = self.breakpoint_values();
        // index of the last breakpoint <= p, if any
        let k = self.breakpoints.partition_point(|&c| c <= p);
        if k == 0 {
            values[0] + self.slopes[0] * (p - self.breakpoints[0])
        } else {
            values[k - 1] + self.slopes[k] * (p - self.breakpoints[k - 1])
        }
    }

    /// Right derivative `H'(p+)`.
    pub fn derivative(&self, p: f64) -> f64 {
        self.slopes[self.breakpoints.partition_point(|&c| c <= p)]
    }
}

/// A convex flux `H`.
#[derive(Debug, Clone, PartialEq)]
pub enum Flux {
    Polygonal(PolygonalFlux),
    /// `H(p) = |p|^j / j`, `j >= 2`.
    PowerLaw { j: f64 },
    /// `H(p) = |p|`.
    AbsoluteValue,
}

impl Flux {
    pub fn polygonal(slopes: Vec<f64>, breakpoints: Vec<f64>) -> Result<Flux> {
        let poly = PolygonalFlux::new(slopes, breakpoints)?;
        if poly.n() == 0 {
            return Err(Error::InvalidFlux("a polygonal flux needs at least one breakpoint".into()));
        }
        Ok(Flux::Polygonal(poly))
    }

    pub fn power_law(j: f64) -> Result<Flux> {
        if !(j >= 2.0) || !j.is_finite() {
            return Err(Error::InvalidFlux(format!("power-law exponent {j} must be >= 2")));
        }
        Ok(Flux::PowerLaw { j })
    }

    /// Burgers flux `p^2 / 2`.
    pub fn burgers() -> Flux {
        Flux::PowerLaw { j: 2.0 }
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Flux::Polygonal(poly) => poly.eval(p),
            Flux::PowerLaw { j } => p.abs().powf(*j) / j,
            Flux::AbsoluteValue => p.abs(),
        }
    }

    /// `H'(p)`; the right derivative at kinks of a polygonal flux, `0` at the kink of `|p|`.
    pub fn derivative(&self, p: f64) -> f64 {
        match self {
            Flux::Polygonal(poly) => poly.derivative(p),
            Flux::PowerLaw { j } => {
                if p == 0.0 {
                    0.0
                } else {
                    p.signum() * p.abs().powf(j - 1.0)
                }
            }
            Flux::AbsoluteValue => {
                if p == 0.0 {
                    0.0
                } else {
                    p.signum()
                }
            }
        }
    }

    /// `max |H'(p)|` over `p` in `[lo, hi]`.
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        match self {
            // H' is monotone, so the extremes sit at the ends of the range
            Flux::Polygonal(poly) => poly.derivative(lo).abs().max(poly.derivative(hi).abs()),
            Flux::PowerLaw { j } => lo.abs().max(hi.abs()).powf(j - 1.0),
            Flux::AbsoluteValue => 1.0,
        }
    }
}

/// One affine piece `L(q) = slope * q + intercept` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn eval(&self, q: f64) -> f64 {
        self.slope * q + self.intercept
    }
}

/// Legendre transform of a [`Flux`].
#[derive(Debug, Clone, PartialEq)]
pub enum LegendreTransform {
    /// Finite on the union of the pieces, `+∞` elsewhere. Pieces are ordered in `q`.
    Piecewise(Vec<AffinePiece>),
    /// `L(q) = ((j-1)/j) |q|^(j/(j-1))`.
    PowerLaw { j: f64 },
}

/// Computes `L = H*`.
///
/// Polygonal fluxes are conjugated directly: on each slope interval `[m_i, m_{i+1}]`
/// the supremum of `pq - H(p)` is attained at a breakpoint, which is searched for.
pub fn legendre(flux: &Flux) -> LegendreTransform {
    match flux {
        Flux::PowerLaw { j } => LegendreTransform::PowerLaw { j: *j },
        Flux::AbsoluteValue => LegendreTransform::Piecewise(vec![AffinePiece {
            lo: -1.0,
            hi: 1.0,
            slope: 0.0,
            intercept: 0.0,
        }]),
        Flux::Polygonal(poly) => LegendreTransform::Piecewise(conjugate_polygonal(poly)),
    }
}

fn conjugate_polygonal(poly: &PolygonalFlux) -> Vec<AffinePiece> {
    let m = poly.slopes();
    if poly.n() == 0 {
        // H is affine: L is finite at the single point q = m_1.
        return vec![AffinePiece { lo: m[0], hi: m[0], slope: 0.0, intercept: -poly.base_value() }];
    }
    let c = poly.breakpoints();
    let hc = poly.breakpoint_values();
    m.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let best = (0..c.len())
                .max_by(|&a, &b| {
                    (c[a] * mid - hc[a]).partial_cmp(&(c[b] * mid - hc[b])).expect("finite flux data")
                })
                .expect("at least one breakpoint");
            AffinePiece { lo: w[0], hi: w[1], slope: c[best], intercept: -hc[best] }
        })
        .collect()
}

impl LegendreTransform {
    /// Closed interval where `L` is finite.
    pub fn finite_support(&self) -> (f64, f64) {
        match self {
            LegendreTransform::Piecewise(pieces) => (pieces[0].lo, pieces[pieces.len() - 1].hi),
            LegendreTransform::PowerLaw { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn pieces(&self) -> Option<&[AffinePiece]> {
        match self {
            LegendreTransform::Piecewise(p) => Some(p),
            LegendreTransform::PowerLaw { .. } => None,
        }
    }

    pub fn eval(&self, q: f64) -> Extended {
        match self {
            LegendreTransform::PowerLaw { j } => {
                Extended::Finite((j - 1.0) / j * q.abs().powf(j / (j - 1.0)))
            }
            LegendreTransform::Piecewise(pieces) => match locate(pieces, q) {
                Some(k) => Extended::Finite(pieces[k].eval(q)),
                None => Extended::PosInf,
            },
        }
    }

    /// `L'(q)`; the right derivative at interior kinks, the left one at the right end of
    /// the support, and `None` outside it.
    pub fn derivative(&self, q: f64) -> Option<f64> {
        match self {
            LegendreTransform::PowerLaw { j } => {
                Some(if q == 0.0 { 0.0 } else { q.signum() * q.abs().powf(1.0 / (j - 1.0)) })
            }
            LegendreTransform::Piecewise(pieces) => locate(pieces, q).map(|k| pieces[k].slope),
        }
    }

    /// Biconjugate `sup_q (pq - L(q))`, which returns `H(p)` for convex `H`.
    pub fn conjugate_at(&self, p: f64) -> Extended {
        match self {
            LegendreTransform::PowerLaw { j } => Extended::Finite(p.abs().powf(*j) / j),
            LegendreTransform::Piecewise(pieces) => {
                let mut best = f64::NEG_INFINITY;
                for piece in pieces {
                    for q in [piece.lo, piece.hi] {
                        best = best.max(p * q - piece.eval(q));
                    }
                }
                Extended::Finite(best)
            }
        }
    }
}

fn locate(pieces: &[AffinePiece], q: f64) -> Option<usize> {
    let (lo, hi) = (pieces[0].lo, pieces[pieces.len() - 1].hi);
    if !(q >= lo && q <= hi) {
        return None;
    }
    let k = pieces.partition_point(|p| p.hi <= q);
    Some(k.min(pieces.len() - 1))
}

/// `t L((x - y) / t)`.
///
/// # Panics
/// If `t <= 0`.
pub fn eval_shifted(l: &LegendreTransform, x: f64, t: f64, y: f64) -> Extended {
    assert!(t > 0.0, "eval_shifted needs t > 0, got {t}");
    match l.eval((x - y) / t) {
        Extended::Finite(v) => Extended::Finite(t * v),
        Extended::PosInf => Extended::PosInf,
    }
}

/// Secant polygonal flux through samples `(p_k, H(p_k))`, sorted by `p`.
///
/// Interior sample abscissae become breakpoints; the secant slopes must increase strictly.
/// Two samples give a single affine piece (`N = 0`).
pub fn polygonalize(samples: &[(f64, f64)]) -> Result<PolygonalFlux> {
    if samples.len() < 2 {
        return Err(Error::InvalidFlux("need at least two samples".into()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidFlux("sample abscissae must be strictly increasing".into()));
    }
    let slopes: Vec<f64> =
        samples.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    if let Some(i) = slopes.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonConvexSamples { index: i + 1 });
    }
    let breakpoints: Vec<f64> = samples[1..samples.len() - 1].iter().map(|s| s.0).collect();
    let base = if breakpoints.is_empty() {
        samples[0].1 - slopes[0] * samples[0].0
    } else {
        samples[1].1
    };
    Ok(PolygonalFlux::new(slopes, breakpoints)?.with_base_value(base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(slopes: &[f64], bps: &[f64]) -> Flux {
        Flux::polygonal(slopes.to_vec(), bps.to_vec()).unwrap()
    }

    #[test]
    fn burgers_transform_is_half_square() {
        let l = legendre(&Flux::burgers());
        assert_eq!(l.eval(3.0), Extended::Finite(4.5));
        assert_eq!(l.derivative(-0.5), Some(-0.5));
    }

    #[test]
    fn absolute_value_transform_is_indicator() {
        let l = legendre(&Flux::AbsoluteValue);
        assert_eq!(l.eval(1.0), Extended::Finite(0.0));
        assert_eq!(l.eval(-0.3), Extended::Finite(0.0));
        assert_eq!(l.eval(1.0 + 1e-12), Extended::PosInf);
        assert_eq!(l.finite_support(), (-1.0, 1.0));
    }

    #[test]
    fn two_slope_polygon_matches_absolute_value() {
        let a = legendre(&poly(&[-1.0, 1.0], &[0.0]));
        let b = legendre(&Flux::AbsoluteValue);
        for k in -30..=30 {
            let q = k as f64 / 20.0;
            assert_eq!(a.eval(q), b.eval(q), "q = {q}");
        }
    }

    #[test]
    fn polygon_slopes_are_breakpoints() {
        let flux = poly(&[-2.0, -0.5, 1.0, 3.0], &[-1.0, 0.5, 2.0]);
        let pieces = legendre(&flux).pieces().unwrap().to_vec();
        let slopes: Vec<f64> = pieces.iter().map(|p| p.slope).collect();
        assert_eq!(slopes, vec![-1.0, 0.5, 2.0]);
        assert_eq!((pieces[0].lo, pieces[2].hi), (-2.0, 3.0));
    }

    #[test]
    fn shifted_examples() {
        let abs = legendre(&Flux::AbsoluteValue);
        assert_eq!(eval_shifted(&abs, 0.0, 1.0, 0.5), Extended::Finite(0.0));
        assert_eq!(eval_shifted(&abs, 0.0, 1.0, 2.0), Extended::PosInf);
        let b = legendre(&Flux::burgers());
        assert_eq!(eval_shifted(&b, 1.0, 2.0, 0.0), Extended::Finite(0.25));
    }

    #[test]
    fn quartic_transform() {
        let l = legendre(&Flux::power_law(4.0).unwrap());
        let v = l.eval(8.0).finite().unwrap();
        assert!((v - 0.75 * 16.0).abs() < 1e-12);
    }

    #[test]
    fn polygonalize_parabola() {
        let s: Vec<(f64, f64)> = [-1.0, 0.0, 1.0].iter().map(|&p| (p, p * p / 2.0)).collect();
        let f = polygonalize(&s).unwrap();
        assert_eq!(f.slopes(), &[-0.5, 0.5]);
        assert_eq!(f.breakpoints(), &[0.0]);
        assert_eq!(f.eval(1.0), 0.5);
    }

    #[test]
    fn polygonalize_two_samples_is_degenerate() {
        let f = polygonalize(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let l = legendre(&Flux::Polygonal(f));
        assert_eq!(l.finite_support(), (1.0, 1.0));
        assert_eq!(l.eval(1.0), Extended::Finite(-1.0));
        assert_eq!(l.eval(1.1), Extended::PosInf);
    }

    #[test]
    fn polygonalize_rejects_concave() {
        let s = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)];
        assert_eq!(polygonalize(&s), Err(Error::NonConvexSamples { index: 1 }));
    }

    #[test]
    fn polygonalize_refinement_converges() {
        let s: Vec<(f64, f64)> =
            (0..=64).map(|k| -2.0 + 4.0 * k as f64 / 64.0).map(|p| (p, p * p / 2.0)).collect();
        let f = polygonalize(&s).unwrap();
        assert_eq!(f.n(), 63);
        let l = legendre(&Flux::Polygonal(f));
        let v = l.eval(0.5).finite().unwrap();
        assert!((v - 0.125).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_flux() {
        assert!(Flux::polygonal(vec![1.0, 0.0], vec![0.0]).is_err());
        assert!(Flux::polygonal(vec![1.0], vec![]).is_err());
        assert!(Flux::power_law(1.5).is_err());
    }

    fn polygon_strategy() -> impl Strategy<Value = PolygonalFlux> {
        (1usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..2.0, n + 1),
                prop::collection::vec(0.05f64..2.0, n),
                -3.0f64..3.0,
                -3.0f64..3.0,
                -2.0f64..2.0,
            )
                .prop_map(|(dm, dc, m0, c0, base)| {
                    let slopes: Vec<f64> =
                        dm.iter().scan(m0, |acc, d| { *acc += d; Some(*acc) }).collect();
                    let bps: Vec<f64> =
                        dc.iter().scan(c0, |acc, d| { *acc += d; Some(*acc) }).collect();
                    PolygonalFlux::new(slopes, bps).unwrap().with_base_value(base)
                })
        })
    }

    proptest! {
        #[test]
        fn involution_on_polygons(poly in polygon_strategy()) {
            let l = legendre(&Flux::Polygonal(poly.clone()));
            let c = poly.breakpoints();
            let mut probes = vec![c[0] - 1.0, c[c.len() - 1] + 1.0];
            probes.extend(c.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            for p in probes {
                let h = l.conjugate_at(p).finite().unwrap();
                prop_assert!((h - poly.eval(p)).abs() <= 1e-12 * (1.0 + h.abs()), "p={} {} vs {}", p, h, poly.eval(p));
            }
        }

        #[test]
        fn polygon_support_is_slope_range(poly in polygon_strategy()) {
            let l = legendre(&Flux::Polygonal(poly.clone()));
            let m = poly.slopes();
            prop_assert_eq!(l.finite_support(), (m[0], m[m.len() - 1]));
            let pieces = l.pieces().unwrap();
            prop_assert!(pieces.windows(2).all(|w| w[0].slope < w[1].slope));
        }

        #[test]
        fn fenchel_equality(j in 2.0f64..6.0, q in -5.0f64..5.0) {
            let flux = Flux::PowerLaw { j };
            let l = legendre(&flux);
            let d = l.derivative(q).unwrap();
            let lhs = l.eval(q).finite().unwrap();
            let rhs = q * d - flux.eval(d);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn derivative_is_monotone(poly in polygon_strategy()) {
            let l = legendre(&Flux::Polygonal(poly));
            let (lo, hi) = l.finite_support();
            let mut prev = f64::NEG_INFINITY;
            for k in 0..1000 {
                let q = (lo + (hi - lo) * k as f64 / 999.0).min(hi);
                let d = l.derivative(q).unwrap();
                prop_assert!(d >= prev);
                prev = d;
            }
        }
    }
}
