use super::grid::{Frame, SamplePath, VariationalGrid};
use super::solve::{solve_path, Location};
use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::mc::Stream;
use crate::process::PathSource;

/// Which cases of the absolute-value solution a shock connects: the old minimizer
/// leaving through the left end (I), staying in the overlap (II), or the new one
/// appearing at the right end (III).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTransition {
    OneToTwo,
    OneToThree,
    TwoToThree,
    Unclassified,
}

impl RegionTransition {
    pub fn label(&self) -> &'static str {
        match self {
            RegionTransition::OneToTwo => "I->II",
            RegionTransition::OneToThree => "I->III",
            RegionTransition::TwoToThree => "II->III",
            RegionTransition::Unclassified => "?",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    pub w: f64,
    pub y_star: f64,
    pub location: Location,
    /// Set on the row where the minimizer has just jumped.
    pub shock: bool,
    pub region: Option<RegionTransition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub t: f64,
    pub dx: f64,
    /// Spacing of the interior lattice.
    pub step: f64,
    pub rows: Vec<ProfileRow>,
}

impl Profile {
    pub fn shock_count(&self) -> usize {
        self.rows.iter().filter(|r| r.shock).count()
    }

    pub fn shock_positions(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.shock).map(|r| r.x).collect()
    }
}

/// Points `x_lo + k dx` up to `x_hi`.
pub fn x_lattice(x_range: (f64, f64), dx: f64) -> Result<Vec<f64>> {
    let (lo, hi) = x_range;
    if !(dx > 0.0) || !(hi >= lo) {
        return Err(Error::InvalidGrid(format!("bad scan range [{lo}, {hi}] with dx = {dx}")));
    }
    let k = ((hi - lo) / dx + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| lo + dx * i as f64).collect())
}

/// Every point any per-`x` grid of the scan will ask for, increasing.
pub fn union_points(flux: &Flux, t: f64, xs: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || xs.is_empty() {
        return Err(Error::InvalidGrid("scan needs a positive lattice step and at least one x".into()));
    }
    let origin = xs[0];
    let mut pts = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in xs {
        let frame = Frame::new(flux, x, t)?;
        lo = lo.min(frame.vertices[0]);
        hi = hi.max(frame.vertices[frame.vertices.len() - 1]);
        pts.extend_from_slice(&frame.vertices);
    }
    let k0 = ((lo - origin) / step).floor() as i64;
    let k1 = ((hi - origin) / step).ceil() as i64;
    pts.extend((k0..=k1).map(|k| origin + k as f64 * step).filter(|&r| r >= lo && r <= hi));
    pts.sort_by(f64::total_cmp);
    let tol = 1e-9 * step;
    pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
    Ok(pts)
}

/// Solves every `x` of the scan on a single path realized at `points`, each over all of
/// `points` inside its window.
pub fn scan_realized(
    flux: &Flux,
    t: f64,
    xs: &[f64],
    step: f64,
    points: &[f64],
    gprime: &[f64],
    g: &[f64],
) -> Result<Profile> {
    if gprime.len() != points.len() || g.len() != points.len() {
        return Err(Error::PathMismatch { expected: points.len(), found: gprime.len().min(g.len()) });
    }
    let tol = 1e-9 * step;
    let lookup = |r: f64| -> Result<usize> {
        let i = points.partition_point(|&p| p < r - tol);
        match points.get(i) {
            Some(&p) if (p - r).abs() <= tol => Ok(i),
            _ => Err(Error::PathCoverage { point: r }),
        }
    };
    let dx = if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 };
    let single_segment = matches!(flux, Flux::AbsoluteValue);
    let mut rows: Vec<ProfileRow> = Vec::with_capacity(xs.len());
    for (k, &x) in xs.iter().enumerate() {
        let grid = VariationalGrid::from_candidates(flux, x, t, points, tol)?;
        let idx = grid.points().iter().map(|&r| lookup(r)).collect::<Result<Vec<_>>>()?;
        let path = SamplePath::new(idx.iter().map(|&i| gprime[i]).collect(), idx.iter().map(|&i| g[i]).collect());
        let r = solve_path(&grid, &path)?;
        // report the shared coordinate so that rows compare exactly
        let y_star = points[idx[r.index]];
        let mut row = ProfileRow { x, w: r.w, y_star, location: r.location, shock: false, region: None };
        if k > 0 {
            let prev = rows[k - 1];
            let jump = row.y_star - prev.y_star;
            if jump > (x - prev.x) + step + tol {
                row.shock = true;
                if single_segment {
                    let lost = prev.y_star < x - t - tol;
                    let fresh = row.y_star > prev.x + t + tol;
                    row.region = Some(match (lost, fresh) {
                        (true, false) => RegionTransition::OneToTwo,
                        (true, true) => RegionTransition::OneToThree,
                        (false, true) => RegionTransition::TwoToThree,
                        (false, false) => RegionTransition::Unclassified,
                    });
                }
            }
        }
        rows.push(row);
    }
    Ok(Profile { t, dx, step, rows })
}

/// Samples the process once on the union of all per-`x` grids and solves along `x`.
/// Each `x` minimizes over every union point inside its window.
pub fn scan_x_with<P: PathSource + ?Sized>(
    flux: &Flux,
    src: &P,
    t: f64,
    x_range: (f64, f64),
    dx: f64,
    step: f64,
    rng: &mut Stream,
) -> Result<Profile> {
    let xs = x_lattice(x_range, dx)?;
    let points = union_points(flux, t, &xs, step)?;
    let (gprime, g) = src.realize(&points, rng)?;
    scan_realized(flux, t, &xs, step, &points, &gprime, &g)
}

/// [`scan_x_with`] with the interior lattice as fine as the `x` spacing.
pub fn scan_x<P: PathSource + ?Sized>(
    flux: &Flux,
    src: &P,
    t: f64,
    x_range: (f64, f64),
    dx: f64,
    rng: &mut Stream,
) -> Result<Profile> {
    scan_x_with(flux, src, t, x_range, dx, dx, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::process::{DeterministicPath, ProcessSpec};

    #[test]
    fn quadratic_data_has_no_shocks() {
        let src = DeterministicPath::new(|y: f64| y * y, |y: f64| 2.0 * y);
        let t = 0.5;
        let p = scan_x(&Flux::AbsoluteValue, &src, t, (-2.0, 2.0), 0.01, &mut stream(0, 0)).unwrap();
        assert_eq!(p.shock_count(), 0);
        for r in &p.rows {
            let want = if r.x > t { 2.0 * (r.x - t) } else if r.x < -t { 2.0 * (r.x + t) } else { 0.0 };
            assert!((r.w - want).abs() < 1e-9, "x = {}: {} vs {want}", r.x, r.w);
        }
    }

    #[test]
    fn double_well_has_one_shock() {
        // equal minima at ±1, separated by 2t
        let src = DeterministicPath::new(|y: f64| (y * y - 1.0).powi(2), |y: f64| 4.0 * y * (y * y - 1.0));
        let p = scan_x(&Flux::AbsoluteValue, &src, 1.0, (-0.5, 0.5), 0.0625, &mut stream(0, 0)).unwrap();
        assert_eq!(p.shock_positions(), vec![0.0]);
        let row = p.rows.iter().find(|r| r.shock).unwrap();
        assert_eq!(row.y_star, 1.0);
        assert_eq!(row.region, Some(RegionTransition::TwoToThree));
    }

    #[test]
    fn minimizer_is_monotone_and_confined() {
        let spec = ProcessSpec::brownian_motion().integrated(true).with_anchor(-3.0).with_domain(-3.0, 3.0);
        let t = 0.4;
        for seed in 0..4 {
            let p = scan_x(&Flux::AbsoluteValue, &spec, t, (-2.0, 2.0), 0.01, &mut stream(seed, 0)).unwrap();
            assert!(p.rows.windows(2).all(|w| w[0].y_star <= w[1].y_star));
            assert!(p.rows.iter().all(|r| r.y_star >= r.x - t - 1e-12 && r.y_star <= r.x + t + 1e-12));
            assert!(p.rows.iter().filter(|r| r.shock).all(|r| r.region.is_some()));
        }
    }

    #[test]
    fn polygonal_scan_runs_on_one_path() {
        let flux = Flux::polygonal(vec![-1.0, 0.0, 2.0], vec![-0.5, 1.0]).unwrap();
        let spec = ProcessSpec::brownian_motion().integrated(true).with_anchor(-4.0).with_domain(-4.0, 4.0);
        let p = scan_x_with(&flux, &spec, 0.5, (-1.0, 1.0), 0.02, 0.01, &mut stream(3, 1)).unwrap();
        assert_eq!(p.rows.len(), 101);
        assert!(p.rows.windows(2).all(|w| w[0].y_star <= w[1].y_star));
        assert!(p.rows.iter().all(|r| r.region.is_none()));
    }

    #[test]
    fn uncovered_points_are_rejected() {
        let xs = [0.0, 0.1];
        let pts = [-1.0, 0.0, 1.0];
        let err = scan_realized(&Flux::AbsoluteValue, 1.0, &xs, 0.1, &pts, &[0.0; 3], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::PathCoverage { .. }));
    }
}
