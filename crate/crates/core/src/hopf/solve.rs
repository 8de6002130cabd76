use super::grid::{SamplePath, Site, VariationalGrid};
use crate::error::Result;

/// Where the greatest minimizer sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Strictly inside `y`-segment `i`.
    SegmentInterior(usize),
    /// On vertex `k` of `L` (in `y`-order), where `g'` is continuous.
    VertexOfL(usize),
    /// On vertex `k` of `L` where `g'` also jumps.
    Coincident { vertex: usize },
    /// Power-law flux: `L` is smooth everywhere.
    Smooth,
}

impl Location {
    pub fn class(&self) -> &'static str {
        match self {
            Location::SegmentInterior(_) => "segment",
            Location::VertexOfL(_) => "vertex",
            Location::Coincident { .. } => "coincident",
            Location::Smooth => "smooth",
        }
    }

    /// Segment or vertex number, if any.
    pub fn index(&self) -> Option<usize> {
        match *self {
            Location::SegmentInterior(i) | Location::VertexOfL(i) | Location::Coincident { vertex: i } => Some(i),
            Location::Smooth => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerResult {
    pub y_star: f64,
    /// Index of `y_star` in the point set it was chosen from.
    pub index: usize,
    pub location: Location,
    pub q_value: f64,
    /// Solution value; the right limit at coincident points.
    pub w: f64,
    /// Left limit; equal to `w` except at coincident points.
    pub w_left: f64,
}

/// Index of the largest entry attaining the minimum. Exact ties go right.
pub(crate) fn greatest_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v <= values[best] {
            best = i;
        }
    }
    best
}

/// Greatest minimizer of `g(y) + tL((x - y)/t)` over the grid.
pub fn solve_path(grid: &VariationalGrid, path: &SamplePath) -> Result<MinimizerResult> {
    path.check(grid)?;
    let objective = path.objective(grid);
    Ok(classify(grid, path, &objective, greatest_argmin(&objective)))
}

pub(crate) fn classify(grid: &VariationalGrid, path: &SamplePath, objective: &[f64], k: usize) -> MinimizerResult {
    let y_star = grid.points()[k];
    let q_value = objective[k];
    let (location, w, w_left) = match grid.sites()[k] {
        Site::Interior { segment, .. } => {
            let d = grid.segment_values()[segment];
            (Location::SegmentInterior(segment), d, d)
        }
        Site::Vertex(v) => {
            let right = path.gprime[k];
            match path.gprime_left.as_ref().map(|l| l[k]) {
                Some(left) if left != right => (Location::Coincident { vertex: v }, right, left),
                _ => (Location::VertexOfL(v), right, right),
            }
        }
    };
    MinimizerResult { y_star, index: k, location, q_value, w, w_left }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::Flux;

    fn abs_grid(x: f64, t: f64, n: usize) -> VariationalGrid {
        VariationalGrid::build(&Flux::AbsoluteValue, x, t, &[n]).unwrap()
    }

    #[test]
    fn linear_data_picks_left_endpoint() {
        let grid = abs_grid(0.0, 1.0, 7);
        let path = SamplePath::from_fn(&grid, |y| y, |_| 1.0);
        let r = solve_path(&grid, &path).unwrap();
        assert_eq!(r.y_star, -1.0);
        assert_eq!(r.location, Location::VertexOfL(0));
        assert_eq!(r.w, 1.0);
    }

    #[test]
    fn quadratic_data_picks_interior() {
        let grid = abs_grid(0.0, 1.0, 3);
        let path = SamplePath::from_fn(&grid, |y| y * y, |y| 2.0 * y);
        let r = solve_path(&grid, &path).unwrap();
        assert_eq!(r.y_star, 0.0);
        assert_eq!(r.location, Location::SegmentInterior(0));
        assert_eq!(r.w, 0.0);
        assert_eq!(r.q_value, 0.0);
    }

    #[test]
    fn ties_go_to_the_largest_point() {
        let grid = abs_grid(0.0, 1.0, 3);
        let path = SamplePath::new(vec![0.0; 5], vec![1.0, 0.0, 2.0, 0.0, 1.0]);
        assert_eq!(solve_path(&grid, &path).unwrap().y_star, 0.5);
        let flat = SamplePath::new(vec![0.0; 5], vec![0.0; 5]);
        assert_eq!(solve_path(&grid, &flat).unwrap().location, Location::VertexOfL(1));
    }

    #[test]
    fn coincident_vertex_reports_both_limits() {
        let grid = abs_grid(0.0, 1.0, 3);
        // g(y) = |y + 1| has its kink on the left vertex
        let path = SamplePath::from_fn(&grid, |y| (y + 1.0).abs(), |y| if y >= -1.0 { 1.0 } else { -1.0 })
            .with_left_limits(vec![-1.0, 1.0, 1.0, 1.0, 1.0]);
        let r = solve_path(&grid, &path).unwrap();
        assert_eq!(r.location, Location::Coincident { vertex: 0 });
        assert_eq!((r.w_left, r.w), (-1.0, 1.0));
    }

    #[test]
    fn segment_value_follows_the_segment() {
        let flux = Flux::polygonal(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5]).unwrap();
        let grid = VariationalGrid::build(&flux, 0.0, 2.0, &[3, 3]).unwrap();
        // minimum of (y - 1)^2 lies inside the right segment
        let path = SamplePath::from_fn(&grid, |y| (y - 1.0).powi(2), |y| 2.0 * (y - 1.0));
        let r = solve_path(&grid, &path).unwrap();
        assert_eq!(r.location, Location::SegmentInterior(1));
        assert_eq!(r.w, grid.segment_values()[1]);
        let q = path.objective(&grid);
        assert!(q.iter().all(|&v| v >= r.q_value));
    }

    #[test]
    fn mismatched_path_is_rejected() {
        let grid = abs_grid(0.0, 1.0, 3);
        assert!(solve_path(&grid, &SamplePath::new(vec![0.0; 4], vec![0.0; 4])).is_err());
    }
}
