//! Greatest minimizers of `g(y) + tL((x - y)/t)` and the solution values they give.

mod grid;
mod power;
mod scan;
mod solve;

pub use grid::{SamplePath, Site, VariationalGrid};
pub use power::{burgers_profile, power_law_l, power_law_l_prime, solve_power_law, DensePath};
pub use scan::{scan_realized, scan_x, scan_x_with, union_points, x_lattice, Profile, ProfileRow, RegionTransition};
pub use solve::{solve_path, Location, MinimizerResult};
