//! Probabilities of the minimizer's location, expected solutions, and shock densities.

mod candidates;
mod segment;
mod shock;
mod spectrum;
mod studies;

pub use candidates::{CandidateSet, Class, QUADRATURE_CAP};
pub use segment::{
    candidate_probabilities, candidate_probabilities_mc, expected_solution, expected_solution_negated,
    minimum_cdf, minimum_cdf_mc, segment_probabilities_mc, segment_probabilities_quadrature, CdfCurve,
    CdfTarget, Method, SegmentProbabilities,
};
pub use shock::{pair_density, richardson_weights, shock_density_mc, shock_density_quadrature, ShockDensityResult, ShockMethod};
pub use spectrum::{
    rotated_probability, spectrum_report, truncated_factor, truncated_spectrum_probability, Normalization,
    SpectrumReport, TruncatedProbabilities, ROTATED_CAP, SPECTRUM_REFERENCE,
};
pub use studies::{
    convergence_study, log_log_slope, scaling_fit, shock_monotonicity_study, variance_law, CauchyStep,
    ConvergenceRow, ConvergenceStudy, DenseWindow, Moments4, ScalingFit, ShockComparison, ShockRow, ShockStudy,
    TailBound, VarianceRow,
};
