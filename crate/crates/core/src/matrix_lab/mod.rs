//! Monte Carlo laboratory: `(r,s)` bases, SDE simulation on `GL_N`, and
//! estimators for fluctuation moments.

mod basis;
mod estimate;
mod rate;
mod sim;

pub use basis::{
    build_rs_basis, hermitian_basis, magic_residuals, magic_suite, random_matrix, random_tuple,
    rs_inner_product, MagicResiduals,
};
pub use estimate::{
    batched, estimate, evaluate_samples, mixed_moment, skewness_kurtosis, CovKind, CovRow,
    Estimate, EstimateOptions, FluctuationReport, MeanRow, CONSTANT_TOL, DEFAULT_BATCHES,
};
pub use rate::{fit_slope, rate_study, RateRow, RateStudy, CONVERGED_TOL};
pub use sim::{
    sample_increment, simulate_coupled, simulate_paths, simulate_refined, PathDataset, Scheme,
    SimConfig,
};
