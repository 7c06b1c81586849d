//! Marginal densities, heat grids, mean errors, convergence checks and
//! distribution distances computed from chains and draw samples.

mod convergence;
mod density;
mod distance;
mod report;

pub use convergence::{
    batch_means_mcse, convergence_and_ess, coordinate_diagnostics, ess, split_rhat,
    ConvergenceReport, CoordinateDiagnostics, EssEstimate,
};
pub use density::{estimate_density_1d, trapezoid, DensityEstimate1D, DensityMethod, GridSpec};
pub use distance::{
    distribution_distance, ks_critical_value, ks_sample_vs_cdf, ks_samples, tv_against_joint,
    tv_pmf, tv_sample_vs_cdf, tv_weighted_vs_cdf, DistributionRef, Metric,
};
pub use report::{
    central_interval, error_report, error_report_from_columns, mean_error_of_columns,
    posterior_mean_error, zero_inclusion, ErrorDensityReport, HeatGrid2D, Marginal, MeanError,
    PairGrid, ZeroInclusion, HEAT_CELLS, HPD_MASS, MIN_STATES,
};
