//! Closed-form and quadrature results for the typical-cell load and the
//! rate coverage built on it.

pub mod coverage;
pub mod moments;
pub mod negbin;
pub mod pgf;

pub use coverage::{
    check_beta_readings, rate_coverage, rate_coverage_curve, rate_coverage_curve_with, rate_coverage_with, sir_ccdf,
    sir_ccdf_with, BetaReading, CoverageKernel, RateConfig, RatePoint, ReadingCheck, DELTA,
};
pub use moments::{
    load_moments, mean_load, pair_kernel_integral, ppp_user_variance, second_moment_load, variance_load,
    voronoi_area_second_moment, LoadMoments, MomentErrors,
};
pub use negbin::{nb_fit, NegBinParams};
pub use pgf::{
    default_dft_size, invert_generating_function, invert_pgf, load_pgf, load_pgf_many, pmf_from_circle_values,
    Inversion, LoadPmf,
};
