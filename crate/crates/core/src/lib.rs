//! Model-free estimates of the noise level in a regression `y = F(x) + r`,
//! from the statistics of close pairs of data points.
//!
//! ```no_run
//! use nlnoise::{analyze, build_lag_problem, gen_ikeda, AnalysisOptions, EmbeddingSpec, IkedaConfig};
//!
//! let series = gen_ikeda(&IkedaConfig::default())?;
//! let problem = build_lag_problem(&series, &EmbeddingSpec::delay("x", 2))?;
//! let report = analyze(&problem, &AnalysisOptions::default())?;
//! println!("{:.4}", report.sigma_nl_fractional());
//! # Ok::<(), nlnoise::Error>(())
//! ```

// comparisons are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod generators;
pub mod linreg;
pub mod pairgrid;
pub mod scan;

pub use analysis::{analyze, analyze_full, Analysis, AnalysisOptions, AnalysisReport};
pub use dataset::{
    build_lag_problem, build_lag_problem_from, parse_var_list, Dataset, EmbeddingSpec,
    RegressionProblem, Scaling, VarRef,
};
pub use error::{Error, Result};
pub use estimator::{
    direct_variance, erf_fit, moment, plateau_select, residual_density, variance_integral,
    DirectEstimate, ErfFit, EstimateReport, ProbabilityCurve, DEFAULT_MIN_COUNT,
};
pub use generators::{
    gen_henon, gen_ikeda, gen_lorenz, HenonConfig, IkedaConfig, LorenzConfig, Noise, NoiseMode,
};
pub use linreg::{fit_linear, LinearFit};
pub use pairgrid::{
    accumulate_pairs, conditional_probabilities, CondProbMatrix, GridConfig, PairGrid,
};
pub use scan::{embedding_scan, subset_scan, ScanReport, ScanRow};
