//! One-call analysis of a regression problem: linear baseline, pair grid,
//! plateau curve, integrals, direct estimate and erf fit.

use serde::{Deserialize, Serialize};

use crate::dataset::RegressionProblem;
use crate::error::Result;
use crate::estimator::{
    direct_variance_with_workers, erf_fit, plateau_select, EstimateReport, ProbabilityCurve,
    DEFAULT_MIN_COUNT,
};
use crate::linreg::{fit_linear, LinearFit};
use crate::pairgrid::{
    accumulate_pairs_with_workers, conditional_probabilities, default_workers, CondProbMatrix,
    GridConfig, PairGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub grid: GridConfig,
    pub min_count: u64,
    pub standardize: bool,
    pub workers: usize,
    pub fit_erf: bool,
    pub direct: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            min_count: DEFAULT_MIN_COUNT,
            standardize: true,
            workers: default_workers(),
            fit_erf: true,
            direct: true,
        }
    }
}

/// Linear and nonlinear residual estimates for one variable set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub target: String,
    pub variables: Vec<String>,
    pub n: usize,
    pub sigma_y: f64,
    pub standardized: bool,
    pub linear: LinearFit,
    pub estimate: EstimateReport,
    /// Grid configuration with auto-ranged limits resolved.
    pub grid: GridConfig,
    pub min_count: u64,
}

impl AnalysisReport {
    pub fn sigma_lr_fractional(&self) -> f64 {
        self.linear.sigma_lr_fractional
    }

    pub fn sigma_nl_fractional(&self) -> f64 {
        self.estimate.sigma_nl_fractional
    }
}

/// Everything computed along the way, for callers that want the
/// intermediate grid and curve.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub problem: RegressionProblem,
    pub grid: PairGrid,
    pub matrix: CondProbMatrix,
    pub curve: ProbabilityCurve,
    pub report: AnalysisReport,
}

pub fn analyze(problem: &RegressionProblem, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    analyze_full(problem, opts).map(|a| a.report)
}

pub fn analyze_full(problem: &RegressionProblem, opts: &AnalysisOptions) -> Result<Analysis> {
    let problem = if opts.standardize {
        problem.standardize()?
    } else {
        problem.clone()
    };
    let workers = opts.workers.max(1);
    let linear = fit_linear(&problem)?;
    let grid = accumulate_pairs_with_workers(&problem, &opts.grid, workers)?;
    let matrix = conditional_probabilities(&grid);
    let curve = plateau_select(&matrix, opts.min_count)?;
    let mut estimate = EstimateReport::from_curve(&curve, problem.sigma_y());
    if opts.direct {
        let d = direct_variance_with_workers(&problem, &grid, opts.min_count, workers)?;
        estimate.sigma2_direct = Some(d.sigma2);
        estimate.sigma2_direct_stderr = Some(d.stderr);
    }
    if opts.fit_erf {
        // a curve without interior points simply has no Gaussian fit
        if let Ok(fit) = erf_fit(&curve) {
            estimate.erf_sigma = Some(fit.sigma / problem.sigma_y());
            estimate.erf_rms_misfit = Some(fit.rms_misfit);
        }
    }
    let report = AnalysisReport {
        target: problem.y_name().to_string(),
        variables: problem.x_names().to_vec(),
        n: problem.len(),
        sigma_y: problem.sigma_y(),
        standardized: opts.standardize,
        linear,
        estimate,
        grid: grid.config.clone(),
        min_count: curve.min_count_used,
    };
    Ok(Analysis {
        problem,
        grid,
        matrix,
        curve,
        report,
    })
}
