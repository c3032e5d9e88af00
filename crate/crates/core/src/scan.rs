//! Residual estimates across several explanatory variable sets.
//!
//! Every set in a scan is evaluated on the same time indices, so the
//! numbers are comparable row to row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, AnalysisOptions, AnalysisReport};
use crate::dataset::{build_lag_problem_from, Dataset, EmbeddingSpec, VarRef};
use crate::error::{Error, Result};

/// Default improvement threshold for choosing the embedding dimension.
pub const DEFAULT_STOP_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub label: String,
    pub variables: Vec<String>,
    pub n: usize,
    pub sigma_lr_fractional: Option<f64>,
    pub sigma_nl_fractional: Option<f64>,
    pub sigma_nl_fractional_stderr: Option<f64>,
    /// Set when this variable set could not be analysed.
    pub error: Option<String>,
}

impl ScanRow {
    fn from_result(spec: &EmbeddingSpec, n: usize, r: Result<AnalysisReport>) -> Self {
        let variables = spec.variables().iter().map(VarRef::to_string).collect();
        match r {
            Ok(r) => Self {
                label: spec.label(),
                variables,
                n: r.n,
                sigma_lr_fractional: Some(r.sigma_lr_fractional()),
                sigma_nl_fractional: Some(r.sigma_nl_fractional()),
                sigma_nl_fractional_stderr: Some(r.estimate.sigma_nl_fractional_stderr),
                error: None,
            },
            Err(e) => Self {
                label: spec.label(),
                variables,
                n,
                sigma_lr_fractional: None,
                sigma_nl_fractional: None,
                sigma_nl_fractional_stderr: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub target: String,
    pub rows: Vec<ScanRow>,
    /// Embedding dimension, for delay scans only.
    pub chosen_de: Option<usize>,
    pub stop_threshold: Option<f64>,
}

fn run_specs(
    series: &Dataset,
    specs: &[EmbeddingSpec],
    opts: &AnalysisOptions,
) -> Result<Vec<ScanRow>> {
    for spec in specs {
        spec.validate()?;
        for v in spec.variables() {
            series.column(&v.column)?;
        }
    }
    series.column(specs.first().map_or("", |s| s.target.as_str()))?;
    let start = specs.iter().map(EmbeddingSpec::max_lag).max().unwrap_or(0);
    if start + 2 > series.len() {
        return Err(Error::InvalidEmbedding(format!(
            "maximum lag {start} leaves fewer than 2 rows of {}",
            series.len()
        )));
    }
    let n = series.len() - start;
    // each analysis already splits its pair loop over `opts.workers`
    let rows = specs
        .iter()
        .map(|spec| {
            let r = build_lag_problem_from(series, spec, start).and_then(|p| analyze(&p, opts));
            ScanRow::from_result(spec, n, r)
        })
        .collect();
    Ok(rows)
}

/// Analyses each variable set in turn. A set that fails (for example, a
/// collinear one) becomes a row carrying the error instead of aborting the
/// scan; unknown columns and malformed lags still fail up front.
pub fn subset_scan(
    series: &Dataset,
    target: &str,
    subsets: &[Vec<VarRef>],
    opts: &AnalysisOptions,
) -> Result<ScanReport> {
    series.column(target)?;
    let specs = subsets
        .iter()
        .map(|vars| EmbeddingSpec::from_vars(target, vars))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        target: target.to_string(),
        rows: run_specs(series, &specs, opts)?,
        chosen_de: None,
        stop_threshold: None,
    })
}

/// Delay-embedding scan: `target_t` against `target_{t-1} .. target_{t-k}`
/// for `k = 0 ..= max_lag`.
///
/// The chosen dimension is `k* + 1`, where `k*` is the largest `k` whose
/// improvement `NL(k-1) - NL(k)` exceeds `stop_threshold` (0 if none does).
pub fn embedding_scan(
    series: &Dataset,
    target: &str,
    max_lag: usize,
    stop_threshold: f64,
    opts: &AnalysisOptions,
) -> Result<ScanReport> {
    series.column(target)?;
    if !(stop_threshold >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "stop threshold must be >= 0, got {stop_threshold}"
        )));
    }
    let specs: Vec<EmbeddingSpec> = (0..=max_lag)
        .map(|k| EmbeddingSpec::delay(target, k))
        .collect();
    let rows = run_specs(series, &specs, opts)?;
    let chosen_de = choose_dimension(&rows, stop_threshold);
    Ok(ScanReport {
        target: target.to_string(),
        rows,
        chosen_de,
        stop_threshold: Some(stop_threshold),
    })
}

/// `None` when the `k = 0` row itself failed.
pub fn choose_dimension(rows: &[ScanRow], stop_threshold: f64) -> Option<usize> {
    rows.first()?.sigma_nl_fractional?;
    let mut k_star = 0;
    for k in 1..rows.len() {
        if let (Some(prev), Some(cur)) =
            (rows[k - 1].sigma_nl_fractional, rows[k].sigma_nl_fractional)
        {
            if prev - cur > stop_threshold {
                k_star = k;
            }
        }
    }
    Some(k_star + 1)
}

/// Runs several independent scans at once, one per series.
pub fn embedding_scans(
    series: &[Dataset],
    target: &str,
    max_lag: usize,
    stop_threshold: f64,
    opts: &AnalysisOptions,
) -> Vec<Result<ScanReport>> {
    series
        .par_iter()
        .map(|s| embedding_scan(s, target, max_lag, stop_threshold, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(nl: Option<f64>) -> ScanRow {
        ScanRow {
            label: String::new(),
            variables: Vec::new(),
            n: 0,
            sigma_lr_fractional: nl,
            sigma_nl_fractional: nl,
            sigma_nl_fractional_stderr: nl.map(|_| 0.0),
            error: nl.is_none().then(|| "failed".to_string()),
        }
    }

    #[test]
    fn dimension_rule() {
        let rows: Vec<_> = [1.0, 0.8, 0.3, 0.1, 0.03, 0.035]
            .into_iter()
            .map(|v| row(Some(v)))
            .collect();
        assert_eq!(choose_dimension(&rows, 0.02), Some(5));
        assert_eq!(choose_dimension(&rows, 0.4), Some(3));
        assert_eq!(choose_dimension(&rows, 0.9), Some(1));
    }

    #[test]
    fn dimension_skips_failed_rows() {
        let rows = vec![row(Some(1.0)), row(None), row(Some(0.1))];
        assert_eq!(choose_dimension(&rows, 0.02), Some(1));
        assert_eq!(choose_dimension(&[row(None), row(Some(0.1))], 0.02), None);
    }

    #[test]
    fn collinear_subset_is_marked() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let ds = Dataset::new(
            vec!["x".into(), "w".into()],
            vec![x.clone(), x.iter().map(|v| 2.0 * v).collect()],
        )
        .unwrap();
        let subsets = vec![
            vec![VarRef::new("x", 1)],
            vec![VarRef::new("x", 1), VarRef::new("w", 1)],
        ];
        let opts = AnalysisOptions {
            min_count: 20,
            ..Default::default()
        };
        let r = subset_scan(&ds, "x", &subsets, &opts).unwrap();
        assert!(r.rows[0].is_ok());
        assert!(!r.rows[1].is_ok());
        assert!(r.rows[1].error.as_deref().unwrap().contains("ollinear"));
        assert_eq!(r.rows[1].label, "{x@1, w@1}");
    }

    #[test]
    fn unknown_column_fails_up_front() {
        let ds = Dataset::new(vec!["x".into()], vec![vec![0.0, 1.0, 3.0, 2.0]]).unwrap();
        let r = subset_scan(
            &ds,
            "x",
            &[vec![VarRef::new("q", 1)]],
            &AnalysisOptions::default(),
        );
        assert!(matches!(r, Err(Error::UnknownColumn(_))));
    }
}
