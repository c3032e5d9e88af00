//! Tabular data, regression problems and time-delay embeddings.
//!
//! A [`Dataset`] is a set of named, equally long numeric columns. Analyses
//! run on a [`RegressionProblem`], which pairs one target vector with an
//! `N x d` matrix of explanatory variables. Problems are built from a
//! dataset either directly (same-time variables) or through an
//! [`EmbeddingSpec`] that pulls lagged copies of columns.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named numeric columns of identical length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset, checking that names are unique, columns have equal
    /// length `N >= 2` and every value is finite.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidDataset(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidDataset("no columns".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate column name '{a}'"
                )));
            }
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {n}"
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column '{name}' has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: name.clone(),
                    value: col[row].to_string(),
                });
            }
        }
        Ok(Self { names, columns })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Reads a comma-separated file with a mandatory header row.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, path)
    }

    fn read_csv<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let csv_err = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if names.iter().all(String::is_empty) {
            return Err(csv_err("missing header row".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (i, record) in rdr.records().enumerate() {
            // header is line 1
            let row = i + 2;
            let record = record.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => csv_err(format!(
                    "row {row} has {len} fields, header has {expected_len}"
                )),
                _ => csv_err(e.to_string()),
            })?;
            for ((cell, col), name) in record.iter().zip(columns.iter_mut()).zip(&names) {
                let value: f64 = cell.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        column: name.clone(),
                        value: cell.to_string(),
                    });
                }
                col.push(value);
            }
        }
        Self::new(names, columns)
    }

    /// Writes the dataset as CSV. Values use Rust's shortest round-trip
    /// formatting, so `load_csv` reproduces them bit for bit.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Csv {
            path: "<output>".into(),
            message: e.to_string(),
        };
        wtr.write_record(&self.names).map_err(to_err)?;
        let mut row = Vec::with_capacity(self.names.len());
        for t in 0..self.len() {
            row.clear();
            row.extend(self.columns.iter().map(|c| c[t].to_string()));
            wtr.write_record(&row).map_err(to_err)?;
        }
        wtr.flush().map_err(|e| Error::Csv {
            path: "<output>".into(),
            message: e.to_string(),
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Affine maps applied by [`RegressionProblem::standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub y_mean: f64,
    pub y_std: f64,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
}

/// One target vector and an `N x d` explanatory matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    y_name: String,
    x_names: Vec<String>,
    y: Vec<f64>,
    x: Vec<f64>,
    dim: usize,
    sigma_y: f64,
    scaling: Option<Scaling>,
}

/// Population mean and standard deviation (divisor `N`).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RegressionProblem {
    /// `x` is row-major with `dim` columns; `dim == 0` is the unconditional
    /// problem.
    pub fn new(
        y_name: impl Into<String>,
        y: Vec<f64>,
        x_names: Vec<String>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let y_name = y_name.into();
        let n = y.len();
        let dim = x_names.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {n}"
            )));
        }
        if x.len() != n * dim {
            return Err(Error::InvalidDataset(format!(
                "explanatory matrix has {} values, expected {n} x {dim}",
                x.len()
            )));
        }
        if let Some(i) = y.iter().chain(&x).position(|v| !v.is_finite()) {
            let (row, column) = if i < n {
                (i + 1, y_name.clone())
            } else {
                let k = i - n;
                (k / dim + 1, x_names[k % dim].clone())
            };
            return Err(Error::NonFinite {
                row,
                column,
                value: "non-finite".into(),
            });
        }
        let (_, sigma_y) = mean_std(&y);
        if !(sigma_y > 0.0) {
            return Err(Error::ZeroVariance(y_name));
        }
        Ok(Self {
            y_name,
            x_names,
            y,
            x,
            dim,
            sigma_y,
            scaling: None,
        })
    }

    /// Uses named columns of a dataset at equal times.
    pub fn from_columns(dataset: &Dataset, target: &str, vars: &[&str]) -> Result<Self> {
        let y = dataset.column(target)?.to_vec();
        let cols = vars
            .iter()
            .map(|v| dataset.column(v))
            .collect::<Result<Vec<_>>>()?;
        let mut x = Vec::with_capacity(y.len() * cols.len());
        for t in 0..y.len() {
            x.extend(cols.iter().map(|c| c[t]));
        }
        Self::new(target, y, vars.iter().map(|s| s.to_string()).collect(), x)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major explanatory matrix.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn x_column(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.x[i * self.dim + k]).collect()
    }

    pub fn y_name(&self) -> &str {
        &self.y_name
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    /// Population standard deviation of `y`.
    pub fn sigma_y(&self) -> f64 {
        self.sigma_y
    }

    /// Scaling applied by [`standardize`](Self::standardize), if any.
    pub fn scaling(&self) -> Option<&Scaling> {
        self.scaling.as_ref()
    }

    /// Shifts and scales `y` and every column of `x` to zero mean and unit
    /// population variance. Re-standardizing composes the scalings, so the
    /// recorded factors always map back to the original units.
    pub fn standardize(&self) -> Result<Self> {
        let n = self.len();
        let (y_mean, y_std) = mean_std(&self.y);
        if !(y_std > 0.0) {
            return Err(Error::ZeroVariance(self.y_name.clone()));
        }
        let y: Vec<f64> = self.y.iter().map(|v| (v - y_mean) / y_std).collect();
        let mut x = self.x.clone();
        let mut x_mean = Vec::with_capacity(self.dim);
        let mut x_std = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let (m, s) = mean_std(&self.x_column(k));
            if !(s > 0.0) {
                return Err(Error::ZeroVariance(self.x_names[k].clone()));
            }
            for i in 0..n {
                let v = &mut x[i * self.dim + k];
                *v = (*v - m) / s;
            }
            x_mean.push(m);
            x_std.push(s);
        }
        let scaling = match &self.scaling {
            None => Scaling {
                y_mean,
                y_std,
                x_mean,
                x_std,
            },
            Some(prev) => Scaling {
                y_mean: prev.y_mean + prev.y_std * y_mean,
                y_std: prev.y_std * y_std,
                x_mean: (0..self.dim)
                    .map(|k| prev.x_mean[k] + prev.x_std[k] * x_mean[k])
                    .collect(),
                x_std: (0..self.dim).map(|k| prev.x_std[k] * x_std[k]).collect(),
            },
        };
        let (_, sigma_y) = mean_std(&y);
        Ok(Self {
            y_name: self.y_name.clone(),
            x_names: self.x_names.clone(),
            y,
            x,
            dim: self.dim,
            sigma_y,
            scaling: Some(scaling),
        })
    }

    /// Returns a copy with rows reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        out.y = perm.iter().map(|&i| self.y[i]).collect();
        out.x = perm
            .iter()
            .flat_map(|&i| self.row(i).iter().copied())
            .collect();
        out
    }

    /// Replaces `y`, keeping `x`. Used for permutation controls.
    pub fn with_target(&self, y: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.y_name.clone(), y, self.x_names.clone(), self.x.clone())?;
        out.scaling = None;
        Ok(out)
    }
}

/// A column at a time lag: `name@lag` refers to `name_{t-lag}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarRef {
    pub column: String,
    pub lag: usize,
}

impl VarRef {
    pub fn new(column: impl Into<String>, lag: usize) -> Self {
        Self {
            column: column.into(),
            lag,
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lag == 0 {
            write!(f, "{}", self.column)
        } else {
            write!(f, "{}@{}", self.column, self.lag)
        }
    }
}

impl FromStr for VarRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (column, lag) = match s.split_once('@') {
            Some((c, l)) => {
                let lag = l
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidEmbedding(format!("bad lag in '{s}'")))?;
                (c.trim(), lag)
            }
            None => (s, 0),
        };
        if column.is_empty() {
            return Err(Error::InvalidEmbedding(format!(
                "empty column name in '{s}'"
            )));
        }
        Ok(Self::new(column, lag))
    }
}

/// Parses a comma-separated variable list such as `x@1,y@1` or `x@1..3`
/// (a lag range expands to one variable per lag). An empty string or
/// `none` yields the empty set.
pub fn parse_var_list(s: &str) -> Result<Vec<VarRef>> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        match item
            .split_once('@')
            .and_then(|(c, l)| Some((c, l.split_once("..")?)))
        {
            Some((column, (lo, hi))) => {
                let bad = || Error::InvalidEmbedding(format!("bad lag range in '{item}'"));
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend((lo..=hi).map(|lag| VarRef::new(column.trim(), lag)));
            }
            None => out.push(item.parse()?),
        }
    }
    Ok(out)
}

/// Which lagged values predict `target_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub target: String,
    /// Lags of the target column itself, strictly increasing, all >= 1.
    pub lags: Vec<usize>,
    /// Other columns, at lag 0 or more.
    #[serde(default)]
    pub extra_columns: Vec<VarRef>,
}

impl EmbeddingSpec {
    pub fn new(target: impl Into<String>, lags: Vec<usize>) -> Self {
        Self {
            target: target.into(),
            lags,
            extra_columns: Vec::new(),
        }
    }

    /// `target` predicted from `target@1 .. target@k`.
    pub fn delay(target: impl Into<String>, k: usize) -> Self {
        Self::new(target, (1..=k).collect())
    }

    pub fn with_extra(mut self, var: VarRef) -> Self {
        self.extra_columns.push(var);
        self
    }

    /// Splits a free-form variable list into target lags and other columns.
    pub fn from_vars(target: &str, vars: &[VarRef]) -> Result<Self> {
        let mut spec = Self::new(target, Vec::new());
        for v in vars {
            if v.column == target {
                spec.lags.push(v.lag);
            } else {
                spec.extra_columns.push(v.clone());
            }
        }
        Ok(spec)
    }

    pub fn max_lag(&self) -> usize {
        self.lags
            .iter()
            .copied()
            .chain(self.extra_columns.iter().map(|v| v.lag))
            .max()
            .unwrap_or(0)
    }

    /// Explanatory variables in column order.
    pub fn variables(&self) -> Vec<VarRef> {
        self.lags
            .iter()
            .map(|&k| VarRef::new(self.target.clone(), k))
            .chain(self.extra_columns.iter().cloned())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lags.contains(&0) {
            return Err(Error::InvalidEmbedding(format!(
                "lag 0 of the target '{}' would predict it from itself",
                self.target
            )));
        }
        if self.lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidEmbedding(format!(
                "lags must be strictly increasing, got {:?}",
                self.lags
            )));
        }
        Ok(())
    }

    /// Label used in reports, e.g. `{x@1, y@1}`.
    pub fn label(&self) -> String {
        let vars = self.variables();
        if vars.is_empty() {
            "{none}".to_string()
        } else {
            let parts: Vec<String> = vars.iter().map(VarRef::to_string).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

/// Builds the lagged regression problem: row `t` holds `target_t` and the
/// requested lagged values. The first `max_lag` rows are dropped.
pub fn build_lag_problem(series: &Dataset, spec: &EmbeddingSpec) -> Result<RegressionProblem> {
    build_lag_problem_from(series, spec, spec.max_lag())
}

/// Like [`build_lag_problem`], but starts at time index `start`, which must
/// be at least `spec.max_lag()`. Scans use this to give every
/// variable set the same rows.
pub fn build_lag_problem_from(
    series: &Dataset,
    spec: &EmbeddingSpec,
    start: usize,
) -> Result<RegressionProblem> {
    spec.validate()?;
    let n = series.len();
    let max_lag = spec.max_lag();
    if max_lag >= n {
        return Err(Error::InvalidEmbedding(format!(
            "maximum lag {max_lag} is not below the series length {n}"
        )));
    }
    if start < max_lag {
        return Err(Error::InvalidEmbedding(format!(
            "start index {start} is below the maximum lag {max_lag}"
        )));
    }
    if n.saturating_sub(start) < 2 {
        return Err(Error::InvalidEmbedding(format!(
            "only {} rows remain after dropping {start}",
            n.saturating_sub(start)
        )));
    }
    let target = series.column(&spec.target)?;
    let vars = spec.variables();
    let cols = vars
        .iter()
        .map(|v| series.column(&v.column).map(|c| (c, v.lag)))
        .collect::<Result<Vec<_>>>()?;
    let y = target[start..].to_vec();
    let mut x = Vec::with_capacity(y.len() * cols.len());
    for t in start..n {
        x.extend(cols.iter().map(|(c, lag)| c[t - lag]));
    }
    let names = vars.iter().map(VarRef::to_string).collect();
    RegressionProblem::new(spec.target.clone(), y, names, x)
}
