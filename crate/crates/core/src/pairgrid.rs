//! Pair statistics on a log-binned `(|dy|, |dx|)` plane.
//!
//! Every unordered pair of rows contributes one count to a raw 2-D
//! histogram indexed by the bins of `|y_i - y_j|` and of the max-norm
//! `max_k |x_ik - x_jk|`. A double prefix sum turns the histogram into
//! cumulative counts `#(|dy| <= eps_i and |dx| <= delta_j)`, from which the
//! conditional probabilities `P(eps | delta)` follow.
//!
//! Bin `0` on each axis is the underflow bin: it holds every separation
//! `<= edge[0]`, exact ties included. Bin `k >= 1` holds
//! `edge[k-1] < s <= edge[k]`; separations above the last edge land in an
//! overflow bin that only contributes to the pair total.
//!
//! The pair loop is split into a fixed set of row chunks that does not
//! depend on the worker count. Each chunk fills a private histogram and the
//! histograms are merged by integer addition, so the result is identical
//! for any number of workers.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dataset::RegressionProblem;
use crate::error::{Error, Result};

/// Number of row chunks the pair loop is split into.
const CHUNKS: usize = 64;

/// Above this many pairs the auto-range percentile is taken from a
/// deterministic sub-sample of pairs.
const RANGE_SAMPLE_LIMIT: u64 = 4_000_000;

/// Percentile of nonzero `|dy|` used for the lower eps edge.
const EPS_LOW_QUANTILE: f64 = 0.001;

/// Rank (1-based) of the nonzero `|dx|` used for the lower delta edge. The
/// smallest delta bins must be able to hold fewer than `min_count` pairs,
/// otherwise the small-delta end of the plateau is never resolved.
const DELTA_LOW_RANK: usize = 10;

/// Binning of the `log eps`, `log delta` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_eps_bins: usize,
    pub n_delta_bins: usize,
    /// `[eps_min, eps_max]`, in units of (standardized) `y`.
    pub eps_range: [f64; 2],
    /// `[delta_min, delta_max]`, in units of (standardized) `x`.
    pub delta_range: [f64; 2],
    /// Derive both ranges from the data; the explicit ranges are then
    /// overwritten with the resolved values.
    pub auto_range: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_eps_bins: 40,
            n_delta_bins: 40,
            eps_range: [1e-3, 10.0],
            delta_range: [1e-3, 10.0],
            auto_range: true,
        }
    }
}

impl GridConfig {
    pub fn fixed(eps_range: [f64; 2], delta_range: [f64; 2]) -> Self {
        Self {
            eps_range,
            delta_range,
            auto_range: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_eps_bins == 0 || self.n_delta_bins == 0 {
            return Err(Error::InvalidGrid("bin counts must be positive".into()));
        }
        if self.auto_range {
            return Ok(());
        }
        for (name, [lo, hi]) in [("eps", self.eps_range), ("delta", self.delta_range)] {
            if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!(
                    "{name} range [{lo}, {hi}] must satisfy 0 < min < max"
                )));
            }
        }
        Ok(())
    }
}

/// Log-spaced bin upper edges with a fast index lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBins {
    edges: Vec<f64>,
    log_lo: f64,
    inv_step: f64,
}

impl LogBins {
    /// `n + 1` edges from `lo` to `hi`; both endpoints are exact.
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        let log_lo = lo.ln();
        let step = (hi.ln() - log_lo) / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|k| (log_lo + step * k as f64).exp()).collect();
        edges[0] = lo;
        edges[n] = hi;
        Self {
            edges,
            log_lo,
            inv_step: 1.0 / step,
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of bins excluding overflow (`edges.len()`).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Smallest `k` with `v <= edges[k]`, or `edges.len()` for overflow.
    #[inline]
    pub fn index(&self, v: f64) -> usize {
        let e = &self.edges;
        if v <= e[0] {
            return 0;
        }
        let last = e.len();
        let guess = ((v.ln() - self.log_lo) * self.inv_step).ceil();
        let mut k = if guess.is_nan() || guess < 1.0 {
            1
        } else {
            (guess as usize).min(last)
        };
        while k < last && v > e[k] {
            k += 1;
        }
        while k > 1 && v <= e[k - 1] {
            k -= 1;
        }
        k
    }
}

/// Max-norm distance between two explanatory rows; zero for `d = 0`.
#[inline]
pub fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Fixed row partition of the pair loop, balanced by pair count.
pub(crate) fn row_chunks(n: usize) -> Vec<Range<usize>> {
    let total = n as u64 * (n as u64).saturating_sub(1) / 2;
    let chunks = CHUNKS.min(n.max(1));
    let target = total.div_ceil(chunks as u64).max(1);
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    let mut acc = 0u64;
    for i in 0..n {
        acc += (n - 1 - i) as u64;
        if acc >= target {
            out.push(start..i + 1);
            start = i + 1;
            acc = 0;
        }
    }
    if start < n {
        out.push(start..n);
    }
    out
}

/// Runs `f` on every row chunk with `workers` threads; results come back
/// in chunk order.
pub(crate) fn map_chunks<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let chunks = row_chunks(n);
    if workers <= 1 {
        return chunks.into_iter().map(f).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| chunks.into_par_iter().map(&f).collect()),
        Err(_) => chunks.into_iter().map(f).collect(),
    }
}

/// Default worker count: available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Non-cumulative pair counts, including overflow bins on both axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHistogram {
    eps_bins: usize,
    delta_bins: usize,
    counts: Vec<u64>,
}

impl RawHistogram {
    /// `eps_bins`/`delta_bins` count the regular bins plus underflow; one
    /// overflow bin per axis is added internally.
    pub fn new(eps_bins: usize, delta_bins: usize) -> Self {
        Self {
            eps_bins,
            delta_bins,
            counts: vec![0; (eps_bins + 1) * (delta_bins + 1)],
        }
    }

    #[inline]
    pub fn add(&mut self, eps_idx: usize, delta_idx: usize) {
        self.counts[eps_idx * (self.delta_bins + 1) + delta_idx] += 1;
    }

    pub fn get(&self, eps_idx: usize, delta_idx: usize) -> u64 {
        self.counts[eps_idx * (self.delta_bins + 1) + delta_idx]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Cell-wise addition.
    pub fn merge(&mut self, other: &RawHistogram) {
        assert_eq!(
            (self.eps_bins, self.delta_bins),
            (other.eps_bins, other.delta_bins),
            "histogram shapes differ"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Adds every pair `(i, j)` with `i` in `rows` and `i < j < N`.
    pub fn accumulate_rows(
        &mut self,
        problem: &RegressionProblem,
        eps: &LogBins,
        delta: &LogBins,
        rows: Range<usize>,
    ) {
        let y = problem.y();
        let n = problem.len();
        let d = problem.dim();
        let x = problem.x();
        for i in rows {
            let yi = y[i];
            let xi = &x[i * d..(i + 1) * d];
            for j in i + 1..n {
                let dy = (yi - y[j]).abs();
                let dx = max_norm(xi, &x[j * d..(j + 1) * d]);
                self.add(eps.index(dy), delta.index(dx));
            }
        }
    }
}

/// Cumulative pair counts over the `(eps, delta)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrid {
    pub config: GridConfig,
    eps: LogBins,
    delta: LogBins,
    raw: RawHistogram,
    /// `(n_eps_bins + 1) x (n_delta_bins + 1)`, row-major by eps.
    joint: Vec<u64>,
    marginal_delta: Vec<u64>,
    total_pairs: u64,
}

impl PairGrid {
    /// Prefix-sums a raw histogram.
    pub fn from_raw(config: GridConfig, eps: LogBins, delta: LogBins, raw: RawHistogram) -> Self {
        let ne = eps.len();
        let nd = delta.len();
        let mut joint = vec![0u64; ne * nd];
        for i in 0..ne {
            let mut row_acc = 0u64;
            for j in 0..nd {
                row_acc += raw.get(i, j);
                let above = if i > 0 { joint[(i - 1) * nd + j] } else { 0 };
                joint[i * nd + j] = above + row_acc;
            }
        }
        // marginal ignores eps, so the eps overflow row counts too
        let mut marginal_delta = vec![0u64; nd];
        let mut acc = 0u64;
        for (j, m) in marginal_delta.iter_mut().enumerate() {
            acc += (0..=ne).map(|i| raw.get(i, j)).sum::<u64>();
            *m = acc;
        }
        let total_pairs = raw.total();
        Self {
            config,
            eps,
            delta,
            raw,
            joint,
            marginal_delta,
            total_pairs,
        }
    }

    pub fn n_eps(&self) -> usize {
        self.eps.len()
    }

    pub fn n_delta(&self) -> usize {
        self.delta.len()
    }

    /// `#pairs with |dy| <= eps_i and |dx| <= delta_j`.
    pub fn joint(&self, i: usize, j: usize) -> u64 {
        self.joint[i * self.n_delta() + j]
    }

    pub fn marginal_delta(&self) -> &[u64] {
        &self.marginal_delta
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn eps_edges(&self) -> &[f64] {
        self.eps.edges()
    }

    pub fn delta_edges(&self) -> &[f64] {
        self.delta.edges()
    }

    pub fn eps_bins(&self) -> &LogBins {
        &self.eps
    }

    pub fn delta_bins(&self) -> &LogBins {
        &self.delta
    }

    pub fn raw(&self) -> &RawHistogram {
        &self.raw
    }
}

/// Largest separations and lower-edge percentiles used by auto-ranging.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SeparationSummary {
    eps_max: f64,
    delta_max: f64,
    eps_low: Option<f64>,
    delta_low: Option<f64>,
}

fn kth_smallest(mut v: Vec<f64>, k: usize) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let k = k.min(v.len() - 1);
    let (_, kth, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Some(*kth)
}

fn lower_quantile(v: Vec<f64>, q: f64) -> Option<f64> {
    let k = (v.len().saturating_sub(1) as f64 * q).floor() as usize;
    kth_smallest(v, k)
}

fn summarize(problem: &RegressionProblem, workers: usize) -> SeparationSummary {
    let n = problem.len();
    let total = n as u64 * (n as u64 - 1) / 2;
    let stride = total.div_ceil(RANGE_SAMPLE_LIMIT).max(1) as usize;
    let y = problem.y();
    let x = problem.x();
    let d = problem.dim();
    let parts = map_chunks(n, workers, |rows| {
        let (mut em, mut dm) = (0.0f64, 0.0f64);
        let mut eps_nz = Vec::new();
        let mut delta_nz = Vec::new();
        for i in rows {
            let xi = &x[i * d..(i + 1) * d];
            for j in i + 1..n {
                let dy = (y[i] - y[j]).abs();
                let dx = max_norm(xi, &x[j * d..(j + 1) * d]);
                em = em.max(dy);
                dm = dm.max(dx);
                if (i + j) % stride == 0 {
                    if dy > 0.0 {
                        eps_nz.push(dy);
                    }
                    if dx > 0.0 {
                        delta_nz.push(dx);
                    }
                }
            }
        }
        (em, dm, eps_nz, delta_nz)
    });
    let mut eps_max = 0.0f64;
    let mut delta_max = 0.0f64;
    let mut eps_nz = Vec::new();
    let mut delta_nz = Vec::new();
    for (em, dm, e, dl) in parts {
        eps_max = eps_max.max(em);
        delta_max = delta_max.max(dm);
        eps_nz.extend(e);
        delta_nz.extend(dl);
    }
    SeparationSummary {
        eps_max,
        delta_max,
        eps_low: lower_quantile(eps_nz, EPS_LOW_QUANTILE),
        delta_low: kth_smallest(delta_nz, DELTA_LOW_RANK - 1),
    }
}

fn resolve_range(low: Option<f64>, max: f64) -> [f64; 2] {
    match low {
        Some(lo) if lo < max => [lo, max],
        Some(_) => [max / 10.0, max],
        // no nonzero separation: every pair sits in the underflow bin
        None => [1e-3, 1.0],
    }
}

/// Resolves auto-ranged limits against the data; fixed configs pass through.
pub fn resolve_config(
    problem: &RegressionProblem,
    config: &GridConfig,
    workers: usize,
) -> Result<GridConfig> {
    config.validate()?;
    if !config.auto_range {
        return Ok(config.clone());
    }
    let s = summarize(problem, workers);
    let mut out = config.clone();
    out.eps_range = resolve_range(s.eps_low, s.eps_max);
    out.delta_range = resolve_range(s.delta_low, s.delta_max);
    out.validate_ranges()?;
    Ok(out)
}

impl GridConfig {
    fn validate_ranges(&self) -> Result<()> {
        let fixed = GridConfig {
            auto_range: false,
            ..self.clone()
        };
        fixed.validate()
    }
}

/// Accumulates all `N(N-1)/2` pairs using the default worker count.
pub fn accumulate_pairs(problem: &RegressionProblem, config: &GridConfig) -> Result<PairGrid> {
    accumulate_pairs_with_workers(problem, config, default_workers())
}

pub fn accumulate_pairs_with_workers(
    problem: &RegressionProblem,
    config: &GridConfig,
    workers: usize,
) -> Result<PairGrid> {
    let config = resolve_config(problem, config, workers)?;
    let eps = LogBins::new(config.eps_range[0], config.eps_range[1], config.n_eps_bins);
    let delta = LogBins::new(
        config.delta_range[0],
        config.delta_range[1],
        config.n_delta_bins,
    );
    let parts = map_chunks(problem.len(), workers, |rows| {
        let mut h = RawHistogram::new(eps.len(), delta.len());
        h.accumulate_rows(problem, &eps, &delta, rows);
        h
    });
    let mut raw = RawHistogram::new(eps.len(), delta.len());
    for part in &parts {
        raw.merge(part);
    }
    Ok(PairGrid::from_raw(config, eps, delta, raw))
}

/// `P(eps_i | delta_j)` with binomial standard errors. Cells whose delta
/// condition selects no pair are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondProbMatrix {
    pub eps_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    /// Row-major by eps.
    pub p: Vec<Option<f64>>,
    pub stderr: Vec<Option<f64>>,
    /// Pairs satisfying each delta condition.
    pub counts: Vec<u64>,
}

impl CondProbMatrix {
    pub fn n_eps(&self) -> usize {
        self.eps_values.len()
    }

    pub fn n_delta(&self) -> usize {
        self.delta_values.len()
    }

    pub fn p(&self, i: usize, j: usize) -> Option<f64> {
        self.p[i * self.n_delta() + j]
    }

    pub fn stderr(&self, i: usize, j: usize) -> Option<f64> {
        self.stderr[i * self.n_delta() + j]
    }

    /// Builds a matrix from explicit columns; used for tests and for
    /// curves that were not computed from pairs.
    pub fn from_columns(
        eps_values: Vec<f64>,
        delta_values: Vec<f64>,
        columns: &[Vec<f64>],
        counts: Vec<u64>,
    ) -> Self {
        let ne = eps_values.len();
        let nd = delta_values.len();
        assert_eq!(columns.len(), nd);
        assert_eq!(counts.len(), nd);
        let mut p = vec![None; ne * nd];
        let mut stderr = vec![None; ne * nd];
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), ne);
            if counts[j] == 0 {
                continue;
            }
            for (i, &v) in col.iter().enumerate() {
                p[i * nd + j] = Some(v);
                stderr[i * nd + j] = Some(binomial_stderr(v, counts[j]));
            }
        }
        Self {
            eps_values,
            delta_values,
            p,
            stderr,
            counts,
        }
    }
}

pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Divides cumulative joint counts by the delta marginals.
pub fn conditional_probabilities(grid: &PairGrid) -> CondProbMatrix {
    let ne = grid.n_eps();
    let nd = grid.n_delta();
    let mut p = vec![None; ne * nd];
    let mut stderr = vec![None; ne * nd];
    for j in 0..nd {
        let m = grid.marginal_delta[j];
        if m == 0 {
            continue;
        }
        for i in 0..ne {
            let v = grid.joint(i, j) as f64 / m as f64;
            p[i * nd + j] = Some(v);
            stderr[i * nd + j] = Some(binomial_stderr(v, m));
        }
    }
    CondProbMatrix {
        eps_values: grid.eps_edges().to_vec(),
        delta_values: grid.delta_edges().to_vec(),
        p,
        stderr,
        counts: grid.marginal_delta.clone(),
    }
}
