//! Residual statistics from conditional pair probabilities.
//!
//! For continuous `F`, `P(eps | delta)` tends to the distribution function
//! of `|r - r'|` as `delta -> 0`. The finite-data stand-in is the maximum
//! over all delta columns with enough pairs ([`plateau_select`]). Moments of
//! `|dr|` then follow from
//!
//! ```text
//! <|dr|^n> = n * integral_0^inf eps^(n-1) (1 - P(eps)) d eps
//! ```
//!
//! and the residual variance is half the second moment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::RegressionProblem;
use crate::error::{Error, Result};
use crate::pairgrid::{map_chunks, max_norm, CondProbMatrix, PairGrid};

/// Default minimum number of pairs a delta column needs to be used.
pub const DEFAULT_MIN_COUNT: u64 = 200;

/// Sampled `P(eps)` with the delta column that supplied each value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCurve {
    pub eps: Vec<f64>,
    pub p: Vec<f64>,
    pub stderr: Vec<f64>,
    pub chosen_delta: Vec<f64>,
    pub min_count_used: u64,
}

impl ProbabilityCurve {
    /// A curve with no pair provenance, e.g. an analytic model.
    pub fn from_samples(eps: Vec<f64>, p: Vec<f64>) -> Self {
        let n = eps.len();
        assert_eq!(n, p.len(), "eps and p lengths differ");
        Self {
            eps,
            p,
            stderr: vec![0.0; n],
            chosen_delta: vec![f64::NAN; n],
            min_count_used: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

/// `P(eps_i) = max_j P(eps_i | delta_j)` over delta columns holding at
/// least `min_count` pairs. Ties go to the smallest delta.
pub fn plateau_select(m: &CondProbMatrix, min_count: u64) -> Result<ProbabilityCurve> {
    let min_count = min_count.max(1);
    let qualifying: Vec<usize> = (0..m.n_delta())
        .filter(|&j| m.counts[j] >= min_count)
        .collect();
    if qualifying.is_empty() {
        return Err(Error::InsufficientStatistics {
            min_count,
            best: m.counts.iter().copied().max().unwrap_or(0),
        });
    }
    let ne = m.n_eps();
    let mut p = Vec::with_capacity(ne);
    let mut stderr = Vec::with_capacity(ne);
    let mut chosen_delta = Vec::with_capacity(ne);
    for i in 0..ne {
        let mut best: Option<(f64, usize)> = None;
        for &j in &qualifying {
            if let Some(v) = m.p(i, j) {
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, j));
                }
            }
        }
        // qualifying columns have counts > 0, so every cell is defined
        let (v, j) = best.expect("qualifying column without data");
        p.push(v);
        stderr.push(m.stderr(i, j).unwrap_or(0.0));
        chosen_delta.push(m.delta_values[j]);
    }
    Ok(ProbabilityCurve {
        eps: m.eps_values.clone(),
        p,
        stderr,
        chosen_delta,
        min_count_used: min_count,
    })
}

/// Composite Simpson weights on arbitrary increasing knots: the integral of
/// `f` over `[t[0], t[last]]` is `sum(w[i] * f(t[i]))`. Pairs of intervals use
/// the unequal-spacing Simpson rule; an odd interval count closes with the
/// trapezoid rule on the final interval.
pub fn simpson_weights(t: &[f64]) -> Vec<f64> {
    let m = t.len();
    let mut w = vec![0.0; m];
    if m < 2 {
        return w;
    }
    let intervals = m - 1;
    let paired = intervals - intervals % 2;
    let mut k = 0;
    while k < paired {
        let h0 = t[k + 1] - t[k];
        let h1 = t[k + 2] - t[k + 1];
        let s = (h0 + h1) / 6.0;
        w[k] += s * (2.0 - h1 / h0);
        w[k + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
        w[k + 2] += s * (2.0 - h0 / h1);
        k += 2;
    }
    if paired < intervals {
        let h = t[m - 1] - t[m - 2];
        w[m - 2] += h / 2.0;
        w[m - 1] += h / 2.0;
    }
    w
}

/// `<|dr|^n>` and its standard error. The error sums the per-knot binomial
/// errors linearly, since cumulative probabilities at different eps share
/// pairs and are positively correlated.
fn moment_with_error(curve: &ProbabilityCurve, n: i32) -> (f64, f64) {
    if curve.is_empty() {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let e0 = curve.eps[0];
    // P held at p[0] on [0, eps_0]
    let head = (1.0 - curve.p[0]) * e0.powi(n);
    let mut value = head;
    let mut err = e0.powi(n) * curve.stderr[0];
    let w = simpson_weights(&curve.eps);
    for (((&wi, &e), &p), &se) in w.iter().zip(&curve.eps).zip(&curve.p).zip(&curve.stderr) {
        let g = nf * e.powi(n - 1);
        value += wi * g * (1.0 - p);
        err += (wi * g).abs() * se;
    }
    (value, err)
}

/// `<|dr|^n> = n * integral eps^(n-1) (1 - P)`, for `n` in 1..=3.
pub fn moment(curve: &ProbabilityCurve, n: u32) -> f64 {
    assert!((1..=3).contains(&n), "moment order must be 1, 2 or 3");
    moment_with_error(curve, n as i32).0
}

/// `sigma_r^2 = integral eps (1 - P)`; exactly half of `moment(curve, 2)`.
pub fn variance_integral(curve: &ProbabilityCurve) -> f64 {
    moment(curve, 2) / 2.0
}

/// Standard error of [`variance_integral`].
pub fn variance_integral_stderr(curve: &ProbabilityCurve) -> f64 {
    moment_with_error(curve, 2).1 / 2.0
}

/// `rho(|dr|) = dP/d eps` by finite differences, clipped at zero.
pub fn residual_density(curve: &ProbabilityCurve) -> Result<Vec<f64>> {
    let m = curve.len();
    if m < 3 {
        return Err(Error::DegenerateCurve(format!(
            "density needs at least 3 points, got {m}"
        )));
    }
    let (e, p) = (&curve.eps, &curve.p);
    let mut rho = Vec::with_capacity(m);
    rho.push((p[1] - p[0]) / (e[1] - e[0]));
    for i in 1..m - 1 {
        rho.push((p[i + 1] - p[i - 1]) / (e[i + 1] - e[i - 1]));
    }
    rho.push((p[m - 1] - p[m - 2]) / (e[m - 1] - e[m - 2]));
    for r in &mut rho {
        *r = r.max(0.0);
    }
    Ok(rho)
}

/// Conditional-expectation estimate `sigma^2 = E[(dy)^2 | |dx| <= delta] / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub sigma2: f64,
    pub stderr: f64,
    pub delta: f64,
    pub pairs: u64,
}

/// Half the mean squared target difference over pairs in the smallest delta
/// bin (of `grid`) holding at least `min_count` pairs.
pub fn direct_variance(
    problem: &RegressionProblem,
    grid: &PairGrid,
    min_count: u64,
) -> Result<DirectEstimate> {
    direct_variance_with_workers(problem, grid, min_count, crate::pairgrid::default_workers())
}

pub fn direct_variance_with_workers(
    problem: &RegressionProblem,
    grid: &PairGrid,
    min_count: u64,
    workers: usize,
) -> Result<DirectEstimate> {
    let min_count = min_count.max(1);
    let bins = grid.delta_bins();
    let nd = bins.len();
    let n = problem.len();
    let d = problem.dim();
    let (y, x) = (problem.y(), problem.x());
    // per delta bin (plus overflow): count, sum dy^2, sum dy^4
    let parts = map_chunks(n, workers, |rows| {
        let mut count = vec![0u64; nd + 1];
        let mut s2 = vec![0.0f64; nd + 1];
        let mut s4 = vec![0.0f64; nd + 1];
        for i in rows {
            let xi = &x[i * d..(i + 1) * d];
            for j in i + 1..n {
                let k = bins.index(max_norm(xi, &x[j * d..(j + 1) * d]));
                let dy2 = (y[i] - y[j]) * (y[i] - y[j]);
                count[k] += 1;
                s2[k] += dy2;
                s4[k] += dy2 * dy2;
            }
        }
        (count, s2, s4)
    });
    let mut count = vec![0u64; nd + 1];
    let mut s2 = vec![0.0f64; nd + 1];
    let mut s4 = vec![0.0f64; nd + 1];
    for (c, a, b) in &parts {
        for k in 0..=nd {
            count[k] += c[k];
            s2[k] += a[k];
            s4[k] += b[k];
        }
    }
    let (mut c, mut a, mut b) = (0u64, 0.0, 0.0);
    for k in 0..nd {
        c += count[k];
        a += s2[k];
        b += s4[k];
        if c >= min_count {
            let cf = c as f64;
            let mean2 = a / cf;
            let var2 = (b / cf - mean2 * mean2).max(0.0);
            return Ok(DirectEstimate {
                sigma2: mean2 / 2.0,
                stderr: (var2 / cf).sqrt() / 2.0,
                delta: bins.edges()[k],
                pairs: c,
            });
        }
    }
    Err(Error::InsufficientStatistics { min_count, best: c })
}

/// Least-squares Gaussian model `P(eps) = erf(eps / (2 sigma))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErfFit {
    pub sigma: f64,
    pub rms_misfit: f64,
}

impl ErfFit {
    pub fn model(&self, eps: f64) -> f64 {
        libm::erf(eps / (2.0 * self.sigma))
    }
}

fn erf_sse(curve: &ProbabilityCurve, sigma: f64) -> f64 {
    let s = 1.0 / (2.0 * sigma);
    curve
        .eps
        .iter()
        .zip(&curve.p)
        .map(|(&e, &p)| {
            let r = p - libm::erf(e * s);
            r * r
        })
        .sum()
}

/// Fits `sigma` by golden-section search over `log sigma` in
/// `[eps_min / 10, 10 * eps_max]`, started from the best point of a coarse
/// log grid.
pub fn erf_fit(curve: &ProbabilityCurve) -> Result<ErfFit> {
    let interior = curve.p.iter().filter(|&&p| p > 0.0 && p < 1.0).count();
    if interior < 5 {
        return Err(Error::DegenerateCurve(format!(
            "erf fit needs at least 5 points with 0 < P < 1, got {interior}"
        )));
    }
    let lo = (curve.eps[0] / 10.0).ln();
    let hi = (curve.eps[curve.len() - 1] * 10.0).ln();
    let f = |u: f64| erf_sse(curve, u.exp());

    const GRID: usize = 200;
    let step = (hi - lo) / GRID as f64;
    let best = (0..=GRID)
        .map(|k| (k, f(lo + step * k as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let sigma = ((a + b) / 2.0).exp();
    Ok(ErfFit {
        sigma,
        rms_misfit: (erf_sse(curve, sigma) / curve.len() as f64).sqrt(),
    })
}

/// Residual statistics for one regression problem, in units of its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub sigma2_nl: f64,
    pub sigma2_nl_stderr: f64,
    /// `sqrt(sigma2_nl) / sigma_y`.
    pub sigma_nl_fractional: f64,
    pub sigma_nl_fractional_stderr: f64,
    /// `<|dr|^n>` for n = 1, 2, 3.
    pub moments: BTreeMap<u32, f64>,
    pub sigma2_direct: Option<f64>,
    pub sigma2_direct_stderr: Option<f64>,
    pub erf_sigma: Option<f64>,
    pub erf_rms_misfit: Option<f64>,
}

/// Fractional error and its delta-method standard error.
pub fn fractional(sigma2: f64, stderr: f64, sigma_y: f64) -> (f64, f64) {
    let s = sigma2.max(0.0).sqrt();
    let se = if s > 0.0 {
        stderr / (2.0 * s)
    } else {
        stderr.sqrt()
    };
    (s / sigma_y, se / sigma_y)
}

impl EstimateReport {
    /// Integrates `curve`; direct and erf results are attached separately.
    pub fn from_curve(curve: &ProbabilityCurve, sigma_y: f64) -> Self {
        let (m2, m2_err) = moment_with_error(curve, 2);
        let sigma2_nl = (m2 / 2.0).max(0.0);
        let sigma2_nl_stderr = m2_err / 2.0;
        let (frac, frac_se) = fractional(sigma2_nl, sigma2_nl_stderr, sigma_y);
        let moments = (1..=3).map(|n| (n, moment(curve, n))).collect();
        Self {
            sigma2_nl,
            sigma2_nl_stderr,
            sigma_nl_fractional: frac,
            sigma_nl_fractional_stderr: frac_se,
            moments,
            sigma2_direct: None,
            sigma2_direct_stderr: None,
            erf_sigma: None,
            erf_rms_misfit: None,
        }
    }
}
