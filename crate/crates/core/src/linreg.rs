//! Ordinary least squares baseline `y = a0 + sum_k a_k x_k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{mean_std, RegressionProblem};
use crate::error::{Error, Result};

/// Covariance condition estimates above this are rejected as collinear.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub a0: f64,
    pub a: Vec<f64>,
    /// `sigma_y^2 - sum_k a_k cov(y, x_k)`.
    pub sigma2_residual: f64,
    /// Mean squared residual, computed from the residual vector.
    pub sigma2_direct: f64,
    pub sigma_lr_fractional: f64,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.a0 + self.a.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()
    }

    pub fn residuals(&self, problem: &RegressionProblem) -> Vec<f64> {
        (0..problem.len())
            .map(|i| problem.y()[i] - self.predict(problem.row(i)))
            .collect()
    }
}

/// Solves the centred least-squares problem by Householder QR. Both the
/// covariance form of the residual variance and the mean squared residual
/// are computed; disagreement beyond rounding is reported as an error.
pub fn fit_linear(problem: &RegressionProblem) -> Result<LinearFit> {
    let n = problem.len();
    let d = problem.dim();
    let (y_mean, y_std) = mean_std(problem.y());
    let var_y = y_std * y_std;
    if d == 0 {
        return Ok(LinearFit {
            a0: y_mean,
            a: Vec::new(),
            sigma2_residual: var_y,
            sigma2_direct: var_y,
            sigma_lr_fractional: 1.0,
        });
    }

    let x_mean: Vec<f64> = (0..d).map(|k| mean_std(&problem.x_column(k)).0).collect();
    let xc = DMatrix::from_fn(n, d, |i, k| problem.row(i)[k] - x_mean[k]);
    let yc = DVector::from_iterator(n, problem.y().iter().map(|v| v - y_mean));

    check_condition(&xc, problem.x_names())?;

    let qr = xc.clone().qr();
    let qty = qr.q().transpose() * &yc;
    let a = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric("singular triangular factor".into()))?;

    let nf = n as f64;
    let cov_xy = xc.transpose() * &yc / nf;
    let sigma2_cov = var_y - a.dot(&cov_xy);
    let res = &yc - &xc * &a;
    let sigma2_direct = res.norm_squared() / nf;
    let tol = 1e-8 * var_y.max(f64::MIN_POSITIVE);
    if (sigma2_cov - sigma2_direct).abs() > tol {
        return Err(Error::Numeric(format!(
            "residual variance cross-check failed: {sigma2_cov:e} vs {sigma2_direct:e}"
        )));
    }
    let sigma2_residual = sigma2_cov.max(0.0);
    let a: Vec<f64> = a.iter().copied().collect();
    let a0 = y_mean - a.iter().zip(&x_mean).map(|(a, m)| a * m).sum::<f64>();
    Ok(LinearFit {
        a0,
        a,
        sigma2_residual,
        sigma2_direct,
        sigma_lr_fractional: sigma2_residual.sqrt() / problem.sigma_y(),
    })
}

/// Condition of `cov(X)` is the squared ratio of extreme singular values of
/// the centred design. Columns loading on the weakest direction are named.
fn check_condition(xc: &DMatrix<f64>, names: &[String]) -> Result<()> {
    // scale columns to unit norm so the estimate ignores units
    let mut scaled = xc.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let svd = scaled.svd(false, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let (imin, smin) = s.argmin();
    let condition = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if condition > MAX_CONDITION {
        let columns = match &svd.v_t {
            Some(vt) => {
                let v = vt.row(imin);
                names
                    .iter()
                    .zip(v.iter())
                    .filter(|(_, w)| w.abs() > 0.1)
                    .map(|(n, _)| n.clone())
                    .collect()
            }
            None => names.to_vec(),
        };
        return Err(Error::Collinear { condition, columns });
    }
    Ok(())
}
