//! Dormand-Prince 5(4) embedded Runge-Kutta pair with adaptive steps.

use crate::error::{Error, Result};

// node coefficients c_i are not needed: the right-hand sides used here are
// autonomous

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights (also row 7 of the tableau, FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 1_000_000;

type State = [f64; 3];

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates the autonomous system `dy/dt = f(y)` from `t0` to `t1` with mixed absolute and
/// relative tolerance `tol`. `h` carries the step-size guess in and the
/// last accepted step out.
pub fn dopri5<F>(f: &F, y0: State, t0: f64, t1: f64, tol: f64, h: &mut f64) -> Result<State>
where
    F: Fn(&State) -> State,
{
    let mut t = t0;
    let mut y = y0;
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y);
    }
    if !(*h > 0.0) || *h > span {
        *h = span;
    }
    let mut k1 = f(&y);
    for _ in 0..MAX_STEPS {
        let last = t + *h >= t1;
        let step = if last { t1 - t } else { *h };
        let k2 = f(&axpy(&y, step, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(
            &y,
            step,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = f(&axpy(
            &y,
            step,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y5 = axpy(
            &y,
            step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(&y5);
        let mut err = 0.0f64;
        for i in 0..3 {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol + tol * y[i].abs().max(y5[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / 3.0).sqrt();
        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if err <= 1.0 {
            t += step;
            y = y5;
            k1 = k7;
            if last {
                return Ok(y);
            }
            *h = step * factor;
        } else {
            *h = step * factor.min(1.0);
        }
        if *h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, step: *h });
        }
    }
    Err(Error::StepUnderflow { t, step: *h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |y: &State| [-y[0], -2.0 * y[1], 0.5 * y[2]];
        let mut h = 0.1;
        let y = dopri5(&f, [1.0, 1.0, 1.0], 0.0, 2.0, 1e-10, &mut h).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
        assert!((y[1] - (-4.0f64).exp()).abs() < 1e-9);
        assert!((y[2] - 1.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let f = |y: &State| [y[1], -y[0], 0.0];
        let mut h = 0.01;
        let y = dopri5(
            &f,
            [1.0, 0.0, 0.0],
            0.0,
            std::f64::consts::TAU,
            1e-11,
            &mut h,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }
}
