//! Dormand–Prince 5(4) integrator for complex linear systems stored in fixed
//! size arrays.

use num_complex::Complex64 as C64;

use super::FloquetError;
use crate::potential::PotentialError;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

pub(crate) struct Solution<const N: usize> {
    pub y: [C64; N],
    /// Sum over accepted steps of the largest local error estimate.
    pub local_error_sum: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub steps: usize,
}

#[inline]
fn axpy<const N: usize>(y: &[C64; N], terms: &[(f64, &[C64; N])], h: f64) -> [C64; N] {
    let mut out = *y;
    for &(w, k) in terms {
        let s = w * h;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

/// Integrates y' = f(x, y) from `x0` to `x1` with mixed absolute/relative
/// tolerance `tol`. Steps below `h_min` abort with `StepSizeUnderflow`.
pub(crate) fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    tol: f64,
    h_init: f64,
    h_min: f64,
) -> Result<Solution<N>, FloquetError>
where
    F: FnMut(f64, &[C64; N]) -> Result<[C64; N], PotentialError>,
{
    let span = x1 - x0;
    let mut x = x0;
    let mut y = y0;
    let mut h = h_init.min(span).max(h_min);
    let mut k1 = f(x, &y)?;
    let mut local_error_sum = 0.0;
    let mut steps = 0;
    let mut last_reject = false;

    while x < x1 {
        if steps >= MAX_STEPS {
            return Err(FloquetError::StepLimit { steps });
        }
        let last = x + h >= x1 - 1e-15 * span.abs();
        if last {
            h = x1 - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h))?;
        let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h))?;
        let k4 = f(x + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
        let k5 = f(
            x + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        )?;
        let k6 = f(
            x + h,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        )?;
        let y_new = axpy(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let x_new = if last { x1 } else { x + h };
        let k7 = f(x_new, &y_new)?;

        let mut err_norm: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = tol + tol * y[i].norm().max(y_new[i].norm());
            let en = e.norm();
            err_abs = err_abs.max(en);
            err_norm = err_norm.max(en / scale);
        }
        if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(FloquetError::NonFinite { x });
        }

        if err_norm <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            local_error_sum += err_abs;
            steps += 1;
            let mut factor = if err_norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if last_reject {
                factor = factor.min(1.0);
            }
            last_reject = false;
            h *= factor;
        } else {
            last_reject = true;
            h *= (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            if h < h_min {
                return Err(FloquetError::StepSizeUnderflow { x, h });
            }
        }
    }
    Ok(Solution {
        y,
        local_error_sum,
        steps,
    })
}
