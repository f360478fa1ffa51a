//! Time integrators: adaptive Dormand-Prince 5(4) with dense output and the
//! implicit trapezoidal rule with Newton iterations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SsmError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the output spacing when `None`.
    pub h0: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: None, h_min: 1e-14, max_steps: 50_000_000 }
    }
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each time in
/// `t_out` (non-decreasing, all `>= t0`) using dense output.
pub fn dopri5<F>(mut f: F, t0: f64, y0: &[f64], t_out: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(SsmError::Validation("output times must be non-decreasing and start at or after t0".into()));
    }
    let t_end = t_out.last().copied().unwrap_or(t0);
    let mut out = Vec::with_capacity(t_out.len());
    let mut next = 0;
    while next < t_out.len() && t_out[next] <= t0 {
        out.push(y0.to_vec());
        next += 1;
    }
    if next == t_out.len() {
        return Ok(out);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1);
    let span = t_end - t0;
    let mut h = opts.h0.unwrap_or((span / 100.0).min(1e-2 * span.max(1.0)));
    let mut steps = 0;
    while next < t_out.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(SsmError::Numerical("step limit exceeded".into()));
        }
        if h < opts.h_min {
            return Err(SsmError::Numerical(format!("step size underflow at t = {t}")));
        }
        let h_step = h.min(t_end - t);
        axpy(&mut ytmp, &y, h_step, &[(A21, &k1)]);
        f(t + C2 * h_step, &ytmp, &mut k2);
        axpy(&mut ytmp, &y, h_step, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h_step, &ytmp, &mut k3);
        axpy(&mut ytmp, &y, h_step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h_step, &ytmp, &mut k4);
        axpy(&mut ytmp, &y, h_step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h_step, &ytmp, &mut k5);
        axpy(&mut ytmp, &y, h_step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + h_step, &ytmp, &mut k6);
        axpy(&mut ynew, &y, h_step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t + h_step, &ynew, &mut k7);
        let mut err = 0.0;
        for i in 0..n {
            let e = h_step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let t_new = t + h_step;
            while next < t_out.len() && t_out[next] <= t_new {
                let theta = (t_out[next] - t) / h_step;
                let theta1 = 1.0 - theta;
                let mut yo = vec![0.0; n];
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h_step * k1[i] - ydiff;
                    let r4 = ydiff - h_step * k7[i] - bspl;
                    let r5 = h_step
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    yo[i] = y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
                }
                out.push(yo);
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        h = h_step * fac;
    }
    Ok(out)
}

/// Implicit trapezoidal rule with fixed step `h` (adjusted down so that each
/// output time is hit exactly) and Newton iterations using `jac`.
pub fn trapezoidal<F, J>(mut f: F, mut jac: J, t0: f64, y0: &[f64], h: f64, t_out: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    J: FnMut(f64, &[f64]) -> DMatrix<f64>,
{
    if !(h > 0.0) {
        return Err(SsmError::Validation("step size must be positive".into()));
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(SsmError::Validation("output times must be non-decreasing and start at or after t0".into()));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = DVector::from_column_slice(y0);
    let mut fy = vec![0.0; n];
    f(t, y.as_slice(), &mut fy);
    let mut out = Vec::with_capacity(t_out.len());
    let mut fnew = vec![0.0; n];
    for &target in t_out {
        let span = target - t;
        let steps = if span > 0.0 { (span / h).ceil() as usize } else { 0 };
        for s in 0..steps {
            let t1 = if s + 1 == steps { target } else { t + span / steps as f64 };
            let dt = t1 - t;
            let base = &y + DVector::from_column_slice(&fy) * (0.5 * dt);
            let mut z = &y + DVector::from_column_slice(&fy) * dt;
            let mut converged = false;
            for _ in 0..25 {
                f(t1, z.as_slice(), &mut fnew);
                let g = &z - &base - DVector::from_column_slice(&fnew) * (0.5 * dt);
                let jm = DMatrix::identity(n, n) - jac(t1, z.as_slice()) * (0.5 * dt);
                let delta = jm
                    .lu()
                    .solve(&g)
                    .ok_or_else(|| SsmError::Numerical(format!("singular Newton matrix at t = {t1}")))?;
                z -= &delta;
                if delta.norm() <= 1e-13 * (1.0 + z.norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(SsmError::Numerical(format!("Newton iteration did not converge at t = {t1}")));
            }
            f(t1, z.as_slice(), &mut fy);
            y = z;
            t = t1;
        }
        out.push(y.as_slice().to_vec());
    }
    Ok(out)
}
