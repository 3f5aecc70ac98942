//! Adaptive Dormand–Prince 5(4) integrator for small ODE systems.
//!
//! Used as the numerical cross-check for every closed-form trajectory and for
//! the degree ODE when the closed form is singular.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-11, atol: 1e-13 }
    }
}

/// Integrate `y' = f(t, y)` from `t0` and report the state at each of `times`
/// (non-decreasing, all `>= t0`).
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], times: &[f64], tol: Tolerances) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut h: f64 = 1e-3;
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    for &target in times {
        if target < t {
            return Err(Error::InvalidParameter("output times must be non-decreasing".into()));
        }
        while t < target {
            steps += 1;
            if steps > 10_000_000 {
                return Err(Error::Degenerate("ODE integration did not finish".into()));
            }
            let step = h.min(target - t);
            f(t, &y, &mut k[0]);
            for s in 1..7 {
                for i in 0..dim {
                    tmp[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                f(t + C[s] * step, &tmp, &mut k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..dim {
                y5[i] = y[i] + step * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let y4 = y[i] + step * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
                err = err.max(((y5[i] - y4) / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::Degenerate("ODE right-hand side produced non-finite values".into()));
            }
            if err <= 1.0 {
                t += step;
                y.copy_from_slice(&y5);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // only grow h from a full step; a clipped final step says nothing
            if err > 1.0 || step == h {
                h = step * factor;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
