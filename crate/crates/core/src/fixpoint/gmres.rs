//! GMRES (no restarts) for zero-sum right-hand sides.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmresResult {
    pub x: Vec<f64>,
    /// `||b - A x|| / ||b||` as tracked by the Givens recurrence.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The Arnoldi process produced a (numerically) zero vector.
    pub breakdown: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subtract the mean so the entries sum to zero.
pub fn project_zero_sum(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solve `A x = b` from `x0 = 0` with at most `max_dim` Arnoldi steps.
pub fn gmres_solve<F>(mut apply: F, b: &[f64], max_dim: usize, tol: f64) -> Result<GmresResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let dim = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(GmresResult { x: vec![0.0; dim], relative_residual: 0.0, iterations: 0, converged: true, breakdown: false });
    }
    let m = max_dim.max(1);
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    // column-major Hessenberg: h[j] has j + 2 entries
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let mut g = vec![beta];
    let mut residual = beta;
    let mut breakdown = false;
    let mut k = 0;
    while k < m {
        let mut w = apply(&basis[k])?;
        let mut col = Vec::with_capacity(k + 2);
        for v in &basis {
            let hij = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(a, b)| *a -= hij * b);
            col.push(hij);
        }
        let hnext = norm(&w);
        col.push(hnext);
        for i in 0..k {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = cs[i] * a + sn[i] * b;
            col[i + 1] = -sn[i] * a + cs[i] * b;
        }
        let r = col[k].hypot(col[k + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (col[k] / r, col[k + 1] / r) };
        col[k] = r;
        col[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[k]);
        g[k] *= c;
        residual = g[k + 1].abs();
        h.push(col);
        k += 1;
        if hnext <= 1e-14 * beta {
            breakdown = true;
            break;
        }
        if residual <= tol * beta {
            break;
        }
        basis.push(w.into_iter().map(|x| x / hnext).collect());
    }
    // back substitution on the k × k triangle
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| h[j][i] * y[j]).sum();
        y[i] = if h[i][i] == 0.0 { 0.0 } else { (g[i] - s) / h[i][i] };
    }
    let mut x = vec![0.0; dim];
    for (yi, v) in y.iter().zip(&basis) {
        x.iter_mut().zip(v).for_each(|(a, b)| *a += yi * b);
    }
    project_zero_sum(&mut x);
    let relative_residual = residual / beta;
    Ok(GmresResult { x, relative_residual, iterations: k, converged: relative_residual <= tol, breakdown })
}
