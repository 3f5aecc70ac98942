//! Closed-form mean-field results for the edge-churn model.
//!
//! Time here is always measured in units of `C(n,2)` iterations. The edge
//! density relaxes as `rho(t) = (1-r) + (rho0 - (1-r)) e^{-t}`; the normed
//! degree of a vertex and every graphon value relax towards `rho(t)` at rate
//! `1 + r/rho(t)`, which tends to `1/(1-r)`. Fluctuations of the normed degree
//! around its mean follow an Ornstein-Uhlenbeck process whose Fokker-Planck
//! operator has Hermite-function eigenfunctions.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub r: f64,
    pub rho0: f64,
    pub d0: f64,
    pub grid_m: usize,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams { r: 0.9, rho0: 0.0, d0: 0.0, grid_m: 200 }
    }
}

impl TheoryParams {
    pub fn new(r: f64, rho0: f64, d0: f64) -> Result<Self> {
        let p = TheoryParams { r, rho0, d0, ..Default::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::InvalidParameter(format!("r must lie in [0, 1), got {}", self.r)));
        }
        for (name, v) in [("rho0", self.rho0), ("d0", self.d0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.grid_m < 2 {
            return Err(Error::InvalidParameter(format!("grid_m must be >= 2, got {}", self.grid_m)));
        }
        Ok(())
    }

    /// Stationary edge density `1 - r`.
    pub fn stationary_density(&self) -> f64 {
        1.0 - self.r
    }
}

pub fn rho_closed_form(t: f64, p: &TheoryParams) -> f64 {
    let eq = 1.0 - p.r;
    eq + (p.rho0 - eq) * (-t).exp()
}

/// Right-hand side of the edge-density ODE.
pub fn rho_rhs(rho: f64, r: f64) -> f64 {
    (1.0 - r) - rho
}

/// Right-hand side of the normed-degree ODE, `1 - (1 + r/rho) D`.
pub fn degree_rhs(d: f64, rho: f64, r: f64) -> f64 {
    1.0 - (1.0 + r / rho) * d
}

/// Shared factor of the degree and graphon solutions: `value(t)` for an
/// initial value `x0` of a quantity obeying `x' = 1 - (1 + r/rho) x`.
fn relax_towards_rho(x0: f64, t: f64, p: &TheoryParams) -> f64 {
    let rho = rho_closed_form(t, p);
    let a = p.r / (1.0 - p.r);
    let b = 1.0 / (1.0 - p.r);
    rho + (-t * b).exp() * rho.powf(-a) * (p.rho0.powf(a) * x0 - p.rho0.powf(b))
}

pub fn degree_closed_form(t: f64, p: &TheoryParams) -> Result<f64> {
    if p.rho0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "the explicit degree solution is singular at rho0 = 0; integrate the degree ODE \
             numerically instead (see `degree_ode_solution`)"
                .into(),
        ));
    }
    Ok(relax_towards_rho(p.d0, t, p))
}

/// Numerical solution of the coupled `(rho, D)` system at the given times.
pub fn degree_ode_solution(times: &[f64], p: &TheoryParams) -> Result<Vec<(f64, f64)>> {
    let r = p.r;
    if p.rho0 <= 0.0 {
        return Err(Error::InvalidParameter("the degree ODE needs rho0 > 0".into()));
    }
    let ys = ode::integrate(
        |_, y, dy| {
            dy[0] = rho_rhs(y[0], r);
            dy[1] = degree_rhs(y[1], y[0], r);
        },
        0.0,
        &[p.rho0, p.d0],
        times,
        Tolerances::default(),
    )?;
    Ok(ys.into_iter().map(|y| (y[0], y[1])).collect())
}

/// Symmetric `[0,1]`-valued function on the midpoints of an `m × m` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Graphon {
    m: usize,
    values: Vec<f64>,
}

impl Graphon {
    pub fn from_fn(m: usize, w: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                values.push(w((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64));
            }
        }
        Self::from_values(m, values)
    }

    pub fn from_values(m: usize, values: Vec<f64>) -> Result<Self> {
        if m < 1 || values.len() != m * m {
            return Err(Error::LengthMismatch(m * m, values.len()));
        }
        for i in 0..m {
            for j in 0..m {
                let v = values[i * m + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!("graphon value {v} at ({i},{j}) outside [0,1]")));
                }
                if v != values[j * m + i] {
                    return Err(Error::InvalidParameter(format!("graphon not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Graphon { m, values })
    }

    pub fn constant(m: usize, p: f64) -> Result<Self> {
        Self::from_values(m, vec![p; m * m])
    }

    /// `k × k` checkerboard alternating between `lo` (diagonal blocks) and `hi`.
    pub fn checkerboard(m: usize, k: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::from_fn(m, |x, y| {
            let (a, b) = ((x * k as f64) as usize, (y * k as f64) as usize);
            if (a + b) % 2 == 0 { lo } else { hi }
        })
    }

    /// Two blocks `[0,a)` and `[a,1]` with within/between values.
    pub fn two_block(m: usize, a: f64, w11: f64, w12: f64, w22: f64) -> Result<Self> {
        Self::from_fn(m, |x, y| match (x < a, y < a) {
            (true, true) => w11,
            (false, false) => w22,
            _ => w12,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn edge_density(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.m * self.m) as f64
    }

    pub fn max_abs_deviation(&self, c: f64) -> f64 {
        self.values.iter().map(|v| (v - c).abs()).fold(0.0, f64::max)
    }
}

/// Evolve a graphon with the explicit pointwise solution.
pub fn graphon_evolve(w0: &Graphon, t: f64, p: &TheoryParams) -> Result<Graphon> {
    p.validate()?;
    let rho0 = w0.edge_density();
    if (rho0 - p.rho0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "graphon edge integral {rho0} does not match rho0 = {}",
            p.rho0
        )));
    }
    let values = w0
        .values
        .iter()
        .map(|&x| relax_towards_rho(x, t, p).clamp(0.0, 1.0))
        .collect();
    Ok(Graphon { m: w0.m, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgraphDensities {
    pub edge: f64,
    pub cherry: f64,
    pub triangle: f64,
}

/// Midpoint-rule densities of the edge, cherry and triangle in `W`.
pub fn subgraph_densities(w: &Graphon) -> SubgraphDensities {
    let m = w.m;
    let mf = m as f64;
    let mat = DMatrix::from_row_slice(m, m, &w.values);
    let edge = mat.sum() / (mf * mf);
    // cherry: sum over the centre y of (sum_x W(x,y))^2
    let cherry = mat.row_sum().iter().map(|s| s * s).sum::<f64>() / (mf * mf * mf);
    // triangle: trace(W^3) = <W, W^2> for symmetric W
    let sq = &mat * &mat;
    let triangle = mat.component_mul(&sq).sum() / (mf * mf * mf);
    SubgraphDensities { edge, cherry, triangle }
}

/// Time derivatives of the edge, cherry and triangle densities.
pub fn density_ode_rhs(s: &SubgraphDensities, r: f64) -> Result<SubgraphDensities> {
    if !(s.edge > 0.0) {
        return Err(Error::InvalidParameter("density ODE needs a positive edge density".into()));
    }
    let k = 1.0 + r / s.edge;
    Ok(SubgraphDensities {
        edge: (1.0 - r) - s.edge,
        cherry: 2.0 * s.edge - 2.0 * k * s.cherry,
        triangle: 3.0 * s.cherry - 3.0 * k * s.triangle,
    })
}

/// Integrate the density ODE system from `s0`.
pub fn integrate_densities(s0: &SubgraphDensities, r: f64, times: &[f64]) -> Result<Vec<SubgraphDensities>> {
    density_ode_rhs(s0, r)?;
    let ys = ode::integrate(
        |_, y, dy| {
            let k = 1.0 + r / y[0];
            dy[0] = (1.0 - r) - y[0];
            dy[1] = 2.0 * y[0] - 2.0 * k * y[1];
            dy[2] = 3.0 * y[1] - 3.0 * k * y[2];
        },
        0.0,
        &[s0.edge, s0.cherry, s0.triangle],
        times,
        Tolerances::default(),
    )?;
    Ok(ys.into_iter().map(|y| SubgraphDensities { edge: y[0], cherry: y[1], triangle: y[2] }).collect())
}

/// Asymptotic relaxation rates, in inverse `C(n,2)` time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRates {
    pub edge: f64,
    pub degree: f64,
    pub cherry: f64,
    pub triangle: f64,
}

/// Rates `alpha` such that `log|a(t) - b(t)| / t -> -alpha`.
pub fn convergence_rates(r: f64) -> Result<ConvergenceRates> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("rates need r in [0, 1), got {r}")));
    }
    let a = 1.0 / (1.0 - r);
    Ok(ConvergenceRates { edge: 1.0, degree: a, cherry: 2.0 * a, triangle: 3.0 * a })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryLaw {
    pub normed_mean: f64,
    pub normed_sd: f64,
    pub raw_mean: f64,
    pub raw_sd: f64,
}

/// Gaussian stationary law of the degree for `n` vertices.
pub fn stationary_degree_law(r: f64, n: usize) -> Result<StationaryLaw> {
    if n == 0 || !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("need n >= 1 and r in [0,1]; got {n}, {r}")));
    }
    let nf = n as f64;
    let normed_mean = 1.0 - r;
    let normed_sd = (r * (1.0 - r)).sqrt() / nf.sqrt();
    Ok(StationaryLaw { normed_mean, normed_sd, raw_mean: nf * normed_mean, raw_sd: nf * normed_sd })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub eigenvalue: f64,
    pub values: Vec<f64>,
}

/// First three eigenpairs of the OU Fokker-Planck operator on `grid`, each
/// function scaled to unit maximum absolute value.
pub fn fokker_planck_eigenfunctions(r: f64, grid: &[f64]) -> Result<[Eigenpair; 3]> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("eigenfunctions need r in (0, 1), got {r}")));
    }
    let var = r * (1.0 - r);
    let f0 = |x: f64| (-0.5 * x * x / var).exp();
    let shapes: [Box<dyn Fn(f64) -> f64>; 3] = [
        Box::new(f0),
        Box::new(move |x| f0(x) * x),
        Box::new(move |x| f0(x) * (r - x * x / (1.0 - r))),
    ];
    let lambda = 1.0 / (1.0 - r);
    let mut k = 0;
    Ok(shapes.map(|f| {
        let mut values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            values.iter_mut().for_each(|v| *v /= scale);
        }
        let eigenvalue = -(k as f64) * lambda;
        k += 1;
        Eigenpair { eigenvalue, values }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuConfig {
    pub r: f64,
    pub x0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Multiplier on the diffusion coefficient `sqrt(2r)`; 0 gives the drift-only path.
    pub noise_scale: f64,
}

/// Euler–Maruyama path of `dX = -X/(1-r) dt + sqrt(2r) dW`, sampled every `dt`.
pub fn ou_simulate<R: Rng + ?Sized>(cfg: &OuConfig, rng: &mut R) -> Result<Vec<f64>> {
    if !(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) {
        return Err(Error::InvalidParameter("OU simulation needs dt > 0 and t_end >= 0".into()));
    }
    if !(0.0..1.0).contains(&cfg.r) {
        return Err(Error::InvalidParameter(format!("OU simulation needs r in [0, 1), got {}", cfg.r)));
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let drift = 1.0 / (1.0 - cfg.r);
    let diff = cfg.noise_scale * (2.0 * cfg.r).sqrt() * cfg.dt.sqrt();
    let mut x = cfg.x0;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(x);
    for _ in 0..steps {
        let z: f64 = if diff == 0.0 { 0.0 } else { rng.sample(StandardNormal) };
        x += -drift * x * cfg.dt + diff * z;
        path.push(x);
    }
    Ok(path)
}

/// Normed degree corresponding to the fluctuation `x` at stationarity.
pub fn fluctuation_to_normed_degree(x: f64, r: f64, n: usize) -> f64 {
    (1.0 - r) + x / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub t: f64,
    pub rho: f64,
    pub degree: f64,
    pub cherry: f64,
    pub triangle: f64,
}

/// Mean-field time series from initial densities `s0` (edge must equal `p.rho0`).
pub fn oracle_series(p: &TheoryParams, s0: &SubgraphDensities, times: &[f64]) -> Result<Vec<OracleRow>> {
    p.validate()?;
    let dens = integrate_densities(s0, p.r, times)?;
    let degrees = degree_ode_solution(times, p)?;
    Ok(times
        .iter()
        .zip(dens)
        .zip(degrees)
        .map(|((&t, s), (_, d))| OracleRow {
            t,
            rho: rho_closed_form(t, p),
            degree: d,
            cherry: s.cherry,
            triangle: s.triangle,
        })
        .collect())
}

pub fn write_oracle_csv<W: Write>(rows: &[OracleRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "rho", "degree", "cherry", "triangle"])?;
    for row in rows {
        out.write_record([
            row.t.to_string(),
            row.rho.to_string(),
            row.degree.to_string(),
            row.cherry.to_string(),
            row.triangle.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
