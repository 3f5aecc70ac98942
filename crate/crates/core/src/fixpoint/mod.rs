//! Coarse fixed points of `Phi_T = restrict ∘ evolve_T ∘ lift`.
//!
//! The residual is `F(mu) = mu - Phi_T(mu)`. Newton steps solve
//! `J dmu = -F` with matrix-free GMRES, where `J v` is a finite difference of
//! `F` along `v`. Within one Newton iteration every evaluation of `Phi` uses
//! the same seed, so the differences see common random numbers.

mod gmres;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gmres::{gmres_solve, project_zero_sum, GmresResult};

use crate::error::{Error, Result};
use crate::evolution::{run_iterations, ModelParams};
use crate::lift::{lift_distribution, restrict, DegreeDistribution, DEFAULT_RETRY_BUDGET};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub timestepper_horizon: f64,
    /// Finite-difference step. `None` uses `sqrt(machine eps) * (1 + ||mu||_1)`,
    /// which only suits deterministic maps; the default 0.05 sits well above
    /// the sampling resolution of the stochastic timestepper.
    pub fd_epsilon: Option<f64>,
    pub gmres_dim: usize,
    pub gmres_tol: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub damping_safety: f64,
    pub copies: usize,
    pub common_seed: u64,
    /// Number of seeds used to estimate the noise floor.
    pub noise_seeds: usize,
    /// Converged once `||F||_1 <= max(newton_tol, floor_factor * noise_floor)`.
    pub floor_factor: f64,
    /// Entries of `mu` at or below this are allowed to be clipped to zero
    /// instead of limiting the damping factor.
    pub clip_threshold: f64,
    pub retry_budget: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            timestepper_horizon: 10.0,
            fd_epsilon: Some(0.05),
            gmres_dim: 10,
            gmres_tol: 1e-2,
            newton_tol: 1e-10,
            max_newton_iters: 10,
            damping_safety: 0.9,
            copies: 100,
            common_seed: 0,
            noise_seeds: 5,
            floor_factor: 1.25,
            clip_threshold: 1e-2,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("timestepper_horizon", self.timestepper_horizon),
            ("gmres_tol", self.gmres_tol),
            ("newton_tol", self.newton_tol),
            ("damping_safety", self.damping_safety),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.damping_safety > 1.0 {
            return Err(Error::InvalidParameter(format!("damping_safety must be in (0, 1], got {}", self.damping_safety)));
        }
        if let Some(e) = self.fd_epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("fd_epsilon must be positive, got {e}")));
            }
        }
        if self.gmres_dim == 0 || self.copies == 0 || self.noise_seeds < 2 || self.max_newton_iters == 0 {
            return Err(Error::InvalidParameter(
                "gmres_dim, copies and max_newton_iters must be >= 1 and noise_seeds >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, mu: &[f64]) -> f64 {
        self.fd_epsilon
            .unwrap_or_else(|| f64::EPSILON.sqrt() * (1.0 + mu.iter().map(|x| x.abs()).sum::<f64>()))
    }
}

/// Lift `mu` to `copies` graphs, evolve them for `horizon` time units and
/// restrict. Copy `i` lifts on `(seed, Lift, i)` and evolves on `(seed, Evolve, i)`.
pub fn coarse_timestepper(
    mu: &DegreeDistribution,
    horizon: f64,
    params: &ModelParams,
    copies: usize,
    seed: u64,
    retry_budget: usize,
) -> Result<DegreeDistribution> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
    }
    if mu.n() != params.n {
        return Err(Error::LengthMismatch(params.n, mu.n()));
    }
    let mut graphs = lift_distribution(mu, copies, seed, retry_budget)?.graphs;
    let iterations = params.iterations_at(horizon);
    graphs.par_iter_mut().enumerate().for_each(|(i, g)| {
        run_iterations(g, params.r, iterations, &mut rng::stream(seed, Domain::Evolve, i as u64));
    });
    restrict(&graphs)
}

/// Clip negative entries and renormalize; used when a finite-difference
/// probe leaves the simplex.
pub fn to_admissible(x: &[f64]) -> Result<DegreeDistribution> {
    DegreeDistribution::from_weights_clipped(x)
}

/// `x - Phi(P(x))`, where `P` is [`to_admissible`]. The first term keeps the
/// unprojected `x` so the identity part of the Jacobian is exact.
pub fn residual(x: &[f64], params: &ModelParams, cfg: &NewtonConfig, seed: u64) -> Result<Vec<f64>> {
    let mu = to_admissible(x)?;
    let phi = coarse_timestepper(&mu, cfg.timestepper_horizon, params, cfg.copies, seed, cfg.retry_budget)?;
    Ok(x.iter().zip(phi.probs()).map(|(a, b)| a - b).collect())
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Probe steps are halved up to this many times while `mu + eps v` has
/// negative entries; past that the residual's own clipping takes over.
const MAX_SHRINK: usize = 3;

/// `(F(mu + eps v/|v|) - F(mu)) / eps * |v|` with `f_mu = F(mu)` precomputed.
pub fn jacobian_vector_product<F>(residual: F, mu: &[f64], f_mu: &[f64], v: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if mu.len() != v.len() || mu.len() != f_mu.len() {
        return Err(Error::LengthMismatch(mu.len(), v.len()));
    }
    let norm = l2(v);
    if norm == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {eps}")));
    }
    let mut e = eps;
    let probe = |e: f64| -> Vec<f64> { mu.iter().zip(v).map(|(m, d)| m + e * d / norm).collect() };
    let mut x = probe(e);
    for _ in 0..MAX_SHRINK {
        if x.iter().all(|&c| c >= 0.0) {
            break;
        }
        e *= 0.5;
        x = probe(e);
    }
    if x.iter().any(|&c| c < 0.0) {
        log::debug!("directional probe leaves the simplex at eps = {e}; clipping");
    }
    let f_x = residual(&x)?;
    Ok(f_x.iter().zip(f_mu).map(|(a, b)| (a - b) / e * norm).collect())
}

/// Mean `||F_j - mean(F)||_1` over `seeds.len()` evaluations, scaled to
/// estimate the noise of a single evaluation.
pub fn noise_floor<F>(residual: F, mu: &[f64], seeds: &[u64]) -> Result<f64>
where
    F: Fn(&[f64], u64) -> Result<Vec<f64>> + Sync,
{
    let k = seeds.len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, have: k });
    }
    let evals: Vec<Vec<f64>> = seeds.iter().map(|&s| residual(mu, s)).collect::<Result<_>>()?;
    let mut mean = vec![0.0; mu.len()];
    for e in &evals {
        mean.iter_mut().zip(e).for_each(|(m, x)| *m += x / k as f64);
    }
    let spread = evals.iter().map(|e| e.iter().zip(&mean).map(|(a, b)| (a - b).abs()).sum::<f64>()).sum::<f64>()
        / k as f64;
    Ok(spread * (k as f64 / (k as f64 - 1.0)).sqrt())
}

/// Largest `c` with `mu + c dmu >= 0` over entries above `threshold`.
pub fn max_feasible_step(mu: &[f64], dmu: &[f64], threshold: f64) -> f64 {
    mu.iter()
        .zip(dmu)
        .filter(|(m, d)| **d < 0.0 && **m > threshold)
        .map(|(m, d)| m / -d)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `||F(mu_k)||_1` for `k = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    pub damping: Vec<f64>,
    pub gmres_residuals: Vec<f64>,
    pub gmres_iterations: Vec<usize>,
    pub noise_floor: f64,
    pub converged: bool,
    pub stagnated: bool,
    pub mu: Vec<f64>,
}

impl NewtonReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// `iteration,residual_l1,damping,gmres_residual,gmres_iterations`; the
    /// step columns are empty on the last row.
    pub fn write_residual_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "residual_l1", "damping", "gmres_residual", "gmres_iterations"])?;
        for (k, r) in self.residual_norms.iter().enumerate() {
            let opt = |v: Option<String>| v.unwrap_or_default();
            out.write_record([
                k.to_string(),
                r.to_string(),
                opt(self.damping.get(k).map(|x| x.to_string())),
                opt(self.gmres_residuals.get(k).map(|x| x.to_string())),
                opt(self.gmres_iterations.get(k).map(|x| x.to_string())),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `||F_0|| / ||F_final||`.
    pub fn reduction(&self) -> f64 {
        self.residual_norms[0] / self.residual_norms.last().copied().unwrap_or(f64::NAN)
    }
}

/// Damped Newton-GMRES on an arbitrary seeded residual. Iteration `k`
/// evaluates everything with seed `derive_seed(cfg.common_seed, k)`.
pub fn newton_gmres_with<F>(residual: F, mu0: &[f64], cfg: &NewtonConfig, noise_floor: f64) -> Result<NewtonReport>
where
    F: Fn(&[f64], u64) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    let target = cfg.newton_tol.max(cfg.floor_factor * noise_floor);
    let mut mu = mu0.to_vec();
    let mut report = NewtonReport {
        iterations: 0,
        residual_norms: Vec::new(),
        damping: Vec::new(),
        gmres_residuals: Vec::new(),
        gmres_iterations: Vec::new(),
        noise_floor,
        converged: false,
        stagnated: false,
        mu: Vec::new(),
    };
    for k in 0..=cfg.max_newton_iters {
        let seed = rng::derive_seed(cfg.common_seed, k as u64);
        let f = residual(&mu, seed)?;
        let norm = l1(&f);
        report.residual_norms.push(norm);
        log::info!("newton iteration {k}: ||F||_1 = {norm:.6}");
        if norm <= target {
            report.converged = true;
            break;
        }
        if stagnating(&report.residual_norms, noise_floor) {
            report.stagnated = true;
            break;
        }
        if k == cfg.max_newton_iters {
            break;
        }
        let eps = cfg.epsilon_for(&mu);
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let sol = gmres_solve(
            |v| jacobian_vector_product(|x| residual(x, seed), &mu, &f, v, eps),
            &rhs,
            cfg.gmres_dim,
            cfg.gmres_tol,
        )?;
        let dmu = sol.x;
        let c = (cfg.damping_safety * max_feasible_step(&mu, &dmu, cfg.clip_threshold)).min(1.0);
        let stepped: Vec<f64> = mu.iter().zip(&dmu).map(|(m, d)| (m + c * d).max(0.0)).collect();
        mu = DegreeDistribution::from_weights(stepped)?.into_probs();
        report.damping.push(c);
        report.gmres_residuals.push(sol.relative_residual);
        report.gmres_iterations.push(sol.iterations);
        report.iterations = k + 1;
    }
    report.mu = mu;
    Ok(report)
}

/// No decrease beyond the noise floor over the last three iterations.
fn stagnating(norms: &[f64], floor: f64) -> bool {
    let k = norms.len();
    if k < 4 {
        return false;
    }
    let before = norms[..k - 3].iter().copied().fold(f64::INFINITY, f64::min);
    let recent = norms[k - 3..].iter().copied().fold(f64::INFINITY, f64::min);
    recent >= before - floor
}

/// Newton-GMRES on the stochastic coarse timestepper. The noise floor is
/// measured at `mu0` with `noise_seeds` seeds from the `Noise` domain.
pub fn newton_gmres(mu0: &DegreeDistribution, params: &ModelParams, cfg: &NewtonConfig) -> Result<NewtonReport> {
    params.validate()?;
    cfg.validate()?;
    if mu0.n() != params.n {
        return Err(Error::LengthMismatch(params.n, mu0.n()));
    }
    let f = |x: &[f64], seed: u64| residual(x, params, cfg, seed);
    let floor = noise_floor(f, mu0.probs(), &noise_seeds(cfg))?;
    log::info!("noise floor {floor:.6}");
    newton_gmres_with(f, mu0.probs(), cfg, floor)
}

pub fn noise_seeds(cfg: &NewtonConfig) -> Vec<u64> {
    let base = rng::derive_seed(cfg.common_seed, Domain::Noise as u64);
    (0..cfg.noise_seeds as u64).map(|j| rng::derive_seed(base, j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::TimeUnit;
    use crate::rng::SimRng;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn linear_stub<'a>(a: &'a DMatrix<f64>, center: &[f64]) -> impl Fn(&[f64], u64) -> Result<Vec<f64>> + Sync + 'a {
        let c = DVector::from_column_slice(center);
        move |x: &[f64], _| Ok((a * (DVector::from_column_slice(x) - &c)).as_slice().to_vec())
    }

    fn stub_matrix(seed: u64, m: usize) -> DMatrix<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut b = DMatrix::from_fn(m, m, |_, _| 0.4 * (rng.random::<f64>() - 0.5));
        for j in 0..m {
            let s = b.column(j).sum() / m as f64;
            b.column_mut(j).add_scalar_mut(-s);
        }
        DMatrix::identity(m, m) + b
    }

    fn interior(m: usize, tilt: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..m).map(|i| 1.0 + tilt * (i as f64 / m as f64 - 0.5)).collect();
        DegreeDistribution::from_weights(w).unwrap().into_probs()
    }

    #[test]
    fn jvp_on_linear_stub() {
        let m = 12;
        let a = stub_matrix(3, m);
        let center = interior(m, 0.0);
        let f = linear_stub(&a, &center);
        let mu = interior(m, 0.5);
        let f_mu = f(&mu, 0).unwrap();
        let mut v: Vec<f64> = (0..m).map(|i| (i as f64 * 0.7).sin()).collect();
        project_zero_sum(&mut v);
        let jv = jacobian_vector_product(|x| f(x, 0), &mu, &f_mu, &v, 1e-3).unwrap();
        let exact = &a * DVector::from_column_slice(&v);
        for (x, y) in jv.iter().zip(exact.iter()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(jv.iter().sum::<f64>().abs() < 1e-10);
        let zero = jacobian_vector_product(|x| f(x, 0), &mu, &f_mu, &vec![0.0; m], 1e-3).unwrap();
        assert_eq!(zero, vec![0.0; m]);
    }

    #[test]
    fn jvp_finite_difference_error_is_first_order() {
        // smooth quadratic stub: error of the forward difference halves with eps
        let m = 6;
        let mu = interior(m, 0.3);
        let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(x.iter().map(|v| v * v).collect()) };
        let f_mu = f(&mu).unwrap();
        let mut v: Vec<f64> = (0..m).map(|i| (i as f64).cos()).collect();
        project_zero_sum(&mut v);
        let exact: Vec<f64> = mu.iter().zip(&v).map(|(a, b)| 2.0 * a * b).collect();
        let err = |eps: f64| {
            let jv = jacobian_vector_product(f, &mu, &f_mu, &v, eps).unwrap();
            jv.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>()
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!((e1 / e2 - 2.0).abs() < 0.01, "{e1} {e2}");
    }

    #[test]
    fn newton_converges_in_one_step_on_linear_stub() {
        let m = 15;
        let a = stub_matrix(11, m);
        let center = interior(m, 0.2);
        let cfg = NewtonConfig { gmres_dim: m, gmres_tol: 1e-14, newton_tol: 1e-12, fd_epsilon: Some(1e-2), ..Default::default() };
        let rep = newton_gmres_with(linear_stub(&a, &center), &interior(m, -0.3), &cfg, 0.0).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(*rep.residual_norms.last().unwrap() < 1e-12);
        for (x, y) in rep.mu.iter().zip(&center) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_keeps_iterates_on_the_simplex() {
        let m = 10;
        let a = stub_matrix(5, m);
        // target outside the simplex: Newton must stay non-negative
        let mut center = interior(m, 0.0);
        center[0] = -0.05;
        center[1] += 0.05;
        let cfg = NewtonConfig { gmres_dim: m, max_newton_iters: 6, clip_threshold: 0.0, fd_epsilon: Some(1e-3), ..Default::default() };
        let rep = newton_gmres_with(linear_stub(&a, &center), &interior(m, 0.0), &cfg, 0.0).unwrap();
        assert!(rep.mu.iter().all(|&x| x >= 0.0));
        assert!((rep.mu.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(rep.damping.iter().all(|&c| c > 0.0 && c <= 1.0));
    }

    #[test]
    fn max_step_examples() {
        assert_eq!(max_feasible_step(&[0.5, 0.5], &[0.25, -0.25], 0.0), 2.0);
        assert_eq!(max_feasible_step(&[0.5, 0.5], &[0.0, 0.0], 0.0), f64::INFINITY);
        assert_eq!(max_feasible_step(&[0.0005, 0.9995], &[-0.01, 0.01], 1e-3), f64::INFINITY);
    }

    #[test]
    fn stagnation_detection() {
        assert!(!stagnating(&[1.0, 0.5, 0.2], 0.0));
        assert!(stagnating(&[1.0, 0.5, 0.6, 0.55, 0.7], 0.01));
        assert!(!stagnating(&[1.0, 0.5, 0.3, 0.2, 0.1], 0.01));
    }

    fn small_params() -> ModelParams {
        ModelParams::new(30, 0.9, 0, TimeUnit::Nodes).unwrap()
    }

    #[test]
    fn timestepper_is_deterministic_and_valid() {
        let params = small_params();
        let mu = DegreeDistribution::binomial(30, 0.25).unwrap();
        let a = coarse_timestepper(&mu, 5.0, &params, 20, 9, 1000).unwrap();
        let b = coarse_timestepper(&mu, 5.0, &params, 20, 9, 1000).unwrap();
        assert_eq!(a, b);
        assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let zero = DegreeDistribution::point_mass(30, 0).unwrap();
        assert_eq!(coarse_timestepper(&zero, 0.0, &params, 5, 1, 10).unwrap(), zero);
    }

    #[test]
    fn residual_properties() {
        let params = small_params();
        let cfg = NewtonConfig { copies: 20, ..Default::default() };
        let zero = DegreeDistribution::point_mass(30, 0).unwrap();
        let f = residual(zero.probs(), &params, &cfg, 4).unwrap();
        assert!(f.iter().sum::<f64>().abs() < 1e-12);
        assert!(l1(&f) > 0.5, "{}", l1(&f));
        // common random numbers: repeated JVPs agree bit for bit
        let mu = DegreeDistribution::binomial(30, 0.2).unwrap();
        let fm = residual(mu.probs(), &params, &cfg, 4).unwrap();
        let mut v: Vec<f64> = (0..30).map(|i| ((i as f64) * 0.3).sin()).collect();
        project_zero_sum(&mut v);
        let g = |x: &[f64]| residual(x, &params, &cfg, 4);
        let j1 = jacobian_vector_product(g, mu.probs(), &fm, &v, 0.05).unwrap();
        let j2 = jacobian_vector_product(g, mu.probs(), &fm, &v, 0.05).unwrap();
        assert_eq!(j1, j2);
        assert!(j1.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn report_csv() {
        let rep = NewtonReport {
            iterations: 1,
            residual_norms: vec![1.0, 0.01],
            damping: vec![1.0],
            gmres_residuals: vec![1e-3],
            gmres_iterations: vec![4],
            noise_floor: 0.0,
            converged: true,
            stagnated: false,
            mu: vec![1.0],
        };
        let mut buf = Vec::new();
        rep.write_residual_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "iteration,residual_l1,damping,gmres_residual,gmres_iterations\n0,1,1,0.001,4\n1,0.01,,,\n");
        assert_eq!(rep.reduction(), 100.0);
    }
}
