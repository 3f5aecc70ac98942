//! End-to-end experiments shared by the CLI, the examples and the
//! acceptance suite: convergence-rate fits and PCA of the degree-distribution
//! decay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    estimate_rate, hermite_shape_match, mean_series, observable_trace, pca_decay, Asymptote, Observable, PcaResult,
    RateFitConfig, RateFitResult, ShapeMatch,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_observed, observation_times, run_ensemble, ModelParams, Observers, TimeUnit};
use crate::graph::Graph;
use crate::lift::{havel_hakimi, lift_density, lift_one, DegreeDistribution, DEFAULT_RETRY_BUDGET};
use crate::rng::{self, Domain, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub copies: usize,
    /// Initial degrees for the SND and cherry fits are drawn from a
    /// discretized Normal(init_mean, init_sd).
    pub init_mean: f64,
    pub init_sd: f64,
    /// Edge probability of the ER member of each triangle pair.
    pub er_p: f64,
    /// Observation spacing in `C(n,2)` units.
    pub dt: f64,
    /// End of the run; the window `[stationary_from, t_end]` estimates `q(inf)`.
    pub t_end: f64,
    pub stationary_from: f64,
    pub fit: RateFitConfig,
}

impl Default for RateExperimentConfig {
    fn default() -> Self {
        RateExperimentConfig {
            n: 100,
            r: 0.9,
            seed: 0,
            copies: 1000,
            init_mean: 10.0,
            init_sd: 1.0,
            er_p: 0.1,
            dt: 0.005,
            t_end: 4.0,
            stationary_from: 3.0,
            fit: RateFitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableFit {
    pub name: String,
    pub asymptote: f64,
    pub fit: RateFitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentReport {
    pub config: RateExperimentConfig,
    pub times: Vec<f64>,
    pub snd: Vec<f64>,
    pub cherries: Vec<f64>,
    /// Ensemble mean of `N_T(ER) - N_T(Havel-Hakimi)` over the pairs.
    pub triangle_difference: Vec<f64>,
    pub fits: Vec<ObservableFit>,
}

impl RateExperimentReport {
    pub fn fit(&self, name: &str) -> Option<&RateFitResult> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }
}

fn tail_mean(times: &[f64], values: &[f64], from: f64) -> Result<f64> {
    let tail: Vec<f64> = times.iter().zip(values).filter(|(t, _)| **t >= from).map(|(_, v)| *v).collect();
    if tail.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Fit window: from 0 up to where the stationary window begins.
fn fit_config(cfg: &RateExperimentConfig, asymptote: Asymptote) -> RateFitConfig {
    RateFitConfig {
        asymptote,
        window: cfg.fit.window.or(Some((0.0, cfg.stationary_from))),
        ..cfg.fit
    }
}

pub fn rate_experiment(cfg: &RateExperimentConfig) -> Result<RateExperimentReport> {
    if !(cfg.stationary_from < cfg.t_end) {
        return Err(Error::InvalidParameter("stationary_from must precede t_end".into()));
    }
    let n = cfg.n;
    let params = ModelParams::new(n, cfg.r, cfg.seed, TimeUnit::Pairs)?;

    // (a), (b): Havel-Hakimi graphs from narrow normal degree sequences
    let mu0 = DegreeDistribution::discretized_normal(n, cfg.init_mean, cfg.init_sd)?;
    let cum = mu0.cumulative();
    let ens = run_ensemble(
        |_, rng| lift_one(&mu0, &cum, rng, DEFAULT_RETRY_BUDGET).map(|(g, _)| g),
        &params,
        cfg.copies,
        cfg.t_end,
        cfg.dt,
        Observers::subgraphs(),
    )?;
    let times = ens.times();
    let trace = |obs| -> Result<Vec<f64>> {
        let all: Vec<Vec<f64>> = ens.trajectories.iter().map(|t| observable_trace(t, obs)).collect::<Result<_>>()?;
        mean_series(&all)
    };
    let snd = trace(Observable::Snd)?;
    let cherries = trace(Observable::CherryCount)?;

    // (c): ER graph and the Havel-Hakimi graph with the same degree sequence,
    // evolved on the same random stream
    let pair_seed = rng::derive_seed(cfg.seed, 0xC);
    let schedule = observation_times(cfg.t_end, cfg.dt)?;
    let diffs: Vec<Vec<f64>> = (0..cfg.copies)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut init = rng::stream(pair_seed, Domain::Initial, i as u64);
            let mut a = lift_density(cfg.er_p, n, &mut init)?;
            let mut b = havel_hakimi(&a.degree_sequence())?;
            let sa = evolve_observed(&mut a, &params, &schedule, Observers::subgraphs(), &mut rng::stream(pair_seed, Domain::Evolve, i as u64));
            let sb = evolve_observed(&mut b, &params, &schedule, Observers::subgraphs(), &mut rng::stream(pair_seed, Domain::Evolve, i as u64));
            Ok(sa.iter().zip(&sb).map(|(x, y)| x.triangle_count.unwrap() as f64 - y.triangle_count.unwrap() as f64).collect())
        })
        .collect::<Result<_>>()?;
    let triangle_difference = mean_series(&diffs)?;

    let mut fits = Vec::new();
    for (name, series) in [("snd", &snd), ("cherries", &cherries)] {
        let q_inf = tail_mean(&times, series, cfg.stationary_from)?;
        let fit = estimate_rate(&times, series, &fit_config(cfg, Asymptote::Value(q_inf)))?;
        fits.push(ObservableFit { name: name.into(), asymptote: q_inf, fit });
    }
    let fit = estimate_rate(&times, &triangle_difference, &fit_config(cfg, Asymptote::None))?;
    fits.push(ObservableFit { name: "relative_triangles".into(), asymptote: 0.0, fit });
    Ok(RateExperimentReport { config: *cfg, times, snd, cherries, triangle_difference, fits })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaExperimentConfig {
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub copies: usize,
    /// Initial degrees: discretized Normal(init_mean, init_sd). An offset mean
    /// with the stationary spread excites mostly the mean-shift mode.
    pub init_mean: f64,
    pub init_sd: f64,
    /// Snapshot times in `C(n,2)` units.
    pub dt: f64,
    pub t_end: f64,
    /// Length of the separate stationary run that estimates `mu_inf`.
    pub stationary_time: f64,
    pub stationary_every: f64,
}

impl Default for PcaExperimentConfig {
    fn default() -> Self {
        PcaExperimentConfig {
            n: 100,
            r: 0.9,
            seed: 0,
            copies: 4000,
            init_mean: 12.0,
            init_sd: 3.0,
            dt: 0.02,
            t_end: 0.3,
            stationary_time: 2.0,
            stationary_every: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaExperimentReport {
    pub config: PcaExperimentConfig,
    pub times: Vec<f64>,
    pub mu_inf: Vec<f64>,
    pub pca: PcaResult,
    pub f1_match: ShapeMatch,
    pub f2_match: ShapeMatch,
}

/// Relaxation of the pooled degree distribution from a narrow normal start,
/// decomposed against a separately estimated stationary distribution.
pub fn pca_experiment(cfg: &PcaExperimentConfig) -> Result<PcaExperimentReport> {
    let n = cfg.n;
    let params = ModelParams::new(n, cfg.r, cfg.seed, TimeUnit::Pairs)?;
    let mu0 = DegreeDistribution::discretized_normal(n, cfg.init_mean, cfg.init_sd)?;
    let cum = mu0.cumulative();
    let factory = |_: usize, rng: &mut SimRng| -> Result<Graph> { lift_one(&mu0, &cum, rng, DEFAULT_RETRY_BUDGET).map(|(g, _)| g) };
    let ens = run_ensemble(factory, &params, cfg.copies, cfg.t_end, cfg.dt, Observers::degrees())?;

    // stationary reference from independent copies started at ER(1-r)
    let stat_params = params.with_seed(rng::derive_seed(cfg.seed, 0x57A7));
    let p_inf = 1.0 - cfg.r;
    let stat = run_ensemble(
        |_, rng| lift_density(p_inf, n, rng),
        &stat_params,
        cfg.copies,
        cfg.stationary_time,
        cfg.stationary_every,
        Observers::degrees(),
    )?;
    let stat_times = stat.times();
    let mut counts = vec![0.0; n];
    let mut used = 0;
    for (t, mu) in stat_times.iter().zip(&stat.pooled) {
        if *t >= 0.5 * cfg.stationary_time {
            counts.iter_mut().zip(mu.probs()).for_each(|(c, p)| *c += p);
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let mu_inf = DegreeDistribution::from_weights(counts)?;
    let times = ens.times();
    // skip the initial snapshot: the lifted start is not yet on the slow manifold
    let snaps: Vec<DegreeDistribution> = ens.pooled[1..].to_vec();
    let pca = pca_decay(&snaps, &mu_inf)?;
    let f1_match = hermite_shape_match(&pca.components[0], cfg.r, n, 1)?;
    let f2_match = hermite_shape_match(&pca.components[1], cfg.r, n, 2)?;
    Ok(PcaExperimentReport { config: *cfg, times, mu_inf: mu_inf.into_probs(), pca, f1_match, f2_match })
}
