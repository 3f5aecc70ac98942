//! Command-line front end: flat JSON configuration merged with flags,
//! subcommand dispatch and artifact emission.
//!
//! Every run writes `manifest.json` (command, version, seed, wall time,
//! outputs) and `config.json`, the fully resolved flat configuration, which
//! can be passed back with `--config` to repeat the run.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{write_rate_csv, Asymptote, RateFitConfig};
use crate::cpi::{cpi_run, CoarseVariable, CpiConfig};
use crate::error::{Error, Result};
use crate::evolution::{run_ensemble, write_pooled_csv, write_trajectories_csv, ModelParams, Observers, TimeUnit};
use crate::fixpoint::{newton_gmres, NewtonConfig};
use crate::graph::Graph;
use crate::lift::{lift_density, restrict, DEFAULT_RETRY_BUDGET};
use crate::protocols::{pca_experiment, rate_experiment, PcaExperimentConfig, RateExperimentConfig};
use crate::rng::{self, Domain, SimRng};
use crate::theory::{
    convergence_rates, fokker_planck_eigenfunctions, oracle_series, rho_closed_form, stationary_degree_law,
    write_oracle_csv, SubgraphDensities, TheoryParams,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const LIFT_FAILURE: i32 = 3;
    pub const STAGNATION: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "netcoarse", version, about = "Coarse-grained analysis of an edge-churn random graph model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Direct ensemble simulation with trajectory and degree-histogram export.
    Simulate,
    /// Coarse projective integration of the degree distribution or edge density.
    Cpi,
    /// Newton-GMRES fixed point of the coarse timestepper.
    Fixpoint,
    /// Convergence-rate fits for SND, cherry and relative-triangle deviations.
    Rates,
    /// PCA of the decay of the degree distribution to stationarity.
    Pca,
    /// Closed-form mean-field and fluctuation oracles.
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Cpi => "cpi",
            Command::Fixpoint => "fixpoint",
            Command::Rates => "rates",
            Command::Pca => "pca",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Number of vertices.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Edge removal probability per iteration.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Ensemble size.
    #[arg(long, global = true)]
    pub copies: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// End of the simulated (or covered) time span.
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    /// Time unit: `n` (n iterations) or `pairs` (C(n,2) iterations).
    #[arg(long = "time-unit", global = true, value_parser = ["n", "pairs"])]
    pub time_unit: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "netcoarse-out")]
    pub out: PathBuf,
    /// Flat key/value JSON configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Set any configuration key, e.g. `--set project_steps=5`; overrides the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Flat run configuration. Every key is optional in the file; [`Settings::resolve`]
/// fills the defaults of the selected subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// `n` or `pairs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observe_every: Option<f64>,
    /// Initial graphs: `empty`, `er` (edge probability `p`) or `complete`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retry_budget: Option<usize>,

    // cpi
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate_steps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observe_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub project_steps: Option<f64>,
    /// `degree_distribution` or `edge_density`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_variable: Option<String>,

    // fixpoint
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmres_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmres_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_safety: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_seeds: Option<usize>,

    // rates, pca
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub er_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor_multiple: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_every: Option<f64>,

    // oracle
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
}

fn config_error(path: &Path, detail: impl ToString) -> Error {
    Error::Config { path: path.to_path_buf(), detail: detail.to_string() }
}

/// Read a flat JSON object; nested values are rejected.
pub fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(|e| config_error(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| config_error(path, e))?;
    let Value::Object(map) = value else {
        return Err(config_error(path, "expected a JSON object"));
    };
    if let Some((k, _)) = map.iter().find(|(_, v)| v.is_object() || v.is_array()) {
        return Err(config_error(path, format!("key {k:?}: nested values are not allowed")));
    }
    Ok(map)
}

/// Parse a `KEY=VALUE` override; the value is read as JSON, else as a string.
fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("--set expects KEY=VALUE, got {s:?}")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Merge the config file, `--set` overrides and the common flags, in
/// increasing order of precedence. Unknown keys are rejected.
pub fn parse_settings(args: &CommonArgs) -> Result<Settings> {
    let mut map = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Map::new(),
    };
    for s in &args.set {
        let (k, v) = parse_override(s)?;
        map.insert(k, v);
    }
    let mut put = |k: &str, v: Value| {
        map.insert(k.to_string(), v);
    };
    if let Some(v) = args.n {
        put("n", v.into());
    }
    if let Some(v) = args.r {
        put("r", v.into());
    }
    if let Some(v) = args.copies {
        put("copies", v.into());
    }
    if let Some(v) = args.seed {
        put("seed", v.into());
    }
    if let Some(v) = args.t_end {
        put("t_end", v.into());
    }
    if let Some(v) = &args.time_unit {
        put("time_unit", v.clone().into());
    }
    let source = args.config.clone().unwrap_or_else(|| PathBuf::from("<flags>"));
    serde_json::from_value(Value::Object(map)).map_err(|e| config_error(&source, e))
}

fn unit_name(u: TimeUnit) -> &'static str {
    match u {
        TimeUnit::Nodes => "n",
        TimeUnit::Pairs => "pairs",
    }
}

impl Settings {
    /// Fill the defaults of `cmd` and validate the shared parameters.
    pub fn resolve(&self, cmd: Command) -> Result<Settings> {
        let mut s = self.clone();
        let or = |v: &mut Option<f64>, d: f64| *v = Some(v.unwrap_or(d));
        s.n.get_or_insert(100);
        s.r.get_or_insert(0.9);
        s.seed.get_or_insert(0);
        s.retry_budget.get_or_insert(DEFAULT_RETRY_BUDGET);
        match cmd {
            Command::Simulate => {
                s.copies.get_or_insert(100);
                or(&mut s.t_end, 10.0);
                or(&mut s.observe_every, 0.1);
                s.time_unit.get_or_insert_with(|| "pairs".into());
                s.init.get_or_insert_with(|| "empty".into());
                or(&mut s.p, 0.25);
            }
            Command::Cpi => {
                let d = CpiConfig::default();
                s.copies.get_or_insert(d.copies);
                or(&mut s.t_end, 60.0);
                s.time_unit.get_or_insert_with(|| "n".into());
                s.init.get_or_insert_with(|| "er".into());
                or(&mut s.p, 0.25);
                or(&mut s.simulate_steps, d.simulate_steps);
                or(&mut s.observe_interval, d.observe_interval);
                s.history.get_or_insert(d.history);
                or(&mut s.project_steps, d.project_steps);
                s.coarse_variable.get_or_insert_with(|| "degree_distribution".into());
            }
            Command::Fixpoint => {
                let d = NewtonConfig::default();
                s.copies.get_or_insert(d.copies);
                s.time_unit.get_or_insert_with(|| "n".into());
                s.init.get_or_insert_with(|| "er".into());
                or(&mut s.p, 0.25);
                or(&mut s.horizon, d.timestepper_horizon);
                if let Some(e) = d.fd_epsilon {
                    or(&mut s.fd_epsilon, e);
                }
                s.gmres_dim.get_or_insert(d.gmres_dim);
                or(&mut s.gmres_tol, d.gmres_tol);
                or(&mut s.newton_tol, d.newton_tol);
                s.max_iters.get_or_insert(d.max_newton_iters);
                or(&mut s.damping_safety, d.damping_safety);
                or(&mut s.clip_threshold, d.clip_threshold);
                s.noise_seeds.get_or_insert(d.noise_seeds);
            }
            Command::Rates => {
                let d = RateExperimentConfig::default();
                s.copies.get_or_insert(d.copies);
                or(&mut s.t_end, d.t_end);
                or(&mut s.observe_every, d.dt);
                or(&mut s.init_mean, d.init_mean);
                or(&mut s.init_sd, d.init_sd);
                or(&mut s.er_p, d.er_p);
                or(&mut s.stationary_from, d.stationary_from);
                or(&mut s.floor_multiple, d.fit.floor_multiple);
            }
            Command::Pca => {
                let d = PcaExperimentConfig::default();
                s.copies.get_or_insert(d.copies);
                or(&mut s.t_end, d.t_end);
                or(&mut s.observe_every, d.dt);
                or(&mut s.init_mean, d.init_mean);
                or(&mut s.init_sd, d.init_sd);
                or(&mut s.stationary_time, d.stationary_time);
                or(&mut s.stationary_every, d.stationary_every);
            }
            Command::Oracle => {
                or(&mut s.t_end, 10.0);
                or(&mut s.observe_every, 0.05);
                // the cherry and triangle equations are singular at rho = 0
                or(&mut s.rho0, 0.25);
                let rho0 = s.rho0.unwrap_or(0.25);
                or(&mut s.d0, rho0);
            }
        }
        // the protocols and the theory are defined on the C(n,2) clock
        if matches!(cmd, Command::Rates | Command::Pca | Command::Oracle) {
            if let Some(u) = &s.time_unit {
                if u.parse::<TimeUnit>()? != TimeUnit::Pairs {
                    return Err(Error::InvalidParameter(format!("{} runs in the `pairs` time unit", cmd.name())));
                }
            }
            s.time_unit = Some("pairs".into());
        }
        let unit: TimeUnit = s.time_unit.as_deref().unwrap_or("pairs").parse()?;
        s.time_unit = Some(unit_name(unit).into());
        ModelParams::new(s.n.unwrap_or(0), s.r.unwrap_or(f64::NAN), 0, unit)?;
        if let Some(t) = s.t_end {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("t_end must be finite and >= 0, got {t}")));
            }
        }
        if s.copies == Some(0) {
            return Err(Error::InvalidParameter("copies must be at least 1".into()));
        }
        Ok(s)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let unit: TimeUnit = self.time_unit.as_deref().unwrap_or("pairs").parse()?;
        ModelParams::new(self.n.unwrap_or(100), self.r.unwrap_or(0.9), self.seed.unwrap_or(0), unit)
    }
}

fn get<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("missing setting {key:?}")))
}

/// Graph factory for the `init` / `p` settings.
fn initial_graphs(s: &Settings) -> Result<impl Fn(usize, &mut SimRng) -> Result<Graph> + Sync> {
    let n = get(s.n, "n")?;
    let p = get(s.p, "p")?;
    let kind = s.init.clone().unwrap_or_else(|| "empty".into());
    match kind.as_str() {
        "empty" | "complete" => {}
        "er" => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!("init must be `empty`, `er` or `complete`, got {other:?}")))
        }
    }
    Ok(move |_: usize, rng: &mut SimRng| match kind.as_str() {
        "empty" => Ok(Graph::empty(n)),
        "complete" => Ok(Graph::complete(n)),
        _ => lift_density(p, n, rng),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// The Newton iteration used its budget without reaching the noise floor.
    NotConverged,
    Stagnated,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    status: Outcome,
    wall_time_seconds: f64,
    config: &'a Settings,
    outputs: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }
}

/// Run one subcommand with resolved settings, writing artifacts into `out`.
pub fn execute(cmd: Command, settings: &Settings, out: &Path) -> Result<Outcome> {
    let clock = Instant::now();
    fs::create_dir_all(out)?;
    let mut art = Artifacts { dir: out.to_path_buf(), files: Vec::new() };
    {
        let mut w = art.create("config.json")?;
        serde_json::to_writer_pretty(&mut w, settings)?;
    }
    let outcome = match cmd {
        Command::Simulate => run_simulate(settings, &mut art)?,
        Command::Cpi => run_cpi(settings, &mut art)?,
        Command::Fixpoint => run_fixpoint(settings, &mut art)?,
        Command::Rates => run_rates(settings, &mut art)?,
        Command::Pca => run_pca(settings, &mut art)?,
        Command::Oracle => run_oracle(settings, &mut art)?,
    };
    let manifest = Manifest {
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: settings.seed.unwrap_or(0),
        status: outcome,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        config: settings,
        outputs: art.files.clone(),
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("manifest.json"))?), &manifest)?;
    Ok(outcome)
}

fn run_simulate(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let factory = initial_graphs(s)?;
    let ens = run_ensemble(factory, &params, get(s.copies, "copies")?, get(s.t_end, "t_end")?, get(s.observe_every, "observe_every")?, Observers::all())?;
    write_trajectories_csv(&ens.trajectories, art.create("trajectories.csv")?)?;
    let times = ens.times();
    write_pooled_csv(&times, &ens.pooled, art.create("pooled.csv")?)?;
    let mean = ens.mean_edge_density();
    let rho0 = mean.first().copied().unwrap_or(0.0);
    let theory = TheoryParams { r: params.r, rho0, ..Default::default() };
    let mut w = csv::Writer::from_writer(art.create("mean.csv")?);
    w.write_record(["time", "mean_edge_density", "closed_form"])?;
    for (t, m) in times.iter().zip(&mean) {
        let rho = rho_closed_form(params.to_pairs_time(*t), &theory);
        w.write_record([t.to_string(), m.to_string(), rho.to_string()])?;
    }
    w.flush()?;
    Ok(Outcome::Completed)
}

fn run_cpi(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let cfg = CpiConfig {
        simulate_steps: get(s.simulate_steps, "simulate_steps")?,
        observe_interval: get(s.observe_interval, "observe_interval")?,
        history: get(s.history, "history")?,
        project_steps: get(s.project_steps, "project_steps")?,
        copies: get(s.copies, "copies")?,
        coarse_variable: s.coarse_variable.as_deref().unwrap_or("degree_distribution").parse::<CoarseVariable>()?,
        retry_budget: get(s.retry_budget, "retry_budget")?,
    };
    cfg.validate()?;
    let cycle = cfg.simulate_steps + cfg.project_steps;
    let cycles = (get(s.t_end, "t_end")? / cycle - 1e-9).ceil().max(0.0) as usize;
    let report = cpi_run(initial_graphs(s)?, &params, &cfg, cycles)?;
    report.write_json(art.create("cpi.json")?)?;
    report.write_trace_csv(art.create("trace.csv")?)?;
    if cfg.coarse_variable == CoarseVariable::DegreeDistribution {
        report.write_curves_csv(art.create("curves.csv")?)?;
    }
    Ok(Outcome::Completed)
}

fn run_fixpoint(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let copies = get(s.copies, "copies")?;
    let cfg = NewtonConfig {
        timestepper_horizon: get(s.horizon, "horizon")?,
        fd_epsilon: s.fd_epsilon,
        gmres_dim: get(s.gmres_dim, "gmres_dim")?,
        gmres_tol: get(s.gmres_tol, "gmres_tol")?,
        newton_tol: get(s.newton_tol, "newton_tol")?,
        max_newton_iters: get(s.max_iters, "max_iters")?,
        damping_safety: get(s.damping_safety, "damping_safety")?,
        copies,
        common_seed: params.seed,
        noise_seeds: get(s.noise_seeds, "noise_seeds")?,
        floor_factor: NewtonConfig::default().floor_factor,
        clip_threshold: get(s.clip_threshold, "clip_threshold")?,
        retry_budget: get(s.retry_budget, "retry_budget")?,
    };
    cfg.validate()?;
    let factory = initial_graphs(s)?;
    let graphs: Vec<Graph> = (0..copies)
        .map(|i| factory(i, &mut rng::stream(params.seed, Domain::Initial, i as u64)))
        .collect::<Result<_>>()?;
    let mu0 = restrict(&graphs)?;
    let report = newton_gmres(&mu0, &params, &cfg)?;
    report.write_json(art.create("solver.json")?)?;
    report.write_residual_csv(art.create("residuals.csv")?)?;
    let mut w = csv::Writer::from_writer(art.create("mu.csv")?);
    w.write_record(["degree", "initial", "final"])?;
    for (d, (a, b)) in mu0.probs().iter().zip(&report.mu).enumerate() {
        w.write_record([d.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(if report.stagnated {
        Outcome::Stagnated
    } else if report.converged {
        Outcome::Completed
    } else {
        Outcome::NotConverged
    })
}

fn run_rates(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let cfg = RateExperimentConfig {
        n: params.n,
        r: params.r,
        seed: params.seed,
        copies: get(s.copies, "copies")?,
        init_mean: get(s.init_mean, "init_mean")?,
        init_sd: get(s.init_sd, "init_sd")?,
        er_p: get(s.er_p, "er_p")?,
        dt: get(s.observe_every, "observe_every")?,
        t_end: get(s.t_end, "t_end")?,
        stationary_from: get(s.stationary_from, "stationary_from")?,
        fit: RateFitConfig { floor_multiple: get(s.floor_multiple, "floor_multiple")?, ..Default::default() },
    };
    let report = rate_experiment(&cfg)?;
    serde_json::to_writer_pretty(art.create("rates.json")?, &report)?;
    let mut w = csv::Writer::from_writer(art.create("series.csv")?);
    w.write_record(["t", "snd", "cherries", "triangle_difference"])?;
    for (i, t) in report.times.iter().enumerate() {
        w.write_record([
            t.to_string(),
            report.snd[i].to_string(),
            report.cherries[i].to_string(),
            report.triangle_difference[i].to_string(),
        ])?;
    }
    w.flush()?;
    for f in &report.fits {
        let (series, asymptote) = match f.name.as_str() {
            "snd" => (&report.snd, Asymptote::Value(f.asymptote)),
            "cherries" => (&report.cherries, Asymptote::Value(f.asymptote)),
            _ => (&report.triangle_difference, Asymptote::None),
        };
        write_rate_csv(&report.times, series, &f.fit, asymptote, art.create(&format!("rate_{}.csv", f.name))?)?;
    }
    Ok(Outcome::Completed)
}

fn run_pca(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let cfg = PcaExperimentConfig {
        n: params.n,
        r: params.r,
        seed: params.seed,
        copies: get(s.copies, "copies")?,
        init_mean: get(s.init_mean, "init_mean")?,
        init_sd: get(s.init_sd, "init_sd")?,
        dt: get(s.observe_every, "observe_every")?,
        t_end: get(s.t_end, "t_end")?,
        stationary_time: get(s.stationary_time, "stationary_time")?,
        stationary_every: get(s.stationary_every, "stationary_every")?,
    };
    let report = pca_experiment(&cfg)?;
    serde_json::to_writer_pretty(art.create("pca.json")?, &report)?;
    let mut w = csv::Writer::from_writer(art.create("components.csv")?);
    w.write_record(["degree", "mu_inf", "component_1", "component_2"])?;
    for d in 0..params.n {
        w.write_record([
            d.to_string(),
            report.mu_inf[d].to_string(),
            report.pca.components[0][d].to_string(),
            report.pca.components.get(1).map(|c| c[d].to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(art.create("singular_values.csv")?);
    w.write_record(["index", "singular_value"])?;
    for (i, v) in report.pca.singular_values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(Outcome::Completed)
}

#[derive(Serialize)]
struct OracleSummary {
    theory: TheoryParams,
    rates: crate::theory::ConvergenceRates,
    stationary: crate::theory::StationaryLaw,
    eigenvalues: [f64; 3],
}

fn run_oracle(s: &Settings, art: &mut Artifacts) -> Result<Outcome> {
    let params = s.params()?;
    let rho0 = get(s.rho0, "rho0")?;
    let p = TheoryParams::new(params.r, rho0, get(s.d0, "d0")?)?;
    let times = crate::evolution::observation_times(get(s.t_end, "t_end")?, get(s.observe_every, "observe_every")?)?;
    // an Erdos-Renyi-like start: constant graphon at rho0
    let s0 = SubgraphDensities { edge: rho0, cherry: rho0 * rho0, triangle: rho0 * rho0 * rho0 };
    write_oracle_csv(&oracle_series(&p, &s0, &times)?, art.create("oracle.csv")?)?;

    // eigenfunctions over the degree axis, x = sqrt(n) (d/n - (1-r))
    let n = params.n;
    let grid: Vec<f64> = (0..n).map(|d| (n as f64).sqrt() * (d as f64 / n as f64 - (1.0 - params.r))).collect();
    let eig = fokker_planck_eigenfunctions(params.r, &grid)?;
    let mut w = csv::Writer::from_writer(art.create("eigenfunctions.csv")?);
    w.write_record(["degree", "x", "f0", "f1", "f2"])?;
    for (d, x) in grid.iter().enumerate() {
        w.write_record([
            d.to_string(),
            x.to_string(),
            eig[0].values[d].to_string(),
            eig[1].values[d].to_string(),
            eig[2].values[d].to_string(),
        ])?;
    }
    w.flush()?;
    let summary = OracleSummary {
        theory: p,
        rates: convergence_rates(params.r)?,
        stationary: stationary_degree_law(params.r, n)?,
        eigenvalues: [eig[0].eigenvalue, eig[1].eigenvalue, eig[2].eigenvalue],
    };
    serde_json::to_writer_pretty(art.create("summary.json")?, &summary)?;
    Ok(Outcome::Completed)
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_lift_failure() {
        return exit::LIFT_FAILURE;
    }
    match e {
        Error::Config { .. } | Error::InvalidParameter(_) | Error::Parse { .. } => exit::CONFIG,
        _ => exit::OTHER,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = parse_settings(&cli.common)
        .and_then(|s| s.resolve(cli.command))
        .and_then(|s| execute(cli.command, &s, &cli.common.out));
    match result {
        Ok(Outcome::Completed) => exit::OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("netcoarse: Newton iteration limit reached before the noise floor; see solver.json");
            exit::OK
        }
        Ok(Outcome::Stagnated) => {
            eprintln!("netcoarse: Newton iteration stagnated above the noise floor; see solver.json");
            exit::STAGNATION
        }
        Err(e) => {
            eprintln!("netcoarse: {e}");
            exit_code(&e)
        }
    }
}
