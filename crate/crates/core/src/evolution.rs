//! The node-level edge-churn model and seeded trajectories/ensembles.
//!
//! One iteration picks an unordered vertex pair uniformly and adds the edge
//! if it is absent; then, with probability `r`, one edge chosen uniformly from
//! the current edge set (possibly the one just added) is removed.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, Graph};
use crate::lift::DegreeDistribution;
use crate::rng::{self, Domain, SimRng};

/// How many model iterations make up one unit of model time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// `n` iterations per unit (used for the coarse-integration experiments).
    Nodes,
    /// `C(n,2)` iterations per unit (the scaling of the mean-field theory).
    Pairs,
}

impl TimeUnit {
    pub fn iterations_per_unit(self, n: usize) -> f64 {
        match self {
            TimeUnit::Nodes => n as f64,
            TimeUnit::Pairs => pair_count(n) as f64,
        }
    }
}

impl std::str::FromStr for TimeUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" | "nodes" => Ok(TimeUnit::Nodes),
            "pairs" => Ok(TimeUnit::Pairs),
            other => Err(Error::InvalidParameter(format!(
                "time unit must be `n` or `pairs`, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub time_unit: TimeUnit,
}

impl ModelParams {
    pub fn new(n: usize, r: f64, seed: u64, time_unit: TimeUnit) -> Result<Self> {
        let p = ModelParams { n, r, seed, time_unit };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidParameter(format!("r must lie in [0, 1], got {}", self.r)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ModelParams { seed, ..self }
    }

    pub fn with_time_unit(self, time_unit: TimeUnit) -> Self {
        ModelParams { time_unit, ..self }
    }

    pub fn iterations_per_unit(&self) -> f64 {
        self.time_unit.iterations_per_unit(self.n)
    }

    /// Iteration count reached at model time `t`.
    pub fn iterations_at(&self, t: f64) -> u64 {
        (t * self.iterations_per_unit()).round().max(0.0) as u64
    }

    /// Convert a duration in this parameter set's time unit to `C(n,2)` units.
    pub fn to_pairs_time(&self, t: f64) -> f64 {
        t * self.iterations_per_unit() / pair_count(self.n) as f64
    }
}

/// One model iteration. Returns the net change of the edge count.
#[inline]
pub fn step<R: Rng + ?Sized>(g: &mut Graph, r: f64, rng: &mut R) -> i32 {
    let n = g.n();
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    let mut delta = g.insert_unchecked(u, v) as i32;
    if rng.random::<f64>() < r && g.remove_random_edge(rng).is_some() {
        delta -= 1;
    }
    delta
}

pub fn run_iterations<R: Rng + ?Sized>(g: &mut Graph, r: f64, iterations: u64, rng: &mut R) {
    for _ in 0..iterations {
        step(g, r, rng);
    }
}

/// Which statistics to record at each observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Observers {
    /// Cherry and triangle counts.
    pub subgraphs: bool,
    /// Degree histogram.
    pub degrees: bool,
}

impl Observers {
    pub fn all() -> Self {
        Observers { subgraphs: true, degrees: true }
    }
    pub fn degrees() -> Self {
        Observers { subgraphs: false, degrees: true }
    }
    pub fn subgraphs() -> Self {
        Observers { subgraphs: true, degrees: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub iteration: u64,
    pub edge_count: usize,
    pub edge_density: f64,
    pub cherry_count: Option<u64>,
    pub triangle_count: Option<u64>,
    /// `degree_histogram[d]` = number of vertices of degree `d`.
    pub degree_histogram: Option<Vec<u32>>,
}

impl Snapshot {
    pub fn observe(g: &Graph, time: f64, iteration: u64, obs: Observers) -> Self {
        let (cherry_count, triangle_count) = if obs.subgraphs {
            let (c, t) = g.cherries_and_triangles();
            (Some(c), Some(t))
        } else {
            (None, None)
        };
        Snapshot {
            time,
            iteration,
            edge_count: g.edge_count(),
            edge_density: g.edge_density().unwrap_or(0.0),
            cherry_count,
            triangle_count,
            degree_histogram: obs.degrees.then(|| degree_histogram(g)),
        }
    }
}

pub fn degree_histogram(g: &Graph) -> Vec<u32> {
    let mut h = vec![0u32; g.n()];
    for &d in g.degrees() {
        h[d as usize] += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn edge_densities(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.edge_density).collect()
    }
}

/// Observation times `0, dt, 2dt, …` up to `t_end` (inclusive within rounding),
/// always ending exactly at `t_end`.
pub fn observation_times(t_end: f64, observe_every: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if t_end == 0.0 {
        return Ok(vec![0.0]);
    }
    if !(observe_every > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "observe_every must be positive, got {observe_every}"
        )));
    }
    let k = (t_end / observe_every + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=k).map(|i| i as f64 * observe_every).collect();
    if t_end - times[k] > 1e-9 * t_end.max(1.0) {
        times.push(t_end);
    } else {
        times[k] = t_end;
    }
    Ok(times)
}

/// Evolve `g` in place through the observation schedule, recording snapshots
/// at times `t_offset + schedule`.
pub fn evolve_observed<R: Rng + ?Sized>(
    g: &mut Graph,
    params: &ModelParams,
    times: &[f64],
    observers: Observers,
    rng: &mut R,
) -> Vec<Snapshot> {
    let mut done = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let target = params.iterations_at(t);
        if target > done {
            run_iterations(g, params.r, target - done, rng);
            done = target;
        }
        out.push(Snapshot::observe(g, t, done, observers));
    }
    out
}

/// Run one copy from `g0`. Deterministic given `rng`'s state.
pub fn run_trajectory<R: Rng + ?Sized>(
    g0: Graph,
    params: &ModelParams,
    t_end: f64,
    observe_every: f64,
    observers: Observers,
    rng: &mut R,
) -> Result<(Trajectory, Graph)> {
    params.validate()?;
    let times = observation_times(t_end, observe_every)?;
    let mut g = g0;
    let snapshots = evolve_observed(&mut g, params, &times, observers, rng);
    Ok((Trajectory { n: g.n(), snapshots }, g))
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub params: ModelParams,
    pub trajectories: Vec<Trajectory>,
    /// Pooled degree distribution at each observation time (present only
    /// when degrees were observed).
    pub pooled: Vec<DegreeDistribution>,
    pub final_graphs: Vec<Graph>,
}

impl Ensemble {
    pub fn times(&self) -> Vec<f64> {
        self.trajectories[0].times()
    }

    /// Ensemble mean edge density per observation time.
    pub fn mean_edge_density(&self) -> Vec<f64> {
        let k = self.trajectories.len() as f64;
        (0..self.trajectories[0].snapshots.len())
            .map(|i| self.trajectories.iter().map(|t| t.snapshots[i].edge_density).sum::<f64>() / k)
            .collect()
    }

    /// Ensemble mean of an optional per-snapshot statistic.
    pub fn mean_of(&self, f: impl Fn(&Snapshot) -> Option<f64>) -> Option<Vec<f64>> {
        let k = self.trajectories.len() as f64;
        (0..self.trajectories[0].snapshots.len())
            .map(|i| {
                self.trajectories
                    .iter()
                    .map(|t| f(&t.snapshots[i]))
                    .sum::<Option<f64>>()
                    .map(|s| s / k)
            })
            .collect()
    }
}

/// Pool per-copy degree histograms observed at the same snapshot index.
pub fn pool_histograms(trajectories: &[Trajectory], index: usize) -> Option<DegreeDistribution> {
    let n = trajectories.first()?.n;
    let mut counts = vec![0u64; n];
    for t in trajectories {
        let h = t.snapshots[index].degree_histogram.as_ref()?;
        for (c, &x) in counts.iter_mut().zip(h) {
            *c += x as u64;
        }
    }
    DegreeDistribution::from_counts(&counts).ok()
}

/// Run `copies` independent trajectories. Copy `i` builds its initial graph
/// from stream `(seed, Initial, i)` and evolves on stream `(seed, Evolve, i)`.
pub fn run_ensemble<F>(
    g0_factory: F,
    params: &ModelParams,
    copies: usize,
    t_end: f64,
    observe_every: f64,
    observers: Observers,
) -> Result<Ensemble>
where
    F: Fn(usize, &mut SimRng) -> Result<Graph> + Sync,
{
    params.validate()?;
    if copies == 0 {
        return Err(Error::InvalidParameter("copies must be at least 1".into()));
    }
    let times = observation_times(t_end, observe_every)?;
    let runs: Vec<(Trajectory, Graph)> = (0..copies)
        .into_par_iter()
        .map(|i| {
            let mut init_rng = rng::stream(params.seed, Domain::Initial, i as u64);
            let mut g = g0_factory(i, &mut init_rng)?;
            if g.n() != params.n {
                return Err(Error::InvalidParameter(format!(
                    "factory produced a graph on {} vertices, expected {}",
                    g.n(),
                    params.n
                )));
            }
            let mut evo = rng::stream(params.seed, Domain::Evolve, i as u64);
            let snapshots = evolve_observed(&mut g, params, &times, observers, &mut evo);
            Ok((Trajectory { n: params.n, snapshots }, g))
        })
        .collect::<Result<_>>()?;
    let (trajectories, final_graphs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let pooled = if observers.degrees {
        (0..times.len()).filter_map(|i| pool_histograms(&trajectories, i)).collect()
    } else {
        Vec::new()
    };
    Ok(Ensemble { params: *params, trajectories, pooled, final_graphs })
}

/// `time,copy,edge_density,cherry_count,triangle_count`; missing counts are empty.
pub fn write_trajectories_csv<W: Write>(trajectories: &[Trajectory], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "copy", "edge_density", "cherry_count", "triangle_count"])?;
    for (copy, t) in trajectories.iter().enumerate() {
        for s in &t.snapshots {
            let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
            out.write_record([
                s.time.to_string(),
                copy.to_string(),
                s.edge_density.to_string(),
                opt(s.cherry_count),
                opt(s.triangle_count),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `time,degree,probability` for every observation time and degree.
pub fn write_pooled_csv<W: Write>(times: &[f64], pooled: &[DegreeDistribution], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "degree", "probability"])?;
    for (t, mu) in times.iter().zip(pooled) {
        for (d, p) in mu.probs().iter().enumerate() {
            out.write_record([t.to_string(), d.to_string(), p.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    /// Empirical frequency of net edge-count changes from a fixed graph.
    fn transition_freqs(g: &Graph, r: f64, trials: usize) -> [f64; 3] {
        let mut rng = rng(11);
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            let mut h = g.clone();
            let d = step(&mut h, r, &mut rng);
            counts[(d + 1) as usize] += 1;
        }
        counts.map(|c| c as f64 / trials as f64)
    }

    #[test]
    fn step_from_empty_graph() {
        let f = transition_freqs(&Graph::empty(10), 0.9, 100_000);
        assert_eq!(f[0], 0.0);
        assert!((f[2] - 0.1).abs() < 0.01, "P(+1) = {}", f[2]);
    }

    #[test]
    fn step_from_complete_graph() {
        let f = transition_freqs(&Graph::complete(10), 0.9, 100_000);
        assert_eq!(f[2], 0.0);
        assert!((f[0] - 0.9).abs() < 0.01, "P(-1) = {}", f[0]);
        assert!((f[1] - 0.1).abs() < 0.01, "P(0) = {}", f[1]);
    }

    #[test]
    fn transitions_match_closed_form_within_three_sigma() {
        // a half-full graph on 12 vertices: rho = 33/66
        let mut g = Graph::empty(12);
        let mut k = 0;
        'fill: for v in 1..12 {
            for u in 0..v {
                if k == 33 {
                    break 'fill;
                }
                g.set_edge(u, v, true).unwrap();
                k += 1;
            }
        }
        let rho = g.edge_density().unwrap();
        let r = 0.3;
        let trials = 200_000;
        let f = transition_freqs(&g, r, trials);
        let expect = [rho * r, 0.0, (1.0 - rho) * (1.0 - r)];
        for i in [0, 2] {
            let sigma = (expect[i] * (1.0 - expect[i]) / trials as f64).sqrt();
            assert!((f[i] - expect[i]).abs() < 3.0 * sigma, "{i}: {} vs {}", f[i], expect[i]);
        }
    }

    #[test]
    fn no_removal_means_monotone_edge_count() {
        let mut g = Graph::empty(20);
        let mut rng = rng(5);
        let mut last = 0;
        for _ in 0..2000 {
            step(&mut g, 0.0, &mut rng);
            assert!(g.edge_count() >= last);
            last = g.edge_count();
        }
    }

    #[test]
    fn zero_horizon_trajectory_has_one_snapshot() {
        let p = ModelParams::new(10, 0.9, 1, TimeUnit::Nodes).unwrap();
        let (t, _) =
            run_trajectory(Graph::empty(10), &p, 0.0, 1.0, Observers::all(), &mut rng(1)).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].iteration, 0);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let p = ModelParams::new(30, 0.9, 1, TimeUnit::Nodes).unwrap();
        let run = || {
            run_trajectory(Graph::empty(30), &p, 5.0, 0.5, Observers::all(), &mut rng(99)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn observation_schedule() {
        assert_eq!(observation_times(1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(observation_times(1.0, 0.3).unwrap().last(), Some(&1.0));
        assert_eq!(observation_times(0.0, 0.0).unwrap(), vec![0.0]);
        assert!(observation_times(-1.0, 0.1).is_err());
        assert!(observation_times(1.0, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 0.5, 0, TimeUnit::Pairs).is_err());
        assert!(ModelParams::new(10, 1.5, 0, TimeUnit::Pairs).is_err());
        assert!(ModelParams::new(10, -0.1, 0, TimeUnit::Pairs).is_err());
        let p = ModelParams::new(100, 0.9, 0, TimeUnit::Nodes).unwrap();
        assert_eq!(p.iterations_at(10.0), 1000);
        assert!((p.to_pairs_time(49.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_single_copy_pools_its_own_histogram() {
        let p = ModelParams::new(20, 0.5, 4, TimeUnit::Nodes).unwrap();
        let e = run_ensemble(|_, _| Ok(Graph::empty(20)), &p, 1, 3.0, 1.0, Observers::degrees())
            .unwrap();
        for (i, mu) in e.pooled.iter().enumerate() {
            let h = e.trajectories[0].snapshots[i].degree_histogram.clone().unwrap();
            let direct = DegreeDistribution::from_counts(
                &h.iter().map(|&x| x as u64).collect::<Vec<_>>(),
            )
            .unwrap();
            assert_eq!(mu, &direct);
            assert!((mu.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transient_mean_density_follows_closed_form() {
        let p = ModelParams::new(100, 0.9, 21, TimeUnit::Pairs).unwrap();
        let e = run_ensemble(|_, _| Ok(Graph::empty(100)), &p, 100, 1.0, 1.0, Observers::default())
            .unwrap();
        let rho = *e.mean_edge_density().last().unwrap();
        let expect = 0.1 * (1.0 - (-1.0f64).exp());
        assert!((rho - expect).abs() < 0.01, "{rho} vs {expect}");
    }

    #[test]
    fn csv_exports_have_headers() {
        let p = ModelParams::new(10, 0.5, 4, TimeUnit::Nodes).unwrap();
        let e = run_ensemble(|_, _| Ok(Graph::empty(10)), &p, 2, 1.0, 1.0, Observers::all()).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&e.trajectories, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("time,copy,edge_density,cherry_count,triangle_count\n"));
        assert_eq!(s.lines().count(), 1 + 2 * 2);
        let mut buf = Vec::new();
        write_pooled_csv(&e.times(), &e.pooled, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 2 * 10);
    }
}
