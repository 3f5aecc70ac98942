//! Coarse projective integration.
//!
//! Each cycle runs a short burst of the fine model on an ensemble, restricts
//! to the coarse variable every `observe_interval`, fits a line through the
//! last `history` observations and jumps `project_steps` forward along it.
//! The projected coarse state is then lifted back to a fresh ensemble.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::error::{Error, Result};
use crate::evolution::{run_iterations, ModelParams};
use crate::graph::Graph;
use crate::lift::{
    self, from_percentile_curve, lift_density, restrict, to_percentile_curve, DegreeDistribution, PercentileCurve,
    DEFAULT_RETRY_BUDGET,
};
use crate::rng::{self, Domain, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseVariable {
    DegreeDistribution,
    EdgeDensity,
}

impl std::str::FromStr for CoarseVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree_distribution" | "degree" => Ok(CoarseVariable::DegreeDistribution),
            "edge_density" | "density" => Ok(CoarseVariable::EdgeDensity),
            other => Err(Error::InvalidParameter(format!(
                "coarse variable must be `degree_distribution` or `edge_density`, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpiConfig {
    pub simulate_steps: f64,
    pub observe_interval: f64,
    pub history: usize,
    pub project_steps: f64,
    pub copies: usize,
    pub coarse_variable: CoarseVariable,
    pub retry_budget: usize,
}

impl Default for CpiConfig {
    fn default() -> Self {
        CpiConfig {
            simulate_steps: 10.0,
            observe_interval: 2.0,
            history: 3,
            project_steps: 10.0,
            copies: 100,
            coarse_variable: CoarseVariable::DegreeDistribution,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

impl CpiConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.history < 2 {
            return bad(format!("history must be >= 2, got {}", self.history));
        }
        if !(self.observe_interval > 0.0) {
            return bad(format!("observe_interval must be positive, got {}", self.observe_interval));
        }
        if !(self.simulate_steps >= self.history as f64 * self.observe_interval) {
            return bad(format!(
                "simulate_steps ({}) must be at least history * observe_interval ({})",
                self.simulate_steps,
                self.history as f64 * self.observe_interval
            ));
        }
        if !(self.project_steps >= 0.0) || !self.project_steps.is_finite() {
            return bad(format!("project_steps must be finite and >= 0, got {}", self.project_steps));
        }
        if self.copies == 0 {
            return bad("copies must be at least 1".into());
        }
        if self.retry_budget == 0 {
            return bad("retry_budget must be at least 1".into());
        }
        Ok(())
    }

    /// Observation offsets within one inner segment, starting at 0.
    pub fn segment_offsets(&self) -> Vec<f64> {
        let k = (self.simulate_steps / self.observe_interval + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=k).map(|i| i as f64 * self.observe_interval).collect();
        if self.simulate_steps - v[k] > 1e-9 {
            v.push(self.simulate_steps);
        }
        v
    }

    /// Share of covered model time spent in inner simulation.
    pub fn inner_fraction(&self) -> f64 {
        self.simulate_steps / (self.simulate_steps + self.project_steps)
    }
}

/// Componentwise least-squares line through `(times, values)`, evaluated at
/// `t_last + horizon`.
pub fn project_forward(times: &[f64], values: &[Vec<f64>], horizon: f64) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch(times.len(), values.len()));
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, have: times.len() });
    }
    for (i, a) in times.iter().enumerate() {
        if times[..i].contains(a) {
            return Err(Error::CoincidentTimes);
        }
    }
    let dim = values[0].len();
    if let Some(v) = values.iter().find(|v| v.len() != dim) {
        return Err(Error::LengthMismatch(dim, v.len()));
    }
    let target = times.iter().copied().fold(f64::NEG_INFINITY, f64::max) + horizon;
    (0..dim)
        .map(|j| {
            let ys: Vec<f64> = values.iter().map(|v| v[j]).collect();
            let fit = linear_fit(times, &ys)?;
            Ok(fit.intercept + fit.slope * target)
        })
        .collect()
}

pub fn project_scalar(times: &[f64], values: &[f64], horizon: f64) -> Result<f64> {
    let vs: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    Ok(project_forward(times, &vs, horizon)?[0])
}

/// Least-squares non-decreasing fit (pool adjacent violators, equal weights).
pub fn isotonic_increasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 <= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    blocks.into_iter().flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c)).collect()
}

/// Project percentile curves and repair the result: isotonic regression,
/// then clipping to `[0, n-1]`.
pub fn project_curves(times: &[f64], curves: &[PercentileCurve], horizon: f64) -> Result<PercentileCurve> {
    let n = curves.first().ok_or(Error::InsufficientData { needed: 2, have: 0 })?.n;
    let values: Vec<Vec<f64>> = curves.iter().map(|c| c.values.clone()).collect();
    let raw = project_forward(times, &values, horizon)?;
    let hi = (n - 1) as f64;
    let values = isotonic_increasing(&raw).into_iter().map(|g| g.clamp(0.0, hi)).collect();
    Ok(PercentileCurve { n, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseState {
    pub time: f64,
    /// Ensemble-mean edge density (derived from the distribution for projections).
    pub edge_density: f64,
    pub distribution: Option<Vec<f64>>,
    pub curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub segment_start: f64,
    pub segment_end: f64,
    pub observed: Vec<CoarseState>,
    pub projected: Option<CoarseState>,
    /// Rejected lifting draws per copy for the lift that starts the next cycle.
    pub lift_retries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiReport {
    pub params: ModelParams,
    pub config: CpiConfig,
    pub cycles: Vec<CycleRecord>,
    /// Model time covered by inner simulation, summed over cycles.
    pub inner_time: f64,
    /// Model time covered by the whole run.
    pub covered_time: f64,
    /// Fine-model iterations executed, summed over copies.
    pub inner_iterations: u64,
    pub inner_seconds: f64,
}

impl CpiReport {
    /// Every observed state in time order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, &CoarseState)> {
        self.cycles.iter().flat_map(|c| c.observed.iter().map(move |s| (c.cycle, s)))
    }

    pub fn inner_cost_fraction(&self) -> f64 {
        self.inner_time / self.covered_time
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// `cycle,kind,time,edge_density,mean_degree`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.params.n as f64;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cycle", "kind", "time", "edge_density", "mean_degree"])?;
        for c in &self.cycles {
            let rows = c.observed.iter().map(|s| ("observed", s)).chain(c.projected.iter().map(|s| ("projected", s)));
            for (kind, s) in rows {
                out.write_record([
                    c.cycle.to_string(),
                    kind.to_string(),
                    s.time.to_string(),
                    s.edge_density.to_string(),
                    (s.edge_density * (n - 1.0)).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `cycle,kind,time,percentile,degree` for every recorded percentile curve.
    pub fn write_curves_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cycle", "kind", "time", "percentile", "degree"])?;
        for c in &self.cycles {
            let rows = c.observed.iter().map(|s| ("observed", s)).chain(c.projected.iter().map(|s| ("projected", s)));
            for (kind, s) in rows {
                let Some(curve) = &s.curve else { continue };
                let last = (curve.len() - 1) as f64;
                for (i, g) in curve.iter().enumerate() {
                    out.write_record([
                        c.cycle.to_string(),
                        kind.to_string(),
                        s.time.to_string(),
                        (i as f64 / last).to_string(),
                        g.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn observe(graphs: &[Graph], time: f64, var: CoarseVariable) -> Result<CoarseState> {
    let edge_density =
        graphs.iter().map(|g| g.edge_density()).sum::<Result<f64>>()? / graphs.len() as f64;
    let (distribution, curve) = match var {
        CoarseVariable::EdgeDensity => (None, None),
        CoarseVariable::DegreeDistribution => {
            let mu = restrict(graphs)?;
            let curve = to_percentile_curve(&mu);
            (Some(mu.into_probs()), Some(curve.values))
        }
    };
    Ok(CoarseState { time, edge_density, distribution, curve })
}

/// Run `n_cycles` simulate/project cycles. Copy `i` starts from
/// `g0_factory(i, stream(seed, Initial, i))` and always evolves on stream
/// `(seed, Evolve, i)`; the lift after cycle `c` uses streams
/// `(derive_seed(seed, c), Lift, i)`. With `project_steps = 0` there is no
/// re-lifting, so the run reproduces a plain ensemble simulation.
pub fn cpi_run<F>(g0_factory: F, params: &ModelParams, cfg: &CpiConfig, n_cycles: usize) -> Result<CpiReport>
where
    F: Fn(usize, &mut SimRng) -> Result<Graph> + Sync,
{
    params.validate()?;
    cfg.validate()?;
    let n = params.n;
    let mut graphs: Vec<Graph> = (0..cfg.copies)
        .into_par_iter()
        .map(|i| g0_factory(i, &mut rng::stream(params.seed, Domain::Initial, i as u64)))
        .collect::<Result<_>>()?;
    if let Some(g) = graphs.iter().find(|g| g.n() != n) {
        return Err(Error::InvalidParameter(format!("factory produced {} vertices, expected {n}", g.n())));
    }
    let mut evolve: Vec<SimRng> = (0..cfg.copies).map(|i| rng::stream(params.seed, Domain::Evolve, i as u64)).collect();
    let offsets = cfg.segment_offsets();
    let mut report = CpiReport {
        params: *params,
        config: *cfg,
        cycles: Vec::with_capacity(n_cycles),
        inner_time: 0.0,
        covered_time: 0.0,
        inner_iterations: 0,
        inner_seconds: 0.0,
    };
    let mut t0 = 0.0;
    for cycle in 0..n_cycles {
        let clock = Instant::now();
        let mut observed = Vec::with_capacity(offsets.len());
        let mut done = params.iterations_at(t0);
        for &off in &offsets {
            let t = t0 + off;
            let target = params.iterations_at(t);
            if target > done {
                let k = target - done;
                graphs.par_iter_mut().zip(evolve.par_iter_mut()).for_each(|(g, rng)| {
                    run_iterations(g, params.r, k, rng);
                });
                report.inner_iterations += k * cfg.copies as u64;
                done = target;
            }
            observed.push(observe(&graphs, t, cfg.coarse_variable)?);
        }
        report.inner_seconds += clock.elapsed().as_secs_f64();
        let t_end = t0 + cfg.simulate_steps;
        report.inner_time += cfg.simulate_steps;
        let mut record = CycleRecord {
            cycle,
            segment_start: t0,
            segment_end: t_end,
            observed,
            projected: None,
            lift_retries: Vec::new(),
        };
        if cfg.project_steps > 0.0 {
            let hist = &record.observed[record.observed.len() - cfg.history..];
            let times: Vec<f64> = hist.iter().map(|s| s.time).collect();
            let target_t = t_end + cfg.project_steps;
            let lift_seed = rng::derive_seed(params.seed, cycle as u64);
            let wrap = |e: Error| Error::CycleLift { cycle, source: Box::new(e) };
            match cfg.coarse_variable {
                CoarseVariable::EdgeDensity => {
                    let vals: Vec<f64> = hist.iter().map(|s| s.edge_density).collect();
                    let rho = project_scalar(&times, &vals, cfg.project_steps)?.clamp(0.0, 1.0);
                    graphs = (0..cfg.copies)
                        .into_par_iter()
                        .map(|i| lift_density(rho, n, &mut rng::stream(lift_seed, Domain::Lift, i as u64)))
                        .collect::<Result<_>>()
                        .map_err(wrap)?;
                    record.lift_retries = vec![0; cfg.copies];
                    record.projected = Some(CoarseState { time: target_t, edge_density: rho, distribution: None, curve: None });
                }
                CoarseVariable::DegreeDistribution => {
                    let curves: Vec<PercentileCurve> = hist
                        .iter()
                        .map(|s| PercentileCurve { n, values: s.curve.clone().expect("degree mode records curves") })
                        .collect();
                    let curve = project_curves(&times, &curves, cfg.project_steps)?;
                    let mu = from_percentile_curve(&curve, n)?;
                    let lifted = lift::lift_distribution(&mu, cfg.copies, lift_seed, cfg.retry_budget).map_err(wrap)?;
                    graphs = lifted.graphs;
                    record.lift_retries = lifted.retries;
                    record.projected = Some(CoarseState {
                        time: target_t,
                        edge_density: mu.mean() / (n - 1) as f64,
                        distribution: Some(mu.into_probs()),
                        curve: Some(curve.values),
                    });
                }
            }
        }
        report.cycles.push(record);
        t0 = t_end + cfg.project_steps;
        report.covered_time = t0;
    }
    Ok(report)
}

/// Pooled distribution of a CPI observation.
pub fn observed_distribution(state: &CoarseState) -> Option<DegreeDistribution> {
    state.distribution.clone().and_then(|p| DegreeDistribution::from_weights(p).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{run_ensemble, Observers, TimeUnit};
    use crate::theory::{rho_closed_form, TheoryParams};
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let p = project_scalar(&[6.0, 8.0, 10.0], &[1.0, 1.2, 1.4], 10.0).unwrap();
        assert!((p - 2.4).abs() < 1e-12);
        assert_eq!(project_scalar(&[0.0, 1.0, 2.0], &[3.0, 3.0, 3.0], 7.0).unwrap(), 3.0);
        let (a, b) = (0.3, -0.07);
        let ts = [1.0, 2.5, 4.0];
        let vs: Vec<f64> = ts.iter().map(|t| a + b * t).collect();
        assert!((project_scalar(&ts, &vs, 3.0).unwrap() - (a + b * 7.0)).abs() < 1e-14);
        assert!(matches!(project_scalar(&[1.0, 1.0], &[0.0, 1.0], 1.0), Err(Error::CoincidentTimes)));
        assert!(project_scalar(&[1.0], &[0.0], 1.0).is_err());
    }

    #[test]
    fn pav_examples() {
        assert_eq!(isotonic_increasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_increasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic_increasing(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(CpiConfig::default().validate().is_ok());
        assert!(CpiConfig { history: 1, ..Default::default() }.validate().is_err());
        assert!(CpiConfig { simulate_steps: 4.0, ..Default::default() }.validate().is_err());
        assert_eq!(CpiConfig::default().segment_offsets(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(CpiConfig::default().inner_fraction(), 0.5);
    }

    #[test]
    fn zero_projection_matches_plain_ensemble() {
        let params = ModelParams::new(30, 0.9, 5, TimeUnit::Nodes).unwrap();
        let cfg = CpiConfig { project_steps: 0.0, copies: 8, ..Default::default() };
        let factory = |_: usize, rng: &mut SimRng| lift_density(0.2, 30, rng);
        let report = cpi_run(factory, &params, &cfg, 3).unwrap();
        let ens = run_ensemble(factory, &params, 8, 30.0, 2.0, Observers::degrees()).unwrap();
        let times = ens.times();
        for (_, s) in report.observed() {
            let i = times.iter().position(|t| (t - s.time).abs() < 1e-9).unwrap();
            assert_eq!(s.distribution.as_ref().unwrap(), ens.pooled[i].probs());
        }
        assert!(report.cycles.iter().all(|c| c.projected.is_none()));
    }

    #[test]
    fn edge_density_cpi_tracks_closed_form() {
        let n = 60;
        let params = ModelParams::new(n, 0.9, 21, TimeUnit::Nodes).unwrap();
        let cfg = CpiConfig { coarse_variable: CoarseVariable::EdgeDensity, copies: 50, ..Default::default() };
        let report = cpi_run(|_, _| Ok(Graph::empty(n)), &params, &cfg, 8).unwrap();
        let theory = TheoryParams::default();
        for (_, s) in report.observed() {
            let expect = rho_closed_form(params.to_pairs_time(s.time), &theory);
            assert!((s.edge_density - expect).abs() < 0.03, "t={} {} vs {expect}", s.time, s.edge_density);
        }
        assert!((report.inner_cost_fraction() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cpi_is_deterministic_and_curves_are_repaired() {
        let params = ModelParams::new(40, 0.9, 3, TimeUnit::Nodes).unwrap();
        let cfg = CpiConfig { copies: 10, ..Default::default() };
        let factory = |_: usize, rng: &mut SimRng| lift_density(0.25, 40, rng);
        let a = cpi_run(factory, &params, &cfg, 2).unwrap();
        let b = cpi_run(factory, &params, &cfg, 2).unwrap();
        assert_eq!(a.cycles, b.cycles);
        for c in &a.cycles {
            let curve = c.projected.as_ref().unwrap().curve.as_ref().unwrap();
            assert!(curve.windows(2).all(|w| w[0] <= w[1]));
            assert!(curve.iter().all(|g| (0.0..=39.0).contains(g)));
        }
        let mut buf = Vec::new();
        a.write_trace_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"cycle,kind,time,edge_density,mean_degree\n"));
    }

    #[test]
    fn lift_failure_carries_cycle_index() {
        // a budget of one draw fails as soon as any copy draws an odd degree sum
        let params = ModelParams::new(20, 0.9, 1, TimeUnit::Nodes).unwrap();
        let cfg = CpiConfig { copies: 20, retry_budget: 1, ..Default::default() };
        let err = cpi_run(|_, rng: &mut SimRng| lift_density(0.3, 20, rng), &params, &cfg, 2).unwrap_err();
        assert!(err.is_lift_failure());
        assert!(matches!(err, Error::CycleLift { cycle: 0, .. }), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn repaired_curves_are_monotone(raw in proptest::collection::vec(-20.0f64..120.0, 101)) {
            let fixed: Vec<f64> = isotonic_increasing(&raw).into_iter().map(|g| g.clamp(0.0, 99.0)).collect();
            prop_assert!(fixed.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            prop_assert!(fixed.iter().all(|g| (0.0..=99.0).contains(g)));
        }
    }
}
