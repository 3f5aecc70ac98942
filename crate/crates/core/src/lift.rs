//! Restriction to degree distributions and lifting back to graphs.
//!
//! A degree distribution on `0..n` is read as a piecewise-constant density
//! that spreads the mass of degree `d` uniformly over `[d - 1/2, d + 1/2]`.
//! Its cumulative function is then piecewise linear, and the percentile
//! representation samples the inverse of that function at 101 evenly spaced
//! levels. Lifting draws i.i.d. degree sequences and realizes them with a
//! deterministic Havel-Hakimi construction.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, Domain};

pub const DEFAULT_RETRY_BUDGET: usize = 1000;
pub const PERCENTILE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    probs: Vec<f64>,
}

impl DegreeDistribution {
    /// Normalize non-negative weights. The result sums to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Degenerate("degree distribution needs at least one entry".into()));
        }
        if let Some(d) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight at degree {d} is negative or not finite: {}",
                weights[d]
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("degree distribution has zero total mass".into()));
        }
        Ok(DegreeDistribution { probs: weights.into_iter().map(|w| w / total).collect() })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Self::from_weights(counts.iter().map(|&c| c as f64).collect())
    }

    /// Clip negative entries to zero and renormalize. Used when a solver
    /// proposes a vector that leaves the simplex by round-off or by design.
    pub fn from_weights_clipped(weights: &[f64]) -> Result<Self> {
        Self::from_weights(weights.iter().map(|&w| if w > 0.0 { w } else { 0.0 }).collect())
    }

    pub fn point_mass(n: usize, degree: usize) -> Result<Self> {
        if degree >= n {
            return Err(Error::InvalidParameter(format!("degree {degree} outside 0..{n}")));
        }
        let mut w = vec![0.0; n];
        w[degree] = 1.0;
        Self::from_weights(w)
    }

    /// Degree law of `G(n, p)`: Binomial(n - 1, p) on `0..n`.
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || n == 0 {
            return Err(Error::InvalidParameter(format!("binomial needs n >= 1, p in [0,1]; got {n}, {p}")));
        }
        let m = n - 1;
        if p == 0.0 {
            return Self::point_mass(n, 0);
        }
        if p == 1.0 {
            return Self::point_mass(n, m);
        }
        // log-space to stay finite for large m
        let ln_p = p.ln();
        let ln_q = (1.0 - p).ln();
        let mut ln_choose = 0.0f64;
        let mut w = Vec::with_capacity(n);
        for k in 0..=m {
            if k > 0 {
                ln_choose += ((m - k + 1) as f64).ln() - (k as f64).ln();
            }
            w.push((ln_choose + k as f64 * ln_p + (m - k) as f64 * ln_q).exp());
        }
        Self::from_weights(w)
    }

    /// Normal density sampled at the integer degrees `0..n`, renormalized.
    pub fn discretized_normal(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::InvalidParameter(format!("sd must be positive, got {sd}")));
        }
        Self::from_weights((0..n).map(|d| (-0.5 * ((d as f64 - mean) / sd).powi(2)).exp()).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(d, p)| d as f64 * p).sum()
    }

    fn central_moment(&self, k: i32) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(d, p)| (d as f64 - m).powi(k) * p).sum()
    }

    pub fn sd(&self) -> f64 {
        self.central_moment(2).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        self.central_moment(3) / self.central_moment(2).powf(1.5)
    }

    /// Cumulative sums `C_d = P(degree <= d)`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// L1 distance; the shorter vector is zero-extended.
    pub fn l1_distance(&self, other: &DegreeDistribution) -> f64 {
        l1_distance(&self.probs, &other.probs)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["degree", "probability"])?;
        for (d, p) in self.probs.iter().enumerate() {
            out.write_record([d.to_string(), p.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for rec in csv::Reader::from_reader(r).deserialize() {
            rows.push(rec?);
        }
        let n = rows.iter().map(|(d, _)| d + 1).max().unwrap_or(0);
        let mut w = vec![0.0; n];
        for (d, p) in rows {
            w[d] += p;
        }
        Self::from_weights(w)
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum()
}

/// Degree values `g_i` at percentile levels `p_i = i / 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileCurve {
    pub n: usize,
    pub values: Vec<f64>,
}

impl PercentileCurve {
    pub fn percentiles(&self) -> Vec<f64> {
        percentile_levels(self.values.len())
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["percentile", "degree_value"])?;
        for (p, g) in self.percentiles().iter().zip(&self.values) {
            out.write_record([p.to_string(), g.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn percentile_levels(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// Pooled, normalized degree histogram of an ensemble.
pub fn restrict(graphs: &[Graph]) -> Result<DegreeDistribution> {
    let n = graphs.first().ok_or(Error::EmptyEnsemble)?.n();
    let mut counts = vec![0u64; n];
    for g in graphs {
        if g.n() != n {
            return Err(Error::LengthMismatch(n, g.n()));
        }
        for &d in g.degrees() {
            counts[d as usize] += 1;
        }
    }
    DegreeDistribution::from_counts(&counts)
}

/// Invert the piecewise-linear cumulative distribution at `p = 0, 0.01, …, 1`.
pub fn to_percentile_curve(mu: &DegreeDistribution) -> PercentileCurve {
    const TOL: f64 = 1e-12;
    const TAIL: f64 = 1e-4;
    let n = mu.n();
    let probs = mu.probs();
    let cum = mu.cumulative();
    // the p = 0 and p = 1 knots sit at the edges of the support after
    // dropping tail mass below TAIL; otherwise a numerically tiny tail drags
    // the end knots (and 1% of the mass) across the whole degree range
    let first = (0..n).find(|&d| cum[d] > TAIL).unwrap_or(0);
    let last = (0..n).rev().find(|&d| d == 0 || 1.0 - cum[d - 1] > TAIL).unwrap_or(0);
    let hi = (n - 1) as f64;
    let values = percentile_levels(PERCENTILE_POINTS)
        .into_iter()
        .map(|p| {
            let g = if p <= 0.0 {
                first as f64 - 0.5
            } else if p >= 1.0 {
                last as f64 + 0.5
            } else {
                // first bin whose upper cumulative reaches p
                let d = (first..=last).find(|&d| probs[d] > 0.0 && cum[d] >= p - TOL).unwrap_or(last);
                let below = if d == 0 { 0.0 } else { cum[d - 1] };
                d as f64 - 0.5 + ((p - below) / probs[d]).clamp(0.0, 1.0)
            };
            g.clamp(0.0, hi)
        })
        .collect();
    PercentileCurve { n, values }
}

/// Cumulative function implied by a percentile curve, linear between knots.
fn curve_cdf(levels: &[f64], values: &[f64], x: f64) -> f64 {
    let last = values.len() - 1;
    if x < values[0] {
        return 0.0;
    }
    if x >= values[last] {
        return 1.0;
    }
    // largest i with values[i] <= x; then values[i + 1] > x
    let i = values.partition_point(|&g| g <= x) - 1;
    let (g0, g1) = (values[i], values[i + 1]);
    levels[i] + (levels[i + 1] - levels[i]) * (x - g0) / (g1 - g0)
}

/// Difference the interpolated cumulative function over unit degree bins.
pub fn from_percentile_curve(curve: &PercentileCurve, n: usize) -> Result<DegreeDistribution> {
    if curve.values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, have: curve.values.len() });
    }
    if let Some(i) = curve.values.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::NonMonotoneCurve(i + 1));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let levels = curve.percentiles();
    let mut probs = Vec::with_capacity(n);
    let mut prev = 0.0;
    for d in 0..n {
        let upper = if d + 1 == n { 1.0 } else { curve_cdf(&levels, &curve.values, d as f64 + 0.5) };
        probs.push((upper - prev).max(0.0));
        prev = upper;
    }
    DegreeDistribution::from_weights(probs)
}

/// Draw one degree per vertex by inverse-CDF sampling.
fn draw_sequence<R: Rng + ?Sized>(cum: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let top = cum.len() - 1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * cum[top];
            cum.partition_point(|&c| c <= u).min(top)
        })
        .collect()
}

/// `n` i.i.d. draws from `mu`, redrawn wholesale until the sum is even.
pub fn sample_degree_sequence<R: Rng + ?Sized>(
    mu: &DegreeDistribution,
    n: usize,
    rng: &mut R,
    budget: usize,
) -> Result<Vec<usize>> {
    let cum = mu.cumulative();
    for _ in 0..budget {
        let seq = draw_sequence(&cum, n, rng);
        if seq.iter().sum::<usize>() % 2 == 0 {
            return Ok(seq);
        }
    }
    Err(Error::RetryBudgetExhausted { what: "even-sum degree sequence".into(), budget })
}

/// Erdős–Gallai test, independent of the Havel-Hakimi construction.
pub fn is_graphical_erdos_gallai(degrees: &[usize]) -> bool {
    let n = degrees.len();
    let mut d = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    if d.iter().sum::<usize>() % 2 == 1 || d.first().is_some_and(|&x| x >= n) {
        return false;
    }
    let mut lhs = 0usize;
    for k in 1..=n {
        lhs += d[k - 1];
        let rhs = k * (k - 1) + d[k..].iter().map(|&x| x.min(k)).sum::<usize>();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// Realize a degree sequence as a simple graph, or report it non-graphical.
///
/// Repeatedly takes the vertex with the largest residual degree (lowest index
/// on ties) and joins it to the next-largest residual-degree vertices in the
/// same order. Residual degrees live in buckets of index-ordered sets, so a
/// graph costs O(m log n) instead of a re-sort per round.
pub fn havel_hakimi(degrees: &[usize]) -> Result<Graph> {
    let n = degrees.len();
    if degrees.iter().any(|&d| d >= n.max(1)) || degrees.iter().sum::<usize>() % 2 == 1 {
        return Err(Error::NotGraphical);
    }
    let max_deg = degrees.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); max_deg + 1];
    for (v, &d) in degrees.iter().enumerate() {
        if d > 0 {
            buckets[d].insert(v as u32);
        }
    }
    let mut g = Graph::empty(n);
    let mut top = max_deg;
    let mut picked: Vec<(u32, usize)> = Vec::with_capacity(max_deg);
    loop {
        while top > 0 && buckets[top].is_empty() {
            top -= 1;
        }
        if top == 0 {
            return Ok(g);
        }
        let v = buckets[top].pop_first().expect("non-empty bucket");
        let need = top;
        picked.clear();
        let mut level = top;
        while picked.len() < need && level > 0 {
            for &w in buckets[level].iter().take(need - picked.len()) {
                picked.push((w, level));
            }
            level -= 1;
        }
        if picked.len() < need {
            return Err(Error::NotGraphical);
        }
        for &(w, lvl) in &picked {
            buckets[lvl].remove(&w);
            g.insert_unchecked(v as usize, w as usize);
        }
        for &(w, lvl) in &picked {
            if lvl > 1 {
                buckets[lvl - 1].insert(w);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiftedEnsemble {
    pub graphs: Vec<Graph>,
    /// Rejected draws (odd sum or non-graphical) before success, per copy.
    pub retries: Vec<usize>,
}

/// Lift one copy: sample sequences until one is graphical.
pub fn lift_one<R: Rng + ?Sized>(
    mu: &DegreeDistribution,
    cum: &[f64],
    rng: &mut R,
    budget: usize,
) -> Result<(Graph, usize)> {
    let n = mu.n();
    for attempt in 0..budget {
        let seq = draw_sequence(cum, n, rng);
        if seq.iter().sum::<usize>() % 2 == 1 {
            continue;
        }
        if let Ok(g) = havel_hakimi(&seq) {
            return Ok((g, attempt));
        }
    }
    Err(Error::RetryBudgetExhausted {
        what: format!(
            "graphical draw from degree distribution (mean {:.3}, sd {:.3}, n {})",
            mu.mean(),
            mu.sd(),
            n
        ),
        budget,
    })
}

/// Build `copies` graphs whose degree sequences are drawn from `mu`. Copy `i`
/// draws from stream `(seed, Lift, i)`.
pub fn lift_distribution(
    mu: &DegreeDistribution,
    copies: usize,
    seed: u64,
    budget: usize,
) -> Result<LiftedEnsemble> {
    let cum = mu.cumulative();
    let out: Vec<(Graph, usize)> = (0..copies)
        .into_par_iter()
        .map(|i| lift_one(mu, &cum, &mut rng::stream(seed, Domain::Lift, i as u64), budget))
        .collect::<Result<_>>()?;
    for (i, (_, k)) in out.iter().enumerate() {
        if *k > 0 {
            log::debug!("lift copy {i}: {k} rejected draws");
        }
    }
    let (graphs, retries) = out.into_iter().unzip();
    Ok(LiftedEnsemble { graphs, retries })
}

/// Erdős–Rényi graph `G(n, rho)`.
pub fn lift_density<R: Rng + ?Sized>(rho: f64, n: usize, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("edge density must lie in [0,1], got {rho}")));
    }
    let mut g = Graph::empty(n);
    for v in 1..n {
        for u in 0..v {
            if rng.random::<f64>() < rho {
                g.insert_unchecked(u, v);
            }
        }
    }
    Ok(g)
}
