//! Rate fits, PCA of degree-distribution decay, and Hermite shape matching.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Snapshot, Trajectory};
use crate::lift::DegreeDistribution;
use crate::theory::fokker_planck_eigenfunctions;

/// Scalar statistic read from a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Sum of squared normed degrees, `sum_i (deg_i / n)^2`.
    Snd,
    CherryCount,
    TriangleCount,
}

fn snapshot_value(s: &Snapshot, n: usize, obs: Observable) -> Result<f64> {
    let missing = |what: &str| Error::Parse { what: "snapshot".into(), detail: format!("{what} was not observed") };
    match obs {
        Observable::Snd => {
            let nf = n as f64;
            if let Some(h) = &s.degree_histogram {
                return Ok(h.iter().enumerate().map(|(d, &c)| c as f64 * (d as f64 / nf).powi(2)).sum());
            }
            // sum of squared degrees = 2 * cherries + 2 * edges
            let c = s.cherry_count.ok_or_else(|| missing("degree histogram or cherry count"))?;
            Ok((2 * c + 2 * s.edge_count as u64) as f64 / (nf * nf))
        }
        Observable::CherryCount => s.cherry_count.map(|c| c as f64).ok_or_else(|| missing("cherry count")),
        Observable::TriangleCount => s.triangle_count.map(|c| c as f64).ok_or_else(|| missing("triangle count")),
    }
}

pub fn observable_trace(traj: &Trajectory, obs: Observable) -> Result<Vec<f64>> {
    traj.snapshots.iter().map(|s| snapshot_value(s, traj.n, obs)).collect()
}

/// `|N_T,A(t) - N_T,B(t)|` for two trajectories observed on the same schedule.
pub fn relative_triangles(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::LengthMismatch(a.snapshots.len(), b.snapshots.len()));
    }
    let ta = observable_trace(a, Observable::TriangleCount)?;
    let tb = observable_trace(b, Observable::TriangleCount)?;
    Ok(ta.iter().zip(&tb).map(|(x, y)| (x - y).abs()).collect())
}

/// Pointwise mean of equally long series.
pub fn mean_series(series: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = series.first().ok_or(Error::EmptyEnsemble)?;
    let mut out = vec![0.0; first.len()];
    for s in series {
        if s.len() != out.len() {
            return Err(Error::LengthMismatch(out.len(), s.len()));
        }
        out.iter_mut().zip(s).for_each(|(o, v)| *o += v);
    }
    let k = series.len() as f64;
    out.iter_mut().for_each(|o| *o /= k);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, have: x.len() });
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::CoincidentTimes);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// What is subtracted from the series before taking logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Asymptote {
    /// Fit `log|q(t)|` directly (the series already decays to 0).
    None,
    /// Fit `log|q(t) - q_inf|`.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFitConfig {
    pub asymptote: Asymptote,
    /// Restrict the fit to `[t_lo, t_hi]` before noise trimming.
    pub window: Option<(f64, f64)>,
    /// Trailing fraction of the series whose median magnitude is the noise floor.
    pub floor_fraction: f64,
    /// The fit stops at the first point below `floor_multiple * floor`.
    pub floor_multiple: f64,
}

impl Default for RateFitConfig {
    fn default() -> Self {
        RateFitConfig { asymptote: Asymptote::None, window: None, floor_fraction: 0.1, floor_multiple: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub goodness: f64,
    pub noise_floor: f64,
    pub points: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) }
}

/// Least-squares slope of `log|q - q_inf|` against time.
pub fn estimate_rate(times: &[f64], values: &[f64], cfg: &RateFitConfig) -> Result<RateFitResult> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch(times.len(), values.len()));
    }
    let dev: Vec<f64> = match cfg.asymptote {
        Asymptote::None => values.iter().map(|v| v.abs()).collect(),
        Asymptote::Value(q) => values.iter().map(|v| (v - q).abs()).collect(),
    };
    let tail = ((times.len() as f64 * cfg.floor_fraction).ceil() as usize).clamp(1, times.len().max(1));
    let floor = if times.is_empty() { 0.0 } else { median(dev[dev.len() - tail..].to_vec()) };
    let cut = cfg.floor_multiple * floor;
    let (lo, hi) = cfg.window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &d) in times.iter().zip(&dev) {
        if t < lo || t > hi {
            continue;
        }
        if d <= cut || d <= 0.0 {
            break;
        }
        xs.push(t);
        ys.push(d.ln());
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: xs.len() });
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFitResult {
        slope: fit.slope,
        intercept: fit.intercept,
        t_lo: xs[0],
        t_hi: *xs.last().unwrap(),
        goodness: fit.r_squared,
        noise_floor: floor,
        points: xs.len(),
    })
}

/// `t,log_value,fitted` rows for plotting a rate fit.
pub fn write_rate_csv<W: Write>(times: &[f64], values: &[f64], fit: &RateFitResult, asymptote: Asymptote, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "log_value", "fitted"])?;
    for (&t, &v) in times.iter().zip(values) {
        let d = match asymptote {
            Asymptote::None => v.abs(),
            Asymptote::Value(q) => (v - q).abs(),
        };
        let fitted = if t >= fit.t_lo && t <= fit.t_hi { (fit.intercept + fit.slope * t).to_string() } else { String::new() };
        out.write_record([t.to_string(), d.ln().to_string(), fitted])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub singular_values: Vec<f64>,
    /// Unit-norm right singular vectors over the degree axis.
    pub components: Vec<Vec<f64>>,
}

impl PcaResult {
    pub fn ratio(&self) -> f64 {
        self.singular_values.get(1).copied().unwrap_or(0.0) / self.singular_values[0]
    }
}

/// SVD of the uncentred deviation matrix `mu(t_i) - mu_inf`.
pub fn pca_decay(snapshots: &[DegreeDistribution], mu_inf: &DegreeDistribution) -> Result<PcaResult> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: snapshots.len() });
    }
    let n = mu_inf.n();
    let mut data = Vec::with_capacity(snapshots.len() * n);
    for s in snapshots {
        if s.n() != n {
            return Err(Error::LengthMismatch(n, s.n()));
        }
        data.extend(s.probs().iter().zip(mu_inf.probs()).map(|(a, b)| a - b));
    }
    pca_rows(snapshots.len(), n, data)
}

/// PCA of an arbitrary row-major `rows × cols` matrix (no centring).
pub fn pca_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<PcaResult> {
    if data.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("all deviations are zero".into()));
    }
    let m = DMatrix::from_row_slice(rows, cols, &data);
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD did not return components".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let components = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = vt.row(i).iter().copied().collect();
            let big = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    Ok(PcaResult { singular_values, components })
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let ma = a.iter().sum::<f64>() / k;
    let mb = b.iter().sum::<f64>() / k;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatch {
    /// Degree corresponding to `x = 0`.
    pub shift: f64,
    /// Degrees per unit of `x`.
    pub scale: f64,
    pub correlation: f64,
}

/// Best `|corr|` between `component[d]` and `f_k((d - shift) / scale)` for
/// eigenfunction index `k` in 0..3.
pub fn hermite_shape_match(component: &[f64], r: f64, n: usize, k: usize) -> Result<ShapeMatch> {
    if k > 2 {
        return Err(Error::InvalidParameter(format!("eigenfunction index must be 0, 1 or 2, got {k}")));
    }
    let corr = |shift: f64, scale: f64| -> f64 {
        let grid: Vec<f64> = (0..component.len()).map(|d| (d as f64 - shift) / scale).collect();
        match fokker_planck_eigenfunctions(r, &grid) {
            Ok(f) => pearson(component, &f[k].values).abs(),
            Err(_) => 0.0,
        }
    };
    let nf = n as f64;
    let base = nf.sqrt();
    let mut best = ShapeMatch { shift: nf * (1.0 - r), scale: base, correlation: corr(nf * (1.0 - r), base) };
    for i in 0..=40 {
        let shift = (component.len() as f64 - 1.0) * i as f64 / 40.0;
        for j in 0..=24 {
            let scale = base * 2f64.powf(-3.0 + 6.0 * j as f64 / 24.0);
            let c = corr(shift, scale);
            if c > best.correlation {
                best = ShapeMatch { shift, scale, correlation: c };
            }
        }
    }
    // compass search around the best grid point
    let (mut ds, mut dl) = (component.len() as f64 / 40.0, 2f64.powf(0.25));
    while ds > 1e-4 {
        let mut moved = false;
        for (s, l) in [(best.shift + ds, best.scale), (best.shift - ds, best.scale), (best.shift, best.scale * dl), (best.shift, best.scale / dl)] {
            let c = corr(s, l);
            if c > best.correlation {
                best = ShapeMatch { shift: s, scale: l, correlation: c };
                moved = true;
            }
        }
        if !moved {
            ds *= 0.5;
            dl = dl.sqrt();
        }
    }
    Ok(best)
}

/// Read `time,copy,edge_density,cherry_count,triangle_count` rows (as written
/// by [`crate::evolution::write_trajectories_csv`]) back into trajectories.
pub fn read_trajectories_csv<R: Read>(r: R, n: usize) -> Result<Vec<Trajectory>> {
    let mut rdr = csv::Reader::from_reader(r);
    let bad = |detail: String| Error::Parse { what: "trajectory CSV".into(), detail };
    let mut out: Vec<Trajectory> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("field {i}: {e}")));
        let opt = |i: usize| -> Result<Option<u64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                rec[i].parse().map(Some).map_err(|e| bad(format!("field {i}: {e}")))
            }
        };
        let copy: usize = rec[1].parse().map_err(|e| bad(format!("copy: {e}")))?;
        if copy > out.len() {
            return Err(bad(format!("copy {copy} appears before copy {}", out.len())));
        }
        if copy == out.len() {
            out.push(Trajectory { n, snapshots: Vec::new() });
        }
        let edge_density = num(2)?;
        out[copy].snapshots.push(Snapshot {
            time: num(0)?,
            iteration: 0,
            edge_count: (edge_density * crate::graph::pair_count(n) as f64).round() as usize,
            edge_density,
            cherry_count: opt(3)?,
            triangle_count: opt(4)?,
            degree_histogram: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Observers;
    use crate::graph::Graph;
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn traj_of(graphs: &[Graph]) -> Trajectory {
        Trajectory {
            n: graphs[0].n(),
            snapshots: graphs.iter().enumerate().map(|(i, g)| Snapshot::observe(g, i as f64, 0, Observers::all())).collect(),
        }
    }

    #[test]
    fn observable_examples() {
        let t = traj_of(&[Graph::empty(5), Graph::empty(5)]);
        assert_eq!(observable_trace(&t, Observable::Snd).unwrap(), vec![0.0, 0.0]);
        let k3 = traj_of(&[Graph::complete(3)]);
        assert!((observable_trace(&k3, Observable::Snd).unwrap()[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(observable_trace(&k3, Observable::TriangleCount).unwrap(), vec![1.0]);
        assert_eq!(observable_trace(&k3, Observable::CherryCount).unwrap(), vec![3.0]);
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let full = traj_of(std::slice::from_ref(&g));
        let counts_only = Trajectory { n: 6, snapshots: vec![Snapshot::observe(&g, 0.0, 0, Observers::subgraphs())] };
        let a = observable_trace(&full, Observable::Snd).unwrap()[0];
        let b = observable_trace(&counts_only, Observable::Snd).unwrap()[0];
        assert!((a - b).abs() < 1e-15 && (a - 16.0 / 36.0).abs() < 1e-15);
        let t = traj_of(&[Graph::complete(4), Graph::empty(4)]);
        assert_eq!(relative_triangles(&t, &t).unwrap(), vec![0.0, 0.0]);
        let short = traj_of(&[Graph::complete(4)]);
        assert!(relative_triangles(&t, &short).is_err());
    }

    #[test]
    fn missing_statistic_is_an_error() {
        let g = Graph::complete(4);
        let t = Trajectory { n: 4, snapshots: vec![Snapshot::observe(&g, 0.0, 0, Observers::default())] };
        assert!(observable_trace(&t, Observable::Snd).is_err());
        assert!(observable_trace(&t, Observable::CherryCount).is_err());
        assert!(observable_trace(&t, Observable::TriangleCount).is_err());
    }

    #[test]
    fn exact_exponential_rate() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = times.iter().map(|t| (-10.0 * t).exp()).collect();
        let fit = estimate_rate(&times, &vals, &RateFitConfig::default()).unwrap();
        assert!((fit.slope + 10.0).abs() < 1e-6);
        assert!(fit.goodness > 0.999_999);
        assert!(fit.t_lo < fit.t_hi);
    }

    #[test]
    fn noisy_exponential_rate() {
        let mut rng = SimRng::seed_from_u64(4);
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.0025).collect();
        let vals: Vec<f64> =
            times.iter().map(|t| (-20.0 * t).exp() * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0))).collect();
        let fit = estimate_rate(&times, &vals, &RateFitConfig::default()).unwrap();
        assert!((fit.slope + 20.0).abs() < 1.0, "{}", fit.slope);
    }

    #[test]
    fn asymptote_and_floor_trimming() {
        // decays to 3 then sits on a noise floor of 1e-3
        let times: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, t)| 3.0 + (-5.0 * t).exp() + if i % 2 == 0 { 1e-3 } else { -1e-3 })
            .collect();
        let cfg = RateFitConfig { asymptote: Asymptote::Value(3.0), ..Default::default() };
        let fit = estimate_rate(&times, &vals, &cfg).unwrap();
        assert!((fit.noise_floor - 1e-3).abs() < 1e-6);
        assert!(fit.t_hi < 1.3);
        assert!((fit.slope + 5.0).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn too_few_points() {
        let r = estimate_rate(&[0.0, 1.0], &[1.0, 0.5], &RateFitConfig { floor_multiple: 0.0, ..Default::default() });
        assert!(matches!(r, Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn rank_one_pca() {
        let v: Vec<f64> = vec![0.5, -0.5, 0.5, -0.5];
        let mut data = Vec::new();
        for c in [1.0, 0.4, 0.1, 0.02] {
            data.extend(v.iter().map(|x| c * x));
        }
        let p = pca_rows(4, 4, data).unwrap();
        assert!(p.singular_values[1] < 1e-12);
        let dot: f64 = p.components[0].iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_mode_pca() {
        let m = 30;
        let v1: Vec<f64> = (0..m).map(|i| ((i as f64 + 0.5) * std::f64::consts::PI / m as f64).cos()).collect();
        let v2: Vec<f64> = (0..m).map(|i| (2.0 * (i as f64 + 0.5) * std::f64::consts::PI / m as f64).cos()).collect();
        let norm = |v: Vec<f64>| {
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (v1, v2) = (norm(v1), norm(v2));
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let mut data = Vec::new();
        for t in &times {
            let a = (-10.0 * t).exp();
            let b = 0.02 * (-20.0 * t).exp();
            data.extend(v1.iter().zip(&v2).map(|(x, y)| a * x + b * y));
        }
        let p = pca_rows(times.len(), m, data).unwrap();
        let ratio = p.ratio();
        assert!(ratio > 0.002 && ratio < 0.02, "{ratio}");
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs();
        assert!(dot(&p.components[0], &v1) > 0.999);
        assert!(dot(&p.components[1], &v2) > 0.99);
    }

    #[test]
    fn pca_rejects_degenerate() {
        let mu = DegreeDistribution::uniform(5).unwrap();
        assert!(pca_decay(&[mu.clone(), mu.clone(), mu.clone()], &mu).is_err());
        assert!(pca_decay(std::slice::from_ref(&mu), &mu).is_err());
    }

    #[test]
    fn pca_components_are_unit_norm_with_positive_peak() {
        let mut rng = SimRng::seed_from_u64(9);
        let data: Vec<f64> = (0..5 * 8).map(|_| rng.random::<f64>() - 0.5).collect();
        let p = pca_rows(5, 8, data).unwrap();
        for c in &p.components {
            assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            let peak = c.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(peak > 0.0);
        }
        assert!(p.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    fn sampled(k: usize, shift: f64, scale: f64, len: usize) -> Vec<f64> {
        let grid: Vec<f64> = (0..len).map(|d| (d as f64 - shift) / scale).collect();
        fokker_planck_eigenfunctions(0.9, &grid).unwrap()[k].values.clone()
    }

    #[test]
    fn hermite_self_match() {
        let f1 = sampled(1, 10.0, 10.0, 100);
        let m = hermite_shape_match(&f1, 0.9, 100, 1).unwrap();
        assert!(m.correlation > 1.0 - 1e-9);
        let f2 = sampled(2, 10.0, 10.0, 100);
        assert!(hermite_shape_match(&f2, 0.9, 100, 2).unwrap().correlation > 1.0 - 1e-9);
    }

    #[test]
    fn hermite_parity_mismatch() {
        // symmetric grid centred on the Gaussian; f1 is fixed to the same centre
        let f2 = sampled(2, 50.0, 10.0, 101);
        let f1 = sampled(1, 50.0, 10.0, 101);
        assert!(pearson(&f2, &f1).abs() < 0.3);
    }

    #[test]
    fn csv_round_trip() {
        let t = traj_of(&[Graph::complete(4), Graph::empty(4)]);
        let mut buf = Vec::new();
        crate::evolution::write_trajectories_csv(&[t.clone(), t.clone()], &mut buf).unwrap();
        let back = read_trajectories_csv(&buf[..], 4).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(observable_trace(&back[1], Observable::TriangleCount).unwrap(), vec![4.0, 0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rate_exact_on_noiseless_exponentials(rate in 0.1f64..100.0) {
            let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1 / rate).collect();
            let vals: Vec<f64> = times.iter().map(|t| 2.0 * (-rate * t).exp()).collect();
            let fit = estimate_rate(&times, &vals, &RateFitConfig::default()).unwrap();
            prop_assert!((fit.slope + rate).abs() < 1e-9 * rate.max(1.0));
        }

        #[test]
        fn pca_row_permutation_invariance(seed in 0u64..1000) {
            let mut rng = SimRng::seed_from_u64(seed);
            let data: Vec<f64> = (0..6 * 5).map(|_| rng.random::<f64>() - 0.5).collect();
            let mut rev = Vec::new();
            for row in data.chunks(5).rev() {
                rev.extend_from_slice(row);
            }
            let a = pca_rows(6, 5, data).unwrap();
            let b = pca_rows(6, 5, rev).unwrap();
            for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn hermite_scale_invariance(c in 0.01f64..100.0) {
            let f1 = sampled(1, 12.0, 9.0, 60);
            let scaled: Vec<f64> = f1.iter().map(|v| v * c).collect();
            let a = hermite_shape_match(&f1, 0.9, 100, 1).unwrap();
            let b = hermite_shape_match(&scaled, 0.9, 100, 1).unwrap();
            prop_assert!((a.correlation - b.correlation).abs() < 1e-9);
        }
    }
}
