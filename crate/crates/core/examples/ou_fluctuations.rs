//! Degree fluctuations as an Ornstein-Uhlenbeck process: simulated paths
//! reach the Gaussian stationary law, whose degree-scale mean and sd are
//! compared with a long direct simulation of the graph model.
//!
//!     cargo run --release --example ou_fluctuations

use netcoarse::evolution::{run_ensemble, ModelParams, Observers, TimeUnit};
use netcoarse::lift::lift_density;
use netcoarse::rng::SimRng;
use netcoarse::theory::{fluctuation_to_normed_degree, fokker_planck_eigenfunctions, ou_simulate, stationary_degree_law, OuConfig};
use rand::SeedableRng;

fn main() -> netcoarse::Result<()> {
    let (r, n) = (0.9, 100);
    let mut rng = SimRng::seed_from_u64(1);
    let cfg = OuConfig { r, x0: 0.0, t_end: 2.0, dt: 1e-3, noise_scale: 1.0 };
    let mut samples = Vec::new();
    for _ in 0..500 {
        let path = ou_simulate(&cfg, &mut rng)?;
        samples.extend(path[path.len() / 2..].iter().step_by(100).map(|&x| n as f64 * fluctuation_to_normed_degree(x, r, n)));
    }
    let m = samples.iter().sum::<f64>() / samples.len() as f64;
    let sd = (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    let law = stationary_degree_law(r, n)?;
    println!("OU degree scale: mean {m:.2} sd {sd:.2}; theory {:.1} and {:.1}", law.raw_mean, law.raw_sd);

    let params = ModelParams::new(n, r, 2, TimeUnit::Pairs)?;
    let ens = run_ensemble(|_, rng| lift_density(0.1, n, rng), &params, 100, 3.0, 1.0, Observers::degrees())?;
    let mu = ens.pooled.last().unwrap();
    println!("graph model at t=3: mean {:.2} sd {:.2} skewness {:.3}", mu.mean(), mu.sd(), mu.skewness());

    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.1).collect();
    let eig = fokker_planck_eigenfunctions(r, &grid)?;
    for e in &eig {
        let v: Vec<String> = e.values.iter().map(|x| format!("{x:6.3}")).collect();
        println!("eigenvalue {:6.1}: {}", e.eigenvalue, v.join(" "));
    }
    Ok(())
}
