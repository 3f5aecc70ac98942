//! Stationary degree distribution as a fixed point of the coarse timestepper
//! `mu -> restrict(evolve_10(lift(mu)))`, found with damped Newton-GMRES.
//! Larger ensembles lower the noise floor; the acceptance suite uses 12000.
//!
//!     cargo run --release --example newton_fixed_point [COPIES]

use netcoarse::evolution::{ModelParams, TimeUnit};
use netcoarse::fixpoint::{newton_gmres, NewtonConfig};
use netcoarse::graph::Graph;
use netcoarse::lift::{lift_density, restrict, DegreeDistribution};
use netcoarse::rng::{stream, Domain};
use netcoarse::theory::stationary_degree_law;

fn main() -> netcoarse::Result<()> {
    let copies = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let params = ModelParams::new(100, 0.9, 0, TimeUnit::Nodes)?;
    let graphs: Vec<Graph> = (0..500).map(|i| lift_density(0.25, 100, &mut stream(3, Domain::Initial, i))).collect::<Result<_, _>>()?;
    let mu0 = restrict(&graphs)?;
    let cfg = NewtonConfig { copies, ..Default::default() };
    let report = newton_gmres(&mu0, &params, &cfg)?;

    println!("noise floor {:.5}", report.noise_floor);
    for (k, f) in report.residual_norms.iter().enumerate() {
        let damping = report.damping.get(k).map(|c| format!("damping {c:.2}")).unwrap_or_default();
        println!("iteration {k}: ||F||_1 = {f:.5} {damping}");
    }
    let law = stationary_degree_law(params.r, params.n)?;
    let target = DegreeDistribution::discretized_normal(params.n, law.raw_mean, law.raw_sd)?;
    let mu = DegreeDistribution::from_weights(report.mu.clone())?;
    println!(
        "converged {}, stagnated {}; fixed point mean {:.2} sd {:.2}, L1 to Normal({:.0}, {:.0}) = {:.4}",
        report.converged,
        report.stagnated,
        mu.mean(),
        mu.sd(),
        law.raw_mean,
        law.raw_sd,
        mu.l1_distance(&target)
    );
    Ok(())
}
