//! Slaving of subgraph counts to the degree sequence. A Havel-Hakimi graph
//! and an Erdos-Renyi graph with the same degree sequence start with very
//! different triangle counts; evolved on the same random stream, the
//! difference dies out at the triangle rate 3/(1-r).
//!
//!     cargo run --release --example slaving

use netcoarse::analysis::{estimate_rate, mean_series, RateFitConfig};
use netcoarse::evolution::{evolve_observed, observation_times, ModelParams, Observers, TimeUnit};
use netcoarse::lift::{havel_hakimi, lift_density};
use netcoarse::rng::{stream, Domain};
use netcoarse::theory::convergence_rates;

fn main() -> netcoarse::Result<()> {
    let params = ModelParams::new(100, 0.9, 5, TimeUnit::Pairs)?;
    let times = observation_times(0.3, 0.01)?;
    let mut diffs = Vec::new();
    for i in 0..300 {
        let mut er = lift_density(0.1, 100, &mut stream(params.seed, Domain::Initial, i))?;
        let mut hh = havel_hakimi(&er.degree_sequence())?;
        if i == 0 {
            println!("copy 0 at t=0: {} triangles (ER) vs {} (Havel-Hakimi)", er.triangle_count(), hh.triangle_count());
        }
        let a = evolve_observed(&mut er, &params, &times, Observers::subgraphs(), &mut stream(params.seed, Domain::Evolve, i));
        let b = evolve_observed(&mut hh, &params, &times, Observers::subgraphs(), &mut stream(params.seed, Domain::Evolve, i));
        diffs.push(a.iter().zip(&b).map(|(x, y)| x.triangle_count.unwrap() as f64 - y.triangle_count.unwrap() as f64).collect());
    }
    let mean = mean_series(&diffs)?;
    for (t, d) in times.iter().zip(&mean).step_by(5) {
        println!("t = {t:.2}: mean N_T(ER) - N_T(HH) = {d:9.2}");
    }
    let fit = estimate_rate(&times, &mean, &RateFitConfig::default())?;
    println!("fitted log slope {:.2}, theory -{:.0}", fit.slope, convergence_rates(params.r)?.triangle);
    Ok(())
}
