//! Ensemble of graphs started empty, evolved in C(n,2) time units; the mean
//! edge density is compared with its closed form and the trajectories are
//! written as CSV.
//!
//!     cargo run --release --example simulate_ensemble [OUT_DIR]

use std::fs::File;

use netcoarse::evolution::{run_ensemble, write_pooled_csv, write_trajectories_csv, ModelParams, Observers, TimeUnit};
use netcoarse::graph::Graph;
use netcoarse::theory::{rho_closed_form, TheoryParams};

fn main() -> netcoarse::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let params = ModelParams::new(100, 0.9, 42, TimeUnit::Pairs)?;
    let ens = run_ensemble(|_, _| Ok(Graph::empty(100)), &params, 100, 5.0, 0.25, Observers::all())?;

    let theory = TheoryParams { r: params.r, ..Default::default() };
    println!("{:>6} {:>10} {:>10}", "t", "ensemble", "theory");
    for (t, rho) in ens.times().iter().zip(ens.mean_edge_density()) {
        println!("{t:>6.2} {rho:>10.5} {:>10.5}", rho_closed_form(*t, &theory));
    }
    let last = ens.pooled.last().unwrap();
    println!("final pooled degrees: mean {:.2}, sd {:.2}", last.mean(), last.sd());

    write_trajectories_csv(&ens.trajectories, File::create(out.join("trajectories.csv"))?)?;
    write_pooled_csv(&ens.times(), &ens.pooled, File::create(out.join("pooled.csv"))?)?;
    println!("wrote trajectories.csv and pooled.csv to {}", out.display());
    Ok(())
}
