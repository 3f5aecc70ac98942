//! Coarse projective integration with the edge density as the coarse
//! variable: 10 units of simulation, a least-squares slope over the last
//! three observations, a 10-unit projection, and re-lifting to Erdos-Renyi
//! graphs at the projected density.
//!
//!     cargo run --release --example edge_density_cpi

use netcoarse::cpi::{cpi_run, CoarseVariable, CpiConfig};
use netcoarse::evolution::{ModelParams, TimeUnit};
use netcoarse::graph::Graph;
use netcoarse::theory::{rho_closed_form, TheoryParams};

fn main() -> netcoarse::Result<()> {
    let params = ModelParams::new(100, 0.9, 1, TimeUnit::Nodes)?;
    let cfg = CpiConfig { coarse_variable: CoarseVariable::EdgeDensity, ..Default::default() };
    let report = cpi_run(|_, _| Ok(Graph::empty(100)), &params, &cfg, 12)?;
    let theory = TheoryParams { r: params.r, ..Default::default() };
    for c in &report.cycles {
        let last = c.observed.last().unwrap();
        let proj = c.projected.as_ref().unwrap();
        let exact = |t: f64| rho_closed_form(params.to_pairs_time(t), &theory);
        println!(
            "cycle {:2}: simulated to t={:5.0} rho={:.4} (exact {:.4}), projected to t={:5.0} rho={:.4} (exact {:.4})",
            c.cycle,
            last.time,
            last.edge_density,
            exact(last.time),
            proj.time,
            proj.edge_density,
            exact(proj.time)
        );
    }
    println!(
        "inner simulation covered {:.0} of {:.0} time units ({:.0}%)",
        report.inner_time,
        report.covered_time,
        100.0 * report.inner_cost_fraction()
    );
    Ok(())
}
