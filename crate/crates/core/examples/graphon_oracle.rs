//! Mean-field oracle: a two-block graphon evolved with the explicit solution,
//! its subgraph densities against the density ODE, and the closed-form
//! edge-density and degree curves.
//!
//!     cargo run --release --example graphon_oracle

use netcoarse::theory::{
    convergence_rates, degree_closed_form, graphon_evolve, integrate_densities, rho_closed_form, subgraph_densities,
    Graphon, TheoryParams,
};

fn main() -> netcoarse::Result<()> {
    let r = 0.9;
    let w0 = Graphon::two_block(200, 0.3, 0.8, 0.1, 0.4)?;
    let p = TheoryParams::new(r, w0.edge_density(), 0.5)?;
    let times = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0];
    let ode = integrate_densities(&subgraph_densities(&w0), r, &times)?;
    println!("{:>5} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}", "t", "rho", "D", "cherry", "ode", "triangle", "ode");
    for (t, s) in times.iter().zip(&ode) {
        let w = graphon_evolve(&w0, *t, &p)?;
        let g = subgraph_densities(&w);
        println!(
            "{t:>5.2} {:>8.5} {:>9.5} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
            rho_closed_form(*t, &p),
            degree_closed_form(*t, &p)?,
            g.cherry,
            s.cherry,
            g.triangle,
            s.triangle
        );
    }
    let w = graphon_evolve(&w0, 10.0, &p)?;
    println!("max |W(10) - (1-r)| = {:.2e}", w.max_abs_deviation(1.0 - r));
    println!("{:?}", convergence_rates(r)?);
    Ok(())
}
