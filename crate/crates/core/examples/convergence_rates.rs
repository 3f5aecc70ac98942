//! Log-slope fits of the decay of SND, cherry count and relative triangle
//! count deviations, next to the mean-field rates.
//!
//!     cargo run --release --example convergence_rates [COPIES]

use netcoarse::protocols::{rate_experiment, RateExperimentConfig};
use netcoarse::theory::convergence_rates;

fn main() -> netcoarse::Result<()> {
    let copies = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let cfg = RateExperimentConfig { copies, ..Default::default() };
    let report = rate_experiment(&cfg)?;
    let theory = convergence_rates(cfg.r)?;
    println!("mean-field rates: degree {:.0}, cherry {:.0}, triangle {:.0}", theory.degree, theory.cherry, theory.triangle);
    for f in &report.fits {
        println!(
            "{:<20} slope {:7.2} on [{:.3}, {:.3}] ({} points, r^2 {:.3}, asymptote {:.4})",
            f.name, f.fit.slope, f.fit.t_lo, f.fit.t_hi, f.fit.points, f.fit.goodness, f.asymptote
        );
    }
    Ok(())
}
