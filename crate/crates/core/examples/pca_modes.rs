//! Principal components of the relaxation of the degree distribution,
//! matched against the first two Fokker-Planck eigenfunctions.
//!
//!     cargo run --release --example pca_modes

use netcoarse::protocols::{pca_experiment, PcaExperimentConfig};

fn main() -> netcoarse::Result<()> {
    let report = pca_experiment(&PcaExperimentConfig::default())?;
    let sv = &report.pca.singular_values;
    println!("leading singular values: {:.4} {:.4} {:.4}", sv[0], sv[1], sv[2]);
    println!("sigma2 / sigma1 = {:.4}", report.pca.ratio());
    for (k, m) in [(1, &report.f1_match), (2, &report.f2_match)] {
        println!("component {k} vs f{k}: correlation {:.4} (shift {:.2}, scale {:.2})", m.correlation, m.shift, m.scale);
    }
    println!("{:>4} {:>10} {:>10}", "d", "pc1", "pc2");
    for d in (0..30).step_by(2) {
        println!("{d:>4} {:>10.4} {:>10.4}", report.pca.components[0][d], report.pca.components[1][d]);
    }
    Ok(())
}
