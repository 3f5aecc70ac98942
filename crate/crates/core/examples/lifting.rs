//! Restriction and lifting: percentile curves, Havel-Hakimi realizations of
//! sampled degree sequences, and the lift/restrict round trip.
//!
//!     cargo run --release --example lifting

use netcoarse::lift::{from_percentile_curve, havel_hakimi, lift_distribution, restrict, to_percentile_curve, DegreeDistribution};

fn main() -> netcoarse::Result<()> {
    let mu = DegreeDistribution::binomial(100, 0.25)?;
    let curve = to_percentile_curve(&mu);
    println!("percentiles 0, 25, 50, 75, 100: {:?}", [0, 25, 50, 75, 100].map(|i| (curve.values[i] * 100.0).round() / 100.0));
    let back = from_percentile_curve(&curve, 100)?;
    println!("percentile round trip L1 {:.4}", back.l1_distance(&mu));

    let lifted = lift_distribution(&mu, 200, 7, 1000)?;
    let restored = restrict(&lifted.graphs)?;
    println!(
        "lifted 200 graphs ({} rejected draws), restricted L1 {:.4}, mean {:.2}",
        lifted.retries.iter().sum::<usize>(),
        restored.l1_distance(&mu),
        restored.mean()
    );

    let g = havel_hakimi(&[3, 3, 2, 2, 1, 1])?;
    println!("Havel-Hakimi on [3,3,2,2,1,1]: edges {:?}", g.edges());
    println!("[3,3,3,1] graphical: {}", havel_hakimi(&[3, 3, 3, 1]).is_ok());
    Ok(())
}
