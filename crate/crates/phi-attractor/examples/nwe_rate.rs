//! Polynomial attraction rates of the decay-only wave model for several `p`.

use phi_attractor::nwe::experiments::{rate_experiment, RateConfig};

fn main() -> phi_attractor::Result<()> {
    let r = rate_experiment(&RateConfig::default())?;
    for run in &r.runs {
        let c = &run.certificate;
        println!(
            "p={}: slope {:.3} (reference {:.3}), C={:.3}, valid={}, margin {:.3}",
            run.p,
            c.slope.unwrap_or(f64::NAN),
            -1.0 / run.p,
            c.c,
            c.valid,
            c.margin
        );
    }
    println!("slopes ordered: {}", r.slopes_ordered);
    Ok(())
}
