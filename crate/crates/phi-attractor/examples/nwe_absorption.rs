//! Long-time norm plateau of the wave model from spheres of growing radius.

use phi_attractor::nwe::experiments::{absorbing_experiment, AbsorbingConfig};
use phi_attractor::nwe::NweConfig;

fn main() -> phi_attractor::Result<()> {
    let cfg = NweConfig { modes: 16, ..NweConfig::default() };
    let opts = AbsorbingConfig { per_radius: 3, horizon: 30.0, ..AbsorbingConfig::default() };
    let r = absorbing_experiment(&cfg, &opts)?;
    for run in &r.runs {
        println!("R={:>4}: plateau {:.5}, enters r0 ball at {:?}", run.radius, run.plateau, run.tau0);
    }
    println!("r0 = {:.5}, spread {:.2e}", r.r0, r.spread);
    Ok(())
}
