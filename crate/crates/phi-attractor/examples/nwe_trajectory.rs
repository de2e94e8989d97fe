//! Wave equation with non-local damping: a trajectory, its energy, and the
//! admissibility report for the default nonlinearity.

use phi_attractor::nwe::energy::{energy_from, parts, Bounds};
use phi_attractor::nwe::experiments::low_mode_state;
use phi_attractor::nwe::{Model, NweConfig};

fn main() -> phi_attractor::Result<()> {
    let cfg = NweConfig { modes: 16, ..NweConfig::default() };
    let bounds = Bounds::from_config(&cfg)?;
    println!("c0 = {:.3}, M = {:.3}, C0 = {:.3}", bounds.f.c0, bounds.f.m, bounds.f.big_c0);
    let m = Model::new(&cfg)?;
    let x = low_mode_state(&m, 4, 5.0, 1);
    let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
    for (t, y) in times.iter().zip(m.trajectory(0.0, &x, &times)?) {
        let e = energy_from(&cfg, &parts(&m, *t, &y), bounds.f.big_c0);
        println!("t={t:>4}  |V|_X={:.5}  E={e:.5}", m.x_norm(&y));
    }
    Ok(())
}
