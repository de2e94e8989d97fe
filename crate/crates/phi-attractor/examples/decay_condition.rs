//! Translate-ratio condition for the standard families and for `t^{-t}`.

use phi_attractor::decay::{check_decay_condition, DecayFunction, Family};

fn main() -> phi_attractor::Result<()> {
    for fam in [Family::Exponential, Family::Polynomial, Family::Logarithmic] {
        let phi = DecayFunction::standard(fam, 1.0, 1.0)?;
        for (omega, eta) in [(1.0, -3.0), (2.0, 3.0)] {
            let v = check_decay_condition(&phi, omega, eta, &phi.default_grid(omega, eta)?)?;
            println!("{fam:?} omega={omega} eta={eta}: bounded={} sup={:.4e}", v.bounded, v.sup_ratio);
        }
    }
    let phi = DecayFunction::self_power();
    let v = check_decay_condition(&phi, 1.0, -1.0, &phi.default_grid(1.0, -1.0)?)?;
    println!("t^-t eta=-1: bounded={} (sup {:.3e})", v.bounded, v.sup_ratio);
    Ok(())
}
