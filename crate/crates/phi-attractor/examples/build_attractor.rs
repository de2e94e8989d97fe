//! Covering construction for a contracting affine process and its seven properties.

use phi_attractor::constructor::{build_family, BuildOptions};
use phi_attractor::decay::{DecayFunction, Family};
use phi_attractor::metric::NormTag;
use phi_attractor::process::models::AffineDiscrete;
use phi_attractor::process::BallFamily;

fn main() -> phi_attractor::Result<()> {
    let proc = AffineDiscrete::contracting_2d(0.3);
    let b = BallFamily::new(vec![0.0, 0.0], 1.0, NormTag::Euclidean, 40, 3)?;
    let phi = DecayFunction::standard(Family::Exponential, 1.0, 1.0)?;
    let omega = -(0.5f64 * 1.25f64.sqrt()).ln();
    let (fam, report) = build_family(&proc, &b, &phi, &BuildOptions::new(-10, 0, 6, 8, omega), 1e-8)?;
    println!("C = {:.4}, {} points", fam.c_const, fam.total_points());
    for p in &report.properties {
        println!("({}) holds={} worst excess {:.2e}", p.index, p.holds, p.worst_excess);
    }
    for k in fam.k_range() {
        let e = fam.e_set(k)?;
        println!("E_{k}: {} points, diameter {:.4}", e.len(), e.diameter());
    }
    Ok(())
}
