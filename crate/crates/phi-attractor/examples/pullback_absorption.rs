//! Invariance and uniform pullback absorption for a forced planar contraction.

use phi_attractor::metric::NormTag;
use phi_attractor::process::models::AffineDiscrete;
use phi_attractor::process::{ball_sample, check_positive_invariance, check_uniform_pullback_absorption, BallFamily};

fn main() -> phi_attractor::Result<()> {
    let proc = AffineDiscrete::contracting_2d(0.3);
    let b = BallFamily::new(vec![0.0, 0.0], 5.0, NormTag::Euclidean, 32, 3)?;
    let labels: Vec<f64> = (-5..=0).map(f64::from).collect();
    let inv = check_positive_invariance(&proc, &b, &labels, 1e-8)?;
    println!("invariant: {} (worst excess {:.2e})", inv.holds, inv.worst_excess);

    let d = ball_sample(&[0.0, 0.0], 50.0, &NormTag::Euclidean, 16, 4)?;
    let lags: Vec<f64> = (1..=12).map(f64::from).collect();
    let abs = check_uniform_pullback_absorption(&proc, &b, &d, 0.0, &labels, &lags, 1e-8)?;
    for (r, e) in &abs.excess_by_lag {
        println!("lag {r:>4}: excess {e:.3e}");
    }
    println!("absorbed after lag {:?}", abs.t_found);
    Ok(())
}
