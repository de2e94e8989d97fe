//! Pair estimates, pseudometric tables and contractivity scans on a small run.

use phi_attractor::nwe::contraction::{contraction_experiment, ContractionConfig};
use phi_attractor::nwe::NweConfig;

fn main() -> phi_attractor::Result<()> {
    let cfg = NweConfig { modes: 12, ..NweConfig::default() };
    let opts = ContractionConfig { pairs: 8, table_states: 10, scan_items: 10, ..ContractionConfig::default() };
    let r = contraction_experiment(&cfg, &opts)?;
    println!("Gamma_T1 = {:.4}, Gamma_T2 = {:.4}", r.gammas.gamma_t1, r.gammas.gamma_t2);
    println!("violations {}, identity residual {:.2e}", r.inequality_violations, r.worst_identity_residual);
    println!("rho1 ok {}, rho2 ok {}", r.rho1_axioms.ok(), r.rho2_axioms.ok());
    println!("psi1 tail {:.2e}, psi2 tail {:.2e}", r.psi1_scan.min_tail_value, r.psi2_scan.min_tail_value);
    Ok(())
}
