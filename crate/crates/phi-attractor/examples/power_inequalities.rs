//! Randomized checks of the power-map Lipschitz and monotonicity bounds.

use phi_attractor::hilbert::{equality_witnesses, fuzz_cell, Which};

fn main() {
    for which in [Which::Lipschitz, Which::Monotone] {
        for (dim, p) in [(1, 0.5), (3, 2.0), (10, 4.0)] {
            let c = fuzz_cell(which, dim, p, 20_000, 1);
            println!("{which:?} d={dim} p={p}: {} violations, worst gap {:.3e}", c.violations, c.worst_gap);
        }
    }
    for w in equality_witnesses(&[2], &[1.0, 3.0], 1) {
        println!("{} p={}: residual {:.1e}", w.name, w.p, w.residual);
    }
}
