//! The sequence `t_{n+1} = v(t_n)` and its algebraic envelope.

use phi_attractor::poly_rate::{check_sequence, sequence_table, UVSystem};

fn main() -> phi_attractor::Result<()> {
    let sys = UVSystem::new(2.0 / 3.0, 0.5)?;
    let rep = check_sequence(&sys, 10.0, 500)?;
    println!("{rep:#?}");
    for (n, t, env) in sequence_table(&sys, 10.0, 500)?.into_iter().step_by(50) {
        println!("n={n:>3}  t_n={t:.6e}  envelope={env:.6e}");
    }
    Ok(())
}
