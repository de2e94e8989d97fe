//! Hausdorff semidistance and covering radii of a random point cloud.

use phi_attractor::metric::{ball_measure_estimate, hausdorff_semidistance, CoverMethod};
use phi_attractor::process::cube_sample;

fn main() -> phi_attractor::Result<()> {
    let e = cube_sample(2, 1.0, 12, 4)?;
    let f = cube_sample(2, 0.5, 6, 5)?;
    println!("d_H(E, F) = {:.4}, d_H(F, E) = {:.4}", hausdorff_semidistance(&e, &f)?, hausdorff_semidistance(&f, &e)?);
    for budget in 1..=4 {
        let g = ball_measure_estimate(&e, CoverMethod::Greedy, budget, 12)?;
        let x = ball_measure_estimate(&e, CoverMethod::Exact, budget, 12)?;
        println!("{budget} centers: greedy {:.4}  exact {:.4}", g.radius, x.radius);
    }
    Ok(())
}
