//! Power-map inequalities on `R^d` with the Euclidean inner product, and the
//! mean-value gap for `t -> t^{1 - 1/beta}`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VecSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `|x|^p x`, with `|0|^p 0 = 0` for every `p >= 0`.
pub fn power_map(x: &[f64], p: f64) -> Vec<f64> {
    let n = norm(x);
    let s = if n == 0.0 { 0.0 } else { n.powf(p) };
    x.iter().map(|v| s * v).collect()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

/// `| |x|^p x - |y|^p y | <= (p + 1) R^p |x - y|` on the ball of radius `R`.
pub fn check_power_lipschitz(s: &VecSample) -> Check {
    let lhs = norm(&sub(&power_map(&s.x, s.p), &power_map(&s.y, s.p)));
    let rhs = (s.p + 1.0) * s.r.powf(s.p) * norm(&sub(&s.x, &s.y));
    Check { lhs, rhs, holds: lhs <= rhs + SLACK * scale(rhs) }
}

/// `< |x|^p x - |y|^p y, x - y > >= 2^{-p} |x - y|^{p + 2}`.
pub fn check_monotone_power(s: &VecSample) -> Check {
    let d = sub(&s.x, &s.y);
    let lhs = dot(&sub(&power_map(&s.x, s.p), &power_map(&s.y, s.p)), &d);
    let rhs = 2f64.powf(-s.p) * norm(&d).powf(s.p + 2.0);
    Check { lhs, rhs, holds: lhs >= rhs - SLACK * scale(rhs) }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanValue {
    pub theta: f64,
    pub residual: f64,
    pub holds: bool,
}

/// Solves `b^q - a^q = q [theta a + (1 - theta) b]^{-1/beta} (b - a)` with
/// `q = 1 - 1/beta` for `theta in (0, 1)` by bisection. The residual is
/// relative to `max(1, |b^q - a^q|)`.
pub fn mean_value_gap(a: f64, b: f64, beta: f64) -> Result<MeanValue> {
    if !(a > 0.0 && b > a) {
        return invalid("need 0 < a < b");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return invalid("beta must lie in (0, 1)");
    }
    let q = 1.0 - 1.0 / beta;
    let lhs = b.powf(q) - a.powf(q);
    let g = |theta: f64| q * (theta * a + (1.0 - theta) * b).powf(-1.0 / beta) * (b - a) - lhs;
    // g is decreasing in theta on the bracket (0, 1).
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    let residual = g(theta).abs() / scale(lhs);
    Ok(MeanValue { theta, residual, holds: residual < 1e-12 && theta > 0.0 && theta < 1.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub name: String,
    pub p: f64,
    pub dim: usize,
    /// `|lhs - rhs| / max(|rhs|, 1)`.
    pub residual: f64,
}

/// Cases where the inequalities are tight: `p = 0` for both, and antipodal
/// pairs `y = -x` for the monotonicity bound.
pub fn equality_witnesses(dims: &[usize], ps: &[f64], seed: u64) -> Vec<Witness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rel = |c: Check| (c.lhs - c.rhs).abs() / scale(c.rhs);
    let mut out = Vec::new();
    for &dim in dims {
        let pair = draw_pair(&mut rng, dim, 0.0, 2.0);
        out.push(Witness { name: "lipschitz_p0".into(), p: 0.0, dim, residual: rel(check_power_lipschitz(&pair)) });
        out.push(Witness { name: "monotone_p0".into(), p: 0.0, dim, residual: rel(check_monotone_power(&pair)) });
        for &p in ps {
            let x = draw_pair(&mut rng, dim, p, 2.0).x;
            let y: Vec<f64> = x.iter().map(|v| -v).collect();
            let c = check_monotone_power(&VecSample { x, y, p, r: 2.0 });
            out.push(Witness { name: "monotone_antipodal".into(), p, dim, residual: rel(c) });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Lipschitz,
    Monotone,
    Mvt,
}

impl std::str::FromStr for Which {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lipschitz" => Ok(Which::Lipschitz),
            "monotone" => Ok(Which::Monotone),
            "mvt" => Ok(Which::Mvt),
            other => invalid(format!("unknown inequality '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzCell {
    pub which: Which,
    pub dim: usize,
    pub p: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest normalized `lhs - rhs` (Lipschitz) or `rhs - lhs` (monotone).
    pub worst_gap: f64,
}

/// Draws a pair uniformly in `[-R, R]^d`, radially projecting points that
/// leave the ball back onto its boundary.
pub fn draw_pair(rng: &mut ChaCha8Rng, dim: usize, p: f64, r: f64) -> VecSample {
    let mut draw = || {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-r..=r)).collect();
        let n = norm(&v);
        if n > r {
            v.iter_mut().for_each(|c| *c *= r / n);
        }
        v
    };
    let x = draw();
    let y = draw();
    VecSample { x, y, p, r }
}

/// Fuzzes one (inequality, dimension, exponent) cell in parallel batches.
/// Each batch owns a stream derived from `seed`, so results do not depend on
/// the thread count.
pub fn fuzz_cell(which: Which, dim: usize, p: f64, samples: usize, seed: u64) -> FuzzCell {
    const BATCH: usize = 4096;
    let batches = samples.div_ceil(BATCH);
    let per: Vec<(usize, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let n = BATCH.min(samples - b * BATCH);
            let mut viol = 0;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..n {
                match which {
                    Which::Mvt => {
                        let a = rng.gen_range(0.1..10.0);
                        let b = a + rng.gen_range(1e-3..10.0);
                        let beta = rng.gen_range(0.1..0.9);
                        let m = mean_value_gap(a, b, beta).expect("valid draw");
                        viol += usize::from(!m.holds);
                        worst = worst.max(m.residual);
                    }
                    _ => {
                        let s = draw_pair(&mut rng, dim, p, 1.0);
                        let (c, gap) = if which == Which::Lipschitz {
                            let c = check_power_lipschitz(&s);
                            (c, (c.lhs - c.rhs) / scale(c.rhs))
                        } else {
                            let c = check_monotone_power(&s);
                            (c, (c.rhs - c.lhs) / scale(c.rhs))
                        };
                        viol += usize::from(!c.holds);
                        worst = worst.max(gap);
                    }
                }
            }
            (viol, worst)
        })
        .collect();
    let violations = per.iter().map(|v| v.0).sum();
    let worst_gap = per.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    FuzzCell { which, dim, p, samples, violations, worst_gap }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &[f64], y: &[f64], p: f64, r: f64) -> VecSample {
        VecSample { x: x.to_vec(), y: y.to_vec(), p, r }
    }

    #[test]
    fn lipschitz_direct_value() {
        let c = check_power_lipschitz(&s(&[1.0], &[-1.0], 1.0, 1.0));
        assert_eq!((c.lhs, c.rhs, c.holds), (2.0, 4.0, true));
    }

    #[test]
    fn zero_exponent_is_equality() {
        let v = s(&[0.3, -1.2, 2.0], &[1.0, 0.5, -0.7], 0.0, 3.0);
        let l = check_power_lipschitz(&v);
        assert_eq!(l.lhs, l.rhs);
        let m = check_monotone_power(&v);
        assert!((m.lhs - m.rhs).abs() <= 1e-12 * m.rhs);
    }

    #[test]
    fn antipodal_pair_is_tight() {
        for p in [0.5, 1.0, 2.0, 3.7] {
            let m = check_monotone_power(&s(&[0.6, -0.8], &[-0.6, 0.8], p, 1.0));
            assert!((m.lhs - 4.0).abs() < 1e-12 && (m.rhs - 4.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn identical_pair_is_zero() {
        let v = s(&[1.0, 2.0], &[1.0, 2.0], 2.0, 3.0);
        assert_eq!(check_power_lipschitz(&v).lhs, 0.0);
        assert_eq!(check_monotone_power(&v).rhs, 0.0);
    }

    #[test]
    fn mean_value_matches_closed_form() {
        for (a, b, beta) in [(1.0, 2.0, 0.5), (1.0, 4.0, 0.75), (0.2, 0.21, 0.3)] {
            let m = mean_value_gap(a, b, beta).unwrap();
            assert!(m.holds, "{m:?}");
            let q: f64 = 1.0 - 1.0 / beta;
            let mid = ((b.powf(q) - a.powf(q)) / (q * (b - a))).powf(-beta);
            let theta = (b - mid) / (b - a);
            assert!((m.theta - theta).abs() < 1e-9, "{} vs {}", m.theta, theta);
        }
        assert!(mean_value_gap(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn small_fuzz_has_no_violations() {
        for which in [Which::Lipschitz, Which::Monotone, Which::Mvt] {
            let c = fuzz_cell(which, 8, 2.0, 2000, 7);
            assert_eq!(c.violations, 0, "{c:?}");
        }
    }

    #[test]
    fn fuzz_is_reproducible() {
        let a = fuzz_cell(Which::Monotone, 3, 1.5, 5000, 42);
        let b = fuzz_cell(Which::Monotone, 3, 1.5, 5000, 42);
        assert_eq!(a.worst_gap, b.worst_gap);
    }
}
