//! Nonlinearity instances and the checks of their growth and sign conditions.

use serde::Serialize;

use super::config::{FSpec, NweConfig};
use super::quad;
use crate::error::{Error, Result};
use crate::grid;

/// `f`, its partial derivatives, the primitive `F = int_0^v f` and `dF/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FInstance(pub FSpec);

fn gauss(v: f64) -> f64 {
    (-v * v).exp()
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

impl FInstance {
    pub fn new(spec: &FSpec) -> Self {
        FInstance(spec.clone())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, FSpec::Zero) || matches!(self.0, FSpec::Linear { c } if c == 0.0)
    }

    pub fn f(&self, t: f64, v: f64) -> f64 {
        match self.0 {
            FSpec::Zero => 0.0,
            FSpec::Linear { c } => c * v,
            FSpec::Cubic { alpha } => v * v * v + alpha * v,
            FSpec::Default => v * v * v + t.sin() * (1.0 - 2.0 * v * v) * gauss(v),
            FSpec::Literal => v * v * v + t.sin() * (1.0 - v * v) * gauss(v),
        }
    }

    pub fn f_v(&self, t: f64, v: f64) -> f64 {
        match self.0 {
            FSpec::Zero => 0.0,
            FSpec::Linear { c } => c,
            FSpec::Cubic { alpha } => 3.0 * v * v + alpha,
            FSpec::Default => 3.0 * v * v + t.sin() * (4.0 * v * v * v - 6.0 * v) * gauss(v),
            FSpec::Literal => 3.0 * v * v + t.sin() * (2.0 * v * v * v - 4.0 * v) * gauss(v),
        }
    }

    pub fn f_t(&self, t: f64, v: f64) -> f64 {
        match self.0 {
            FSpec::Zero | FSpec::Linear { .. } | FSpec::Cubic { .. } => 0.0,
            FSpec::Default => t.cos() * (1.0 - 2.0 * v * v) * gauss(v),
            FSpec::Literal => t.cos() * (1.0 - v * v) * gauss(v),
        }
    }

    /// Time-independent part of the primitive plus `sin(t)` times `shape(v)`.
    fn shape(&self, v: f64) -> f64 {
        match self.0 {
            FSpec::Default => v * gauss(v),
            FSpec::Literal => SQRT_PI / 4.0 * libm::erf(v) + 0.5 * v * gauss(v),
            _ => 0.0,
        }
    }

    pub fn big_f(&self, t: f64, v: f64) -> f64 {
        match self.0 {
            FSpec::Zero => 0.0,
            FSpec::Linear { c } => 0.5 * c * v * v,
            FSpec::Cubic { alpha } => 0.25 * v.powi(4) + 0.5 * alpha * v * v,
            FSpec::Default | FSpec::Literal => 0.25 * v.powi(4) + t.sin() * self.shape(v),
        }
    }

    pub fn big_f_t(&self, t: f64, v: f64) -> f64 {
        t.cos() * self.shape(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleGrid {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

impl SampleGrid {
    /// `t` over two periods of the forcing, `v` symmetric on `[-vmax, vmax]`.
    pub fn standard(nt: usize, nv: usize, vmax: f64) -> Self {
        SampleGrid { t: grid::uniform(0.0, 4.0 * std::f64::consts::PI, nt), v: grid::uniform(-vmax, vmax, nv) }
    }
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::standard(49, 801, 20.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedCheck {
    pub name: &'static str,
    pub holds: bool,
    /// Largest normalised `lhs - rhs`.
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FReport {
    pub c0: f64,
    /// `M(mu0)`.
    pub m: f64,
    /// `8 c0 (1 + M^4) |Omega|`.
    pub big_c0: f64,
    pub e0: f64,
    /// `sup_t int_R |dF/dt| dv`, measured on `[-V, V]`.
    pub ft_integral: f64,
    pub checks: Vec<NamedCheck>,
}

const REL: f64 = 1e-9;

fn reject(reason: impl Into<String>, t: f64, v: f64) -> Error {
    Error::Rejected { reason: reason.into(), t, v }
}

/// `int_{-V}^{V} |dF/dt(t, v)| dv`.
fn ft_abs_integral(f: &FInstance, t: f64, vmax: f64) -> f64 {
    quad::composite(|v| f.big_f_t(t, v).abs(), -vmax, vmax, (40.0 * vmax).ceil() as usize, 8)
}

/// Checks the growth, sign and integrability conditions on a `(t, v)` grid
/// and fits `c0`, `M(mu0)`, `C0` and `e0`.
pub fn validate_f_instance(cfg: &NweConfig, grid: &SampleGrid) -> Result<FReport> {
    let f = FInstance::new(&cfg.f);
    let l1 = cfg.lambda1();
    let mu0 = cfg.mu0;
    let vmax = grid.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = |v: f64| v.abs() >= 0.5 * vmax;

    // Dissipativity at infinity.
    for &t in &grid.t {
        for &v in grid.v.iter().filter(|v| tail(**v)) {
            if f.f_v(t, v) <= -l1 {
                return Err(reject("df/dv does not stay above -lambda1 for large |v|", t, v));
            }
            if v != 0.0 && f.f(t, v) / v <= -l1 {
                return Err(reject("f/v does not stay above -lambda1 for large |v|", t, v));
            }
        }
    }

    // M(mu0): beyond it both quotients stay above -mu0.
    let bad = |v: f64| grid.t.iter().any(|&t| f.f_v(t, v) <= -mu0 || (v != 0.0 && f.f(t, v) / v <= -mu0) || v == 0.0);
    let step = grid.v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut m = step;
    for &v in &grid.v {
        if bad(v) {
            m = m.max(v.abs());
        }
    }
    if m >= vmax {
        return Err(reject("no M(mu0) inside the sampled range", grid.t[0], vmax));
    }

    // Integrability of dF/dt: the integral must not grow when the window doubles.
    let mut ft_integral = 0.0f64;
    for &t in &grid.t {
        let a = ft_abs_integral(&f, t, vmax);
        let b = ft_abs_integral(&f, t, 2.0 * vmax);
        if b - a > 1e-6 * (1.0 + a) {
            return Err(reject("dF/dt is not integrable in v", t, 2.0 * vmax));
        }
        ft_integral = ft_integral.max(b);
    }

    // Smallest admissible c0 on the grid.
    let mut c0 = ft_integral;
    for &t in &grid.t {
        c0 = c0.max(f.f(t, 0.0).abs());
        for &v in &grid.v {
            c0 = c0.max(f.f_v(t, v).abs() / (1.0 + v * v)).max(f.f_t(t, v).abs());
        }
    }
    let c0 = c0.max(1e-12);
    let bound_m = 8.0 * c0 * (1.0 + m.powi(4));
    let big_c0 = bound_m * cfg.length;

    let mut checks = Vec::new();
    let mut push = |name: &'static str, worst: f64| checks.push(NamedCheck { name, holds: worst <= REL, worst });
    let norm = |lhs: f64, rhs: f64| (lhs - rhs) / rhs.abs().max(1.0);

    let stride = (grid.v.len() / 97).max(1);
    let pair_v: Vec<f64> = grid.v.iter().step_by(stride).copied().collect();
    let (mut w1, mut w2, mut w3, mut w4, mut w5) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &t in &grid.t {
        for &v in &grid.v {
            w1 = w1.max(norm(f.f(t, v).abs(), 2.0 * c0 * (1.0 + v.abs().powi(3))));
            w3 = w3.max(norm(f.big_f(t, v).abs(), 4.0 * c0 * (1.0 + v.powi(4))));
        }
        for &v in &pair_v {
            for &w in &pair_v {
                let d = (v - w).abs();
                w2 = w2.max(norm((f.f(t, v) - f.f(t, w)).abs(), 2.0 * c0 * (1.0 + v * v + w * w) * d));
                w4 = w4.max(norm(
                    (f.big_f(t, v) - f.big_f(t, w)).abs(),
                    4.0 * c0 * (1.0 + v.abs().powi(3) + w.abs().powi(3)) * d,
                ));
                w5 = w5.max(norm((f.big_f_t(t, v) - f.big_f_t(t, w)).abs(), 2.0 * c0 * d));
            }
        }
    }
    push("growth_f", w1);
    push("lipschitz_f", w2);
    push("growth_F", w3);
    push("lipschitz_F", w4);
    push("lipschitz_Ft", w5);

    let mut w_int = f64::NEG_INFINITY;
    let mut w_f_out = f64::NEG_INFINITY;
    let mut w_f_in = f64::NEG_INFINITY;
    let mut e0 = 0.0f64;
    for &t in &grid.t {
        let int = quad::composite(|v| f.f(t, v).abs(), -m, m, 64, 8);
        w_int = w_int.max(norm(int, bound_m));
        for &v in &grid.v {
            let big = f.big_f(t, v);
            if v.abs() > m {
                w_f_out = w_f_out.max(norm(-big, (mu0 + l1) / 4.0 * v * v + bound_m));
                e0 = e0.max(big - v * f.f(t, v) - 0.5 * mu0 * v * v);
            } else {
                w_f_in = w_f_in.max(norm(big.abs(), bound_m));
            }
        }
    }
    push("local_integral_f", w_int);
    push("lower_bound_F", w_f_out);
    push("local_bound_F", w_f_in.max(f64::NEG_INFINITY));

    if let Some(bad) = checks.iter().find(|c| !c.holds) {
        return Err(reject(format!("inequality {} fails (excess {:e})", bad.name, bad.worst), f64::NAN, f64::NAN));
    }
    Ok(FReport { c0, m, big_c0, e0: e0.max(1e-12), ft_integral, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(f: FSpec) -> NweConfig {
        NweConfig { f, ..NweConfig::default() }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for spec in [FSpec::Default, FSpec::Literal, FSpec::Cubic { alpha: -0.3 }] {
            let f = FInstance::new(&spec);
            for &(t, v) in &[(0.3, 0.7), (2.0, -1.4), (5.0, 2.5)] {
                let h = 1e-6;
                let dv = (f.f(t, v + h) - f.f(t, v - h)) / (2.0 * h);
                let dt = (f.f(t + h, v) - f.f(t - h, v)) / (2.0 * h);
                let dfv = (f.big_f(t, v + h) - f.big_f(t, v - h)) / (2.0 * h);
                let dft = (f.big_f(t + h, v) - f.big_f(t - h, v)) / (2.0 * h);
                assert!((dv - f.f_v(t, v)).abs() < 1e-7, "{spec:?} f_v");
                assert!((dt - f.f_t(t, v)).abs() < 1e-7, "{spec:?} f_t");
                assert!((dfv - f.f(t, v)).abs() < 1e-7, "{spec:?} F_v");
                assert!((dft - f.big_f_t(t, v)).abs() < 1e-7, "{spec:?} F_t");
            }
        }
    }

    #[test]
    fn primitive_matches_quadrature() {
        let f = FInstance::new(&FSpec::Literal);
        let q = quad::composite(|x| f.f(1.1, x), 0.0, 2.3, 50, 8);
        assert!((q - f.big_f(1.1, 2.3)).abs() < 1e-12);
    }

    #[test]
    fn default_instance_is_accepted() {
        let r = validate_f_instance(&cfg(FSpec::Default), &SampleGrid::default()).unwrap();
        assert!((r.ft_integral - 1.0).abs() < 1e-9, "{}", r.ft_integral);
        assert!(r.c0 >= 1.0 && r.m > 0.0 && r.m < 2.0, "{r:?}");
        assert!((r.big_c0 - 8.0 * r.c0 * (1.0 + r.m.powi(4)) * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn zero_instance_is_accepted() {
        let r = validate_f_instance(&cfg(FSpec::Zero), &SampleGrid::default()).unwrap();
        assert!(r.c0 <= 1e-12 && r.big_c0 < 1e-9);
    }

    #[test]
    fn strongly_negative_linear_is_rejected() {
        let e = validate_f_instance(&cfg(FSpec::Linear { c: -2.0 }), &SampleGrid::default()).unwrap_err();
        assert!(matches!(e, Error::Rejected { .. }), "{e}");
    }

    #[test]
    fn literal_instance_fails_integrability() {
        let e = validate_f_instance(&cfg(FSpec::Literal), &SampleGrid::default()).unwrap_err();
        assert!(e.to_string().contains("not integrable"), "{e}");
    }
}
