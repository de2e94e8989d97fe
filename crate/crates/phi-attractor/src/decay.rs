//! Decay functions and the translate-ratio condition.
//!
//! A decay function is a decreasing map `phi: [k, inf) -> [0, inf)` tending to
//! zero whose translates stay comparable:
//! `limsup phi(omega t + eta) / phi(omega t) < inf` for every `omega > 0`, `eta`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Polynomial,
    Logarithmic,
    Custom,
}

impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Family::Exponential),
            "polynomial" => Ok(Family::Polynomial),
            "logarithmic" => Ok(Family::Logarithmic),
            "custom" => Ok(Family::Custom),
            other => invalid(format!("unknown decay family '{other}'")),
        }
    }
}

#[derive(Clone)]
pub struct DecayFunction {
    pub domain_start: f64,
    pub family: Family,
    pub params: Vec<(String, f64)>,
    eval: Eval,
    log_eval: Option<Eval>,
}

impl fmt::Debug for DecayFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecayFunction")
            .field("domain_start", &self.domain_start)
            .field("family", &self.family)
            .field("params", &self.params)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayVerdict {
    pub bounded: bool,
    pub sup_ratio: f64,
    pub first_decade_sup: f64,
    pub last_decade_sup: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub monotone: bool,
    pub nonnegative: bool,
    pub vanishing: bool,
    pub tail_value: f64,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.monotone && self.nonnegative && self.vanishing
    }
}

impl DecayFunction {
    /// One of the three standard families `c e^{-bt}`, `c t^{-b}`, `c ln(t)^{-b}`.
    pub fn standard(family: Family, c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && beta > 0.0 && c.is_finite() && beta.is_finite()) {
            return invalid(format!("decay parameters must be positive, got c={c}, beta={beta}"));
        }
        let lc = c.ln();
        let (domain_start, eval, log_eval): (f64, Eval, Eval) = match family {
            Family::Exponential => (
                0.0,
                Arc::new(move |t: f64| c * (-beta * t).exp()),
                Arc::new(move |t: f64| lc - beta * t),
            ),
            Family::Polynomial => (
                1.0,
                Arc::new(move |t: f64| c * t.powf(-beta)),
                Arc::new(move |t: f64| lc - beta * t.ln()),
            ),
            Family::Logarithmic => (
                std::f64::consts::E,
                Arc::new(move |t: f64| c * t.ln().powf(-beta)),
                Arc::new(move |t: f64| lc - beta * t.ln().ln()),
            ),
            Family::Custom => return invalid("custom family has no standard form"),
        };
        Ok(DecayFunction {
            domain_start,
            family,
            params: vec![("c".into(), c), ("beta".into(), beta)],
            eval,
            log_eval: Some(log_eval),
        })
    }

    /// Power law `s^exponent` with a negative exponent, on `[domain_start, inf)`.
    pub fn power(exponent: f64, domain_start: f64) -> Result<Self> {
        if !(exponent < 0.0) || !(domain_start > 0.0) {
            return invalid("power decay needs a negative exponent and positive domain start");
        }
        let mut phi = Self::standard(Family::Polynomial, 1.0, -exponent)?;
        phi.domain_start = domain_start;
        Ok(phi)
    }

    /// Registers a user-supplied function, checking the invariants on the
    /// default grid. `log_eval`, when given, is used for ratios far in the tail.
    pub fn custom(
        name: &str,
        domain_start: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_eval: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Result<Self> {
        if !(domain_start >= 0.0) {
            return invalid("domain start must be nonnegative");
        }
        let phi = DecayFunction {
            domain_start,
            family: Family::Custom,
            params: vec![(name.to_string(), f64::NAN)],
            eval: Arc::new(eval),
            log_eval: log_eval.map(|f| Arc::from(f) as Eval),
        };
        let lo = (domain_start * 10.0).max(1.0);
        let g = grid::geometric(lo, 1e6_f64.max(lo * 1e4), 256)?;
        let report = phi.check_invariants(&g, 1e-3);
        if !report.ok() {
            return invalid(format!("custom decay function '{name}' fails invariants: {report:?}"));
        }
        Ok(phi)
    }

    /// `t^{-t}`, decreasing on `[1, inf)`, which violates the translate condition for `eta < 0`.
    pub fn self_power() -> Self {
        DecayFunction {
            domain_start: 1.0,
            family: Family::Custom,
            params: vec![("self_power".into(), f64::NAN)],
            eval: Arc::new(|t: f64| t.powf(-t)),
            log_eval: Some(Arc::new(|t: f64| -t * t.ln())),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn ln_eval(&self, t: f64) -> f64 {
        match &self.log_eval {
            Some(f) => f(t),
            None => self.eval(t).ln(),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Exponent of a power law, if this is one.
    pub fn power_exponent(&self) -> Option<f64> {
        (self.family == Family::Polynomial).then(|| -self.param("beta").unwrap_or(f64::NAN))
    }

    pub fn check_invariants(&self, grid: &[f64], tol: f64) -> InvariantReport {
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let monotone = vals.windows(2).all(|w| w[1] <= w[0]);
        let nonnegative = vals.iter().all(|&v| v >= 0.0);
        let tail_value = vals.last().copied().unwrap_or(f64::NAN);
        InvariantReport { monotone, nonnegative, vanishing: tail_value < tol, tail_value }
    }

    /// Default grid for the translate check: 256 geometric points starting at
    /// `max(10 k, 1)`, pushed right if needed so that `omega t + eta >= k`.
    pub fn default_grid(&self, omega: f64, eta: f64) -> Result<Vec<f64>> {
        let mut lo = (self.domain_start * 10.0).max(1.0);
        let need = (self.domain_start - eta) / omega;
        if need > lo {
            lo = need * 10.0;
        }
        grid::geometric(lo, 1e6_f64.max(lo * 1e4), 256)
    }
}

/// Empirical limsup proxy for `phi(omega t + eta) / phi(omega t)`.
///
/// The ratio is formed in log space so that fast-decaying functions do not
/// underflow. `bounded` compares the sup over the last decade of the grid with
/// twice the sup over the first decade.
pub fn check_decay_condition(
    phi: &DecayFunction,
    omega: f64,
    eta: f64,
    grid: &[f64],
) -> Result<DecayVerdict> {
    if !(omega > 0.0) || !eta.is_finite() {
        return invalid("omega must be positive and eta finite");
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("grid must be strictly increasing with at least two points");
    }
    if grid::decades(grid) < 4.0 - 1e-9 {
        return invalid("grid must span at least four decades");
    }
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    let mut ratios = Vec::with_capacity(grid.len());
    for &t in grid {
        let shifted = omega * t + eta;
        if shifted < phi.domain_start || omega * t < phi.domain_start {
            return invalid(format!("grid point {t} maps outside the domain of phi"));
        }
        let den = phi.ln_eval(omega * t);
        if den == f64::NEG_INFINITY || den.is_nan() {
            return invalid(format!("phi vanishes at omega t = {}", omega * t));
        }
        ratios.push((phi.ln_eval(shifted) - den).exp());
    }
    let mut first = f64::NEG_INFINITY;
    let mut last = f64::NEG_INFINITY;
    let mut sup = f64::NEG_INFINITY;
    for (&t, &r) in grid.iter().zip(&ratios) {
        sup = sup.max(r);
        if t <= lo * 10.0 {
            first = first.max(r);
        }
        if t >= hi / 10.0 {
            last = last.max(r);
        }
    }
    Ok(DecayVerdict {
        bounded: last.is_finite() && last <= 2.0 * first,
        sup_ratio: sup,
        first_decade_sup: first,
        last_decade_sup: last,
        grid_points: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        let e = DecayFunction::standard(Family::Exponential, 1.0, 1.0).unwrap();
        assert_eq!(e.eval(0.0), 1.0);
        let p = DecayFunction::standard(Family::Polynomial, 1.0, 0.5).unwrap();
        assert!((p.eval(4.0) - 0.5).abs() < 1e-15);
        let l = DecayFunction::standard(Family::Logarithmic, 2.0, 1.0).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert!((l.eval(e2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(DecayFunction::standard(Family::Exponential, 0.0, 1.0).is_err());
        assert!(DecayFunction::standard(Family::Polynomial, 1.0, -1.0).is_err());
    }

    #[test]
    fn exponential_shift_ratio() {
        let phi = DecayFunction::standard(Family::Exponential, 1.0, 1.0).unwrap();
        let g = phi.default_grid(1.0, 3.0).unwrap();
        let v = check_decay_condition(&phi, 1.0, 3.0, &g).unwrap();
        assert!(v.bounded);
        assert!((v.sup_ratio - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn polynomial_zero_shift() {
        let phi = DecayFunction::standard(Family::Polynomial, 1.0, 2.0).unwrap();
        let g = phi.default_grid(1.0, 0.0).unwrap();
        let v = check_decay_condition(&phi, 1.0, 0.0, &g).unwrap();
        assert!(v.bounded);
        assert_eq!(v.sup_ratio, 1.0);
    }

    #[test]
    fn self_power_negative_shift_unbounded() {
        let phi = DecayFunction::self_power();
        let g = phi.default_grid(1.0, -1.0).unwrap();
        let v = check_decay_condition(&phi, 1.0, -1.0, &g).unwrap();
        assert!(!v.bounded);
        assert!(v.last_decade_sup > 1e5);
    }

    #[test]
    fn domain_violation_rejected() {
        let phi = DecayFunction::standard(Family::Logarithmic, 1.0, 1.0).unwrap();
        let g = grid::geometric(1.0, 1e6, 64).unwrap();
        assert!(check_decay_condition(&phi, 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn zero_value_rejected() {
        let phi = DecayFunction::custom(
            "fast",
            0.0,
            |t: f64| (-t * t).exp(),
            None,
        )
        .unwrap();
        let g = grid::geometric(10.0, 1e6, 64).unwrap();
        assert!(check_decay_condition(&phi, 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn short_grid_rejected() {
        let phi = DecayFunction::standard(Family::Exponential, 1.0, 1.0).unwrap();
        let g = grid::geometric(1.0, 100.0, 16).unwrap();
        assert!(check_decay_condition(&phi, 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn standard_families_satisfy_invariants() {
        let g = grid::geometric(std::f64::consts::E, 1e6, 256).unwrap();
        for fam in [Family::Exponential, Family::Polynomial, Family::Logarithmic] {
            let phi = DecayFunction::standard(fam, 1.0, 1.0).unwrap();
            let r = phi.check_invariants(&g, 0.1);
            assert!(r.ok(), "{fam:?}: {r:?}");
        }
    }
}
