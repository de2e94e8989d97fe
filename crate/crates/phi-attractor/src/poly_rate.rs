//! Polynomial-rate machinery: the pair `u(t) = (3C)^{-1/beta} t^{1/beta} + t`
//! and `v = u^{-1}`, the sequence `t_n = v^n(t_0)`, and the constants that
//! turn a non-compactness contraction into a power-law decay function.

use serde::Serialize;

use crate::decay::DecayFunction;
use crate::error::{invalid, Result};
use crate::metric::{kappa_bracket, CoverMethod};
use crate::process::{Family, Process};

/// Relative slack for the inequality items.
const INEQ_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UVSystem {
    pub c: f64,
    pub beta: f64,
}

impl UVSystem {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(beta > 0.0 && beta < 1.0) {
            return invalid(format!("need C > 0 and beta in (0, 1), got C = {c}, beta = {beta}"));
        }
        Ok(UVSystem { c, beta })
    }

    /// `(3C)^{-1/beta}`.
    pub fn coef(&self) -> f64 {
        (3.0 * self.c).powf(-1.0 / self.beta)
    }

    pub fn u(&self, t: f64) -> f64 {
        self.coef() * t.powf(1.0 / self.beta) + t
    }

    /// Inverse of `u` by bisection on `[0, t]`, run to floating-point
    /// convergence (at most 200 halvings). `u` is strictly increasing with
    /// `u(s) >= s`, so the root lies in the bracket.
    pub fn v(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.u(mid) > t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if (self.u(hi) - t).abs() < (self.u(lo) - t).abs() {
            hi
        } else {
            lo
        }
    }

    /// `[t_0, v(t_0), ..., v^N(t_0)]`.
    pub fn iterate(&self, t0: f64, n: usize) -> Result<Vec<f64>> {
        if !(t0 >= 0.0 && t0.is_finite()) || n == 0 {
            return invalid("need t0 >= 0 and N >= 1");
        }
        let mut seq = Vec::with_capacity(n + 1);
        seq.push(t0);
        for i in 0..n {
            seq.push(self.v(seq[i]));
        }
        Ok(seq)
    }

    /// `(1/beta - 1)(1 + 3C)^{-1/beta}`.
    pub fn step_gain(&self) -> f64 {
        (1.0 / self.beta - 1.0) * (1.0 + 3.0 * self.c).powf(-1.0 / self.beta)
    }

    /// Closed-form envelope `[(n - n0) g + t0^{1 - 1/beta}]^{beta/(beta - 1)}`.
    pub fn envelope(&self, n: usize, n0: usize, t0: f64) -> f64 {
        let q = 1.0 - 1.0 / self.beta;
        ((n as f64 - n0 as f64) * self.step_gain() + t0.powf(q)).powf(self.beta / (self.beta - 1.0))
    }
}

/// First `n >= 1` with `t_{n-1} - t_n` in `(0, 1)`.
pub fn find_n0(seq: &[f64]) -> Option<usize> {
    (1..seq.len()).find(|&n| {
        let d = seq[n - 1] - seq[n];
        d > 0.0 && d < 1.0
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub n0: Option<usize>,
    /// Non-increasing.
    pub item_i: bool,
    /// Max relative residual of `t_n - t_{n+1} = (3C)^{-1/beta} t_{n+1}^{1/beta}`.
    pub residual_ii: f64,
    pub item_ii: bool,
    /// First `n` with `t_n < t_0 / 2`, iterating past `N` if needed.
    pub halving_index: Option<usize>,
    pub item_iii: bool,
    pub item_iv: bool,
    pub item_v: bool,
    /// Max of `(t_n - envelope_n) / envelope_n` over `n0 <= n <= N`.
    pub max_violation: f64,
    pub item_vi: bool,
}

impl SequenceReport {
    pub fn all_hold(&self) -> bool {
        self.item_i && self.item_ii && self.item_iii && self.item_iv && self.item_v && self.item_vi
    }
}

/// Iteration cap when the sequence has not halved within the checked range.
pub const HALVING_CAP: usize = 10_000_000;

fn halving_index(sys: &UVSystem, seq: &[f64], t0: f64) -> Option<usize> {
    if let Some(k) = seq.iter().position(|&t| t < t0 / 2.0) {
        return Some(k);
    }
    let mut t = *seq.last()?;
    for k in seq.len()..=HALVING_CAP {
        t = sys.v(t);
        if t < t0 / 2.0 {
            return Some(k);
        }
    }
    None
}

/// Checks all six sequence items for `t_n = v^n(t_0)`, `n <= N`.
pub fn check_sequence(sys: &UVSystem, t0: f64, n: usize) -> Result<SequenceReport> {
    let seq = sys.iterate(t0, n)?;
    let q = 1.0 - 1.0 / sys.beta;
    let g = sys.step_gain();
    let item_i = seq.windows(2).all(|w| w[1] <= w[0]);
    let residual_ii = seq
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| ((w[0] - w[1]) - sys.coef() * w[1].powf(1.0 / sys.beta)).abs() / w[0])
        .fold(0.0, f64::max);
    let halving_index = if t0 > 0.0 { halving_index(sys, &seq, t0) } else { Some(0) };
    let item_iii = halving_index.is_some();
    let n0 = if t0 > 0.0 { find_n0(&seq) } else { None };
    let (mut item_iv, mut item_v, mut max_violation) = (true, true, f64::NEG_INFINITY);
    if let Some(n0) = n0 {
        for k in n0..=n {
            let lhs = seq[k].powf(q);
            item_iv &= lhs >= (g + seq[k - 1].powf(q)) * (1.0 - INEQ_SLACK);
            let rhs_v = (k - n0) as f64 * g + seq[n0].powf(q);
            item_v &= lhs >= rhs_v * (1.0 - INEQ_SLACK);
            let env = sys.envelope(k, n0, t0);
            max_violation = max_violation.max((seq[k] - env) / env);
        }
    }
    Ok(SequenceReport {
        n0,
        item_i,
        residual_ii,
        item_ii: residual_ii < 1e-10,
        halving_index,
        item_iii,
        item_iv,
        item_v,
        max_violation: if max_violation.is_finite() { max_violation } else { 0.0 },
        item_vi: max_violation <= INEQ_SLACK,
    })
}

/// `(n, t_n, envelope_n)` rows; the envelope is NaN before `n0`.
pub fn sequence_table(sys: &UVSystem, t0: f64, n: usize) -> Result<Vec<(usize, f64, f64)>> {
    let seq = sys.iterate(t0, n)?;
    let n0 = find_n0(&seq);
    Ok(seq
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, t, n0.filter(|&n0| i >= n0).map_or(f64::NAN, |n0| sys.envelope(i, n0, t0))))
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolyDissipativityConfig {
    pub beta: f64,
    pub r: f64,
    pub t: f64,
    pub c: f64,
    pub m: f64,
    pub n0: usize,
}

impl PolyDissipativityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) || !(self.r > 0.0 && self.t > 0.0 && self.c > 0.0 && self.m > 0.0) {
            return invalid("need beta in (0, 1) and r, T, C, M positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateConstants {
    pub omega: f64,
    pub eta: f64,
    pub exponent: f64,
}

/// `omega = g / T`, `eta = (1 + n0) g` with `g = (1/beta - 1)(1 + 3C)^{-1/beta}`,
/// and `exponent = beta / (r (beta - 1))`.
pub fn rate_constants(cfg: &PolyDissipativityConfig) -> Result<RateConstants> {
    cfg.validate()?;
    let g = (1.0 / cfg.beta - 1.0) * (1.0 + 3.0 * cfg.c).powf(-1.0 / cfg.beta);
    Ok(RateConstants {
        omega: g / cfg.t,
        eta: (1 + cfg.n0) as f64 * g,
        exponent: cfg.beta / (cfg.r * (cfg.beta - 1.0)),
    })
}

/// The induced decay function `s^{beta / (r (beta - 1))}`.
pub fn induced_decay(cfg: &PolyDissipativityConfig) -> Result<DecayFunction> {
    DecayFunction::power(rate_constants(cfg)?.exponent, 1e-12)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CascadeStep {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// `2^r v^n(M^r)`.
    pub chain: f64,
    pub holds: bool,
}

/// Compares covering brackets of `S(t, t - nT) B_{t - nT}` against the chain
/// `2^r v^n(M^r)` with relative `slack`.
pub fn kappa_cascade_check(
    proc: &dyn Process,
    b: &dyn Family,
    cfg: &PolyDissipativityConfig,
    t: f64,
    ns: &[usize],
    budget: usize,
    slack: f64,
) -> Result<Vec<CascadeStep>> {
    cfg.validate()?;
    let sys = UVSystem::new(cfg.c, cfg.beta)?;
    ns.iter()
        .map(|&n| {
            let s = t - n as f64 * cfg.t;
            let moved = proc.apply_ensemble(t, s, &b.sample(s)?)?;
            let (lower, upper) = kappa_bracket(&moved, CoverMethod::Greedy, budget)?;
            let mut x = cfg.m.powf(cfg.r);
            for _ in 0..n {
                x = sys.v(x);
            }
            let chain = 2f64.powf(cfg.r) * x;
            Ok(CascadeStep { n, lower, upper, chain, holds: upper.powf(cfg.r) <= chain * (1.0 + slack) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_start_stays_zero() {
        let s = UVSystem::new(1.0 / 3.0, 0.5).unwrap();
        assert!(s.iterate(0.0, 10).unwrap().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn golden_ratio_first_step() {
        let s = UVSystem::new(1.0 / 3.0, 0.5).unwrap();
        let t1 = s.iterate(1.0, 1).unwrap()[1];
        assert!((t1 - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn u_and_v_are_inverse() {
        let s = UVSystem::new(2.0 / 3.0, 0.3).unwrap();
        for &t in &[0.0, 1e-6, 0.1, 1.0, 37.5, 1e3, 1e6] {
            assert!((s.u(s.v(t)) - t).abs() <= 1e-12 * t.max(1e-300), "u(v({t}))");
            assert!((s.v(s.u(t)) - t).abs() <= 1e-12 * t.max(1e-300), "v(u({t}))");
            assert!(s.v(t) <= t && s.u(t) >= t);
        }
    }

    #[test]
    fn bound_holds_unit_case() {
        let s = UVSystem::new(1.0 / 3.0, 0.5).unwrap();
        let r = check_sequence(&s, 1.0, 200).unwrap();
        assert!(r.all_hold(), "{r:?}");
        assert_eq!(r.n0, Some(1));
    }

    #[test]
    fn rate_constants_substitution() {
        let cfg = PolyDissipativityConfig { beta: 0.5, r: 2.0, t: 1.0, c: 1.0 / 3.0, m: 1.0, n0: 3 };
        let k = rate_constants(&cfg).unwrap();
        assert!((k.omega - 0.25).abs() < 1e-15);
        assert!((k.eta - 1.0).abs() < 1e-15);
        assert!((k.exponent + 0.5).abs() < 1e-15);
    }

    #[test]
    fn wave_exponent_is_minus_one_over_p() {
        for p in [0.5, 1.0, 2.0, 4.0, 7.0] {
            let cfg = PolyDissipativityConfig { beta: 2.0 / (p + 2.0), r: 2.0, t: 1.0, c: 1.0, m: 1.0, n0: 1 };
            let k = rate_constants(&cfg).unwrap();
            assert!((k.exponent + 1.0 / p).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_system() {
        assert!(UVSystem::new(1.0, 1.0).is_err());
        assert!(UVSystem::new(0.0, 0.5).is_err());
    }
}
