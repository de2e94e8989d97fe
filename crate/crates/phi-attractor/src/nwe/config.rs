//! Configuration of the wave problem on `(0, L)` with Dirichlet conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid;

/// Time-dependent damping coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingFn {
    Constant { value: f64 },
    /// `mean + amp sin(freq t)`.
    Sine { mean: f64, amp: f64, freq: f64 },
}

impl DampingFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DampingFn::Constant { value } => value,
            DampingFn::Sine { mean, amp, freq } => mean + amp * (freq * t).sin(),
        }
    }

    /// Declared `(k0, k1)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DampingFn::Constant { value } => (value, value),
            DampingFn::Sine { mean, amp, .. } => (mean - amp.abs(), mean + amp.abs()),
        }
    }
}

/// Kernel of the non-local anti-damping term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    /// `amp sin(pi x / L) sin(pi y / L)`.
    RankOneSine { amp: f64 },
    /// Explicit sine-basis coefficients `(i, j, value)`, modes counted from 1.
    Coeffs { entries: Vec<(usize, usize, f64)> },
}

/// Source term `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// `amp sin(mode pi x / L)`.
    SineMode { mode: usize, amp: f64 },
    /// Sine-basis coefficients starting at mode 1.
    Coeffs { values: Vec<f64> },
}

/// Nonlinearity `f(t, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Zero,
    /// `c v`.
    Linear { c: f64 },
    /// `v^3 + alpha v`.
    Cubic { alpha: f64 },
    /// `v^3 + sin(t) (1 - 2 v^2) e^{-v^2}`, with primitive `v^4/4 + sin(t) v e^{-v^2}`.
    Default,
    /// `v^3 + sin(t) (1 - v^2) e^{-v^2}`; its time derivative of the primitive is not integrable in `v`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NweConfig {
    pub modes: usize,
    pub length: f64,
    pub p: f64,
    pub mu0: f64,
    pub dt: f64,
    /// Gauss-Legendre nodes on `(0, L)`; `0` means `4 * modes`.
    pub quadrature_points: usize,
    pub damping: DampingFn,
    pub kernel: KernelSpec,
    pub forcing: ForcingSpec,
    pub f: FSpec,
}

impl Default for NweConfig {
    fn default() -> Self {
        NweConfig {
            modes: 32,
            length: PI,
            p: 2.0,
            mu0: 0.5,
            dt: 1e-3,
            quadrature_points: 0,
            damping: DampingFn::Sine { mean: 2.0, amp: 1.0, freq: 1.0 },
            kernel: KernelSpec::RankOneSine { amp: 0.05 },
            forcing: ForcingSpec::SineMode { mode: 1, amp: 1.0 },
            f: FSpec::Default,
        }
    }
}

impl NweConfig {
    /// Undamped-by-nonlinearity setting with `f = 0`, `h = 0`, `K = 0`: the
    /// zero state is the global attractor and the decay is purely polynomial.
    pub fn free_decay(p: f64, modes: usize, dt: f64) -> Self {
        NweConfig {
            modes,
            p,
            dt,
            kernel: KernelSpec::Zero,
            forcing: ForcingSpec::Zero,
            f: FSpec::Zero,
            ..NweConfig::default()
        }
    }

    pub fn quad_points(&self) -> usize {
        if self.quadrature_points == 0 {
            4 * self.modes
        } else {
            self.quadrature_points
        }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        let w = k as f64 * PI / self.length;
        w * w
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda(1)
    }

    /// `K_ij` in the orthonormal sine basis, zero-based indices.
    pub fn kernel_entries(&self) -> Vec<(usize, usize, f64)> {
        match &self.kernel {
            KernelSpec::Zero => vec![],
            KernelSpec::RankOneSine { amp } => vec![(0, 0, amp * self.length / 2.0)],
            KernelSpec::Coeffs { entries } => entries
                .iter()
                .filter(|(i, j, _)| *i <= self.modes && *j <= self.modes)
                .map(|&(i, j, v)| (i - 1, j - 1, v))
                .collect(),
        }
    }

    /// `K0 = ||K||_{L^2(Omega x Omega)}`, the Frobenius norm of the coefficients.
    pub fn k0_norm(&self) -> f64 {
        self.kernel_entries().iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    pub fn forcing_coeffs(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.modes];
        match &self.forcing {
            ForcingSpec::Zero => {}
            ForcingSpec::SineMode { mode, amp } => {
                if *mode <= self.modes {
                    h[mode - 1] = amp * (self.length / 2.0).sqrt();
                }
            }
            ForcingSpec::Coeffs { values } => {
                for (dst, v) in h.iter_mut().zip(values) {
                    *dst = *v;
                }
            }
        }
        h
    }

    pub fn h0(&self) -> f64 {
        self.forcing_coeffs().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `sqrt(lambda1) / 8 (1 - mu0 / lambda1)`.
    pub fn eps0(&self) -> f64 {
        let l1 = self.lambda1();
        l1.sqrt() / 8.0 * (1.0 - self.mu0 / l1)
    }

    /// X-norm weights for the state layout `[a_1..a_N, b_1..b_N]`.
    pub fn x_weights(&self) -> Vec<f64> {
        (1..=self.modes).map(|k| self.lambda(k)).chain(std::iter::repeat(1.0).take(self.modes)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 || !(self.length > 0.0) || !(self.dt > 0.0) {
            return invalid("modes, length and dt must be positive");
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return invalid("p must be a nonnegative real");
        }
        if !(self.mu0 > 0.0 && self.mu0 < self.lambda1()) {
            return invalid(format!("mu0 must lie in (0, lambda1 = {})", self.lambda1()));
        }
        if let KernelSpec::Coeffs { entries } = &self.kernel {
            if entries.iter().any(|(i, j, v)| *i == 0 || *j == 0 || !v.is_finite()) {
                return invalid("kernel coefficients use 1-based modes and finite values");
            }
        }
        if let ForcingSpec::SineMode { mode, amp } = &self.forcing {
            if *mode == 0 || !amp.is_finite() {
                return invalid("forcing mode is 1-based and amp finite");
            }
        }
        let (k0, k1) = self.damping.bounds();
        if !(k0 > 0.0 && k1 >= k0) {
            return invalid("damping bounds must satisfy 0 < k0 <= k1");
        }
        let ts = grid::uniform(0.0, 4.0 * PI, 257);
        if ts.iter().map(|&t| self.damping.eval(t)).any(|k| k < k0 - 1e-12 || k > k1 + 1e-12) {
            return invalid("damping leaves its declared bounds on the sampled grid");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: NweConfig = toml::from_str(text).map_err(|e| crate::Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_constants() {
        let c = NweConfig::default();
        c.validate().unwrap();
        assert!((c.lambda1() - 1.0).abs() < 1e-15);
        assert!((c.eps0() - 1.0 / 16.0).abs() < 1e-15);
        assert!((c.k0_norm() - 0.05 * PI / 2.0).abs() < 1e-15);
        assert!((c.h0() - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert_eq!(c.damping.bounds(), (1.0, 3.0));
    }

    #[test]
    fn toml_roundtrip_and_unknown_keys() {
        let c = NweConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(NweConfig::from_toml(&text).unwrap(), c);
        assert!(NweConfig::from_toml("modes = 8\nbogus = 1\n").is_err());
        let small = NweConfig::from_toml("modes = 8\n[f]\nkind = \"zero\"\n").unwrap();
        assert_eq!(small.f, FSpec::Zero);
        assert_eq!(small.p, 2.0);
    }

    #[test]
    fn rejects_bad_mu0() {
        let c = NweConfig { mu0: 1.5, ..NweConfig::default() };
        assert!(c.validate().is_err());
    }
}
