//! Modal system and its explicit Runge-Kutta integrator.

use serde::{Deserialize, Serialize};

use super::config::NweConfig;
use super::f::FInstance;
use super::quad;
use crate::error::{invalid, Error, Result};
use crate::metric::NormTag;
use crate::process::{check_times, Process, TimeKind};

/// Largest `h * rho` allowed per substep; inside the RK4 stability region.
const STAB: f64 = 2.5;
const MAX_SUBSTEPS: f64 = 10_000.0;

/// `(v, v_t)` in the sine basis at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub time: f64,
}

impl WaveState {
    pub fn zero(modes: usize, time: f64) -> Self {
        WaveState { a: vec![0.0; modes], b: vec![0.0; modes], time }
    }

    pub fn from_vec(x: &[f64], time: f64) -> Self {
        let n = x.len() / 2;
        WaveState { a: x[..n].to_vec(), b: x[n..].to_vec(), time }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }
}

/// Precomputed tables for one configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: NweConfig,
    pub n: usize,
    pub lambda: Vec<f64>,
    pub kernel: Vec<(usize, usize, f64)>,
    pub h: Vec<f64>,
    pub f: FInstance,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `e_k(x_q)`, row-major `Q x N`.
    basis: Vec<f64>,
}

struct Scratch {
    u: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Model {
    /// Builds the tables; only structural sanity is checked here, the
    /// hypotheses on the data are checked by [`NweConfig::validate`].
    pub fn new(cfg: &NweConfig) -> Result<Self> {
        if cfg.modes == 0 || !(cfg.length > 0.0) || !(cfg.dt > 0.0) || !(cfg.p >= 0.0) {
            return invalid("modes, length, dt must be positive and p nonnegative");
        }
        let n = cfg.modes;
        let q = cfg.quad_points();
        let (nodes, weights) = quad::on_interval(q, 0.0, cfg.length);
        let scale = (2.0 / cfg.length).sqrt();
        let mut basis = vec![0.0; q * n];
        for (i, x) in nodes.iter().enumerate() {
            for k in 0..n {
                basis[i * n + k] = scale * ((k + 1) as f64 * std::f64::consts::PI * x / cfg.length).sin();
            }
        }
        Ok(Model {
            cfg: cfg.clone(),
            n,
            lambda: (1..=n).map(|k| cfg.lambda(k)).collect(),
            kernel: cfg.kernel_entries(),
            h: cfg.forcing_coeffs(),
            f: FInstance::new(&cfg.f),
            nodes,
            weights,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn x_norm_tag(&self) -> NormTag {
        NormTag::Weighted { name: "X".into(), weights: self.cfg.x_weights() }
    }

    pub fn x_norm(&self, x: &[f64]) -> f64 {
        let (a, b) = x.split_at(self.n);
        (a.iter().zip(&self.lambda).map(|(a, l)| l * a * a).sum::<f64>() + b.iter().map(|b| b * b).sum::<f64>()).sqrt()
    }

    /// `v(x_q)` at the quadrature nodes.
    pub fn values(&self, a: &[f64], out: &mut [f64]) {
        for (q, o) in out.iter_mut().enumerate() {
            let row = &self.basis[q * self.n..(q + 1) * self.n];
            *o = row.iter().zip(a).map(|(e, a)| e * a).sum();
        }
    }

    pub fn values_vec(&self, a: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.nodes.len()];
        self.values(a, &mut u);
        u
    }

    /// `int_0^L g(x_q) dx`.
    pub fn integrate_nodes(&self, g: impl Fn(usize, f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).enumerate().map(|(q, (x, w))| w * g(q, *x)).sum()
    }

    /// Sine coefficients of a function given at the nodes, added to `out`
    /// with factor `sign`.
    fn project_into(&self, vals: &[f64], sign: f64, out: &mut [f64]) {
        for (q, (v, w)) in vals.iter().zip(&self.weights).enumerate() {
            let c = sign * w * v;
            let row = &self.basis[q * self.n..(q + 1) * self.n];
            for (o, e) in out.iter_mut().zip(row) {
                *o += c * e;
            }
        }
    }

    /// Sine coefficients of `f(t, v(.))`.
    pub fn f_hat(&self, t: f64, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        if self.f.is_zero() {
            return out;
        }
        let vals: Vec<f64> = self.values_vec(a).iter().map(|&u| self.f.f(t, u)).collect();
        self.project_into(&vals, 1.0, &mut out);
        out
    }

    /// Coefficients of `int K(., y) w(y) dy`.
    pub fn kernel_apply(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, j, v) in &self.kernel {
            out[i] += v * b[j];
        }
        out
    }

    fn damping(&self, t: f64, b: &[f64]) -> f64 {
        let k = self.cfg.damping.eval(t);
        if self.cfg.p == 0.0 {
            return k;
        }
        k * b.iter().map(|v| v * v).sum::<f64>().powf(0.5 * self.cfg.p)
    }

    fn rhs(&self, t: f64, x: &[f64], out: &mut [f64], u: &mut [f64]) {
        let (a, b) = x.split_at(self.n);
        let (da, db) = out.split_at_mut(self.n);
        da.copy_from_slice(b);
        let d = self.damping(t, b);
        for k in 0..self.n {
            db[k] = -self.lambda[k] * a[k] - d * b[k] + self.h[k];
        }
        for &(i, j, v) in &self.kernel {
            db[i] += v * b[j];
        }
        if !self.f.is_zero() {
            self.values(a, u);
            for v in u.iter_mut() {
                *v = self.f.f(t, *v);
            }
            self.project_into(u, -1.0, db);
        }
    }

    /// Stiffness estimate used to pick the substep count.
    fn spectral_radius(&self, t: f64, x: &[f64], u: &mut [f64]) -> f64 {
        let (a, b) = x.split_at(self.n);
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let k = self.cfg.damping.eval(t).abs();
        let damp = if self.cfg.p == 0.0 { k } else { k * (self.cfg.p + 1.0) * nb.powf(self.cfg.p) };
        let mut fv = 0.0f64;
        if !self.f.is_zero() {
            self.values(a, u);
            fv = u.iter().map(|&v| self.f.f_v(t, v)).fold(0.0, f64::max);
        }
        let kern: f64 = self.kernel.iter().map(|e| e.2.abs()).sum();
        damp + kern + (self.lambda[self.n - 1] + fv).sqrt()
    }

    fn scratch(&self) -> Scratch {
        let d = self.dim();
        Scratch {
            u: vec![0.0; self.nodes.len()],
            k: [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]],
            tmp: vec![0.0; d],
        }
    }

    fn rk4(&self, t: f64, x: &mut [f64], h: f64, s: &mut Scratch) {
        let Scratch { u, k, tmp } = s;
        let [k1, k2, k3, k4] = k;
        self.rhs(t, x, k1, u);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        self.rhs(t + 0.5 * h, tmp, k2, u);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        self.rhs(t + 0.5 * h, tmp, k3, u);
        for i in 0..x.len() {
            tmp[i] = x[i] + h * k3[i];
        }
        self.rhs(t + h, tmp, k4, u);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// One step of length `h` from time `t`, split into equal RK4 substeps
    /// when the local stiffness demands it.
    fn step_in_place(&self, t: f64, x: &mut [f64], h: f64, s: &mut Scratch) -> Result<()> {
        let rho = self.spectral_radius(t, x, &mut s.u);
        let m = (h * rho / STAB).ceil().max(1.0);
        if !(m <= MAX_SUBSTEPS) {
            return Err(Error::Blowup { time: t });
        }
        let m = m as usize;
        let hs = h / m as f64;
        for j in 0..m {
            self.rk4(t + j as f64 * hs, x, hs, s);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { time: t + h });
        }
        Ok(())
    }

    /// One step of length `dt`.
    pub fn step(&self, state: &WaveState, dt: f64) -> Result<WaveState> {
        if !(dt > 0.0) || state.a.len() != self.n || state.b.len() != self.n {
            return invalid("step needs dt > 0 and a state of matching size");
        }
        let mut x = state.to_vec();
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("state must be finite");
        }
        self.step_in_place(state.time, &mut x, dt, &mut self.scratch())?;
        Ok(WaveState::from_vec(&x, state.time + dt))
    }

    /// State at time `t` from `x` at time `s`, with step `dt` adjusted so
    /// that the grid lands on `t`.
    pub fn integrate_with(&self, s: f64, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return invalid(format!("state has dimension {}, expected {}", x.len(), self.dim()));
        }
        let mut y = x.to_vec();
        let span = t - s;
        if span <= 0.0 {
            return Ok(y);
        }
        let steps = ((span / dt - 1e-9).ceil() as usize).max(1);
        let h = span / steps as f64;
        let mut sc = self.scratch();
        for i in 0..steps {
            self.step_in_place(s + i as f64 * h, &mut y, h, &mut sc)?;
        }
        Ok(y)
    }

    pub fn integrate(&self, s: f64, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.integrate_with(s, t, x, self.cfg.dt)
    }

    /// States at each of the increasing `times`, starting from `x` at `s`.
    pub fn trajectory(&self, s: f64, x: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(times.len());
        let (mut t0, mut y) = (s, x.to_vec());
        for &t in times {
            if t < t0 {
                return invalid("trajectory times must be increasing and not before the start");
            }
            y = self.integrate(t0, t, &y)?;
            out.push(y.clone());
            t0 = t;
        }
        Ok(out)
    }
}

/// The Galerkin system as a continuous-time process on coordinates `[a, b]`.
#[derive(Debug, Clone)]
pub struct NweProcess {
    pub model: Model,
}

impl NweProcess {
    pub fn new(cfg: &NweConfig) -> Result<Self> {
        Ok(NweProcess { model: Model::new(cfg)? })
    }
}

impl Process for NweProcess {
    fn kind(&self) -> TimeKind {
        TimeKind::Continuous
    }

    fn norm(&self) -> NormTag {
        self.model.x_norm_tag()
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_times(TimeKind::Continuous, t, s)?;
        self.model.integrate(s, t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nwe::config::{DampingFn, FSpec, ForcingSpec, KernelSpec};

    fn oscillator(modes: usize) -> Model {
        let cfg = NweConfig {
            modes,
            p: 0.0,
            damping: DampingFn::Constant { value: 0.0 },
            kernel: KernelSpec::Zero,
            forcing: ForcingSpec::Zero,
            f: FSpec::Zero,
            ..NweConfig::default()
        };
        Model::new(&cfg).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let cfg = NweConfig { forcing: ForcingSpec::Zero, f: FSpec::Cubic { alpha: 0.0 }, modes: 8, ..NweConfig::default() };
        let m = Model::new(&cfg).unwrap();
        let y = m.integrate(0.0, 3.0, &vec![0.0; 16]).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn harmonic_mode_conserves_norm() {
        let m = oscillator(3);
        let mut x = vec![0.0; 6];
        x[1] = 0.7;
        x[4] = -0.3;
        let period = std::f64::consts::PI;
        let y = m.integrate(0.0, period, &x).unwrap();
        let drift = (m.x_norm(&y) - m.x_norm(&x)).abs() / m.x_norm(&x);
        assert!(drift < 1e-8, "{drift:e}");
        // Mode 2 has frequency 2: after half a period of mode 1 it is back.
        let back = (y[1] - x[1]).abs() + (y[4] - x[4]).abs();
        assert!(back < 1e-8, "{back:e}");
    }

    #[test]
    fn forcing_projection_matches_quadrature() {
        let m = Model::new(&NweConfig { modes: 6, f: FSpec::Linear { c: 1.0 }, ..NweConfig::default() }).unwrap();
        let a = [0.3, -0.2, 0.0, 0.1, 0.0, 0.05];
        let fh = m.f_hat(0.0, &a);
        for (x, y) in fh.iter().zip(&a) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn step_agrees_with_integrate() {
        let m = Model::new(&NweConfig { modes: 4, ..NweConfig::default() }).unwrap();
        let s = WaveState { a: vec![0.5, 0.1, 0.0, 0.0], b: vec![0.0, 0.2, 0.0, 0.1], time: 0.4 };
        let one = m.step(&s, 1e-3).unwrap();
        let y = m.integrate(0.4, 0.401, &s.to_vec()).unwrap();
        for (p, q) in one.to_vec().iter().zip(&y) {
            assert!((p - q).abs() < 1e-14);
        }
        assert!((one.time - 0.401).abs() < 1e-15);
    }

    #[test]
    fn nonfinite_growth_reports_blowup() {
        let cfg = NweConfig { modes: 2, dt: 0.5, f: FSpec::Cubic { alpha: 0.0 }, ..NweConfig::default() };
        let m = Model::new(&cfg).unwrap();
        let mut x = vec![0.0; 4];
        x[0] = 1e80;
        assert!(matches!(m.integrate(0.0, 10.0, &x), Err(Error::Blowup { .. })));
    }
}
