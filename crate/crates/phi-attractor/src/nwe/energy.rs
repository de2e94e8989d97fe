//! Energy functionals, the constants of the dissipation estimates and the
//! inverse-function machinery that yields the absorbing radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::f::{validate_f_instance, FReport, SampleGrid};
use super::solver::Model;
use super::NweConfig;
use crate::error::{invalid, Error, Result};
use crate::grid;
use crate::process::ball_sample;

/// Modal pieces of a state that every energy needs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Parts {
    /// `||v||_{H^1_0}^2`.
    pub h1_sq: f64,
    /// `||v||_{L^2}^2`.
    pub l2_sq: f64,
    /// `||v_t||_{L^2}^2`.
    pub vel_sq: f64,
    /// `int F(t, v) dx`.
    pub big_f: f64,
    /// `int h v dx`.
    pub hv: f64,
    /// `int v_t v dx`.
    pub cross: f64,
}

pub fn parts(model: &Model, t: f64, x: &[f64]) -> Parts {
    let (a, b) = x.split_at(model.n);
    let u = model.values_vec(a);
    let big_f = if model.f.is_zero() { 0.0 } else { model.integrate_nodes(|q, _| model.f.big_f(t, u[q])) };
    Parts {
        h1_sq: a.iter().zip(&model.lambda).map(|(a, l)| l * a * a).sum(),
        l2_sq: a.iter().map(|a| a * a).sum(),
        vel_sq: b.iter().map(|b| b * b).sum(),
        big_f,
        hv: a.iter().zip(&model.h).map(|(a, h)| a * h).sum(),
        cross: a.iter().zip(b).map(|(a, b)| a * b).sum(),
    }
}

/// `E = 1/2 (||v_t||^2 + ||v||_{H^1_0}^2) + int F + (lambda1 + mu0)/4 ||v||^2 + C0`.
pub fn energy_from(cfg: &NweConfig, p: &Parts, big_c0: f64) -> f64 {
    0.5 * (p.vel_sq + p.h1_sq) + p.big_f + 0.25 * (cfg.lambda1() + cfg.mu0) * p.l2_sq + big_c0
}

/// `V_eps = 1/2 (||v||_{H^1_0}^2 + ||v_t||^2) + int F - int h v + eps int v_t v`.
pub fn v_eps_from(p: &Parts, eps: f64) -> f64 {
    0.5 * (p.h1_sq + p.vel_sq) + p.big_f - p.hv + eps * p.cross
}

/// Data-only constants of the dissipation estimates.
#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub lambda1: f64,
    pub mu0: f64,
    pub p: f64,
    pub k0: f64,
    pub k1: f64,
    pub big_k0: f64,
    pub h0: f64,
    pub length: f64,
    pub eps0: f64,
    pub f: FReport,
}

impl Bounds {
    pub fn new(cfg: &NweConfig, f: FReport) -> Result<Self> {
        cfg.validate()?;
        if !(cfg.p > 0.0) {
            return invalid("the energy analysis needs p > 0");
        }
        let (k0, k1) = cfg.damping.bounds();
        Ok(Bounds {
            lambda1: cfg.lambda1(),
            mu0: cfg.mu0,
            p: cfg.p,
            k0,
            k1,
            big_k0: cfg.k0_norm(),
            h0: cfg.h0(),
            length: cfg.length,
            eps0: cfg.eps0(),
            f,
        })
    }

    pub fn from_config(cfg: &NweConfig) -> Result<Self> {
        Self::new(cfg, validate_f_instance(cfg, &SampleGrid::default())?)
    }

    fn gap(&self) -> f64 {
        1.0 - self.mu0 / self.lambda1
    }

    pub fn c1(&self) -> f64 {
        let e = self.eps0;
        self.big_k0 + e + 3.0 * e * self.big_k0.powi(2) / (self.lambda1 - self.mu0) + 0.5 * e * self.gap()
    }

    pub fn c2(&self) -> f64 {
        let p = self.p;
        p / (p + 2.0) * (4.0 / (self.k0 * (p + 2.0))).powf(2.0 / p) * self.c1().powf((p + 2.0) / p)
    }

    pub fn delta0(&self, kstar: f64) -> f64 {
        let p = self.p;
        kstar * self.k1 / self.k0 * (8.0 * self.lambda1 / (self.lambda1 - self.mu0)).powf(p / (2.0 * (p + 1.0)))
    }

    pub fn delta1(&self, d0: f64, g0: f64) -> f64 {
        let e = self.eps0;
        0.8 * e * self.gap() * d0 + self.f.c0 + e * g0 + 8.0 * e * self.h0 / (self.lambda1 - self.mu0) + self.c2()
    }

    /// `max(C0 + 4 h0^2 / (lambda1 - mu0), h0^2 / (lambda1 + mu0))`: a
    /// closed-form admissible `d0` for the sandwich.
    pub fn d0_analytic(&self) -> f64 {
        let h2 = self.h0 * self.h0;
        (self.f.big_c0 + 4.0 * h2 / (self.lambda1 - self.mu0)).max(h2 / (self.lambda1 + self.mu0))
    }
}

/// `Psi`, `Phi`, `Theta` and the limsup bound built from them.
#[derive(Debug, Clone, Serialize)]
pub struct PsiPhi {
    pub delta0: f64,
    pub delta1: f64,
    pub d0: f64,
    pub p: f64,
    pub lambda1: f64,
    pub mu0: f64,
    pub eps0: f64,
}

impl PsiPhi {
    fn expo(&self) -> f64 {
        2.0 * (self.p + 1.0) / self.p
    }

    fn ratio(&self) -> f64 {
        1.25 * self.lambda1 / (self.lambda1 - self.mu0)
    }

    pub fn psi(&self, eps: f64) -> f64 {
        (2.0 * self.delta0 * eps).powf(-self.expo()) - self.d0
    }

    pub fn phi(&self, eps: f64) -> f64 {
        self.psi(eps) - self.ratio() * self.delta1 / eps
    }

    /// Minimiser of `Phi`.
    pub fn eps1(&self) -> f64 {
        let p = self.p;
        (5.0 * p / (8.0 * (p + 1.0)) * self.lambda1 / (self.lambda1 - self.mu0) * self.delta1
            * (2.0 * self.delta0).powf(self.expo()))
        .powf(-p / (p + 2.0))
    }

    /// Zero of `Phi` in `(0, eps1)`.
    pub fn eps2(&self) -> f64 {
        let e1 = self.eps1();
        self.solve_decreasing(0.0, e1)
    }

    /// `eps` in `(0, hi]` with `Phi(eps) = y`, assuming `Phi(hi) <= y`.
    fn solve_decreasing(&self, y: f64, hi: f64) -> f64 {
        let mut lo = hi;
        while self.phi(lo) < y {
            lo *= 0.5;
            if lo < 1e-300 {
                return lo;
            }
        }
        let mut hi = hi;
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if self.phi(mid) >= y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        lo
    }

    /// Inverse of `Phi` restricted to `(0, eps2]`, for `y >= 0`.
    pub fn phi_inv(&self, y: f64) -> f64 {
        self.solve_decreasing(y.max(0.0), self.eps2())
    }

    pub fn theta(&self, sigma: f64) -> f64 {
        self.eps0.min(self.phi_inv(1.25 * sigma + self.d0))
    }

    /// `1/4 (1 - mu0/lambda1) w - (5/4) lambda1 delta1 / ((lambda1 - mu0) Theta(w)) - d0`.
    fn limsup_gap(&self, w: f64) -> f64 {
        0.25 * (1.0 - self.mu0 / self.lambda1) * w - self.ratio() * self.delta1 / self.theta(w) - self.d0
    }

    /// Largest `w` with a nonpositive limsup gap: the energy bound `R0`.
    pub fn r0_energy(&self) -> Result<f64> {
        let ws = grid::per_decade(1e-6, 1e40, 10)?;
        let last = ws.iter().rposition(|&w| self.limsup_gap(w) <= 0.0);
        let Some(i) = last else { return Ok(0.0) };
        if i + 1 == ws.len() {
            return Err(Error::Experiment("limsup bound not reached below 1e40".into()));
        }
        let (mut lo, mut hi) = (ws[i], ws[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.limsup_gap(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Smallest `K*` for which the damping split holds on the given states.
pub fn fit_kstar(model: &Model, b: &Bounds, states: &[(f64, Vec<f64>)], eps_list: &[f64]) -> f64 {
    let p = b.p;
    let mut k = 0.0f64;
    for (t, x) in states {
        let pt = parts(model, *t, x);
        let nb = pt.vel_sq.sqrt();
        let nh = pt.h1_sq.sqrt();
        if nb == 0.0 || nh == 0.0 {
            continue;
        }
        let kt = model.cfg.damping.eval(*t);
        for &eps in eps_list {
            let lhs = -kt * nb.powf(p + 2.0) - eps * kt * nb.powf(p) * pt.cross;
            let num = lhs + b.k0 * nb.powf(p + 2.0) - eps / 12.0 * b.gap() * pt.h1_sq;
            if num > 0.0 {
                k = k.max(num / (eps * b.k1 * nb.powf(p + 2.0) * nh.powf(p / (p + 1.0))));
            }
        }
    }
    k.max(1e-12)
}

/// Smallest `g0 >= 0` closing the bound on `-int f v` over the given states.
pub fn fit_g0(model: &Model, b: &Bounds, states: &[(f64, Vec<f64>)]) -> f64 {
    let mut g = 0.0f64;
    for (t, x) in states {
        let (a, _) = x.split_at(model.n);
        let u = model.values_vec(a);
        let fv = if model.f.is_zero() { 0.0 } else { model.integrate_nodes(|q, _| model.f.f(*t, u[q]) * u[q]) };
        let pt = parts(model, *t, x);
        let val = -fv + pt.big_f + 0.25 * (b.lambda1 + b.mu0) * pt.l2_sq + b.f.big_c0
            - 0.25 * (3.0 * b.mu0 / b.lambda1 + 1.0) * pt.h1_sq;
        g = g.max(val);
    }
    g
}

/// Largest violation of the sandwich with `d0 = 0`.
fn sandwich_need(b: &Bounds, e: f64, v: f64) -> f64 {
    (0.25 * b.gap() * e - v).max(v - 1.25 * e)
}

/// `E_s` and `V_eps` of a single state, with the sandwich check for the given `d0`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub time: f64,
    pub e_s: f64,
    pub v_eps: f64,
    pub eps: f64,
    pub sandwich_holds: bool,
}

pub fn energy_report(model: &Model, b: &Bounds, t: f64, x: &[f64], eps: f64, d0: f64) -> Result<EnergyReport> {
    if !(eps > 0.0) || eps > b.eps0 * (1.0 + 1e-12) {
        return invalid(format!("eps must lie in (0, eps0 = {}]", b.eps0));
    }
    let pt = parts(model, t, x);
    let e_s = energy_from(&model.cfg, &pt, b.f.big_c0);
    let v_eps = v_eps_from(&pt, eps);
    let slack = 1e-12 * (1.0 + e_s.abs());
    Ok(EnergyReport { time: t, e_s, v_eps, eps, sandwich_holds: sandwich_need(b, e_s, v_eps) <= d0 + slack })
}

/// All fitted and derived constants of the energy analysis.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyConstants {
    pub m: f64,
    pub big_c0: f64,
    pub c0: f64,
    pub e0: f64,
    pub eps0: f64,
    pub kstar: f64,
    pub g0: f64,
    pub d0: f64,
    pub d0_analytic: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Measured `sup E_s` along trajectories from the radius-`R` ball.
    pub c_r: f64,
    /// Energy limsup bound and the induced absorbing radius `2 sqrt(R0)`.
    pub r0_energy: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyExperimentConfig {
    pub trajectories: usize,
    pub radius: f64,
    pub horizon: f64,
    pub every: f64,
    pub calibration: usize,
    pub headroom: f64,
    pub seed: u64,
}

impl Default for EnergyExperimentConfig {
    fn default() -> Self {
        EnergyExperimentConfig {
            trajectories: 20,
            radius: 5.0,
            horizon: 50.0,
            every: 0.1,
            calibration: 10,
            headroom: 1.1,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyExperiment {
    pub constants: EnergyConstants,
    pub eps_values: Vec<f64>,
    pub samples: usize,
    pub min_energy: f64,
    pub nonneg_violations: usize,
    /// Max of `||V||_X^2 - 2 E_s`.
    pub worst_norm_gap: f64,
    pub norm_violations: usize,
    pub sandwich_violations: usize,
    /// Samples at which `V_eps <= Phi(eps)` started a forward check.
    pub vale_triggers: usize,
    pub vale_violations: usize,
    pub theta_table: Vec<(f64, f64)>,
    pub psi_phi: PsiPhi,
}

impl EnergyExperiment {
    pub fn zero_violations(&self) -> bool {
        self.nonneg_violations + self.norm_violations + self.sandwich_violations + self.vale_violations == 0
    }
}

/// Samples `(t, x)` every `every` up to `horizon` from each initial state.
pub fn sample_paths(model: &Model, starts: &[Vec<f64>], horizon: f64, every: f64) -> Result<Vec<Vec<(f64, Vec<f64>)>>> {
    let steps = (horizon / every).round() as usize;
    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * every).collect();
    starts
        .par_iter()
        .map(|x| {
            let tr = model.trajectory(0.0, x, &times)?;
            Ok(std::iter::once((0.0, x.clone())).chain(times.iter().copied().zip(tr)).collect())
        })
        .collect()
}

/// Runs trajectories from the `radius` ball, fits `K*`, `g0`, `d0`, and checks
/// every energy inequality along them.
pub fn energy_experiment(cfg: &NweConfig, opts: &EnergyExperimentConfig) -> Result<EnergyExperiment> {
    if opts.calibration == 0 || opts.calibration > opts.trajectories || !(opts.headroom >= 1.0) {
        return invalid("need 0 < calibration <= trajectories and headroom >= 1");
    }
    let b = Bounds::from_config(cfg)?;
    let model = Model::new(cfg)?;
    let starts = ball_sample(&vec![0.0; model.dim()], opts.radius, &model.x_norm_tag(), opts.trajectories, opts.seed)?;
    let paths = sample_paths(&model, &starts.points, opts.horizon, opts.every)?;
    let eps_values = vec![b.eps0 / 4.0, b.eps0 / 2.0, b.eps0];

    let all: Vec<(f64, Vec<f64>)> = paths.iter().flatten().cloned().collect();
    let kstar = fit_kstar(&model, &b, &all, &eps_values);
    let g0 = fit_g0(&model, &b, &all);

    // Per sample: (E_s, ||V||^2, V_eps for each eps).
    let table: Vec<Vec<(f64, f64, Vec<f64>)>> = paths
        .iter()
        .map(|path| {
            path.iter()
                .map(|(t, x)| {
                    let pt = parts(&model, *t, x);
                    let e = energy_from(cfg, &pt, b.f.big_c0);
                    (e, pt.h1_sq + pt.vel_sq, eps_values.iter().map(|&eps| v_eps_from(&pt, eps)).collect())
                })
                .collect()
        })
        .collect();

    let bref = &b;
    let need = |rows: &[Vec<(f64, f64, Vec<f64>)>]| {
        rows.iter()
            .flatten()
            .flat_map(|(e, _, vs)| vs.iter().map(move |v| sandwich_need(bref, *e, *v)))
            .fold(0.0f64, f64::max)
    };
    let d0 = (opts.headroom * need(&table[..opts.calibration])).max(1e-12);

    let mut min_energy = f64::INFINITY;
    let (mut nonneg, mut norm_v, mut sand) = (0, 0, 0);
    let mut worst_norm_gap = f64::NEG_INFINITY;
    for (e, nsq, vs) in table.iter().flatten() {
        min_energy = min_energy.min(*e);
        let slack = 1e-12 * (1.0 + e.abs());
        if *e < -slack {
            nonneg += 1;
        }
        worst_norm_gap = worst_norm_gap.max(nsq - 2.0 * e);
        if *nsq > 2.0 * e + slack {
            norm_v += 1;
        }
        sand += vs.iter().filter(|v| sandwich_need(&b, *e, **v) > d0 + slack).count();
    }

    let delta0 = b.delta0(kstar);
    let delta1 = b.delta1(d0, g0);
    let pp = PsiPhi { delta0, delta1, d0, p: b.p, lambda1: b.lambda1, mu0: b.mu0, eps0: b.eps0 };
    let (mut triggers, mut vale_bad) = (0, 0);
    for path in &table {
        for (j, &eps) in eps_values.iter().enumerate() {
            let (phi, psi) = (pp.phi(eps), pp.psi(eps));
            // Suffix maxima make each trigger an O(1) check.
            let mut suffix = vec![f64::NEG_INFINITY; path.len() + 1];
            for i in (0..path.len()).rev() {
                suffix[i] = suffix[i + 1].max(path[i].2[j]);
            }
            for (i, row) in path.iter().enumerate() {
                if row.2[j] <= phi {
                    triggers += 1;
                    if suffix[i] > psi {
                        vale_bad += 1;
                    }
                }
            }
        }
    }

    let c_r = table.iter().flatten().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let r0_energy = pp.r0_energy()?;
    let theta_table = [0.0, 1.0, 10.0, c_r, 100.0, 1e4].iter().map(|&s| (s, pp.theta(s))).collect();
    let constants = EnergyConstants {
        m: b.f.m,
        big_c0: b.f.big_c0,
        c0: b.f.c0,
        e0: b.f.e0,
        eps0: b.eps0,
        kstar,
        g0,
        d0,
        d0_analytic: b.d0_analytic(),
        c1: b.c1(),
        c2: b.c2(),
        delta0,
        delta1,
        eps1: pp.eps1(),
        eps2: pp.eps2(),
        c_r,
        r0_energy,
        r0: 2.0 * r0_energy.sqrt(),
    };
    Ok(EnergyExperiment {
        constants,
        eps_values,
        samples: table.iter().map(Vec::len).sum(),
        min_energy,
        nonneg_violations: nonneg,
        worst_norm_gap,
        norm_violations: norm_v,
        sandwich_violations: sand,
        vale_triggers: triggers,
        vale_violations: vale_bad,
        theta_table,
        psi_phi: pp,
    })
}
