//! Difference-energy estimates for pairs of trajectories, the pseudometrics
//! and contractive functions built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quad::simpson;
use super::solver::Model;
use super::NweConfig;
use crate::error::{invalid, Result};
use crate::hilbert::{self, VecSample};
use crate::metric::{
    contractivity_scan, distance_table, pseudometric_axioms, pseudometric_precompact, ContractivityScan, NetResult,
    PseudometricReport,
};
use crate::process::ball_sample;

/// A trajectory sampled on `s + k T / n`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct Path {
    pub start: f64,
    pub step: f64,
    pub states: Vec<Vec<f64>>,
}

pub fn sample_path(model: &Model, s: f64, x: &[f64], horizon: f64, intervals: usize) -> Result<Path> {
    if intervals < 2 || intervals % 2 == 1 || !(horizon > 0.0) {
        return invalid("need an even number of intervals and a positive horizon");
    }
    let step = horizon / intervals as f64;
    let times: Vec<f64> = (1..=intervals).map(|k| s + k as f64 * step).collect();
    let mut states = vec![x.to_vec()];
    states.extend(model.trajectory(s, x, &times)?);
    Ok(Path { start: s, step, states })
}

/// Time series along a pair of paths from the same start.
#[derive(Debug, Clone)]
pub struct PairSeries {
    pub horizon: f64,
    /// `<f(t, v) - f(t, w), z_t>`.
    pub force: Vec<f64>,
    /// `||K z_t||`.
    pub kernel: Vec<f64>,
    /// `<K z_t, z_t>`.
    pub kernel_inner: Vec<f64>,
    /// `k(t) < |v_t|^p v_t - |w_t|^p w_t, z_t >`.
    pub damping: Vec<f64>,
    pub z_l2: Vec<f64>,
    pub e_start: f64,
    pub e_end: f64,
    pub sup_norm: f64,
    /// Largest `||f(v) - f(w)|| / ((1 + |v|_{H1}^2 + |w|_{H1}^2) |z|_{H1})`.
    pub lip_ratio: f64,
    pub cp_violations: usize,
}

fn h1_sq(model: &Model, a: &[f64]) -> f64 {
    a.iter().zip(&model.lambda).map(|(a, l)| l * a * a).sum()
}

pub fn pair_series(model: &Model, v: &Path, w: &Path) -> Result<PairSeries> {
    if v.states.len() != w.states.len() || v.start != w.start || v.step != w.step {
        return invalid("paths must share start, step and length");
    }
    let n = model.n;
    let p = model.cfg.p;
    let len = v.states.len();
    let (mut force, mut kernel, mut kernel_inner, mut damping, mut z_l2) =
        (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    let (mut sup_norm, mut lip_ratio, mut cp_violations) = (0.0f64, 0.0f64, 0);
    for (k, (x, y)) in v.states.iter().zip(&w.states).enumerate() {
        let t = v.start + k as f64 * v.step;
        let (av, bv) = x.split_at(n);
        let (aw, bw) = y.split_at(n);
        let za: Vec<f64> = av.iter().zip(aw).map(|(a, b)| a - b).collect();
        let zb: Vec<f64> = bv.iter().zip(bw).map(|(a, b)| a - b).collect();
        let fv = model.f_hat(t, av);
        let fw = model.f_hat(t, aw);
        let df: Vec<f64> = fv.iter().zip(&fw).map(|(a, b)| a - b).collect();
        force.push(hilbert::dot(&df, &zb));
        let kz = model.kernel_apply(&zb);
        kernel.push(hilbert::norm(&kz));
        kernel_inner.push(hilbert::dot(&kz, &zb));
        let pv = hilbert::power_map(bv, p);
        let pw = hilbert::power_map(bw, p);
        let dp: Vec<f64> = pv.iter().zip(&pw).map(|(a, b)| a - b).collect();
        damping.push(model.cfg.damping.eval(t) * hilbert::dot(&dp, &zb));
        z_l2.push(hilbert::norm(&za));
        sup_norm = sup_norm.max(model.x_norm(x)).max(model.x_norm(y));
        let zh = h1_sq(model, &za).sqrt();
        if zh > 1e-9 {
            let den = (1.0 + h1_sq(model, av) + h1_sq(model, aw)) * zh;
            lip_ratio = lip_ratio.max(hilbert::norm(&df) / den);
        }
        let r = hilbert::norm(bv).max(hilbert::norm(bw));
        if !hilbert::check_monotone_power(&VecSample { x: bv.to_vec(), y: bw.to_vec(), p, r }).holds {
            cp_violations += 1;
        }
    }
    let diff = |x: &[f64], y: &[f64]| -> f64 {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        0.5 * model.x_norm(&z).powi(2)
    };
    Ok(PairSeries {
        horizon: v.step * (len - 1) as f64,
        force,
        kernel,
        kernel_inner,
        damping,
        z_l2,
        e_start: diff(&v.states[0], &w.states[0]),
        e_end: diff(&v.states[len - 1], &w.states[len - 1]),
        sup_norm,
        lip_ratio,
        cp_violations,
    })
}

/// Constants shared by all pairs.
#[derive(Debug, Clone, Serialize)]
pub struct Gammas {
    pub horizon: f64,
    pub c_r0: f64,
    pub l0: f64,
    pub gamma_t1: f64,
    pub gamma_t2: f64,
}

impl Gammas {
    pub fn new(cfg: &NweConfig, horizon: f64, c_r0: f64, l0: f64) -> Self {
        let (k0, k1) = cfg.damping.bounds();
        let (p, c, t) = (cfg.p, c_r0, horizon);
        let gamma_t1 = (2.0 * c + k1 * c.powf(p + 2.0) * t + l0 * c * (1.0 + 2.0 * c * c) * t + cfg.k0_norm() * c * t) / t;
        let gamma_t2 = (4.0 / k0).powf(p / (p + 2.0)) * t.powf(-2.0 / (p + 2.0));
        Gammas { horizon, c_r0, l0, gamma_t1, gamma_t2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionDiagnostics {
    pub rho1: f64,
    pub rho2: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub gamma_t1: f64,
    pub gamma_t2: f64,
    pub e_script_0: f64,
    pub e_script_t: f64,
    pub t: f64,
    pub c_r0: f64,
    /// `E(T) - E(0) + int damping + int force - int <K z_t, z_t>`, zero up to quadrature.
    pub identity_residual: f64,
    pub corollary: (f64, f64),
    pub estimate: (f64, f64),
    pub corollary_g: (f64, f64),
    pub estimate_g: (f64, f64),
}

/// Relative tolerance for the time quadrature.
pub const QUAD_TOL: f64 = 1e-6;

fn holds(c: (f64, f64)) -> bool {
    c.0 <= c.1 * (1.0 + QUAD_TOL) + 1e-14
}

impl ContractionDiagnostics {
    pub fn all_hold(&self) -> bool {
        holds(self.corollary) && holds(self.estimate) && holds(self.corollary_g) && holds(self.estimate_g)
    }
}

/// `rho1 = 4 c int ||K z_t||`.
pub fn rho1(s: &PairSeries, g: &Gammas, h: f64) -> f64 {
    4.0 * g.c_r0 * simpson(&s.kernel, h)
}

/// `rho2 = 2 Gamma1 sup ||z||`.
pub fn rho2(s: &PairSeries, g: &Gammas) -> f64 {
    2.0 * g.gamma_t1 * s.z_l2.iter().copied().fold(0.0, f64::max)
}

/// `psi1 = 2 |int <f(v) - f(w), z_t>|`.
pub fn psi1(s: &PairSeries, h: f64) -> f64 {
    2.0 * simpson(&s.force, h).abs()
}

/// `psi2 = (2 / T) |int_0^T int_t^T <f(w) - f(v), w_t - v_t>|`, with the
/// inner double integral written as `int_0^T tau g(tau) dtau`.
pub fn psi2(s: &PairSeries, h: f64) -> f64 {
    let weighted: Vec<f64> = s.force.iter().enumerate().map(|(k, v)| k as f64 * h * v).collect();
    2.0 / s.horizon * simpson(&weighted, h).abs()
}

pub fn diagnose(s: &PairSeries, g: &Gammas, p: f64, h: f64) -> ContractionDiagnostics {
    let c = g.c_r0;
    let i1 = simpson(&s.force, h);
    let j = simpson(&s.kernel, h);
    let sup_z = s.z_l2.iter().copied().fold(0.0, f64::max);
    let (r1, r2, q1, q2) = (rho1(s, g, h), rho2(s, g), psi1(s, h), psi2(s, h));
    let identity_residual = s.e_end - s.e_start + simpson(&s.damping, h) + i1 - simpson(&s.kernel_inner, h);

    let corollary = (s.e_end, s.e_start + i1.abs() + 2.0 * c * j);
    let base = (s.e_start - s.e_end + i1.abs() + 2.0 * c * j).max(0.0);
    let expo = 2.0 / (p + 2.0);
    let estimate = (s.e_end, g.gamma_t1 * sup_z + g.gamma_t2 * base.powf(expo) + 0.5 * q2 + 2.0 * c * j);

    // The same two bounds in the abstract form with g1 = rho1, g2 = rho1 + rho2.
    let g1 = r1;
    let g2 = r1 + r2;
    let corollary_g = (2.0 * s.e_end, 2.0 * s.e_start + q1 + g1);
    let base2 = (2.0 * s.e_start - 2.0 * s.e_end + g1 + q1).max(0.0);
    let estimate_g = (2.0 * s.e_end, 2f64.powf(p / (p + 2.0)) * g.gamma_t2 * base2.powf(expo) + g2 + q2);

    ContractionDiagnostics {
        rho1: r1,
        rho2: r2,
        psi1: q1,
        psi2: q2,
        gamma_t1: g.gamma_t1,
        gamma_t2: g.gamma_t2,
        e_script_0: s.e_start,
        e_script_t: s.e_end,
        t: s.horizon,
        c_r0: c,
        identity_residual,
        corollary,
        estimate,
        corollary_g,
        estimate_g,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractionConfig {
    pub pairs: usize,
    /// Radius of the X-ball the initial data are drawn from.
    pub radius: f64,
    pub horizon: f64,
    pub intervals: usize,
    /// States used for the pseudometric tables.
    pub table_states: usize,
    pub net_delta: f64,
    /// Items of the contractivity scan and the lag spacing between them.
    pub scan_items: usize,
    pub scan_lag0: f64,
    pub scan_lag_step: f64,
    pub scan_time: f64,
    pub seed: u64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig {
            pairs: 50,
            radius: 1.5,
            horizon: 5.0,
            intervals: 500,
            table_states: 20,
            net_delta: 0.1,
            scan_items: 16,
            scan_lag0: 4.0,
            scan_lag_step: 2.0,
            scan_time: 40.0,
            seed: 21,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionExperiment {
    pub gammas: Gammas,
    pub pairs: Vec<ContractionDiagnostics>,
    pub inequality_violations: usize,
    pub worst_identity_residual: f64,
    pub cp_violations: usize,
    pub rho1_axioms: PseudometricReport,
    pub rho2_axioms: PseudometricReport,
    pub rho1_net: NetResult,
    pub psi1_scan: ContractivityScan,
    pub psi2_scan: ContractivityScan,
}

/// Runs the pair estimates, the pseudometric tables and the contractivity scans.
pub fn contraction_experiment(cfg: &NweConfig, opts: &ContractionConfig) -> Result<ContractionExperiment> {
    let model = Model::new(cfg)?;
    let tag = model.x_norm_tag();
    let zero = vec![0.0; model.dim()];
    let (t, iv) = (opts.horizon, opts.intervals);
    let h = t / iv as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let firsts = ball_sample(&zero, opts.radius, &tag, opts.pairs + 1, opts.seed.wrapping_add(1))?;
    let seconds = ball_sample(&zero, opts.radius, &tag, opts.pairs + 1, opts.seed.wrapping_add(2))?;
    let starts: Vec<f64> = (0..opts.pairs).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let series = (0..opts.pairs)
        .into_par_iter()
        .map(|i| {
            let v = sample_path(&model, starts[i], &firsts.points[i + 1], t, iv)?;
            let w = sample_path(&model, starts[i], &seconds.points[i + 1], t, iv)?;
            pair_series(&model, &v, &w)
        })
        .collect::<Result<Vec<_>>>()?;

    let table_pts = ball_sample(&zero, opts.radius, &tag, opts.table_states, opts.seed.wrapping_add(3))?;
    let table_paths = table_pts
        .points
        .par_iter()
        .map(|x| sample_path(&model, 0.0, x, t, iv))
        .collect::<Result<Vec<_>>>()?;

    let scan_seeds = ball_sample(&zero, opts.radius, &tag, opts.scan_items, opts.seed.wrapping_add(4))?;
    let scan_paths = scan_seeds
        .points
        .par_iter()
        .enumerate()
        .map(|(i, y)| {
            let lag = opts.scan_lag0 + i as f64 * opts.scan_lag_step;
            let x = model.integrate(opts.scan_time - lag, opts.scan_time, y)?;
            sample_path(&model, opts.scan_time, &x, t, iv)
        })
        .collect::<Result<Vec<_>>>()?;

    let measured = series
        .iter()
        .map(|s| s.sup_norm)
        .chain(table_paths.iter().chain(&scan_paths).flat_map(|p| p.states.iter().map(|x| model.x_norm(x))))
        .fold(0.0f64, f64::max);
    let l0 = series.iter().map(|s| s.lip_ratio).fold(0.0f64, f64::max);
    let gammas = Gammas::new(cfg, t, measured.max(1.0), l0);

    let pairs: Vec<ContractionDiagnostics> = series.iter().map(|s| diagnose(s, &gammas, cfg.p, h)).collect();
    let inequality_violations = pairs.iter().filter(|d| !d.all_hold()).count();
    let worst_identity_residual = pairs.iter().map(|d| d.identity_residual.abs()).fold(0.0, f64::max);
    let cp_violations = series.iter().map(|s| s.cp_violations).sum();

    let pair_of = |a: &Path, b: &Path| pair_series(&model, a, b).expect("paths share their grid");
    let t1 = distance_table(&table_paths, |a, b| rho1(&pair_of(a, b), &gammas, h));
    let t2 = distance_table(&table_paths, |a, b| rho2(&pair_of(a, b), &gammas));
    let rho1_axioms = pseudometric_axioms(&t1, 1e-9);
    let rho2_axioms = pseudometric_axioms(&t2, 1e-9);
    let rho1_net = pseudometric_precompact(&t1, opts.net_delta)?;
    let psi1_scan = contractivity_scan(&scan_paths, |a, b| psi1(&pair_of(a, b), h))?;
    let psi2_scan = contractivity_scan(&scan_paths, |a, b| psi2(&pair_of(a, b), h))?;

    Ok(ContractionExperiment {
        gammas,
        pairs,
        inequality_violations,
        worst_identity_residual,
        cp_violations,
        rho1_axioms,
        rho2_axioms,
        rho1_net,
        psi1_scan,
        psi2_scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_paths_give_zero_everything() {
        let cfg = NweConfig { modes: 4, ..NweConfig::default() };
        let m = Model::new(&cfg).unwrap();
        let x = vec![0.3, 0.0, 0.1, 0.0, 0.0, 0.2, 0.0, 0.0];
        let p = sample_path(&m, 1.0, &x, 1.0, 20).unwrap();
        let s = pair_series(&m, &p, &p).unwrap();
        let g = Gammas::new(&cfg, 1.0, 1.0, 1.0);
        let d = diagnose(&s, &g, cfg.p, 0.05);
        assert_eq!((d.rho1, d.rho2, d.psi1, d.psi2, d.e_script_t), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(d.all_hold());
    }

    #[test]
    fn energy_identity_closes_on_a_pair() {
        let cfg = NweConfig { modes: 6, ..NweConfig::default() };
        let m = Model::new(&cfg).unwrap();
        let mut x = vec![0.0; 12];
        let mut y = vec![0.0; 12];
        x[0] = 0.8;
        x[7] = -0.4;
        y[1] = 0.3;
        y[6] = 0.5;
        let v = sample_path(&m, 0.3, &x, 2.0, 400).unwrap();
        let w = sample_path(&m, 0.3, &y, 2.0, 400).unwrap();
        let s = pair_series(&m, &v, &w).unwrap();
        let g = Gammas::new(&cfg, 2.0, 1.5, 3.0);
        let d = diagnose(&s, &g, cfg.p, 2.0 / 400.0);
        assert!(d.identity_residual.abs() < 1e-6 * (d.e_script_0 + 1.0), "{}", d.identity_residual);
        assert!(d.all_hold(), "{d:?}");
        assert_eq!(s.cp_violations, 0);
    }
}
