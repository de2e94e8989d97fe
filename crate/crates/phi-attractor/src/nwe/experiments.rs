//! Numerical experiments on the wave model: integrator checks, absorption,
//! the absorbing family, Lipschitz growth and attraction rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{energy_from, parts, Bounds};
use super::solver::{Model, NweProcess};
use super::NweConfig;
use crate::constructor::{build_continuous, BuildOptions, LiftedFamily};
use crate::decay::DecayFunction;
use crate::error::{invalid, Result};
use crate::grid;
use crate::metric::Ensemble;
use crate::process::{
    ball_sample, check_positive_invariance, check_uniform_pullback_absorption, fit_rate_certificate, sphere_sample,
    AbsorptionReport, BallFamily, InvarianceReport, Process, RateCertificate, RateOptions, SampledFamily,
};

/// Initial data whose energy sits in the first `k` modes, with X-norm `radius`.
pub fn low_mode_state(model: &Model, k: usize, radius: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n;
    let mut x = vec![0.0; 2 * n];
    for i in 0..k.min(n) {
        x[i] = rng.gen_range(-1.0..1.0);
        x[n + i] = rng.gen_range(-1.0..1.0);
    }
    let s = radius / model.x_norm(&x);
    x.iter_mut().for_each(|v| *v *= s);
    x
}

/// Embeds a state of an `n`-mode model into an `m >= n` mode one.
pub fn embed(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len() / 2;
    let mut y = vec![0.0; 2 * m];
    y[..n].copy_from_slice(&x[..n]);
    y[m..m + n].copy_from_slice(&x[n..]);
    y
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleCheck {
    /// `(t, r, s, relative residual)`.
    pub triples: Vec<(f64, f64, f64, f64)>,
    pub worst: f64,
}

/// `|S(t, r) S(r, s) x - S(t, s) x|_X / |S(t, s) x|_X` on random triples.
pub fn cocycle_check(cfg: &NweConfig, n: usize, radius: f64, seed: u64) -> Result<CocycleCheck> {
    let proc = NweProcess::new(cfg)?;
    let m = &proc.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = ball_sample(&vec![0.0; m.dim()], radius, &m.x_norm_tag(), n + 1, seed)?;
    let cases: Vec<(f64, f64, f64, Vec<f64>)> = starts.points[1..]
        .iter()
        .map(|x| {
            let s = rng.gen_range(-5.0..5.0);
            let r = s + rng.gen_range(0.0..3.0);
            let t = r + rng.gen_range(0.0..3.0);
            (t, r, s, x.clone())
        })
        .collect();
    let triples = cases
        .par_iter()
        .map(|(t, r, s, x)| {
            let direct = proc.apply(*t, *s, x)?;
            let split = proc.apply(*t, *r, &proc.apply(*r, *s, x)?)?;
            let diff: Vec<f64> = direct.iter().zip(&split).map(|(a, b)| a - b).collect();
            Ok((*t, *r, *s, m.x_norm(&diff) / m.x_norm(&direct).max(1e-300)))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = triples.iter().map(|c| c.3).fold(0.0, f64::max);
    Ok(CocycleCheck { triples, worst })
}

#[derive(Debug, Clone, Serialize)]
pub struct StepHalving {
    pub dt: f64,
    pub error_coarse: f64,
    pub error_fine: f64,
    pub ratio: f64,
}

/// Errors at `dt` and `dt / 2` against a run at `dt / 16`, measured in X at `horizon`.
pub fn step_halving(cfg: &NweConfig, x: &[f64], horizon: f64, dt: f64) -> Result<StepHalving> {
    let m = Model::new(cfg)?;
    let runs = [dt, dt / 2.0, dt / 16.0]
        .par_iter()
        .map(|&h| m.integrate_with(0.0, horizon, x, h))
        .collect::<Result<Vec<_>>>()?;
    let err = |y: &[f64]| {
        let d: Vec<f64> = y.iter().zip(&runs[2]).map(|(a, b)| a - b).collect();
        m.x_norm(&d)
    };
    let (ec, ef) = (err(&runs[0]), err(&runs[1]));
    Ok(StepHalving { dt, error_coarse: ec, error_fine: ef, ratio: ec / ef })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeDoubling {
    pub modes: (usize, usize),
    /// Largest `|E_2N - E_N| / |E_N|` along the samples.
    pub worst_relative_change: f64,
    /// Same without the additive constant `C0`.
    pub worst_relative_change_dynamic: f64,
    pub samples: Vec<(f64, f64, f64)>,
}

/// Compares `E_s` along a trajectory computed with `N` and `2N` modes.
pub fn mode_doubling(cfg: &NweConfig, x: &[f64], horizon: f64, every: f64) -> Result<ModeDoubling> {
    let coarse = cfg.clone();
    let fine = NweConfig { modes: 2 * cfg.modes, ..cfg.clone() };
    let bounds = Bounds::from_config(cfg)?;
    let c0 = bounds.f.big_c0;
    let times: Vec<f64> = (0..=((horizon / every).round() as usize)).map(|k| k as f64 * every).collect();
    let energies = [coarse, fine]
        .par_iter()
        .map(|c| {
            let m = Model::new(c)?;
            let x0 = embed(x, c.modes);
            let tr = m.trajectory(0.0, &x0, &times)?;
            Ok(tr.iter().zip(&times).map(|(y, t)| energy_from(c, &parts(&m, *t, y), c0)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64, f64)> =
        times.iter().zip(energies[0].iter().zip(&energies[1])).map(|(t, (a, b))| (*t, *a, *b)).collect();
    let rel = |shift: f64| {
        samples.iter().map(|(_, a, b)| (b - a).abs() / (a - shift).abs().max(1e-12)).fold(0.0, f64::max)
    };
    Ok(ModeDoubling {
        modes: (cfg.modes, 2 * cfg.modes),
        worst_relative_change: rel(0.0),
        worst_relative_change_dynamic: rel(c0),
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorbingConfig {
    pub radii: Vec<f64>,
    pub per_radius: usize,
    pub horizon: f64,
    pub every: f64,
    /// Relative margin added to the largest plateau to get `r0`.
    pub headroom: f64,
    pub seed: u64,
}

impl Default for AbsorbingConfig {
    fn default() -> Self {
        AbsorbingConfig { radii: vec![1.0, 5.0, 20.0], per_radius: 8, horizon: 60.0, every: 0.25, headroom: 0.05, seed: 5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusRun {
    pub radius: f64,
    /// `sup |V|_X` over the second half of the horizon.
    pub plateau: f64,
    /// `sup E_s` over the same window, when the energy constants are available.
    pub energy_plateau: Option<f64>,
    /// First sample time after which every norm stays below `r0`.
    pub tau0: Option<f64>,
    /// Plateau seen in the third and in the last quarter of the horizon.
    pub quarter_sups: (f64, f64),
    pub conclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingReport {
    pub r0: f64,
    pub spread: f64,
    pub runs: Vec<RadiusRun>,
    pub inconclusive: bool,
}

/// Evolves spheres of initial data and reads off the long-time norm plateau.
pub fn absorbing_experiment(cfg: &NweConfig, opts: &AbsorbingConfig) -> Result<AbsorbingReport> {
    if opts.radii.is_empty() || opts.per_radius == 0 || !(opts.every > 0.0) || !(opts.horizon > 4.0 * opts.every) {
        return invalid("need radii, samples per radius and a horizon spanning several samples");
    }
    let m = Model::new(cfg)?;
    let tag = m.x_norm_tag();
    let bounds = Bounds::from_config(cfg).ok();
    let steps = (opts.horizon / opts.every).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * opts.every).collect();

    // (times, norms, energies) per trajectory, grouped by radius.
    let mut grouped = Vec::new();
    for (i, &r) in opts.radii.iter().enumerate() {
        let starts = if r == 0.0 {
            vec![vec![0.0; m.dim()]]
        } else {
            sphere_sample(m.dim(), r, &tag, opts.per_radius, opts.seed.wrapping_add(i as u64))?.points
        };
        let runs = starts
            .par_iter()
            .map(|x| {
                let tr = m.trajectory(0.0, x, &times)?;
                let norms: Vec<f64> = tr.iter().map(|y| m.x_norm(y)).collect();
                let energies: Option<Vec<f64>> = bounds.as_ref().map(|b| {
                    tr.iter().zip(&times).map(|(y, t)| energy_from(cfg, &parts(&m, *t, y), b.f.big_c0)).collect()
                });
                Ok((norms, energies))
            })
            .collect::<Result<Vec<_>>>()?;
        grouped.push((r, runs));
    }

    let window_sup = |runs: &[(Vec<f64>, Option<Vec<f64>>)], lo: f64, hi: f64| {
        runs.iter()
            .flat_map(|(n, _)| n.iter().zip(&times).filter(|(_, t)| **t >= lo && **t <= hi).map(|(v, _)| *v))
            .fold(0.0f64, f64::max)
    };
    let h = opts.horizon;
    let plateaus: Vec<f64> = grouped.iter().map(|(_, runs)| window_sup(runs, 0.5 * h, h)).collect();
    let top = plateaus.iter().copied().fold(0.0f64, f64::max);
    let bottom = plateaus.iter().copied().fold(f64::INFINITY, f64::min);
    let r0 = top * (1.0 + opts.headroom);
    let spread = if top > 0.0 { (top - bottom) / top } else { 0.0 };

    let runs: Vec<RadiusRun> = grouped
        .iter()
        .zip(&plateaus)
        .map(|((radius, runs), &plateau)| {
            let q3 = window_sup(runs, 0.5 * h, 0.75 * h);
            let q4 = window_sup(runs, 0.75 * h, h);
            let conclusive = q3 == 0.0 && q4 == 0.0 || (q4 - q3).abs() <= 0.1 * q3.max(q4);
            let mut tau0 = None;
            for k in (0..times.len()).rev() {
                if runs.iter().all(|(n, _)| n[k] <= r0) {
                    tau0 = Some(times[k]);
                } else {
                    break;
                }
            }
            let energy_plateau = runs
                .iter()
                .filter_map(|(_, e)| e.as_ref())
                .flat_map(|e| e.iter().zip(&times).filter(|(_, t)| **t >= 0.5 * h).map(|(v, _)| *v))
                .reduce(f64::max);
            RadiusRun { radius: *radius, plateau, energy_plateau, tau0, quarter_sups: (q3, q4), conclusive }
        })
        .collect();
    let inconclusive = runs.iter().any(|r| !r.conclusive || r.tau0.is_none());
    Ok(AbsorbingReport { r0, spread, runs, inconclusive })
}

#[derive(Debug, Clone, Serialize)]
pub struct CFamilyConfig {
    pub r0: f64,
    /// Lag after which the `r0` ball is mapped into itself; rounded up to the grid.
    pub tau1: f64,
    pub grid_step: f64,
    /// Earliest initial time of the union.
    pub first_start: f64,
    pub labels: Vec<f64>,
    pub points: usize,
    pub seed: u64,
}

impl CFamilyConfig {
    pub fn new(r0: f64, tau1: f64) -> Self {
        CFamilyConfig {
            r0,
            tau1,
            grid_step: 2.0,
            first_start: -20.0,
            labels: vec![10.0, 12.0, 14.0, 16.0],
            points: 6,
            seed: 31,
        }
    }
}

/// `C_t = { S(t, s) x_i : s = first_start + j h <= t - tau1 }` for a sample
/// `x_i` of the closed `r0` ball.
pub fn c_family(cfg: &NweConfig, opts: &CFamilyConfig) -> Result<SampledFamily> {
    let h = opts.grid_step;
    if !(h > 0.0) || opts.labels.is_empty() || opts.labels.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("need a positive grid step and strictly increasing labels");
    }
    let on_grid = |v: f64| ((v - opts.first_start) / h - ((v - opts.first_start) / h).round()).abs() < 1e-9;
    if !opts.labels.iter().all(|&t| on_grid(t)) {
        return invalid("labels must lie on the start grid");
    }
    let tau1 = (opts.tau1 / h).ceil() * h;
    let last = *opts.labels.last().expect("nonempty labels");
    if opts.labels[0] - tau1 < opts.first_start {
        return invalid("the first label must be at least tau1 after the first start");
    }
    let m = Model::new(cfg)?;
    let ball = ball_sample(&vec![0.0; m.dim()], opts.r0, &m.x_norm_tag(), opts.points, opts.seed)?;
    let n_starts = ((last - tau1 - opts.first_start) / h).round() as usize + 1;
    let jobs: Vec<(f64, usize)> =
        (0..n_starts).flat_map(|j| (0..opts.points).map(move |i| (opts.first_start + j as f64 * h, i))).collect();
    let pieces = jobs
        .par_iter()
        .map(|&(s, i)| {
            let times: Vec<f64> = opts.labels.iter().copied().filter(|&t| t - s >= tau1 - 1e-9).collect();
            Ok((times.clone(), m.trajectory(s, &ball.points[i], &times)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut members: Vec<Vec<Vec<f64>>> = vec![Vec::new(); opts.labels.len()];
    for (times, states) in pieces {
        for (t, x) in times.iter().zip(states) {
            let k = opts.labels.iter().position(|l| (l - t).abs() < 1e-9).expect("label from the list");
            members[k].push(x);
        }
    }
    let ensembles = members
        .into_iter()
        .zip(&opts.labels)
        .map(|(pts, &t)| Ensemble::new(pts, t, m.x_norm_tag()))
        .collect::<Result<Vec<_>>>()?;
    SampledFamily::new(opts.labels.clone(), ensembles)
}

#[derive(Debug, Clone, Serialize)]
pub struct CFamilyReport {
    pub closed: bool,
    pub bounded: bool,
    pub max_norm: f64,
    pub invariance: InvarianceReport,
    pub absorption: AbsorptionReport,
    pub absorbing: bool,
    pub tol: f64,
}

impl CFamilyReport {
    pub fn all_hold(&self) -> bool {
        self.closed && self.bounded && self.invariance.holds && self.absorbing
    }
}

/// Finite samples are closed; boundedness is against the `r0` ball; invariance
/// and uniform absorption of the `d_radius` ball use the process checkers.
pub fn check_c_family(
    cfg: &NweConfig,
    fam: &SampledFamily,
    r0: f64,
    d_radius: f64,
    d_points: usize,
    lag_grid: &[f64],
    tol: f64,
) -> Result<CFamilyReport> {
    let proc = NweProcess::new(cfg)?;
    let labels = fam.label_set().to_vec();
    let closed = fam.members().iter().all(|e| e.points.iter().flatten().all(|v| v.is_finite()));
    let max_norm = fam.members().iter().map(|e| e.max_norm()).fold(0.0, f64::max);
    let invariance = check_positive_invariance(&proc, fam, &labels, tol)?;
    let d = ball_sample(&vec![0.0; proc.model.dim()], d_radius, &proc.norm(), d_points, 77)?;
    let t = *labels.last().expect("labels");
    let absorption = check_uniform_pullback_absorption(&proc, fam, &d, t, &labels, lag_grid, tol)?;
    Ok(CFamilyReport {
        closed,
        bounded: max_norm <= r0 + tol,
        max_norm,
        invariance,
        absorbing: absorption.t_found.is_some(),
        absorption,
        tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzProbe {
    pub gamma0: f64,
    /// `(tau, L_tau)`: largest growth ratio seen on `[0, tau]`.
    pub l_tau: Vec<(f64, f64)>,
    pub pairs: usize,
}

/// Growth of small perturbations: random directions plus the coordinate
/// directions, all of X-norm `delta` around points of the radius-`r` ball.
pub fn lipschitz_probe(
    cfg: &NweConfig,
    s: f64,
    tau_max: f64,
    r: f64,
    random_pairs: usize,
    samples: usize,
    seed: u64,
) -> Result<LipschitzProbe> {
    if !(tau_max > 0.0) || samples < 2 {
        return invalid("need tau_max > 0 and at least two samples");
    }
    let m = Model::new(cfg)?;
    let tag = m.x_norm_tag();
    let dim = m.dim();
    let weights = cfg.x_weights();
    let delta = 1e-6 * r.max(1.0);
    let bases = ball_sample(&vec![0.0; dim], r, &tag, random_pairs.max(1), seed)?;
    let dirs = sphere_sample(dim, delta, &tag, random_pairs.max(1), seed.wrapping_add(1))?;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = bases
        .points
        .iter()
        .zip(&dirs.points)
        .map(|(x, d)| (x.clone(), x.iter().zip(d).map(|(a, b)| a + b).collect()))
        .collect();
    for i in 0..dim {
        let x = bases.points[0].clone();
        let mut y = x.clone();
        y[i] += delta / weights[i].sqrt();
        pairs.push((x, y));
    }
    let times: Vec<f64> = (1..=samples).map(|k| s + k as f64 * tau_max / samples as f64).collect();
    let ratios = pairs
        .par_iter()
        .map(|(x, y)| {
            let d0 = tag.dist(x, y);
            let a = m.trajectory(s, x, &times)?;
            let b = m.trajectory(s, y, &times)?;
            Ok(a.iter().zip(&b).map(|(u, v)| tag.dist(u, v) / d0).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gamma0 = 0.0f64;
    let mut running = 1.0f64;
    let mut l_tau = Vec::with_capacity(samples);
    for (k, t) in times.iter().enumerate() {
        let worst = ratios.iter().map(|r| r[k]).fold(0.0f64, f64::max);
        gamma0 = gamma0.max(worst.ln() / (t - s));
        running = running.max(worst);
        l_tau.push((t - s, running));
    }
    Ok(LipschitzProbe { gamma0, l_tau, pairs: pairs.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub p_values: Vec<f64>,
    pub modes: usize,
    pub dt: f64,
    pub ball_radius: f64,
    pub ball_points: usize,
    pub d_radius: f64,
    pub d_points: usize,
    pub k_min: i64,
    pub k_max: i64,
    pub n_cut: usize,
    pub budget: usize,
    pub target_time: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub per_decade: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            p_values: vec![1.0, 2.0, 4.0],
            modes: 8,
            dt: 0.01,
            ball_radius: 1.0,
            ball_points: 16,
            d_radius: 1.0,
            d_points: 16,
            k_min: -1,
            k_max: 0,
            n_cut: 3,
            budget: 6,
            target_time: 0.5,
            tau_lo: 1.0,
            tau_hi: 100.0,
            per_decade: 10,
            tol: 1e-8,
            seed: 41,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRun {
    pub p: f64,
    pub c_const: f64,
    pub properties_hold: bool,
    pub family_points: usize,
    pub certificate: RateCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub runs: Vec<RateRun>,
    /// Slopes ordered as the `p` values, steeper for smaller `p`.
    pub slopes_ordered: bool,
}

/// Builds the family for the decay-only model at each `p`, then certifies
/// `d_H(S(t, t - tau) D, M_t) <= 2 C phi(tau)` with `phi(tau) = tau^{-1/p}`.
pub fn rate_experiment(opts: &RateConfig) -> Result<RateReport> {
    let mut runs = Vec::new();
    for &p in &opts.p_values {
        if !(p > 0.0) {
            return invalid("rate experiment needs p > 0");
        }
        let cfg = NweConfig::free_decay(p, opts.modes, opts.dt);
        let proc = NweProcess::new(&cfg)?;
        let tag = proc.norm();
        let zero = vec![0.0; proc.model.dim()];
        let b = BallFamily::new(zero.clone(), opts.ball_radius, tag.clone(), opts.ball_points, opts.seed)?;
        let phi = DecayFunction::power(-1.0 / p, 1.0)?;
        let bo = BuildOptions::new(opts.k_min, opts.k_max, opts.n_cut, opts.budget, 1.0);
        let (fam, report) = build_continuous(&proc, &b, 1.0, &phi, &bo, opts.tol)?;
        let lifted = LiftedFamily { proc: &proc, fam: &fam };
        let d = ball_sample(&zero, opts.d_radius, &tag, opts.d_points, opts.seed.wrapping_add(1))?;
        let taus = grid::per_decade(opts.tau_lo, opts.tau_hi, opts.per_decade)?;
        let shift = if opts.d_radius <= opts.ball_radius { 0.0 } else { 1.0 };
        let ro = RateOptions { omega: 1.0, c_override: Some(2.0 * fam.c_const), shift, ..RateOptions::default() };
        let certificate = fit_rate_certificate(&proc, &lifted, &d, opts.target_time, &taus, &phi, &ro)?;
        runs.push(RateRun {
            p,
            c_const: fam.c_const,
            properties_hold: report.all_hold(),
            family_points: fam.total_points(),
            certificate,
        });
    }
    let slopes: Vec<f64> = runs.iter().map(|r| r.certificate.slope.unwrap_or(f64::NAN)).collect();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&i, &j| runs[i].p.total_cmp(&runs[j].p));
    let slopes_ordered = order.windows(2).all(|w| slopes[w[0]] < slopes[w[1]]);
    Ok(RateReport { runs, slopes_ordered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nwe::config::{DampingFn, FSpec, ForcingSpec, KernelSpec};
    use crate::process::models::expm;

    #[test]
    fn zero_radius_has_zero_plateau() {
        let cfg = NweConfig { modes: 4, forcing: ForcingSpec::Zero, f: FSpec::Cubic { alpha: 0.0 }, ..NweConfig::default() };
        let opts = AbsorbingConfig { radii: vec![0.0], per_radius: 1, horizon: 4.0, every: 0.5, ..AbsorbingConfig::default() };
        let r = absorbing_experiment(&cfg, &opts).unwrap();
        assert_eq!(r.r0, 0.0);
        assert_eq!(r.runs[0].tau0, Some(0.0));
    }

    #[test]
    fn cocycle_holds_on_small_model() {
        let cfg = NweConfig { modes: 6, ..NweConfig::default() };
        let c = cocycle_check(&cfg, 4, 2.0, 3).unwrap();
        assert!(c.worst < 1e-9, "{}", c.worst);
    }

    /// `max_t ln |e^{A t}|_X / t` over the probe grid, from the matrix exponential.
    fn oracle_gamma(cfg: &NweConfig, tau_max: f64, samples: usize) -> f64 {
        let n = cfg.modes;
        let k = cfg.damping.eval(0.0);
        let mut a = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            a[i][n + i] = 1.0;
            a[n + i][i] = -cfg.lambda(i + 1);
            a[n + i][n + i] = -k;
        }
        for (i, j, v) in cfg.kernel_entries() {
            a[n + i][n + j] += v;
        }
        let w: Vec<f64> = cfg.x_weights().iter().map(|v| v.sqrt()).collect();
        let mut best = 0.0f64;
        for s in 1..=samples {
            let t = s as f64 * tau_max / samples as f64;
            let e = expm(&a, t);
            // Spectral norm of W^{1/2} e W^{-1/2} by power iteration on its Gram matrix.
            let d = 2 * n;
            let b: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| w[i] * e[i][j] / w[j]).collect()).collect();
            let mut v = vec![1.0; d];
            let mut sig = 0.0;
            for _ in 0..500 {
                let bv: Vec<f64> = (0..d).map(|i| (0..d).map(|j| b[i][j] * v[j]).sum()).collect();
                let btbv: Vec<f64> = (0..d).map(|j| (0..d).map(|i| b[i][j] * bv[i]).sum()).collect();
                let nn = btbv.iter().map(|x| x * x).sum::<f64>().sqrt();
                sig = nn.sqrt();
                v = btbv.iter().map(|x| x / nn).collect();
            }
            best = best.max(sig.ln() / t);
        }
        best
    }

    #[test]
    fn linear_growth_matches_matrix_exponential() {
        let cfg = NweConfig {
            modes: 2,
            p: 0.0,
            damping: DampingFn::Constant { value: 0.2 },
            kernel: KernelSpec::RankOneSine { amp: 2.0 / std::f64::consts::PI },
            forcing: ForcingSpec::Zero,
            f: FSpec::Zero,
            dt: 1e-3,
            ..NweConfig::default()
        };
        let probe = lipschitz_probe(&cfg, 0.0, 2.0, 1.0, 64, 40, 9).unwrap();
        let oracle = oracle_gamma(&cfg, 2.0, 40);
        assert!(oracle > 0.5);
        assert!((probe.gamma0 - oracle).abs() <= 0.05 * oracle, "{} vs {oracle}", probe.gamma0);
    }

    #[test]
    fn c_family_members_follow_the_grid() {
        let cfg = NweConfig { modes: 4, ..NweConfig::default() };
        let opts = CFamilyConfig { labels: vec![6.0, 8.0], points: 2, first_start: 0.0, ..CFamilyConfig::new(1.5, 3.0) };
        let fam = c_family(&cfg, &opts).unwrap();
        // tau1 rounds up to 4: starts 0, 2 for t = 6 and 0, 2, 4 for t = 8.
        assert_eq!(fam.members()[0].len(), 4);
        assert_eq!(fam.members()[1].len(), 6);
    }
}
