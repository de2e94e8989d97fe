//! Evolution processes, time-indexed families and the sample-level checkers
//! for invariance, absorption and attraction rates.
//!
//! Set inclusion `A ⊂ B` between sampled sets is tested as "excess of `A` over
//! `B` at most `tol`", where the excess is the Hausdorff semidistance for
//! sampled families and the exact distance-to-ball for ball families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::decay::DecayFunction;
use crate::error::{invalid, Error, Result};
use crate::grid;
use crate::metric::{hausdorff_semidistance, Ensemble, NormTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Discrete,
    Continuous,
}

/// Two-parameter solution operator `S(t, s)`, `t >= s`.
pub trait Process: Sync {
    fn kind(&self) -> TimeKind;

    fn norm(&self) -> NormTag;

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>>;

    fn apply_ensemble(&self, t: f64, s: f64, e: &Ensemble) -> Result<Ensemble> {
        check_times(self.kind(), t, s)?;
        let pts = e.points.par_iter().map(|x| self.apply(t, s, x)).collect::<Result<Vec<_>>>()?;
        Ensemble::new(pts, t, e.norm.clone())
    }
}

pub fn check_times(kind: TimeKind, t: f64, s: f64) -> Result<()> {
    if !(t >= s) {
        return invalid(format!("need t >= s, got t = {t}, s = {s}"));
    }
    if kind == TimeKind::Discrete && (t.fract() != 0.0 || s.fract() != 0.0) {
        return invalid(format!("discrete process needs integer times, got ({t}, {s})"));
    }
    Ok(())
}

/// A time-indexed family of sets, known through samples.
pub trait Family: Sync {
    fn sample(&self, t: f64) -> Result<Ensemble>;

    /// How far `e` sticks out of the member at time `t`; zero means inside.
    fn excess(&self, t: f64, e: &Ensemble) -> Result<f64> {
        hausdorff_semidistance(e, &self.sample(t)?)
    }
}

/// Family given by explicit ensembles on a strictly increasing label set.
#[derive(Debug, Clone, Serialize)]
pub struct SampledFamily {
    labels: Vec<f64>,
    members: Vec<Ensemble>,
}

impl SampledFamily {
    pub fn new(labels: Vec<f64>, members: Vec<Ensemble>) -> Result<Self> {
        if labels.is_empty() || labels.len() != members.len() {
            return invalid("family needs one ensemble per label");
        }
        if labels.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("family labels must be strictly increasing");
        }
        Ok(SampledFamily { labels, members })
    }

    pub fn label_set(&self) -> &[f64] {
        &self.labels
    }

    pub fn members(&self) -> &[Ensemble] {
        &self.members
    }

    pub fn at(&self, t: f64) -> Result<&Ensemble> {
        self.labels
            .iter()
            .position(|&l| (l - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .map(|i| &self.members[i])
            .ok_or_else(|| Error::InvalidInput(format!("no family member at t = {t}")))
    }
}

impl Family for SampledFamily {
    fn sample(&self, t: f64) -> Result<Ensemble> {
        self.at(t).cloned()
    }
}

/// The same ensemble at every time.
#[derive(Debug, Clone)]
pub struct ConstantFamily(pub Ensemble);

impl Family for ConstantFamily {
    fn sample(&self, t: f64) -> Result<Ensemble> {
        Ok(self.0.clone().with_time(t))
    }
}

/// Closed ball of fixed center and radius at every time. Membership is exact.
#[derive(Debug, Clone)]
pub struct BallFamily {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: Ensemble,
}

impl BallFamily {
    pub fn new(center: Vec<f64>, radius: f64, norm: NormTag, n: usize, seed: u64) -> Result<Self> {
        let samples = ball_sample(&center, radius, &norm, n, seed)?;
        Ok(BallFamily { center, radius, samples })
    }
}

impl Family for BallFamily {
    fn sample(&self, t: f64) -> Result<Ensemble> {
        Ok(self.samples.clone().with_time(t))
    }

    fn excess(&self, _t: f64, e: &Ensemble) -> Result<f64> {
        Ok(e.points
            .iter()
            .map(|p| (e.norm.dist(p, &self.center) - self.radius).max(0.0))
            .fold(0.0, f64::max))
    }
}

/// Deterministic sample of a closed ball: the center, then points along
/// random directions at radii cycling through `(1, 3/4, 1/2, 1/4)` of `r`.
/// Directions are uniform for the Euclidean norm and mapped onto the
/// weighted sphere otherwise.
pub fn ball_sample(center: &[f64], r: f64, norm: &NormTag, n: usize, seed: u64) -> Result<Ensemble> {
    if !(r >= 0.0) || n == 0 {
        return invalid("ball sample needs r >= 0 and n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = center.len();
    let mut pts = vec![center.to_vec()];
    let fracs = [1.0, 0.75, 0.5, 0.25];
    while pts.len() < n {
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = match norm {
            NormTag::Euclidean => z,
            NormTag::Weighted { weights, .. } => z.iter().zip(weights).map(|(v, w)| v / w.sqrt()).collect(),
        };
        let len = norm.norm(&z);
        if len == 0.0 {
            continue;
        }
        let f = fracs[(pts.len() - 1) % fracs.len()] * r / len;
        pts.push(center.iter().zip(&z).map(|(c, v)| c + f * v).collect());
    }
    Ensemble::new(pts, 0.0, norm.clone())
}

/// Points on the sphere of radius `r` about the origin.
pub fn sphere_sample(dim: usize, r: f64, norm: &NormTag, n: usize, seed: u64) -> Result<Ensemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = match norm {
            NormTag::Euclidean => z,
            NormTag::Weighted { weights, .. } => z.iter().zip(weights).map(|(v, w)| v / w.sqrt()).collect(),
        };
        let len = norm.norm(&z);
        if len > 0.0 {
            pts.push(z.iter().map(|v| v * r / len).collect());
        }
    }
    Ensemble::new(pts, 0.0, norm.clone())
}

/// Uniform draws in the cube `[-r, r]^dim`.
pub fn cube_sample(dim: usize, r: f64, n: usize, seed: u64) -> Result<Ensemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new_inclusive(-r, r);
    Ensemble::euclidean((0..n).map(|_| (0..dim).map(|_| u.sample(&mut rng)).collect()).collect(), 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub holds: bool,
    pub worst_excess: f64,
    /// `(s, t, excess of S(t, s) F_s over F_t)` per consecutive label pair.
    pub pairs: Vec<(f64, f64, f64)>,
}

/// `S(t, s) F_s ⊂ F_t` for consecutive labels `s < t`.
pub fn check_positive_invariance(
    proc: &dyn Process,
    fam: &dyn Family,
    labels: &[f64],
    tol: f64,
) -> Result<InvarianceReport> {
    if labels.len() < 2 || labels.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("need at least two strictly increasing labels");
    }
    for w in labels.windows(2) {
        check_times(proc.kind(), w[1], w[0])?;
    }
    let pairs = labels
        .windows(2)
        .map(|w| {
            let moved = proc.apply_ensemble(w[1], w[0], &fam.sample(w[0])?)?;
            Ok((w[0], w[1], fam.excess(w[1], &moved)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_excess = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(InvarianceReport { holds: worst_excess <= tol, worst_excess, pairs })
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub t_found: Option<f64>,
    /// `(r, max over s of the excess of S(s, s - r) D over F_s)`.
    pub excess_by_lag: Vec<(f64, f64)>,
}

/// Smallest grid lag `T` such that `S(s, s - r) D ⊂ F_s` within `tol` for all
/// sampled `s <= t` and all grid lags `r >= T`.
pub fn check_uniform_pullback_absorption(
    proc: &dyn Process,
    fam: &dyn Family,
    d: &Ensemble,
    t: f64,
    s_samples: &[f64],
    lag_grid: &[f64],
    tol: f64,
) -> Result<AbsorptionReport> {
    if s_samples.is_empty() || s_samples.iter().any(|&s| s > t) {
        return invalid("final times must be nonempty and not exceed t");
    }
    if lag_grid.is_empty() || lag_grid.windows(2).any(|w| !(w[1] > w[0])) || lag_grid[0] < 0.0 {
        return invalid("lag grid must be nonnegative and strictly increasing");
    }
    let excess_by_lag = lag_grid
        .iter()
        .map(|&r| {
            let worst = s_samples
                .iter()
                .map(|&s| fam.excess(s, &proc.apply_ensemble(s, s - r, d)?))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((r, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t_found = None;
    let mut suffix = 0.0f64;
    for &(r, e) in excess_by_lag.iter().rev() {
        suffix = suffix.max(e);
        if suffix <= tol {
            t_found = Some(r);
        } else {
            break;
        }
    }
    Ok(AbsorptionReport { t_found, excess_by_lag })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateOptions {
    pub omega: f64,
    /// Leading share of the eligible grid used to fit `C`; the rest is held out.
    pub calibration_fraction: f64,
    /// Use this `C` instead of fitting one.
    pub c_override: Option<f64>,
    /// Lag offset: the bound is `C phi(omega (tau - shift))`, for `tau > shift`.
    pub shift: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { omega: 1.0, calibration_fraction: 0.5, c_override: None, shift: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCertificate {
    pub c: f64,
    pub omega: f64,
    pub shift: f64,
    pub phi_family: crate::decay::Family,
    pub phi_params: Vec<(String, f64)>,
    pub tau0: Option<f64>,
    /// Max of `ln(h / (C phi))` over `tau >= tau0`.
    pub residual: f64,
    /// Min of `ln(C phi / h)` over the held-out part of the grid.
    pub margin: f64,
    pub valid: bool,
    /// Least-squares slope of `ln h` against `ln tau`.
    pub slope: Option<f64>,
    pub clamped: bool,
    pub samples: Vec<(f64, f64)>,
}

/// Fits a certificate `h(tau) <= C phi(omega (tau - shift))` to measured samples.
///
/// `C` is the largest ratio over the calibration window unless overridden;
/// `tau0` is the first grid lag after which the bound holds everywhere. The
/// certificate is valid when the bound holds across the held-out window.
pub fn certify_samples(
    samples: &[(f64, f64)],
    phi: &DecayFunction,
    opts: &RateOptions,
) -> Result<RateCertificate> {
    if !(opts.omega > 0.0) || !(opts.calibration_fraction > 0.0 && opts.calibration_fraction < 1.0) {
        return invalid("omega must be positive and the calibration fraction in (0, 1)");
    }
    let mut clamped = false;
    let pts: Vec<(f64, f64, f64)> = samples
        .iter()
        .filter(|(tau, _)| *tau > opts.shift)
        .map(|&(tau, h)| {
            let h = if h <= 0.0 {
                clamped = true;
                f64::EPSILON
            } else {
                h
            };
            let arg = opts.omega * (tau - opts.shift);
            (tau, h, phi.ln_eval(arg))
        })
        .collect();
    if pts.len() < 2 {
        return invalid("need at least two samples beyond the lag shift");
    }
    if pts.iter().any(|p| !p.2.is_finite()) {
        return invalid("phi must be positive on the scaled grid");
    }
    let n_cal = ((pts.len() as f64 * opts.calibration_fraction).ceil() as usize).clamp(1, pts.len() - 1);
    let log_ratio = |p: &(f64, f64, f64)| p.1.ln() - p.2;
    let c = match opts.c_override {
        Some(c) => c,
        None => pts[..n_cal].iter().map(log_ratio).fold(f64::NEG_INFINITY, f64::max).exp(),
    };
    let lc = c.ln();
    let gap: Vec<f64> = pts.iter().map(|p| log_ratio(p) - lc).collect();
    let mut first_ok = None;
    for i in (0..pts.len()).rev() {
        if gap[i] <= 0.0 {
            first_ok = Some(i);
        } else {
            break;
        }
    }
    let tau0 = first_ok.map(|i| pts[i].0);
    let residual = match first_ok {
        Some(i) => gap[i..].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        None => gap.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let margin = -gap[n_cal..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let from = first_ok.unwrap_or(0);
    let xs: Vec<f64> = pts[from..].iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts[from..].iter().map(|p| p.1.ln()).collect();
    let slope = grid::linear_fit(&xs, &ys).map(|f| f.0);
    Ok(RateCertificate {
        c,
        omega: opts.omega,
        shift: opts.shift,
        phi_family: phi.family,
        phi_params: phi.params.clone(),
        tau0,
        residual,
        margin,
        valid: first_ok.is_some_and(|i| i <= n_cal) && margin >= 0.0,
        slope,
        clamped,
        samples: samples.to_vec(),
    })
}

/// `h(tau) = d_H(S(t, t - tau) D, M_t)` over the grid.
pub fn attraction_samples(
    proc: &dyn Process,
    m: &dyn Family,
    d: &Ensemble,
    t: f64,
    tau_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let target = m.sample(t)?;
    tau_grid
        .iter()
        .map(|&tau| {
            let moved = proc.apply_ensemble(t, t - tau, d)?;
            Ok((tau, hausdorff_semidistance(&moved, &target)?))
        })
        .collect()
}

/// Measures `h` on `tau_grid` and fits a certificate for `phi`.
pub fn fit_rate_certificate(
    proc: &dyn Process,
    m: &dyn Family,
    d: &Ensemble,
    t: f64,
    tau_grid: &[f64],
    phi: &DecayFunction,
    opts: &RateOptions,
) -> Result<RateCertificate> {
    if grid::decades(tau_grid) < 2.0 - 1e-9 {
        return invalid("tau grid must span at least two decades");
    }
    let samples = attraction_samples(proc, m, d, t, tau_grid)?;
    certify_samples(&samples, phi, opts)
}

/// Builds `M_t = S(t, t - tau) C_{t - tau}` with
/// `C_r = ⋃_{sigma} S(r, r - sigma) B_{r - sigma}` over `sigma_grid`.
pub fn check_eventual_compactness_route(
    proc: &dyn Process,
    b: &dyn Family,
    labels: &[f64],
    tau: f64,
    sigma_grid: &[f64],
    bound: f64,
) -> Result<SampledFamily> {
    if sigma_grid.is_empty() || sigma_grid.iter().any(|&s| s < 0.0) {
        return invalid("sigma grid must be nonempty and nonnegative");
    }
    let members = labels
        .iter()
        .map(|&t| {
            let r = t - tau;
            let mut union: Option<Ensemble> = None;
            for &sigma in sigma_grid {
                let part = proc.apply_ensemble(r, r - sigma, &b.sample(r - sigma)?)?;
                union = Some(match union {
                    None => part,
                    Some(u) => u.union(&part)?,
                });
            }
            let c = union.expect("nonempty sigma grid");
            if c.points.iter().flatten().any(|v| !v.is_finite()) || c.max_norm() > bound {
                return invalid(format!("sampled union at time {r} exceeds the bound {bound}"));
            }
            Ok(proc.apply_ensemble(t, r, &c)?.dedup(1e-12))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFamily::new(labels.to_vec(), members)
}

pub mod models {
    //! Small closed-form processes for tests, examples and the CLI.

    use super::*;

    /// `S(t, s) = id`.
    #[derive(Debug, Clone)]
    pub struct Identity {
        pub kind: TimeKind,
    }

    impl Process for Identity {
        fn kind(&self) -> TimeKind {
            self.kind
        }

        fn norm(&self) -> NormTag {
            NormTag::Euclidean
        }

        fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
            check_times(self.kind, t, s)?;
            Ok(x.to_vec())
        }
    }

    /// `x_{m+1} = A x_m + amp (cos(m + i))_i`, a nonautonomous affine map.
    #[derive(Debug, Clone)]
    pub struct AffineDiscrete {
        pub a: Vec<Vec<f64>>,
        pub amp: f64,
    }

    impl AffineDiscrete {
        /// Scaled rotation with spectral norm `0.5 sqrt(1.25) ≈ 0.559` in the plane.
        pub fn contracting_2d(amp: f64) -> Self {
            AffineDiscrete { a: vec![vec![0.5, 0.25], vec![-0.25, 0.5]], amp }
        }

        pub fn step(&self, m: i64, x: &[f64]) -> Vec<f64> {
            self.a
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.amp * (m as f64 + i as f64).cos()
                })
                .collect()
        }
    }

    impl Process for AffineDiscrete {
        fn kind(&self) -> TimeKind {
            TimeKind::Discrete
        }

        fn norm(&self) -> NormTag {
            NormTag::Euclidean
        }

        fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
            check_times(TimeKind::Discrete, t, s)?;
            let mut y = x.to_vec();
            for m in s as i64..t as i64 {
                y = self.step(m, &y);
            }
            Ok(y)
        }
    }

    /// Autonomous linear flow `x' = A x`, `S(t, s) = exp(A (t - s))`.
    #[derive(Debug, Clone)]
    pub struct LinearFlow {
        pub a: Vec<Vec<f64>>,
    }

    impl LinearFlow {
        /// Damped oscillator `y'' + 2 zeta y' + y = 0` as a first-order system.
        pub fn damped_oscillator(zeta: f64) -> Self {
            LinearFlow { a: vec![vec![0.0, 1.0], vec![-1.0, -2.0 * zeta]] }
        }

        pub fn scalar(rate: f64) -> Self {
            LinearFlow { a: vec![vec![rate]] }
        }
    }

    impl Process for LinearFlow {
        fn kind(&self) -> TimeKind {
            TimeKind::Continuous
        }

        fn norm(&self) -> NormTag {
            NormTag::Euclidean
        }

        fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
            check_times(TimeKind::Continuous, t, s)?;
            let e = expm(&self.a, t - s);
            Ok(e.iter().map(|row| row.iter().zip(x).map(|(a, v)| a * v).sum()).collect())
        }
    }

    fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    }

    /// `exp(h A)` by scaling and squaring with a Taylor core.
    pub fn expm(a: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
        let n = a.len();
        let norm1 = (0..n).map(|j| (0..n).map(|i| (a[i][j] * h).abs()).sum::<f64>()).fold(0.0, f64::max);
        let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
        let scale = h / 2f64.powi(squarings);
        let x: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
        let mut term = result.clone();
        for k in 1..=20 {
            term = matmul(&term, &x);
            let inv = 1.0 / k as f64;
            term.iter_mut().flatten().for_each(|v| *v *= inv);
            for i in 0..n {
                for j in 0..n {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            result = matmul(&result, &result);
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::models::*;
    use super::*;
    use crate::decay::Family as Fam;

    #[test]
    fn equilibrium_family_is_invariant() {
        let p = Identity { kind: TimeKind::Continuous };
        let f = ConstantFamily(Ensemble::euclidean(vec![vec![1.0, 2.0]], 0.0).unwrap());
        let r = check_positive_invariance(&p, &f, &[0.0, 0.5, 2.0], 0.0).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_excess, 0.0);
    }

    #[test]
    fn discrete_process_rejects_fractional_labels() {
        let p = AffineDiscrete::contracting_2d(0.3);
        let f = BallFamily::new(vec![0.0, 0.0], 1.0, NormTag::Euclidean, 16, 1).unwrap();
        assert!(check_positive_invariance(&p, &f, &[0.0, 0.5], 1e-9).is_err());
    }

    #[test]
    fn shrunken_ball_is_not_invariant() {
        let p = AffineDiscrete::contracting_2d(0.3);
        let ok = BallFamily::new(vec![0.0, 0.0], 1.0, NormTag::Euclidean, 64, 1).unwrap();
        let r = check_positive_invariance(&p, &ok, &[-3.0, -2.0, -1.0, 0.0], 1e-12).unwrap();
        assert!(r.holds, "{r:?}");
        let small = BallFamily::new(vec![0.0, 0.0], 0.25, NormTag::Euclidean, 64, 1).unwrap();
        let r = check_positive_invariance(&p, &small, &[-3.0, -2.0, -1.0, 0.0], 1e-12).unwrap();
        assert!(!r.holds && r.worst_excess > 0.0);
    }

    #[test]
    fn expm_matches_closed_form_rotation() {
        let a = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        let e = expm(&a, 2.0);
        assert!((e[0][0] - 2f64.cos()).abs() < 1e-13 && (e[0][1] - 2f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn absorption_first_grid_point_when_inside() {
        let p = LinearFlow::scalar(-1.0);
        let f = BallFamily::new(vec![0.0], 2.0, NormTag::Euclidean, 8, 3).unwrap();
        let d = Ensemble::euclidean(vec![vec![1.0], vec![-1.5]], 0.0).unwrap();
        let r = check_uniform_pullback_absorption(&p, &f, &d, 0.0, &[-2.0, 0.0], &[0.0, 1.0, 2.0], 1e-12)
            .unwrap();
        assert_eq!(r.t_found, Some(0.0));
    }

    #[test]
    fn expanding_flow_never_absorbs() {
        let p = LinearFlow::scalar(0.5);
        let f = BallFamily::new(vec![0.0], 2.0, NormTag::Euclidean, 8, 3).unwrap();
        let d = Ensemble::euclidean(vec![vec![1.0]], 0.0).unwrap();
        let r = check_uniform_pullback_absorption(&p, &f, &d, 0.0, &[0.0], &[1.0, 2.0, 4.0, 8.0], 1e-9).unwrap();
        assert_eq!(r.t_found, None);
    }

    #[test]
    fn synthetic_power_law_recovers_constant_and_slope() {
        let phi = DecayFunction::power(-0.5, 1e-9).unwrap();
        let taus = grid::per_decade(1.0, 1000.0, 24).unwrap();
        let samples: Vec<(f64, f64)> = taus.iter().map(|&t| (t, phi.eval(2.0 * t))).collect();
        let opts = RateOptions { omega: 2.0, ..Default::default() };
        let c = certify_samples(&samples, &phi, &opts).unwrap();
        assert!((c.c - 1.0).abs() < 1e-12);
        assert!((c.slope.unwrap() + 0.5).abs() < 1e-9);
    }

    #[test]
    fn exponential_contraction_certifies_polynomial_rate() {
        let p = LinearFlow::damped_oscillator(0.3);
        let d = Ensemble::euclidean(vec![vec![1.0, 0.0], vec![0.0, -1.0]], 0.0).unwrap();
        let m = ConstantFamily(Ensemble::euclidean(vec![vec![0.0, 0.0]], 0.0).unwrap());
        let phi = DecayFunction::standard(Fam::Polynomial, 1.0, 1.0).unwrap();
        let taus = grid::per_decade(1.0, 100.0, 24).unwrap();
        let c = fit_rate_certificate(&p, &m, &d, 0.0, &taus, &phi, &RateOptions::default()).unwrap();
        assert!(c.valid && c.margin > 1.0, "{c:?}");
    }

    #[test]
    fn contraction_route_collapses_to_fixed_point() {
        let p = LinearFlow::scalar(-2.0);
        let b = BallFamily::new(vec![0.0], 1.0, NormTag::Euclidean, 9, 5).unwrap();
        let m = check_eventual_compactness_route(&p, &b, &[0.0, 1.0], 10.0, &[0.0, 1.0, 2.0], 10.0).unwrap();
        assert!(m.at(1.0).unwrap().max_norm() < 1e-8);
        let grow = LinearFlow::scalar(2.0);
        assert!(check_eventual_compactness_route(&grow, &b, &[0.0], 10.0, &[0.0, 5.0], 10.0).is_err());
    }
}
