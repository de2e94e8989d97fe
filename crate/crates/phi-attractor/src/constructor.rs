//! The covering recursion that builds an attracting family for a discrete
//! process from a positively invariant, uniformly absorbing family `B`.
//!
//! For every `(k, n)` the sampled set `S(k, k - (m0 + n)) B_{k - (m0 + n)}` is
//! covered greedily; the evolved centers form `J(k, n)`. Then
//! `K(k, 0) = J(k, 0)`, `K(k, n) = J(k, n) ∪ S(k, k - 1) K(k - 1, n - 1)` and
//! `E(k) = ⋃_{n <= N_cut} K(k, n)`.
//!
//! Every stored point remembers the time and the `B`-sample point it was
//! evolved from, which makes the inclusions `K ⊂ S(k, k - m) B_{k - m}` testable
//! by an explicit witness instead of a set-distance estimate.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::decay::DecayFunction;
use crate::error::{invalid, Error, Result};
use crate::metric::{greedy_centers, hausdorff_semidistance, Ensemble, NormTag};
use crate::process::{check_times, Family, Process, SampledFamily, TimeKind};

pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BuildOptions {
    pub k_min: i64,
    pub k_max: i64,
    pub n_cut: usize,
    pub budget: usize,
    pub omega: f64,
    /// Largest lag whose covering radius is measured; defaults to `2 N_cut + 2`.
    pub m_probe: Option<usize>,
}

impl BuildOptions {
    pub fn new(k_min: i64, k_max: i64, n_cut: usize, budget: usize, omega: f64) -> Self {
        BuildOptions { k_min, k_max, n_cut, budget, omega, m_probe: None }
    }

    fn probe(&self) -> usize {
        self.m_probe.unwrap_or(2 * self.n_cut + 2).max(2)
    }

    fn validate(&self) -> Result<()> {
        if self.k_max < self.k_min {
            return invalid("k_max must be >= k_min");
        }
        if self.budget == 0 {
            return invalid("cover budget must be at least 1");
        }
        if !(self.omega > 0.0) {
            return invalid("omega must be positive");
        }
        if self.probe() <= self.n_cut {
            return invalid("m_probe must exceed N_cut");
        }
        Ok(())
    }
}

/// A point together with its origin: `point = S(k, origin) seed`, `seed ∈ B_origin`.
#[derive(Debug, Clone, Serialize)]
pub struct Tracked {
    pub point: Vec<f64>,
    pub origin: i64,
    pub seed: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructedFamily {
    pub j: BTreeMap<(i64, usize), Vec<Tracked>>,
    pub k: BTreeMap<(i64, usize), Vec<Tracked>>,
    pub e: BTreeMap<i64, Ensemble>,
    pub m0: BTreeMap<i64, usize>,
    /// Measured covering radius of `S(k, k - m) B_{k - m}` for `m = 1..=m_probe`.
    pub radii: BTreeMap<i64, Vec<f64>>,
    pub c_const: f64,
    pub omega: f64,
    #[serde(skip)]
    pub phi: DecayFunction,
    pub gamma: Option<f64>,
    pub opts: BuildOptions,
    pub norm: NormTag,
}

fn as_ensemble(pts: &[Tracked], k: i64, norm: &NormTag) -> Result<Ensemble> {
    Ensemble::new(pts.iter().map(|p| p.point.clone()).collect(), k as f64, norm.clone())
}

fn dedup_tracked(pts: Vec<Tracked>, norm: &NormTag) -> Vec<Tracked> {
    let mut kept: Vec<Tracked> = Vec::with_capacity(pts.len());
    for p in pts {
        if !kept.iter().any(|q| norm.dist(&p.point, &q.point) <= DEDUP_TOL) {
            kept.push(p);
        }
    }
    kept
}

impl ConstructedFamily {
    pub fn k_range(&self) -> std::ops::RangeInclusive<i64> {
        self.opts.k_min..=self.opts.k_max
    }

    /// Columns below `k_min` are stored partially so the recursion is complete on the range.
    pub fn k_lo(&self) -> i64 {
        self.opts.k_min - self.opts.n_cut as i64
    }

    pub fn j_set(&self, k: i64, n: usize) -> Result<Ensemble> {
        let pts = self.j.get(&(k, n)).ok_or_else(|| Error::InvalidInput(format!("J({k}, {n}) not stored")))?;
        as_ensemble(pts, k, &self.norm)
    }

    pub fn k_set(&self, k: i64, n: usize) -> Result<Ensemble> {
        let pts = self.k.get(&(k, n)).ok_or_else(|| Error::InvalidInput(format!("K({k}, {n}) not stored")))?;
        as_ensemble(pts, k, &self.norm)
    }

    pub fn e_set(&self, k: i64) -> Result<&Ensemble> {
        self.e.get(&k).ok_or_else(|| Error::InvalidInput(format!("E({k}) not stored")))
    }

    /// Bound `2 C phi(omega m)` used by the covering properties.
    pub fn cover_bound(&self, m: usize) -> f64 {
        2.0 * self.c_const * self.phi.eval(self.omega * m as f64)
    }

    /// `E` over the built range as a family on integer labels.
    pub fn as_family(&self) -> Result<SampledFamily> {
        let labels: Vec<f64> = self.k_range().map(|k| k as f64).collect();
        let members = self.k_range().map(|k| self.e_set(k).cloned()).collect::<Result<Vec<_>>>()?;
        SampledFamily::new(labels, members)
    }

    pub fn total_points(&self) -> usize {
        self.e.values().map(|e| e.len()).sum()
    }
}

/// Evolves the `B`-sample at `k - m` to `k`.
fn evolved_sample(proc: &dyn Process, b: &dyn Family, k: i64, m: usize) -> Result<(Ensemble, Ensemble)> {
    let s = (k - m as i64) as f64;
    let seed = b.sample(s)?;
    let moved = proc.apply_ensemble(k as f64, s, &seed)?;
    Ok((seed, moved))
}

/// `J(k, n)`: greedy centers of `S(k, k - (m0 + n)) B_{k - (m0 + n)}`, evolved to `k`.
pub fn build_j(proc: &dyn Process, b: &dyn Family, k: i64, n: usize, m0: usize, budget: usize) -> Result<Vec<Tracked>> {
    if budget == 0 {
        return invalid("cover budget must be at least 1");
    }
    let m = m0 + n;
    let (seed, moved) = evolved_sample(proc, b, k, m)?;
    let (idx, _) = greedy_centers(&moved, budget);
    if idx.is_empty() {
        return Err(Error::Experiment(format!("empty covering for J({k}, {n})")));
    }
    Ok(idx
        .into_iter()
        .map(|i| Tracked { point: moved.points[i].clone(), origin: k - m as i64, seed: seed.points[i].clone() })
        .collect())
}

/// Fits `C` on the upper half of the measured lags and returns it with `m0` per column.
fn fit_c_and_m0(
    radii: &BTreeMap<i64, Vec<f64>>,
    phi: &DecayFunction,
    omega: f64,
    probe: usize,
    n_cut: usize,
) -> (f64, BTreeMap<i64, usize>) {
    let tail_start = probe.div_ceil(2).max(1);
    let bound = |m: usize| phi.eval(omega * m as f64);
    let c = radii
        .values()
        .flat_map(|r| (tail_start..=probe).map(move |m| r[m - 1] / bound(m)))
        .fold(0.0, f64::max);
    let m0 = radii
        .iter()
        .map(|(&k, r)| {
            let mut m0 = probe;
            for m in (1..=probe).rev() {
                if r[m - 1] <= c * bound(m) {
                    m0 = m;
                } else {
                    break;
                }
            }
            (k, m0.min(probe - n_cut))
        })
        .collect();
    (c, m0)
}

/// Fills `J`, `K`, `E` without verifying the structural properties.
pub fn construct(
    proc: &dyn Process,
    b: &dyn Family,
    phi: &DecayFunction,
    opts: &BuildOptions,
) -> Result<ConstructedFamily> {
    opts.validate()?;
    if proc.kind() != TimeKind::Discrete {
        return invalid("the recursion needs a discrete process; wrap continuous ones with Discretized");
    }
    let probe = opts.probe();
    let k_lo = opts.k_min - opts.n_cut as i64;
    let cols: Vec<i64> = (k_lo..=opts.k_max).collect();

    let cells: Vec<(i64, usize)> = cols.iter().flat_map(|&k| (1..=probe).map(move |m| (k, m))).collect();
    let measured = cells
        .par_iter()
        .map(|&(k, m)| {
            let (_, moved) = evolved_sample(proc, b, k, m)?;
            Ok(greedy_centers(&moved, opts.budget).1)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut radii: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (&(k, _), r) in cells.iter().zip(measured) {
        radii.entry(k).or_default().push(r);
    }
    let (c_const, m0) = fit_c_and_m0(&radii, phi, opts.omega, probe, opts.n_cut);

    let norm = proc.norm();
    let j_cells: Vec<(i64, usize)> = cols
        .iter()
        .flat_map(|&k| (0..=opts.n_cut.min((k - k_lo) as usize)).map(move |n| (k, n)))
        .collect();
    let j_sets = j_cells
        .par_iter()
        .map(|&(k, n)| build_j(proc, b, k, n, m0[&k], opts.budget))
        .collect::<Result<Vec<_>>>()?;
    let j: BTreeMap<(i64, usize), Vec<Tracked>> = j_cells.into_iter().zip(j_sets).collect();

    let mut kmap: BTreeMap<(i64, usize), Vec<Tracked>> = BTreeMap::new();
    for &k in &cols {
        let top = opts.n_cut.min((k - k_lo) as usize);
        let column = (0..=top)
            .into_par_iter()
            .map(|n| {
                let mut pts = j[&(k, n)].clone();
                if n >= 1 {
                    pts.extend(step_forward(proc, &kmap[&(k - 1, n - 1)], k)?);
                }
                Ok(dedup_tracked(pts, &norm))
            })
            .collect::<Result<Vec<_>>>()?;
        for (n, pts) in column.into_iter().enumerate() {
            kmap.insert((k, n), pts);
        }
    }

    let mut e = BTreeMap::new();
    for k in opts.k_min..=opts.k_max {
        let all: Vec<Tracked> = (0..=opts.n_cut).flat_map(|n| kmap[&(k, n)].iter().cloned()).collect();
        e.insert(k, as_ensemble(&dedup_tracked(all, &norm), k, &norm)?);
    }

    Ok(ConstructedFamily {
        j,
        k: kmap,
        e,
        m0,
        radii,
        c_const,
        omega: opts.omega,
        phi: phi.clone(),
        gamma: None,
        opts: opts.clone(),
        norm,
    })
}

fn step_forward(proc: &dyn Process, pts: &[Tracked], k: i64) -> Result<Vec<Tracked>> {
    pts.iter()
        .map(|p| {
            Ok(Tracked { point: proc.apply(k as f64, (k - 1) as f64, &p.point)?, origin: p.origin, seed: p.seed.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub index: usize,
    pub holds: bool,
    pub worst_excess: f64,
    /// `(k, n, p_or_m)` where the worst excess occurred.
    pub witness: Option<(i64, usize, usize)>,
    pub cases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub tol: f64,
    pub properties: Vec<PropertyCheck>,
    pub recursion_identity: bool,
    /// `d_H(E(k), B_k)` maximised over `k`.
    pub inside_b_excess: f64,
    /// Tail covering radii are non-increasing in `m` for `m >= m0` (diagnostic).
    pub tail_radius_monotone: bool,
    /// Max of `d_H(S(k + p, k) E(k), E(k + p))` (diagnostic, truncation-limited).
    pub e_invariance_excess: f64,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.properties.iter().all(|p| p.holds) && self.recursion_identity
    }

    pub fn first_failure(&self) -> Option<&PropertyCheck> {
        self.properties.iter().find(|p| !p.holds)
    }
}

struct Acc {
    worst: f64,
    witness: Option<(i64, usize, usize)>,
    cases: usize,
}

impl Acc {
    fn new() -> Self {
        Acc { worst: 0.0, witness: None, cases: 0 }
    }

    fn push(&mut self, excess: f64, at: (i64, usize, usize)) {
        self.cases += 1;
        if excess > self.worst || self.witness.is_none() {
            self.worst = self.worst.max(excess);
            self.witness = Some(at);
        }
    }

    fn finish(self, index: usize, tol: f64) -> PropertyCheck {
        PropertyCheck { index, holds: self.worst <= tol, worst_excess: self.worst, witness: self.witness, cases: self.cases }
    }
}

/// Excess of `pts` over `S(k, k - m) B_{k - m}`: each point's witness
/// `w = S(k - m, origin) seed` must lie in `B_{k - m}` and map onto the point.
fn witness_excess(proc: &dyn Process, b: &dyn Family, pts: &[Tracked], k: i64, m: usize, norm: &NormTag) -> Result<f64> {
    let mid = k - m as i64;
    let mut worst = 0.0f64;
    let mut ws = Vec::with_capacity(pts.len());
    for p in pts {
        if p.origin > mid {
            return Ok(f64::INFINITY);
        }
        let w = proc.apply(mid as f64, p.origin as f64, &p.seed)?;
        let back = proc.apply(k as f64, mid as f64, &w)?;
        worst = worst.max(norm.dist(&back, &p.point));
        ws.push(w);
    }
    let wset = Ensemble::new(ws, mid as f64, norm.clone())?;
    Ok(worst + b.excess(mid as f64, &wset)?)
}

/// Checks properties (i) through (vii), the recursion identity and the diagnostics.
pub fn verify_properties(
    fam: &ConstructedFamily,
    proc: &dyn Process,
    b: &dyn Family,
    tol: f64,
) -> Result<PropertyReport> {
    let norm = &fam.norm;
    let n_cut = fam.opts.n_cut;
    let ks: Vec<i64> = fam.k_range().collect();

    let per_k = ks
        .par_iter()
        .map(|&k| -> Result<[Acc; 7]> {
            let mut acc = [Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new()];
            let m0 = fam.m0[&k];
            for n in 0..=n_cut {
                let m = m0 + n;
                let (_, moved) = evolved_sample(proc, b, k, m)?;
                let jn = fam.j_set(k, n)?;
                let kn = fam.k_set(k, n)?;
                // (i): J ⊂ S B ⊂ B_k.
                let e1 = hausdorff_semidistance(&jn, &moved)?.max(b.excess(k as f64, &moved)?);
                acc[0].push(e1, (k, n, 0));
                // (ii), (iv): covering by J and by K.
                let bound = fam.cover_bound(m);
                acc[1].push((hausdorff_semidistance(&moved, &jn)? - bound).max(0.0), (k, n, 0));
                acc[3].push((hausdorff_semidistance(&moved, &kn)? - bound).max(0.0), (k, n, 0));
                // (iii): S(k, k-1) K(k-1, n) ⊂ K(k, n+1).
                if n < n_cut {
                    let prev = fam.k_set(k - 1, n)?;
                    let moved_prev = proc.apply_ensemble(k as f64, (k - 1) as f64, &prev)?;
                    acc[2].push(hausdorff_semidistance(&moved_prev, &fam.k_set(k, n + 1)?)?, (k, n, 1));
                }
                // (v): K(k, n) ⊂ S(k, k-n) B_{k-n} ⊂ B_k.
                let pts = &fam.k[&(k, n)];
                let e5 = witness_excess(proc, b, pts, k, n, norm)?.max(b.excess(k as f64, &kn)?);
                acc[4].push(e5, (k, n, n));
                // (vi): S(k+p, k) K(k, n) ⊂ K(k+p, n+p).
                for p in 0..=(n_cut - n) {
                    let kp = k + p as i64;
                    if kp > fam.opts.k_max {
                        break;
                    }
                    let moved_k = proc.apply_ensemble(kp as f64, k as f64, &kn)?;
                    acc[5].push(hausdorff_semidistance(&moved_k, &fam.k_set(kp, n + p)?)?, (k, n, p));
                }
                // (vii): K(k, n) ⊂ S(k, k-m) B_{k-m} for m <= n.
                for mm in 0..=n {
                    acc[6].push(witness_excess(proc, b, pts, k, mm, norm)?, (k, n, mm));
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = [Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new(), Acc::new()];
    for accs in per_k {
        for (t, a) in total.iter_mut().zip(accs) {
            if let Some(w) = a.witness {
                let before = t.cases;
                t.push(a.worst, w);
                t.cases = before + a.cases;
            }
        }
    }
    let properties: Vec<PropertyCheck> = total.into_iter().enumerate().map(|(i, a)| a.finish(i + 1, tol)).collect();

    let recursion_identity = recursion_identity_holds(fam, proc)?;
    let mut inside_b_excess = 0.0f64;
    let mut e_invariance_excess = 0.0f64;
    let mut tail_radius_monotone = true;
    for &k in &ks {
        let ek = fam.e_set(k)?;
        inside_b_excess = inside_b_excess.max(b.excess(k as f64, ek)?);
        for p in 1..=(fam.opts.k_max - k) {
            let moved = proc.apply_ensemble((k + p) as f64, k as f64, ek)?;
            e_invariance_excess = e_invariance_excess.max(hausdorff_semidistance(&moved, fam.e_set(k + p)?)?);
        }
        let mut last = f64::INFINITY;
        for m in fam.m0[&k].min(n_cut)..n_cut {
            let tail: Vec<Tracked> = (m + 1..=n_cut).flat_map(|n| fam.k[&(k, n)].iter().cloned()).collect();
            let r = greedy_centers(&as_ensemble(&tail, k, norm)?, fam.opts.budget).1;
            if r > last + tol {
                tail_radius_monotone = false;
            }
            last = r;
        }
    }

    Ok(PropertyReport {
        tol,
        properties,
        recursion_identity,
        inside_b_excess,
        tail_radius_monotone,
        e_invariance_excess,
    })
}

/// Recomputes `J(k, n) ∪ S(k, k - 1) K(k - 1, n - 1)` and compares it with the
/// stored `K(k, n)` as deduplicated multisets.
pub fn recursion_identity_holds(fam: &ConstructedFamily, proc: &dyn Process) -> Result<bool> {
    let k_lo = fam.k_lo();
    for (&(k, n), stored) in &fam.k {
        let mut expect = fam.j[&(k, n)].clone();
        if n >= 1 {
            if k - 1 < k_lo {
                continue;
            }
            expect.extend(step_forward(proc, &fam.k[&(k - 1, n - 1)], k)?);
        }
        let expect = dedup_tracked(expect, &fam.norm);
        if expect.len() != stored.len() {
            return Ok(false);
        }
        let mut used = vec![false; stored.len()];
        for p in &expect {
            match stored.iter().enumerate().position(|(i, q)| !used[i] && fam.norm.dist(&p.point, &q.point) <= DEDUP_TOL) {
                Some(i) => used[i] = true,
                None => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// `construct` followed by `verify_properties`; fails on the first violated property.
pub fn build_family(
    proc: &dyn Process,
    b: &dyn Family,
    phi: &DecayFunction,
    opts: &BuildOptions,
    tol: f64,
) -> Result<(ConstructedFamily, PropertyReport)> {
    let fam = construct(proc, b, phi, opts)?;
    let report = verify_properties(&fam, proc, b, tol)?;
    if let Some(bad) = report.first_failure() {
        return Err(Error::PropertyViolated { index: bad.index, excess: bad.worst_excess });
    }
    if !report.recursion_identity {
        return Err(Error::Experiment("recursion identity K = J ∪ S K does not hold".into()));
    }
    Ok((fam, report))
}

/// Smallest `N` such that `d_H(K(k, n), ⋃_{j < n} K(k, j)) < tol` for every
/// built `k` and every `N <= n <= N_cut`.
pub fn auto_ncut(fam: &ConstructedFamily, tol: f64) -> Result<Option<usize>> {
    let mut answer = None;
    for n in (1..=fam.opts.n_cut).rev() {
        let mut ok = true;
        for k in fam.k_range() {
            let head: Vec<Tracked> = (0..n).flat_map(|j| fam.k[&(k, j)].iter().cloned()).collect();
            let e = hausdorff_semidistance(&fam.k_set(k, n)?, &as_ensemble(&head, k, &fam.norm)?)?;
            ok &= e < tol;
        }
        if !ok {
            break;
        }
        answer = Some(n);
    }
    Ok(answer)
}

/// `S_d(m, n) = S(gamma m, gamma n)`.
pub struct Discretized<'a> {
    pub inner: &'a dyn Process,
    pub gamma: f64,
}

impl Process for Discretized<'_> {
    fn kind(&self) -> TimeKind {
        TimeKind::Discrete
    }

    fn norm(&self) -> NormTag {
        self.inner.norm()
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_times(TimeKind::Discrete, t, s)?;
        self.inner.apply(self.gamma * t, self.gamma * s, x)
    }

    fn apply_ensemble(&self, t: f64, s: f64, e: &Ensemble) -> Result<Ensemble> {
        check_times(TimeKind::Discrete, t, s)?;
        Ok(self.inner.apply_ensemble(self.gamma * t, self.gamma * s, e)?.with_time(t))
    }
}

/// `B_d(k) = B(gamma k)`.
pub struct DiscretizedFamily<'a> {
    pub inner: &'a dyn Family,
    pub gamma: f64,
}

impl Family for DiscretizedFamily<'_> {
    fn sample(&self, t: f64) -> Result<Ensemble> {
        Ok(self.inner.sample(self.gamma * t)?.with_time(t))
    }

    fn excess(&self, t: f64, e: &Ensemble) -> Result<f64> {
        self.inner.excess(self.gamma * t, e)
    }
}

/// Builds the family for `S_d(m, n) = S(gamma m, gamma n)` and records `gamma`.
pub fn build_continuous(
    proc: &dyn Process,
    b: &dyn Family,
    gamma: f64,
    phi: &DecayFunction,
    opts: &BuildOptions,
    tol: f64,
) -> Result<(ConstructedFamily, PropertyReport)> {
    if !(gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    let sd = Discretized { inner: proc, gamma };
    let bd = DiscretizedFamily { inner: b, gamma };
    let (mut fam, report) = build_family(&sd, &bd, phi, opts, tol)?;
    fam.gamma = Some(gamma);
    Ok((fam, report))
}

/// `G_t = S(t, k gamma) E_k` with `k = floor(t / gamma)`.
pub fn lift_continuous(proc: &dyn Process, fam: &ConstructedFamily, t: f64) -> Result<Ensemble> {
    let gamma = fam.gamma.ok_or_else(|| Error::InvalidInput("family was not built from a continuous process".into()))?;
    let k = (t / gamma + 1e-12).floor() as i64;
    if k < fam.opts.k_min || k > fam.opts.k_max {
        return invalid(format!("t = {t} lies outside the built range"));
    }
    let start = k as f64 * gamma;
    let ek = fam.e_set(k)?;
    if (t - start).abs() <= 1e-12 * (1.0 + t.abs()) {
        return Ok(ek.clone().with_time(t));
    }
    proc.apply_ensemble(t, start, ek)
}

/// Continuous-time family `t -> G_t` backed by a built discrete family.
pub struct LiftedFamily<'a> {
    pub proc: &'a dyn Process,
    pub fam: &'a ConstructedFamily,
}

impl Family for LiftedFamily<'_> {
    fn sample(&self, t: f64) -> Result<Ensemble> {
        lift_continuous(self.proc, self.fam, t)
    }
}
