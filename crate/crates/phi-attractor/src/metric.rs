//! Set-valued numerics on finite ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default exact-cover size limit.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormTag {
    Euclidean,
    /// `sqrt(sum w_i x_i^2)` with a named weight vector.
    Weighted { name: String, weights: Vec<f64> },
}

impl NormTag {
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        match self {
            NormTag::Euclidean => x.iter().map(|v| v * v).sum(),
            NormTag::Weighted { weights, .. } => {
                x.iter().zip(weights).map(|(v, w)| w * v * v).sum()
            }
        }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.norm_sq(x).sqrt()
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            NormTag::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            NormTag::Weighted { weights, .. } => x
                .iter()
                .zip(y)
                .zip(weights)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            NormTag::Euclidean => "euclidean",
            NormTag::Weighted { name, .. } => name,
        }
    }

    fn compatible(&self, dim: usize) -> bool {
        match self {
            NormTag::Euclidean => true,
            NormTag::Weighted { weights, .. } => weights.len() == dim,
        }
    }
}

/// Finite sample of a set in a normed coordinate space, stamped with a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub points: Vec<Vec<f64>>,
    pub time_label: f64,
    pub norm: NormTag,
}

impl Ensemble {
    pub fn new(points: Vec<Vec<f64>>, time_label: f64, norm: NormTag) -> Result<Self> {
        let Some(first) = points.first() else {
            return invalid("ensemble must be nonempty");
        };
        let dim = first.len();
        if points.iter().any(|p| p.len() != dim) {
            return invalid("ensemble points must share one dimension");
        }
        if !norm.compatible(dim) {
            return invalid("norm weights do not match the point dimension");
        }
        Ok(Ensemble { points, time_label, norm })
    }

    pub fn euclidean(points: Vec<Vec<f64>>, time_label: f64) -> Result<Self> {
        Self::new(points, time_label, NormTag::Euclidean)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        self.norm.dist(x, y)
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| self.norm.norm(p)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| self.dist(&self.points[i], &self.points[j]))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Same-time union; norms must agree.
    pub fn union(&self, other: &Ensemble) -> Result<Ensemble> {
        if self.norm != other.norm || self.dim() != other.dim() {
            return invalid("cannot unite ensembles with different norms or dimensions");
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(Ensemble { points, time_label: self.time_label, norm: self.norm.clone() })
    }

    /// Drops points within `tol` of an earlier point, keeping first occurrences.
    pub fn dedup(&self, tol: f64) -> Ensemble {
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for p in &self.points {
            if !kept.iter().any(|q| self.dist(p, q) <= tol) {
                kept.push(p.clone());
            }
        }
        Ensemble { points: kept, time_label: self.time_label, norm: self.norm.clone() }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time_label = t;
        self
    }
}

fn check_pair(u: &Ensemble, v: &Ensemble) -> Result<()> {
    if u.is_empty() || v.is_empty() {
        return invalid("empty ensemble");
    }
    if u.dim() != v.dim() || u.norm != v.norm {
        return invalid("ensembles differ in dimension or norm");
    }
    Ok(())
}

/// `max_{u in U} min_{v in V} d(u, v)`. Asymmetric.
pub fn hausdorff_semidistance(u: &Ensemble, v: &Ensemble) -> Result<f64> {
    check_pair(u, v)?;
    let inner = |p: &Vec<f64>| v.points.iter().map(|q| u.dist(p, q)).fold(f64::INFINITY, f64::min);
    let d = if u.len() * v.len() > 4096 {
        u.points.par_iter().map(inner).reduce(|| 0.0, f64::max)
    } else {
        u.points.iter().map(inner).fold(0.0, f64::max)
    };
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMethod {
    Greedy,
    Exact,
}

impl std::str::FromStr for CoverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(CoverMethod::Greedy),
            "exact" => Ok(CoverMethod::Exact),
            other => invalid(format!("unknown covering method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringEstimate {
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    pub method: CoverMethod,
    pub budget: usize,
    pub lower_bracket: f64,
    pub upper_bracket: f64,
}

/// Farthest-point traversal from point 0; ties go to the lowest index.
/// Returns center indices and the resulting covering radius.
pub fn greedy_centers(e: &Ensemble, budget: usize) -> (Vec<usize>, f64) {
    let n = e.len();
    let mut centers = vec![0usize];
    let mut near: Vec<f64> = e.points.iter().map(|p| e.dist(p, &e.points[0])).collect();
    while centers.len() < budget.min(n) {
        let (far, d) = near
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
        if d <= 0.0 {
            break;
        }
        centers.push(far);
        for (i, p) in e.points.iter().enumerate() {
            near[i] = near[i].min(e.dist(p, &e.points[far]));
        }
    }
    let radius = near.iter().copied().fold(0.0, f64::max);
    (centers, radius)
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn candidates(e: &Ensemble) -> Vec<Vec<f64>> {
    let mut c = e.points.clone();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            c.push(midpoint(&e.points[i], &e.points[j]));
        }
    }
    c
}

/// Smallest number of candidate balls of radius `r` covering all points,
/// by breadth-first search over covered-point bitmasks.
fn min_cover_count(masks: &[u32], n: usize, limit: usize) -> Option<usize> {
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut seen = vec![false; 1usize << n];
    let mut frontier = vec![0u32];
    seen[0] = true;
    for depth in 1..=limit {
        let mut next = Vec::new();
        for &m in &frontier {
            let low = (!m & full).trailing_zeros();
            for &c in masks.iter().filter(|&&c| c >> low & 1 == 1) {
                let nm = m | c;
                if nm == full {
                    return Some(depth);
                }
                if !seen[nm as usize] {
                    seen[nm as usize] = true;
                    next.push(nm);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}

fn exact_cover(e: &Ensemble, budget: usize) -> (f64, Vec<Vec<f64>>) {
    let cands = candidates(e);
    let n = e.len();
    let dist: Vec<Vec<f64>> =
        cands.iter().map(|c| e.points.iter().map(|p| e.dist(c, p)).collect()).collect();
    let mut radii: Vec<f64> = dist.iter().flatten().copied().collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let masks_at = |r: f64| -> Vec<u32> {
        dist.iter()
            .map(|row| row.iter().enumerate().fold(0u32, |m, (i, &d)| if d <= r { m | 1 << i } else { m }))
            .collect()
    };
    let feasible = |r: f64| min_cover_count(&masks_at(r), n, budget).is_some();
    let (mut lo, mut hi) = (0usize, radii.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(radii[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let r = radii[lo];
    let masks = masks_at(r);
    (r, recover_centers(&masks, n, budget).into_iter().map(|i| cands[i].clone()).collect())
}

fn recover_centers(masks: &[u32], n: usize, budget: usize) -> Vec<usize> {
    let full: u32 = (1u32 << n) - 1;
    fn go(masks: &[u32], m: u32, full: u32, left: usize, acc: &mut Vec<usize>) -> bool {
        if m == full {
            return true;
        }
        if left == 0 {
            return false;
        }
        let low = (!m & full).trailing_zeros();
        for (i, &c) in masks.iter().enumerate() {
            if c >> low & 1 == 1 {
                acc.push(i);
                if go(masks, m | c, full, left - 1, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(masks, 0, full, budget, &mut acc);
    acc
}

/// Best single center among data points and pairwise midpoints.
fn one_center(e: &Ensemble) -> (f64, Vec<f64>) {
    let n = e.len();
    let eval = |c: &[f64]| e.points.iter().map(|p| e.dist(c, p)).fold(0.0, f64::max);
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (eval(&e.points[i]), e.points[i].clone());
            for j in i + 1..n {
                let m = midpoint(&e.points[i], &e.points[j]);
                let r = eval(&m);
                if r < best.0 {
                    best = (r, m);
                }
            }
            best
        })
        .collect::<Vec<_>>();
    best.into_iter().fold((f64::INFINITY, vec![]), |a, b| if b.0 < a.0 { b } else { a })
}

/// Scale-resolved ball-measure proxy: radius needed by `budget` centers.
///
/// `Exact` searches all center subsets drawn from data points and pairwise
/// midpoints and needs `|E| <= size_limit`, except for a single center where
/// the search is polynomial and any size is accepted.
pub fn ball_measure_estimate(
    e: &Ensemble,
    method: CoverMethod,
    budget: usize,
    size_limit: usize,
) -> Result<CoveringEstimate> {
    if e.is_empty() {
        return invalid("empty ensemble");
    }
    if budget == 0 {
        return invalid("covering budget must be at least one");
    }
    let (radius, centers) = match method {
        CoverMethod::Greedy => {
            let (idx, r) = greedy_centers(e, budget);
            (r, idx.into_iter().map(|i| e.points[i].clone()).collect())
        }
        CoverMethod::Exact if budget == 1 => {
            let (r, c) = one_center(e);
            (r, vec![c])
        }
        CoverMethod::Exact => {
            if e.len() > size_limit.min(20) {
                return invalid(format!(
                    "exact covering limited to {} points, got {}",
                    size_limit.min(20),
                    e.len()
                ));
            }
            if budget >= e.len() {
                (0.0, e.points.clone())
            } else {
                exact_cover(e, budget)
            }
        }
    };
    Ok(CoveringEstimate {
        radius,
        centers,
        method,
        budget,
        lower_bracket: radius,
        upper_bracket: 2.0 * radius,
    })
}

/// `(beta_est, 2 beta_est)`.
pub fn kappa_bracket(e: &Ensemble, method: CoverMethod, budget: usize) -> Result<(f64, f64)> {
    let c = ball_measure_estimate(e, method, budget, EXACT_LIMIT)?;
    Ok((c.lower_bracket, c.upper_bracket))
}

#[derive(Debug, Clone, Serialize)]
pub struct NetResult {
    pub covered: bool,
    pub centers: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudometricReport {
    pub symmetric: bool,
    pub zero_diagonal: bool,
    pub nonnegative: bool,
    pub triangle: bool,
    pub worst_triangle_excess: f64,
    pub worst_asymmetry: f64,
}

impl PseudometricReport {
    pub fn ok(&self) -> bool {
        self.symmetric && self.zero_diagonal && self.nonnegative && self.triangle
    }
}

/// Full table of `rho` over the items.
pub fn distance_table<T: Sync>(items: &[T], rho: impl Fn(&T, &T) -> f64 + Sync) -> Vec<Vec<f64>> {
    (0..items.len())
        .into_par_iter()
        .map(|i| items.iter().map(|y| rho(&items[i], y)).collect())
        .collect()
}

/// Pseudometric axioms on a precomputed table, triangle within `tol`.
pub fn pseudometric_axioms(table: &[Vec<f64>], tol: f64) -> PseudometricReport {
    let n = table.len();
    let mut worst_tri = f64::NEG_INFINITY;
    let mut worst_asym: f64 = 0.0;
    let mut nonneg = true;
    let mut zero = true;
    for i in 0..n {
        zero &= table[i][i].abs() <= tol;
        for j in 0..n {
            nonneg &= table[i][j] >= 0.0;
            worst_asym = worst_asym.max((table[i][j] - table[j][i]).abs());
            for k in 0..n {
                worst_tri = worst_tri.max(table[i][k] - table[i][j] - table[j][k]);
            }
        }
    }
    PseudometricReport {
        symmetric: worst_asym <= tol,
        zero_diagonal: zero,
        nonnegative: nonneg,
        triangle: worst_tri <= tol,
        worst_triangle_excess: worst_tri.max(0.0),
        worst_asymmetry: worst_asym,
    }
}

/// Greedy `delta`-net in a pseudometric given as a table: items are scanned in
/// order and become centers when no earlier center is within `delta`.
pub fn pseudometric_precompact(table: &[Vec<f64>], delta: f64) -> Result<NetResult> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let n = table.len();
    let spot = n.min(16);
    for i in 0..spot {
        if table[i][i].abs() > 1e-9 {
            return invalid("rho(x, x) != 0: not a pseudometric");
        }
        for j in 0..spot {
            if table[i][j] < 0.0 {
                return invalid("rho returned a negative value: not a pseudometric");
            }
            if (table[i][j] - table[j][i]).abs() > 1e-9 * (1.0 + table[i][j].abs()) {
                return invalid("rho is not symmetric");
            }
        }
    }
    let mut centers: Vec<usize> = Vec::new();
    for i in 0..n {
        if !centers.iter().any(|&c| table[c][i] < delta) {
            centers.push(i);
        }
    }
    Ok(NetResult { covered: true, centers })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractivityScan {
    pub min_tail_value: f64,
    pub witness_pair: (usize, usize),
}

/// Smallest `psi(x_i, x_j)` over distinct pairs with both indices in the
/// second half of the ordering: an empirical liminf proxy.
pub fn contractivity_scan<T: Sync>(
    items: &[T],
    psi: impl Fn(&T, &T) -> f64 + Sync,
) -> Result<ContractivityScan> {
    let n = items.len();
    if n < 8 {
        return invalid("contractivity scan needs at least 8 items");
    }
    let start = n / 2;
    let mut best = (f64::INFINITY, (start, start + 1));
    for i in start..n {
        for j in i + 1..n {
            let v = psi(&items[i], &items[j]);
            if v < best.0 {
                best = (v, (i, j));
            }
        }
    }
    Ok(ContractivityScan { min_tail_value: best.0, witness_pair: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Ensemble {
        Ensemble::euclidean(xs.iter().map(|&x| vec![x]).collect(), 0.0).unwrap()
    }

    #[test]
    fn semidistance_basic() {
        assert_eq!(hausdorff_semidistance(&line(&[0.0]), &line(&[0.0])).unwrap(), 0.0);
        assert_eq!(hausdorff_semidistance(&line(&[0.0, 3.0]), &line(&[0.0])).unwrap(), 3.0);
        assert_eq!(hausdorff_semidistance(&line(&[0.0]), &line(&[0.0, 3.0])).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_ensembles() {
        assert!(Ensemble::euclidean(vec![], 0.0).is_err());
        assert!(Ensemble::euclidean(vec![vec![1.0], vec![1.0, 2.0]], 0.0).is_err());
    }

    #[test]
    fn exact_two_centers_on_line() {
        let e = line(&[0.0, 1.0, 2.0, 3.0]);
        let c = ball_measure_estimate(&e, CoverMethod::Exact, 2, EXACT_LIMIT).unwrap();
        assert_eq!(c.radius, 0.5);
        let mut cs: Vec<f64> = c.centers.iter().map(|p| p[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![0.5, 2.5]);
    }

    #[test]
    fn single_point_zero_radius() {
        let e = line(&[4.0]);
        for m in [CoverMethod::Greedy, CoverMethod::Exact] {
            assert_eq!(ball_measure_estimate(&e, m, 1, EXACT_LIMIT).unwrap().radius, 0.0);
        }
    }

    #[test]
    fn segment_one_center_bracket() {
        let e = line(&(0..=100).map(|i| i as f64 / 100.0).collect::<Vec<_>>());
        let (lo, hi) = kappa_bracket(&e, CoverMethod::Exact, 1).unwrap();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        assert!(ball_measure_estimate(&e, CoverMethod::Exact, 2, EXACT_LIMIT).is_err());
    }

    #[test]
    fn full_budget_is_zero_radius() {
        let e = line(&[0.0, 1.0, 5.0]);
        let (lo, _) = kappa_bracket(&e, CoverMethod::Exact, 3).unwrap();
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn greedy_is_deterministic_farthest_point() {
        let e = line(&[0.0, 10.0, 4.0, 6.0]);
        let (idx, r) = greedy_centers(&e, 2);
        assert_eq!(idx, vec![0, 1]);
        assert_eq!(r, 4.0);
    }

    #[test]
    fn net_on_degenerate_pseudometric() {
        let table = vec![vec![0.0; 5]; 5];
        let net = pseudometric_precompact(&table, 0.1).unwrap();
        assert_eq!(net.centers, vec![0]);
        let bad = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert!(pseudometric_precompact(&bad, 0.1).is_err());
    }

    #[test]
    fn net_with_large_delta_uses_one_center() {
        let e = line(&(0..10).map(|i| i as f64).collect::<Vec<_>>());
        let table = distance_table(&e.points, |a, b| NormTag::Euclidean.dist(a, b));
        let net = pseudometric_precompact(&table, e.diameter() + 1.0).unwrap();
        assert_eq!(net.centers.len(), 1);
        assert!(pseudometric_axioms(&table, 1e-9).ok());
    }

    #[test]
    fn contractivity_on_cauchy_sequence() {
        let xs: Vec<f64> = (1..=200).map(|n| 1.0 / n as f64).collect();
        let s = contractivity_scan(&xs, |a, b| (a - b).abs()).unwrap();
        assert!(s.min_tail_value < 1e-4);
        let z = contractivity_scan(&xs, |_, _| 0.0).unwrap();
        assert_eq!(z.min_tail_value, 0.0);
        assert!(contractivity_scan(&xs[..5], |_, _| 0.0).is_err());
    }

    #[test]
    fn weighted_norm() {
        let n = NormTag::Weighted { name: "x".into(), weights: vec![4.0, 1.0] };
        assert_eq!(n.norm(&[1.0, 0.0]), 2.0);
        assert_eq!(n.dist(&[1.0, 1.0], &[0.0, 1.0]), 2.0);
    }
}
