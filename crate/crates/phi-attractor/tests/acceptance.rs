//! The ten acceptance criteria. Each test prints one `PASS`/`FAIL` line to the
//! real stderr, so the lines show up even when libtest captures output.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phi_attractor::constructor::{build_family, construct, verify_properties, BuildOptions};
use phi_attractor::decay::{check_decay_condition, DecayFunction, Family};
use phi_attractor::hilbert::{equality_witnesses, fuzz_cell, Which};
use phi_attractor::metric::{ball_measure_estimate, greedy_centers, hausdorff_semidistance, CoverMethod, Ensemble, NormTag};
use phi_attractor::nwe::contraction::{contraction_experiment, ContractionConfig};
use phi_attractor::nwe::energy::{energy_experiment, EnergyExperimentConfig};
use phi_attractor::nwe::experiments::{
    absorbing_experiment, c_family, check_c_family, cocycle_check, low_mode_state, mode_doubling, rate_experiment,
    step_halving, AbsorbingConfig, CFamilyConfig, RateConfig,
};
use phi_attractor::nwe::{Model, NweConfig};
use phi_attractor::poly_rate::{check_sequence, UVSystem};
use phi_attractor::process::models::AffineDiscrete;
use phi_attractor::process::BallFamily;
use phi_attractor::Error;

fn verdict(id: u32, name: &str, ok: bool, started: Instant, limit: Duration, detail: String) {
    let elapsed = started.elapsed();
    let pass = ok && elapsed < limit;
    let line = format!(
        "{} criterion {id:>2} {name}: {detail} [{:.2}s / limit {}s]\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(elapsed < limit, "criterion {id} exceeded its runtime limit: {elapsed:?}");
}

#[test]
fn criterion_01_decay_condition_matrix() {
    let t0 = Instant::now();
    let mut cells = 0;
    let mut bounded = 0;
    for fam in [Family::Exponential, Family::Polynomial, Family::Logarithmic] {
        let phi = DecayFunction::standard(fam, 1.0, 1.0).unwrap();
        for omega in [0.5, 1.0, 2.0] {
            for eta in [-3.0, 0.0, 3.0] {
                let v = check_decay_condition(&phi, omega, eta, &phi.default_grid(omega, eta).unwrap()).unwrap();
                cells += 1;
                bounded += v.bounded as usize;
            }
        }
    }
    let sp = DecayFunction::self_power();
    let v = check_decay_condition(&sp, 1.0, -1.0, &sp.default_grid(1.0, -1.0).unwrap()).unwrap();
    let ok = bounded == cells && !v.bounded;
    let detail = format!("{bounded}/{cells} bounded, t^-t bounded={}", v.bounded);
    verdict(1, "decay-condition matrix", ok, t0, Duration::from_secs(1), detail);
}

#[test]
fn criterion_02_power_inequality_fuzz() {
    let t0 = Instant::now();
    let dims = [1usize, 2, 3, 10];
    let ps = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut violations = 0;
    let mut cells = 0;
    for which in [Which::Lipschitz, Which::Monotone] {
        for (di, &d) in dims.iter().enumerate() {
            for (pi, &p) in ps.iter().enumerate() {
                let c = fuzz_cell(which, d, p, 100_000, 1000 + (di * 10 + pi) as u64);
                violations += c.violations;
                cells += 1;
            }
        }
    }
    let witnesses = equality_witnesses(&dims, &ps[1..], 5);
    let worst = witnesses.iter().map(|w| w.residual).fold(0.0, f64::max);
    let ok = violations == 0 && worst <= 1e-12;
    let detail = format!("{cells} cells x 1e5 samples, {violations} violations, worst equality residual {worst:.1e}");
    verdict(2, "power-map inequality fuzz", ok, t0, Duration::from_secs(30), detail);
}

#[test]
fn criterion_03_sequence_suite() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut worst_residual = 0.0f64;
    for three_c in [1.0, 2.0, 5.0] {
        for beta in [0.3, 0.5, 0.8] {
            let sys = UVSystem::new(three_c / 3.0, beta).unwrap();
            for start in [0.5, 1.0, 10.0] {
                let r = check_sequence(&sys, start, 500).unwrap();
                worst_residual = worst_residual.max(r.residual_ii);
                if !r.all_hold() {
                    failures.push((three_c, beta, start));
                }
            }
        }
    }
    let ok = failures.is_empty() && worst_residual < 1e-10;
    let detail = format!("27 cells, failures {failures:?}, worst identity residual {worst_residual:.1e}");
    verdict(3, "sequence items (i)-(vi)", ok, t0, Duration::from_secs(5), detail);
}

fn brute_semidistance(u: &Ensemble, v: &Ensemble) -> f64 {
    let mut worst = 0.0f64;
    for x in &u.points {
        let mut best = f64::INFINITY;
        for y in &v.points {
            best = best.min(u.norm.dist(x, y));
        }
        worst = worst.max(best);
    }
    worst
}

/// Smallest radius over all `k`-subsets of data points and pairwise midpoints.
fn brute_cover_radius(e: &Ensemble, k: usize) -> f64 {
    let mut cands = e.points.clone();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            cands.push(e.points[i].iter().zip(&e.points[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    let dist: Vec<Vec<f64>> = cands.iter().map(|c| e.points.iter().map(|x| e.norm.dist(c, x)).collect()).collect();
    let k = k.min(cands.len());
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    loop {
        let r = (0..e.len()).map(|p| idx.iter().map(|&c| dist[c][p]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        best = best.min(r);
        let mut i = k;
        while i > 0 && idx[i - 1] == cands.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[test]
fn criterion_04_metric_oracles() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    let mut greedy_below = 0;
    for trial in 0..200 {
        let dim = rng.gen_range(1..=3);
        let norm = if trial % 2 == 0 {
            NormTag::Euclidean
        } else {
            NormTag::Weighted { name: "w".into(), weights: (0..dim).map(|_| rng.gen_range(0.5..4.0)).collect() }
        };
        let mut draw = |n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect()
        };
        let (nu, nv) = (1 + trial % 12, 1 + (trial * 7) % 12);
        let u = Ensemble::new(draw(nu), 0.0, norm.clone()).unwrap();
        let v = Ensemble::new(draw(nv), 0.0, norm).unwrap();
        if hausdorff_semidistance(&u, &v).unwrap() != brute_semidistance(&u, &v) {
            mismatches += 1;
        }
        let budget = 1 + trial % 3;
        let oracle = brute_cover_radius(&u, budget);
        let (_, greedy) = greedy_centers(&u, budget);
        let via_estimate = ball_measure_estimate(&u, CoverMethod::Greedy, budget, 12).unwrap().radius;
        if greedy < oracle || via_estimate < oracle {
            greedy_below += 1;
        }
    }
    let ok = mismatches == 0 && greedy_below == 0;
    let detail = format!("200 ensembles, {mismatches} semidistance mismatches, {greedy_below} greedy radii below oracle");
    verdict(4, "metric oracles", ok, t0, Duration::from_secs(10), detail);
}

#[test]
fn criterion_05_constructor_properties() {
    let t0 = Instant::now();
    let proc = AffineDiscrete::contracting_2d(0.3);
    let phi = DecayFunction::standard(Family::Exponential, 1.0, 1.0).unwrap();
    let omega = -(0.5f64 * 1.25f64.sqrt()).ln();
    let opts = BuildOptions::new(-10, 0, 6, 8, omega);
    let b = BallFamily::new(vec![0.0, 0.0], 1.0, NormTag::Euclidean, 40, 3).unwrap();
    let built = build_family(&proc, &b, &phi, &opts, 1e-8);
    let (n_hold, worst) = match &built {
        Ok((_, rep)) => (
            rep.properties.iter().filter(|p| p.holds && p.worst_excess < 1e-8).count(),
            rep.properties.iter().map(|p| p.worst_excess).fold(0.0, f64::max),
        ),
        Err(_) => (0, f64::NAN),
    };
    let small = BallFamily::new(vec![0.0, 0.0], 0.25, NormTag::Euclidean, 40, 3).unwrap();
    let fam = construct(&proc, &small, &phi, &opts).unwrap();
    let rep = verify_properties(&fam, &proc, &small, 1e-8).unwrap();
    let mutation_caught = !rep.properties[0].holds || !rep.properties[4].holds;
    let rejected = matches!(
        build_family(&proc, &small, &phi, &opts, 1e-8),
        Err(Error::PropertyViolated { index: 1 | 5, .. })
    );
    let ok = n_hold == 7 && mutation_caught && rejected;
    let detail = format!("{n_hold}/7 properties, worst excess {worst:.1e}, shrunken ball caught={}", mutation_caught && rejected);
    verdict(5, "constructor properties", ok, t0, Duration::from_secs(20), detail);
}

#[test]
fn criterion_06_nwe_well_posedness() {
    let t0 = Instant::now();
    let cfg = NweConfig::default();
    let cocycle = cocycle_check(&NweConfig { dt: 1e-3, ..cfg.clone() }, 16, 5.0, 13).unwrap();
    let m = Model::new(&cfg).unwrap();
    let x = low_mode_state(&m, 4, 1.0, 14);
    let halving = step_halving(&cfg, &x, 10.0, 0.02).unwrap();
    let xs = low_mode_state(&m, 4, 1.0, 15);
    let doubling = mode_doubling(&NweConfig { modes: 32, ..cfg }, &xs, 20.0, 0.5).unwrap();
    let ok = cocycle.worst < 1e-6 && halving.ratio >= 8.0 && doubling.worst_relative_change < 0.01;
    let detail = format!(
        "cocycle {:.1e}, halving ratio {:.2}, 32->64 modes change {:.1e}",
        cocycle.worst, halving.ratio, doubling.worst_relative_change
    );
    verdict(6, "wave-model well-posedness", ok, t0, Duration::from_secs(120), detail);
}

#[test]
fn criterion_07_energy_inequalities() {
    let t0 = Instant::now();
    let cfg = NweConfig::default();
    let r = energy_experiment(&cfg, &EnergyExperimentConfig::default()).unwrap();
    let eps0 = cfg.eps0();
    let eps_ok = r.eps_values == vec![eps0 / 4.0, eps0 / 2.0, eps0];
    let ok = eps_ok && r.zero_violations() && r.min_energy >= 0.0;
    let detail = format!(
        "{} samples, violations: E<0 {}, norm {}, sandwich {}, vale {} ({} triggers), d0 {:.3}",
        r.samples,
        r.nonneg_violations,
        r.norm_violations,
        r.sandwich_violations,
        r.vale_violations,
        r.vale_triggers,
        r.constants.d0
    );
    verdict(7, "energy inequalities", ok, t0, Duration::from_secs(300), detail);
}

#[test]
fn criterion_08_absorption() {
    let t0 = Instant::now();
    let cfg = NweConfig::default();
    let a = absorbing_experiment(&cfg, &AbsorbingConfig::default()).unwrap();
    let tau1 = a.runs.iter().filter_map(|r| r.tau0).fold(0.0, f64::max);
    let fam = c_family(&cfg, &CFamilyConfig::new(a.r0, tau1)).unwrap();
    let lags = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let c = check_c_family(&cfg, &fam, a.r0, 20.0, 4, &lags, 1e-3).unwrap();
    let ok = a.spread < 0.1 && !a.inconclusive && c.all_hold();
    let detail = format!(
        "r0 {:.4}, spread {:.1e}, closed {}, bounded {}, invariant {}, absorbed after {:?}",
        a.r0, a.spread, c.closed, c.bounded, c.invariance.holds, c.absorption.t_found
    );
    verdict(8, "absorbing ball and family", ok, t0, Duration::from_secs(600), detail);
}

#[test]
fn criterion_09_rate_certificate() {
    let t0 = Instant::now();
    let r = rate_experiment(&RateConfig::default()).unwrap();
    let p2 = r.runs.iter().find(|x| x.p == 2.0).expect("p = 2 run");
    let ok = p2.certificate.valid && p2.certificate.margin > 0.0 && r.slopes_ordered;
    let slopes: Vec<String> =
        r.runs.iter().map(|x| format!("p={} slope {:.3}", x.p, x.certificate.slope.unwrap_or(f64::NAN))).collect();
    let detail = format!(
        "p=2 valid {} margin {:.3}; {}; ordered {}",
        p2.certificate.valid,
        p2.certificate.margin,
        slopes.join(", "),
        r.slopes_ordered
    );
    verdict(9, "rate certificate", ok, t0, Duration::from_secs(1800), detail);
}

#[test]
fn criterion_10_contraction_diagnostics() {
    let t0 = Instant::now();
    let r = contraction_experiment(&NweConfig::default(), &ContractionConfig::default()).unwrap();
    let ok = r.pairs.len() == 50
        && r.inequality_violations == 0
        && r.rho1_axioms.ok()
        && r.rho2_axioms.ok()
        && r.psi1_scan.min_tail_value < 1e-3
        && r.psi2_scan.min_tail_value < 1e-3;
    let detail = format!(
        "{} pairs, {} violations, rho axioms {}/{}, psi tails {:.1e}/{:.1e}",
        r.pairs.len(),
        r.inequality_violations,
        r.rho1_axioms.ok(),
        r.rho2_axioms.ok(),
        r.psi1_scan.min_tail_value,
        r.psi2_scan.min_tail_value
    );
    verdict(10, "contraction diagnostics", ok, t0, Duration::from_secs(600), detail);
}
