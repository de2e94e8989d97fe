//! Invariants as property tests.

use proptest::prelude::*;

use phi_attractor::decay::{check_decay_condition, DecayFunction, Family};
use phi_attractor::hilbert::{check_monotone_power, check_power_lipschitz, VecSample};
use phi_attractor::metric::{greedy_centers, hausdorff_semidistance, Ensemble};
use phi_attractor::nwe::{Model, NweConfig};
use phi_attractor::poly_rate::UVSystem;

fn cloud(dim: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), 1..=max)
}

fn ens(points: Vec<Vec<f64>>) -> Ensemble {
    Ensemble::euclidean(points, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn semidistance_vanishes_on_self_and_subsets(a in cloud(3, 10), b in cloud(3, 10)) {
        let u = ens(a.clone());
        prop_assert_eq!(hausdorff_semidistance(&u, &u).unwrap(), 0.0);
        let mut joined = a.clone();
        joined.extend(b);
        prop_assert_eq!(hausdorff_semidistance(&u, &ens(joined)).unwrap(), 0.0);
    }

    #[test]
    fn semidistance_triangle(a in cloud(2, 8), b in cloud(2, 8), c in cloud(2, 8)) {
        let (u, v, w) = (ens(a), ens(b), ens(c));
        let direct = hausdorff_semidistance(&u, &w).unwrap();
        let via = hausdorff_semidistance(&u, &v).unwrap() + hausdorff_semidistance(&v, &w).unwrap();
        prop_assert!(direct <= via + 1e-12);
    }

    #[test]
    fn greedy_radius_shrinks_with_budget(a in cloud(2, 14)) {
        let e = ens(a);
        let mut prev = f64::INFINITY;
        for k in 1..=e.len() {
            let (centers, r) = greedy_centers(&e, k);
            prop_assert!(centers.len() <= k);
            prop_assert!(r <= prev + 1e-15);
            prev = r;
        }
        prop_assert_eq!(prev, 0.0);
    }

    #[test]
    fn power_lipschitz_and_monotone(
        x in prop::collection::vec(-1.0f64..1.0, 4),
        y in prop::collection::vec(-1.0f64..1.0, 4),
        p in 0.0f64..6.0,
    ) {
        let s = VecSample { x, y, p, r: 2.0 };
        prop_assert!(check_power_lipschitz(&s).holds);
        prop_assert!(check_monotone_power(&s).holds);
    }

    #[test]
    fn standard_families_decrease(c in 0.1f64..10.0, beta in 0.1f64..3.0, t in 3.0f64..1e4, dt in 0.0f64..100.0) {
        for fam in [Family::Exponential, Family::Polynomial, Family::Logarithmic] {
            let phi = DecayFunction::standard(fam, c, beta).unwrap();
            prop_assert!(phi.eval(t + dt) <= phi.eval(t));
            prop_assert!(phi.eval(t) >= 0.0);
        }
    }

    #[test]
    fn polynomial_family_satisfies_translate_condition(beta in 0.2f64..3.0, omega in 0.25f64..4.0, eta in -5.0f64..5.0) {
        let phi = DecayFunction::standard(Family::Polynomial, 1.0, beta).unwrap();
        let v = check_decay_condition(&phi, omega, eta, &phi.default_grid(omega, eta).unwrap()).unwrap();
        prop_assert!(v.bounded);
    }

    #[test]
    fn v_inverts_u(c in 0.05f64..5.0, beta in 0.05f64..0.95, t in 1e-3f64..50.0) {
        let sys = UVSystem::new(c, beta).unwrap();
        let s = sys.v(t);
        prop_assert!(s <= t && s >= 0.0);
        prop_assert!((sys.u(s) - t).abs() <= 1e-12 * t.max(1.0));
    }

    #[test]
    fn sequence_is_nonincreasing(c in 0.1f64..3.0, beta in 0.1f64..0.9, t0 in 0.01f64..20.0) {
        let seq = UVSystem::new(c, beta).unwrap().iterate(t0, 60).unwrap();
        prop_assert!(seq.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_decay_norm_never_grows(p in 0.5f64..4.0, seed in 0u64..1000, span in 0.5f64..4.0) {
        let cfg = NweConfig::free_decay(p, 4, 0.01);
        let m = Model::new(&cfg).unwrap();
        let x = phi_attractor::nwe::experiments::low_mode_state(&m, 4, 1.0, seed);
        let y = m.integrate(0.0, span, &x).unwrap();
        prop_assert!(m.x_norm(&y) <= m.x_norm(&x) * (1.0 + 1e-9));
    }

    #[test]
    fn wave_flow_composes(s in -3.0f64..3.0, a in 0.0f64..2.0, b in 0.0f64..2.0, seed in 0u64..1000) {
        let cfg = NweConfig { modes: 6, dt: 1e-3, ..NweConfig::default() };
        let m = Model::new(&cfg).unwrap();
        let x = phi_attractor::nwe::experiments::low_mode_state(&m, 6, 2.0, seed);
        let (r, t) = (s + a, s + a + b);
        let direct = m.integrate(s, t, &x).unwrap();
        let split = m.integrate(r, t, &m.integrate(s, r, &x).unwrap()).unwrap();
        let diff: Vec<f64> = direct.iter().zip(&split).map(|(u, v)| u - v).collect();
        prop_assert!(m.x_norm(&diff) <= 1e-6 * m.x_norm(&direct).max(1.0));
    }
}
