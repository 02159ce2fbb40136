//! Property tests for the structural invariants: multiplicativity of
//! evaluation, projection idempotence, unit-disc bounds, seed determinism,
//! profile/brute-force agreement, and witness replay.

use edplab::averaging::AverageMode;
use edplab::correlation;
use edplab::discrepancy::{self, DiscrepancyMetric};
use edplab::numtheory::{project_to_net, EpsilonNet, FactorizationTable, MultiplicativeFunctionSpec};
use edplab::search::{self, SearchMode, SearchParams};
use edplab::sequence::UnitDiscSequence;
use edplab::weights::{self, DensityRule, WeightSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplicative_on_coprime_pairs(seed in 0u64..1000, m in 2u64..400, n in 2u64..400) {
        prop_assume!(gcd(m, n) == 1);
        let table = FactorizationTable::build(160_000).unwrap();
        let f = MultiplicativeFunctionSpec::random_unit_circle(&table, 160_000, seed).unwrap();
        let lhs = f.eval(&table, m * n).unwrap();
        let rhs = f.eval(&table, m).unwrap() * f.eval(&table, n).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn completely_multiplicative_on_all_pairs(seed in 0u64..1000, m in 2u64..300, n in 2u64..300) {
        let table = FactorizationTable::build(90_000).unwrap();
        let f = MultiplicativeFunctionSpec::random_pm1(&table, 90_000, seed).unwrap();
        let lhs = f.eval(&table, m * n).unwrap();
        let rhs = f.eval(&table, m).unwrap() * f.eval(&table, n).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..500, eps in 0.05f64..0.5) {
        let n = 300u64;
        let table = FactorizationTable::build(n).unwrap();
        let f = MultiplicativeFunctionSpec::random_unit_circle(&table, n, seed).unwrap();
        let g = project_to_net(&f, eps, n, &table).unwrap();
        let g2 = project_to_net(&g, eps, n, &table).unwrap();
        for k in 1..=n {
            prop_assert!((g.eval(&table, k).unwrap() - g2.eval(&table, k).unwrap()).norm() == 0.0);
        }
    }

    #[test]
    fn projection_respects_the_log_bound(seed in 0u64..500, eps in 0.05f64..0.5) {
        let n = 500u64;
        let table = FactorizationTable::build(n).unwrap();
        let f = MultiplicativeFunctionSpec::random_unit_circle(&table, n, seed).unwrap();
        let g = project_to_net(&f, eps, n, &table).unwrap();
        let bound = 2.0 * eps * (n as f64).ln();
        let fv = f.eval_range(&table, n).unwrap();
        let gv = g.eval_range(&table, n).unwrap();
        for k in 1..=n as usize {
            prop_assert!((fv[k] - gv[k]).norm() <= bound);
        }
    }

    #[test]
    fn nets_cover_random_points(eps in 0.05f64..0.5, k in 0u64..5_000) {
        let net = EpsilonNet::build(eps).unwrap();
        let r = edplab::rng::unit_f64(5150, 2 * k).sqrt();
        let z = edplab::numeric::e2pi(edplab::rng::unit_f64(5150, 2 * k + 1)) * r;
        prop_assert!((net.nearest(z) - z).norm() <= eps + 1e-9);
    }

    #[test]
    fn generated_weights_stay_in_the_disc(seed in 0u64..500, kind in 0u8..5) {
        let n = 200u64;
        let table = FactorizationTable::build(n).unwrap();
        let spec = match kind {
            0 => WeightSpec::PolynomialPhase { coeffs: vec![0.1, 0.3, 2f64.sqrt()] },
            1 => WeightSpec::RandomSign { seed: Some(seed) },
            2 => WeightSpec::SparseRandom {
                rule: DensityRule::OneOverLog,
                c_re: 0.7,
                c_im: 0.1,
                seed: Some(seed),
            },
            3 => WeightSpec::LinearPhaseCounterexample { alpha: 0.5 + seed as f64 * 1e-3 },
            _ => WeightSpec::StepWeight {
                cells: weights::three_cell_step(),
                coeffs: vec![0.0, 0.0, 2f64.sqrt()],
            },
        };
        let w = spec.materialize(n, &table).unwrap();
        for k in 1..=n {
            prop_assert!(w.get(k).norm_sqr() <= 1.0 + 1e-12);
        }
        // pure function of (params, seed)
        let again = spec.materialize(n, &table).unwrap();
        prop_assert!(w.values() == again.values());
    }

    #[test]
    fn profile_matches_brute_force_on_random_instances(sa in 0u64..100, sw in 100u64..200, n in 20u64..120) {
        let a = weights::random_sign_weight(n, sa);
        let w = weights::random_sign_weight(n, sw);
        let p = discrepancy::discrepancy_profile(&a, &w, n, &[n / 2, n], DiscrepancyMetric::Modulus).unwrap();
        for (i, &cp) in [n / 2, n].iter().enumerate() {
            let (v, d, m) = discrepancy::discrepancy_brute_force(&a, &w, cp, DiscrepancyMetric::Modulus);
            prop_assert!((p.values[i] - v).abs() < 1e-12);
            prop_assert!(p.witnesses[i] == (d, m));
        }
        prop_assert!(p.values[0] <= p.values[1] + 1e-12);
    }

    #[test]
    fn search_witnesses_replay(seed in 0u64..64) {
        // random unimodular weight, small horizon: every reported witness
        // passes the brute-force constraint check
        let horizon = 18u32;
        let vals: Vec<Complex64> = (0..horizon as u64)
            .map(|k| edplab::numeric::e2pi(edplab::rng::unit_f64(seed, k)))
            .collect();
        let w = UnitDiscSequence::new(vals, "rand-phase").unwrap();
        let params = SearchParams::new(1.3, horizon, 2_000_000, SearchMode::ArbitrarySigns);
        let r = search::max_length_search(&params, Some(&w)).unwrap();
        prop_assert!(search::check_witness(&r.witness, Some(&w), 1.3));
    }

    #[test]
    fn window_variance_cauchy_schwarz_random(seed in 0u64..200, h in 1u64..24) {
        let n = 400u64;
        let w = weights::random_sign_weight(n + h, seed);
        let v = correlation::window_variance(&w, h, n, AverageMode::Logarithmic).unwrap();
        prop_assert!(v <= (h * h) as f64 + 1e-9);
    }
}
