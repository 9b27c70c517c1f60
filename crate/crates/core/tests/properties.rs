//! Property tests of the structural invariants.

use mixrec::adversarial::{FoolingFunction, PointSet};
use mixrec::bspline::bspline_eval;
use mixrec::domain::{cell_inside, enumerate_n, MType, MTypeDomain};
use mixrec::dyadic::Dyadic;
use mixrec::indexkit::{eps_subsets, hyperbolic_cross, parent_links, MultiIndex, RecoveryParams};
use mixrec::recovery::{assemble, build_sample_plan, fit_rate};
use proptest::prelude::*;

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_arithmetic_matches_integer_rationals(a in -1_000_000i64..1_000_000, ea in 0u32..20, b in -1_000_000i64..1_000_000, eb in 0u32..20) {
        let (x, y) = (Dyadic::new(a, ea), Dyadic::new(b, eb));
        // common denominator 2^40
        let scale = |m: i64, e: u32| (m as i128) << (40 - e);
        let sum = x + y;
        prop_assert_eq!(scale(sum.mant(), sum.exp()), scale(a, ea) + scale(b, eb));
        prop_assert_eq!(x < y, scale(a, ea) < scale(b, eb));
    }

    #[test]
    fn refinement_holds_at_random_points(m in 1u32..=6, x in -1.0f64..8.0) {
        let rhs: f64 = (0..=m + 1)
            .map(|mu| mixrec::indexkit::refinement_weight(m, mu) * bspline_eval(m, 2.0 * x - mu as f64))
            .sum();
        prop_assert!((bspline_eval(m, x) - rhs).abs() < 1e-12);
    }

    #[test]
    fn integer_translates_sum_to_one(m in 1u32..=8, x in -50.0f64..50.0) {
        let base = x.floor() as i64;
        let s: f64 = (base - m as i64..=base).map(|nu| bspline_eval(m, x - nu as f64)).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_signs_cancel_on_nonzero_levels(kappa in proptest::collection::vec(0u32..4, 1..5)) {
        let s: i32 = eps_subsets(&kappa).iter().map(|e| if e.order() % 2 == 0 { 1 } else { -1 }).sum();
        prop_assert_eq!(s, if kappa.iter().all(|&k| k == 0) { 1 } else { 0 });
    }

    #[test]
    fn cross_levels_minus_subsets_stay_nonnegative(beta2 in 1.0f64..2.0, r in 0u32..9) {
        for kappa in hyperbolic_cross(&[1.0, beta2], r) {
            for eps in eps_subsets(kappa.as_slice()) {
                prop_assert!(kappa.checked_sub(&eps).is_some());
            }
        }
    }

    #[test]
    fn parent_weights_sum_to_one(nu in proptest::collection::vec(-3i64..20, 2), m in proptest::collection::vec(1u32..5, 2), eps in proptest::collection::vec(0u32..2, 2)) {
        // per active axis the weights are the even- or odd-indexed mask coefficients
        let s: f64 = parent_links(&nu, &eps, &m).iter().map(|l| l.weight).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mapped_cells_lie_inside_the_domain(k1 in 0u32..5, k2 in 0u32..5, m1 in 1u32..4, m2 in 1u32..4, lshape in any::<bool>()) {
        let m = mi(&[m1, m2]);
        let dom = if lshape { MTypeDomain::lshape(m) } else { MTypeDomain::cube(m) };
        let level: Vec<u32> = [k1, k2].iter().zip(dom.kappa0().iter()).map(|(a, b)| a + b).collect();
        for nu in enumerate_n(&dom, &level) {
            let cell = dom.map_nu(&level, &nu);
            prop_assert!(cell_inside(&dom, &level, &cell), "{:?} -> {:?}", nu, cell);
        }
    }

    #[test]
    fn cube_translate_count_is_a_product(k1 in 0u32..7, k2 in 0u32..7, m1 in 1u32..5, m2 in 1u32..5) {
        let dom = MTypeDomain::cube(mi(&[m1, m2]));
        let n = enumerate_n(&dom, &[k1, k2]).len();
        prop_assert_eq!(n, ((1usize << k1) + m1 as usize) * ((1usize << k2) + m2 as usize));
    }

    #[test]
    fn recovery_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let p = RecoveryParams::new(vec![2.0, 2.0], 2.0, f64::INFINITY, 2.0, mi(&[0, 0]), mi(&[3, 3])).unwrap();
        let dom = MTypeDomain::cube(p.m.clone());
        let plan = build_sample_plan(&dom, &p, 3).unwrap();
        let u: Vec<f64> = plan.points.iter().map(|x| (x[0] * 3.0 + seed as f64).sin()).collect();
        let v: Vec<f64> = plan.points.iter().map(|x| x[1] * x[1] - x[0]).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        let (ru, rv, rw) = (assemble(&dom, &p, &plan, &u).unwrap(), assemble(&dom, &p, &plan, &v).unwrap(), assemble(&dom, &p, &plan, &w).unwrap());
        let zero = assemble(&dom, &p, &plan, &vec![0.0; plan.len()]).unwrap();
        for x in [[0.1, 0.9], [0.5, 0.5], [0.77, 0.23]] {
            let lhs = rw.eval(&x).unwrap();
            let rhs = a * ru.eval(&x).unwrap() + b * rv.eval(&x).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
            prop_assert_eq!(zero.eval(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn fooling_functions_vanish_on_arbitrary_points(pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
        let p = RecoveryParams::new(vec![2.0, 2.0], 2.0, f64::INFINITY, 2.0, mi(&[0, 0]), mi(&[3, 3])).unwrap();
        let dom = MTypeDomain::cube(p.m.clone());
        let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
        let (_, kappa) = mixrec::adversarial::choose_level(points.len(), &p).unwrap();
        let cells = mixrec::adversarial::find_empty_cells(PointSet::Float(&points), kappa.as_slice(), &dom);
        prop_assert!(cells.len() >= points.len());
        let f = FoolingFunction::new(kappa, cells, 1.0, mi(&[4, 4]), &dom);
        for x in &points {
            prop_assert_eq!(f.value(x), 0.0);
        }
    }

    #[test]
    fn rate_fit_recovers_synthetic_exponents(s in -4.0f64..-0.5, e in 0.0f64..4.0, c in -3.0f64..3.0) {
        let table: Vec<(f64, f64)> = (3..10).map(|r| {
            let n = 2f64.powi(r) * r as f64;
            (n, c.exp() * n.powf(s) * n.ln().powf(e))
        }).collect();
        let fit = fit_rate(&table, Some(e)).unwrap();
        prop_assert!((fit.fixed.unwrap().slope - s).abs() < 1e-6);
        prop_assert!((fit.free.slope - s).abs() < 1e-5);
        prop_assert!((fit.free.log_exponent - e).abs() < 1e-4);
    }
}
