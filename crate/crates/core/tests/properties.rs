use std::sync::Arc;

use proptest::prelude::*;
use pqsp_core::*;

fn grid() -> Arc<RadialGrid> {
    make_radial_grid(12.0, 241).unwrap()
}

fn rough(values: Vec<f64>) -> GridFunction {
    let g = grid();
    let mut values = values;
    *values.last_mut().unwrap() = 0.0;
    GridFunction::from_values(&g, values).unwrap()
}

fn nodal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 241)
}

fn smooth(seed: u64, signed: bool) -> GridFunction {
    let mut gen = RandomFunctions::new(seed);
    if signed {
        gen.signed(&grid())
    } else {
        gen.nonnegative(&grid())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_and_negative_parts(values in nodal()) {
        let u = rough(values);
        let (up, un) = (pos_part(&u), neg_part(&u));
        prop_assert!(up.min_value() >= 0.0 && un.min_value() >= 0.0);
        let back = up.checked_sub(&un).unwrap();
        prop_assert_eq!(back.values(), u.values());
        prop_assert!(up.values().iter().zip(un.values()).all(|(a, b)| a * b == 0.0));
    }

    #[test]
    fn parts_do_not_increase_the_norm(values in nodal()) {
        let params = SolverParams::default();
        let u = rough(values);
        let n = w_norm(&u, &params).unwrap();
        prop_assert!(w_norm(&pos_part(&u), &params).unwrap() <= n * (1.0 + 1e-12));
        prop_assert!(w_norm(&neg_part(&u), &params).unwrap() <= n * (1.0 + 1e-12));
    }

    #[test]
    fn order_is_a_cone(a in nodal(), b in nodal(), t in 0.0f64..10.0) {
        let (u, v) = (rough(a).map(f64::abs), rough(b).map(f64::abs));
        let sum = u.checked_add(&v).unwrap();
        prop_assert!(sum.min_value() >= 0.0);
        prop_assert!(u.scaled(t).min_value() >= 0.0);
        prop_assert!(leq(&u, &sum).unwrap());
    }

    #[test]
    fn sobolev_norm_is_homogeneous(seed in any::<u64>(), t in 0.01f64..50.0, s in 1.5f64..3.0) {
        let u = smooth(seed, true);
        let a = sobolev_norm(&u, s).unwrap();
        let b = sobolev_norm(&u.scaled(t), s).unwrap();
        prop_assert!((b - t * a).abs() <= 1e-12 * t * a);
    }

    #[test]
    fn potential_is_nonnegative_and_homogeneous(values in nodal(), t in 0.1f64..10.0, q in 2.01f64..2.99) {
        let u = rough(values);
        let a = solve_potential_radial(&u, q).unwrap();
        prop_assert!(a.min_value >= 0.0);
        let b = solve_potential_radial(&u.scaled(t), q).unwrap();
        let f = t.powf(q);
        for (x, y) in a.phi.values().iter().zip(b.phi.values()) {
            prop_assert!((y - f * x).abs() <= 1e-12 * f * x);
        }
    }

    #[test]
    fn b_pairing_is_linear_in_the_test_function(seed in any::<u64>(), a in -3.0f64..3.0) {
        let params = SolverParams::default();
        let (u, v, w) = (smooth(seed, true), smooth(seed ^ 1, true), smooth(seed ^ 2, true));
        let lhs = apply_b(&u, &v.scaled(a).checked_add(&w).unwrap(), &params).unwrap();
        let rhs = a * apply_b(&u, &v, &params).unwrap() + apply_b(&u, &w, &params).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (lhs.abs() + rhs.abs() + 1e-300));
    }

    #[test]
    fn gap_is_positive_and_symmetric(a in nodal(), b in nodal()) {
        let params = SolverParams::default();
        let (u, v) = (rough(a), rough(b));
        prop_assume!(u.values() != v.values());
        let g1 = monotonicity_gap(&u, &v, &params).unwrap();
        let g2 = monotonicity_gap(&v, &u, &params).unwrap();
        prop_assert!(g1 > 0.0);
        prop_assert!((g1 - g2).abs() <= 1e-12 * g1);
    }

    #[test]
    fn coercivity_bound_holds(seed in any::<u64>(), log_scale in -3.0f64..3.0) {
        let params = SolverParams::default();
        let v = smooth(seed, true).scaled(10f64.powf(log_scale));
        prop_assert!(coercivity_witness(&v, &params).unwrap().holds());
    }

    #[test]
    fn t_is_nonnegative_and_increasing(a in nodal(), b in nodal(), lambda in 0.0f64..1.0) {
        let g = grid();
        let params = SolverParams::default().with_lambda(lambda);
        let spec = NonlinearitySpec::remark11(&g, &params);
        let pert = PerturbationSpec::gaussian(&g, 1.0, &params).unwrap();
        let u1 = rough(a).map(|x| 0.1 * x);
        let u2 = u1.checked_add(&rough(b).map(|x| 0.1 * x.abs())).unwrap();
        let t1 = apply_t(&u1, &params, &spec, &pert).unwrap();
        let t2 = apply_t(&u2, &params, &spec, &pert).unwrap();
        prop_assert!(t1.coeffs().iter().all(|&c| c >= 0.0));
        prop_assert!(t1.leq(&t2).unwrap());
    }

    #[test]
    fn inverse_of_b_is_increasing(seed in any::<u64>(), amp in 0.01f64..2.0) {
        let g = grid();
        let params = SolverParams::default();
        let base = smooth(seed, true);
        let f1 = DualVector::from_density(&base);
        let f2 = DualVector::from_density(&base.checked_add(&smooth(seed ^ 7, false).scaled(amp)).unwrap());
        let u1 = invert_b(&f1, &params, 1e-12).unwrap().solution;
        let u2 = invert_b(&f2, &params, 1e-12).unwrap().solution;
        let scale = u2.max_value().abs().max(u1.max_value().abs());
        prop_assert!(u1.checked_sub(&u2).unwrap().max_value() <= 1e-9 * scale);
        prop_assert!(u1.grid().len() == g.len());
    }
}
