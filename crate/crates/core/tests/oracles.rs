//! Closed-form and cross-method oracles.

use std::f64::consts::PI;

use pqsp_core::verify::unit_ball_oracle;
use pqsp_core::*;

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

#[test]
fn gaussian_integral() {
    let grid = make_radial_grid(10.0, 2001).unwrap();
    let f = GridFunction::from_fn(&grid, |r| (-r * r).exp());
    let got = integrate(&f).unwrap();
    assert!(rel(got, PI.powf(1.5)) < 1e-4, "{got}");
}

#[test]
fn sobolev_norm_of_gaussian() {
    // ∫ (|∇u|² + u²) dV = √2 π^{3/2} for u = e^{−r²}.
    let grid = make_radial_grid(10.0, 4001).unwrap();
    let u = GridFunction::from_fn(&grid, |r| (-r * r).exp());
    let want = (2f64.sqrt() * PI.powf(1.5)).sqrt();
    let got = sobolev_norm(&u, 2.0).unwrap();
    assert!(rel(got, want) < 1e-4, "{got} vs {want}");
}

#[test]
fn unit_ball_potential_profile() {
    let n = 4001;
    let h = 1.0 / 1000.5;
    let grid = make_radial_grid(h * (n - 1) as f64, n).unwrap();
    let u = GridFunction::from_fn(&grid, |r| if r < 1.0 { 1.0 } else { 0.0 });
    let phi = solve_potential_radial(&u, 2.5).unwrap().phi;
    assert!(rel(phi.sample(0.0), 0.5) < 1e-4);
    assert!(rel(phi.sample(1.0), 1.0 / 3.0) < 1e-4);
    for r in [1.2, 1.5, 2.0, 2.5, 3.0, 3.9] {
        assert!(rel(phi.sample(r), 1.0 / (3.0 * r)) < 1e-4, "r = {r}");
    }
    for r in [0.25, 0.5, 0.75] {
        assert!(rel(phi.sample(r), 0.5 - r * r / 6.0) < 1e-4, "r = {r}");
    }
}

#[test]
fn cube_oracle_matches_closed_form_and_radial_evaluator() {
    let o = unit_ball_oracle(32).unwrap();
    assert!(rel(o.cube_centre, 0.5) < 0.05, "{}", o.cube_centre);
    assert!(o.cube_ball_error < 0.05);
    assert!(o.cube_gaussian_error < 0.05);
}

#[test]
fn poisson_residual_is_second_order() {
    // −(1/r²)(r²φ′)′ = |u|^q away from the origin, error O(h²).
    let errors: Vec<f64> = [801, 1601]
        .iter()
        .map(|&n| {
            let grid = make_radial_grid(8.0, n).unwrap();
            let u = GridFunction::from_fn(&grid, |r| (-r * r).exp());
            let phi = solve_potential_radial(&u, 2.0).unwrap().phi;
            let lap = radial_laplacian(&phi);
            grid.nodes()
                .iter()
                .zip(&lap)
                .filter(|(r, _)| **r >= 0.5 && **r <= 3.0)
                .map(|(r, l)| (l + (-2.0 * r * r).exp()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[0] < 1e-3, "{errors:?}");
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn monotone_dependence_of_potential() {
    let grid = make_radial_grid(10.0, 501).unwrap();
    let mut gen = RandomFunctions::new(11);
    for _ in 0..20 {
        let u1 = gen.nonnegative(&grid);
        let u2 = u1.checked_add(&gen.nonnegative(&grid)).unwrap();
        let a = solve_potential_radial(&u1, 2.5).unwrap().phi;
        let b = solve_potential_radial(&u2, 2.5).unwrap().phi;
        assert!(leq(&a, &b).unwrap());
    }
}

#[test]
fn energy_directional_derivative_matches_b() {
    let grid = make_radial_grid(10.0, 801).unwrap();
    let params = SolverParams::default();
    let mut gen = RandomFunctions::new(5);
    for _ in 0..50 {
        let u = gen.signed(&grid).scaled(gen.uniform(0.2, 3.0));
        let v = gen.signed(&grid);
        let f = DualVector::from_density(&gen.signed(&grid));
        let exact = apply_b(&u, &v, &params).unwrap() - f.pairing(&v).unwrap();
        let s = 1e-4;
        let plus = double_phase_energy(&u.checked_add(&v.scaled(s)).unwrap(), &f, &params).unwrap();
        let minus = double_phase_energy(&u.checked_sub(&v.scaled(s)).unwrap(), &f, &params).unwrap();
        let fd = (plus - minus) / (2.0 * s);
        assert!(rel(fd, exact) < 1e-6, "{fd} vs {exact}");
    }
}

#[test]
fn b_vector_form_and_holder_bound() {
    let grid = make_radial_grid(10.0, 801).unwrap();
    let params = SolverParams::default();
    let mut gen = RandomFunctions::new(9);
    let mut c = [0.0f64; 2];
    for _ in 0..40 {
        let u = gen.signed(&grid).scaled(gen.uniform(0.1, 5.0));
        let v = gen.signed(&grid);
        let b = apply_b(&u, &v, &params).unwrap();
        let bv = apply_b_vec(&u, &params).unwrap().pairing(&v).unwrap();
        assert!((b - bv).abs() <= 1e-12 * b.abs().max(1e-300) * 10.0);
        let nu = w_norm(&u, &params).unwrap();
        let nv = w_norm(&v, &params).unwrap();
        // Split the bound evenly between the two powers to record comparable constants.
        c[0] = c[0].max(b.abs() / (2.0 * nu.powf(params.p - 1.0) * nv));
        c[1] = c[1].max(b.abs() / (2.0 * nu.powf(params.q - 1.0) * nv));
    }
    assert!(c.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn remark_nonlinearity_values() {
    let grid = make_radial_grid(10.0, 201).unwrap();
    let params = SolverParams::default();
    let spec = NonlinearitySpec::remark11(&grid, &params);
    assert_eq!(eval_h(&spec, 0, 1.0), 1.0);
    let node = grid.nodes().iter().position(|&r| (r - 1.0).abs() < 1e-12).unwrap();
    assert!((eval_h(&spec, node, 2.0) - 16.0).abs() < 1e-12);
    assert_eq!(eval_h(&spec, node, -3.0), 0.0);
}

#[test]
fn antiderivative_matches_gauss_legendre() {
    let grid = make_radial_grid(10.0, 201).unwrap();
    let params = SolverParams::default();
    let spec = NonlinearitySpec::power(
        &grid,
        &params,
        &Profile::Gaussian { amplitude: 0.5, width: 2.0 },
        &Profile::Lorentzian { amplitude: 1.0 },
    )
    .unwrap();
    for node in [0, 17, 150] {
        for t in [0.01, 0.7, 3.0] {
            let quad = quadrature::integrate_gl64(|s| eval_h(&spec, node, s), 0.0, t);
            // t^{τ−1} = t^{1.5} is not smooth at 0, which caps the rule near 1e-10.
            let e = rel(spec.antiderivative(node, t), quad);
            assert!(e < 1e-9, "node {node} t {t} rel {e:e}");
        }
    }
}

#[test]
fn lambda0_examples() {
    assert!((lambda0_formula(0.5, 2.0, 2.5, 1.0) - 0.0625).abs() < 1e-15);
    let a = lambda0_formula(1.3, 2.0, 2.5, 0.7);
    assert!((lambda0_formula(1.3, 2.0, 2.5, 1.4) - 0.5 * a).abs() < 1e-15);
}

#[test]
fn map_g_from_zero() {
    let params = SolverParams::default();
    let ctx = verify::default_problem(20.0, 801, &params).unwrap();
    let zero = GridFunction::zeros(ctx.grid());
    assert!(map_g(&zero, &ctx).unwrap().is_zero());
    let g0 = map_g(&zero, &ctx.with_lambda(0.05)).unwrap();
    assert!(g0.min_value() >= 0.0 && g0.max_value() > 0.0);
}

#[test]
fn energy_small_and_descent() {
    let params = SolverParams::default();
    let ctx = verify::default_problem(20.0, 801, &params).unwrap();
    let mut gen = RandomFunctions::new(3);
    for _ in 0..10 {
        let u = gen.signed(ctx.grid());
        let u = u.scaled(0.1 / w_norm(&u, &params).unwrap());
        assert!(energy_i(&u, &ctx).unwrap() > 0.0);
    }
    let ctx = ctx.with_lambda(0.1);
    let u = gen.nonnegative(ctx.grid());
    let g = grad_i(&u, &ctx).unwrap();
    let dir = GridFunction::from_values(ctx.grid(), g.coeffs().iter().map(|c| -c).collect()).unwrap();
    let e0 = energy_i(&u, &ctx).unwrap();
    let e1 = energy_i(&u.checked_add(&dir.scaled(1e-4)).unwrap(), &ctx).unwrap();
    assert!(e1 < e0);
}

#[test]
fn weak_residual_detects_perturbation() {
    let params = SolverParams::default();
    let ctx0 = verify::default_problem(20.0, 801, &params).unwrap();
    let cert = ball_certificate(&ctx0, 32).unwrap();
    let ctx = ctx0.with_lambda(0.5 * cert.lambda0);
    let rep = iterate(&ctx, None).unwrap();
    let r_star = weak_residual(&rep.solution, &ctx).unwrap();
    let bumped = rep.solution.map(|v| v + 0.1);
    assert!(weak_residual(&bumped, &ctx).unwrap() > 1e3 * r_star.max(1e-12));
    let again = iterate(&ctx, Some(&rep.solution)).unwrap();
    assert!(again.iterations <= 1);
}

#[test]
fn certificate_is_deterministic_and_shrinks_with_radius() {
    let params = SolverParams::default();
    let ctx = verify::default_problem(20.0, 801, &params).unwrap();
    let a = ball_certificate(&ctx, 40).unwrap();
    let b = ball_certificate(&ctx, 40).unwrap();
    assert_eq!(a, b);
    let c = [a.c_star, a.c_2star, a.c_3star];
    let terms = |r| smallness_terms(r, &params, c, a.d1_eta_norm, a.d2_sup_norm, params.tau, params.q_star());
    let (p1, q1) = terms(a.radius);
    let (p2, q2) = terms(0.5 * a.radius);
    assert!(p2 < p1 && q2 < q1);
}

#[test]
fn t_bound_at_zero_is_load_term() {
    let params = SolverParams::default().with_lambda(0.3);
    let ctx = verify::default_problem(20.0, 401, &params).unwrap();
    let cert = ball_certificate(&ctx, 32).unwrap();
    let zero = GridFunction::zeros(ctx.grid());
    let b = t_dual_bound(&zero, &ctx.params, &ctx.spec, &ctx.pert, &cert).unwrap();
    assert!((b - 0.3 * ctx.pert.g_norm).abs() < 1e-15);
}
