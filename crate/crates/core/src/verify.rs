//! Property suite: one check per structural claim, each returning a pass/fail record
//! with the measured quantities. Every check is deterministic given its seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::duality::{apply_b, apply_b_vec, coercivity_witness, invert_b_with, monotonicity_gap, CoercivityCase};
use crate::error::{Error, Result};
use crate::grid::{make_radial_grid, pos_part, sobolev_integral, w_norm, DualVector, GridFunction, RadialGrid};
use crate::params::SolverParams;
use crate::potential::{d12_norm, potential_from_density, solve_potential_grid3d, solve_potential_radial, CubeField};
use crate::probes::RandomFunctions;
use crate::solver::{
    ball_certificate_with, energy_i, grad_i, iterate, lambda0_formula, map_g, smallness_terms,
    weak_residual, BallCertificate, CertificateOptions, SolveReport, SolverContext,
};
use crate::source::{apply_t, t_dual_bound, validate_growth, NonlinearitySpec, PerturbationSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<&'static str, f64>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check {
            name,
            passed: false,
            detail: String::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn metric(&mut self, key: &'static str, value: f64) -> &mut Self {
        self.metrics.insert(key, value);
        self
    }

    fn finish(mut self, passed: bool, detail: impl Into<String>) -> Self {
        self.passed = passed;
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// The `remark11` nonlinearity `h = d₂ t^{q*−1}` and `g = e^{−r²}` on `[0, r_max]` with `n` nodes.
pub fn default_problem(r_max: f64, n: usize, params: &SolverParams) -> Result<SolverContext> {
    let grid = make_radial_grid(r_max, n)?;
    let spec = NonlinearitySpec::remark11(&grid, params);
    let pert = PerturbationSpec::gaussian(&grid, 1.0, params)?;
    SolverContext::new(params.clone(), spec, pert)
}

/// Signed, rough, or nonnegative sample, cycling by index.
fn mixed_sample(gen: &mut RandomFunctions, grid: &Arc<RadialGrid>, k: usize) -> GridFunction {
    match k % 3 {
        0 => gen.signed(grid),
        1 => gen.rough(grid),
        _ => gen.nonnegative(grid),
    }
}

fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .filter(|(_, w)| **w != 0.0)
        .map(|(g, w)| ((g - w) / w).abs())
        .fold(0.0, f64::max)
}

/// `φ_u ≥ 0` at every node for `count` random `u`.
pub fn potential_nonnegativity(grid: &Arc<RadialGrid>, q: f64, seed: u64, count: usize) -> Result<Check> {
    let mut gen = RandomFunctions::new(seed);
    let mut min_phi = f64::INFINITY;
    for k in 0..count {
        let u = mixed_sample(&mut gen, grid, k).scaled(gen.uniform(0.1, 10.0));
        min_phi = min_phi.min(solve_potential_radial(&u, q)?.min_value);
    }
    let mut c = Check::new("potential_nonnegative");
    c.metric("samples", count as f64).metric("min_phi", min_phi);
    Ok(c.finish(min_phi >= 0.0, format!("min φ over {count} samples = {min_phi:e}")))
}

/// `φ_{tu} = t^q φ_u` nodewise for `t ∈ {0.5, 2, 10}`, `q ∈ {2.2, 2.5, 2.9}`.
pub fn potential_homogeneity(grid: &Arc<RadialGrid>, seed: u64, tol: f64) -> Result<Check> {
    let mut gen = RandomFunctions::new(seed);
    let mut worst: f64 = 0.0;
    for &q in &[2.2, 2.5, 2.9] {
        let u = gen.signed(grid);
        let base = solve_potential_radial(&u, q)?.phi;
        for &t in &[0.5, 2.0, 10.0] {
            let scaled = solve_potential_radial(&u.scaled(t), q)?.phi;
            let want: Vec<f64> = base.values().iter().map(|v| t.powf(q) * v).collect();
            worst = worst.max(max_relative_error(scaled.values(), &want));
        }
    }
    let mut c = Check::new("potential_homogeneous");
    c.metric("max_relative_error", worst);
    Ok(c.finish(worst <= tol, format!("max relative error {worst:e} (tolerance {tol:e})")))
}

/// Stability of the empirical constant in `‖φ_u‖_{D^{1,2}} ≤ C‖u‖^q`: no probe after the
/// first half exceeds twice the maximum over the first half.
pub fn potential_bound(grid: &Arc<RadialGrid>, params: &SolverParams, seed: u64, count: usize) -> Result<Check> {
    let mut gen = RandomFunctions::new(seed);
    let half = count / 2;
    let mut running: f64 = 0.0;
    let mut first_half: f64 = 0.0;
    let mut exceed = 0;
    for k in 0..count {
        let u = mixed_sample(&mut gen, grid, k).scaled(gen.uniform(0.1, 10.0));
        let phi = solve_potential_radial(&u, params.q)?.phi;
        let ratio = d12_norm(&phi)? / w_norm(&u, params)?.powf(params.q);
        if !ratio.is_finite() {
            return Err(Error::NonFinite("potential bound ratio"));
        }
        if k < half {
            first_half = first_half.max(ratio);
        } else if ratio > 2.0 * first_half {
            exceed += 1;
        }
        running = running.max(ratio);
    }
    let mut c = Check::new("potential_bound");
    c.metric("empirical_constant", running)
        .metric("first_half_max", first_half)
        .metric("exceedances", exceed as f64);
    Ok(c.finish(
        exceed == 0 && running.is_finite(),
        format!("empirical C = {running:e}, {exceed} probes above twice the first-half maximum"),
    ))
}

/// Outcome of the unit-ball potential comparison.
#[derive(Debug, Clone, Serialize)]
pub struct UnitBallOracle {
    pub phi_0: f64,
    pub phi_1: f64,
    pub phi_2: f64,
    pub radial_max_error: f64,
    pub cube_centre: f64,
    pub cube_ball_error: f64,
    pub cube_gaussian_error: f64,
}

/// Potential of the uniform unit ball on the radial grid and on a cube of side `side`.
///
/// The radial grid places `r = 1` halfway between nodes 1000 and 1001, so the lumped
/// weights integrate the indicator exactly up to `O(h²)`.
pub fn unit_ball_oracle(side: usize) -> Result<UnitBallOracle> {
    let n = 4001;
    let h = 1.0 / 1000.5;
    let grid = make_radial_grid(h * (n - 1) as f64, n)?;
    let rho: Vec<f64> = grid.nodes().iter().map(|&r| if r < 1.0 { 1.0 } else { 0.0 }).collect();
    let phi = GridFunction::from_values(&grid, potential_from_density(&grid, &rho))?;
    let exact = |r: f64| if r <= 1.0 { 0.5 - r * r / 6.0 } else { 1.0 / (3.0 * r) };
    let (phi_0, phi_1, phi_2) = (phi.sample(0.0), phi.sample(1.0), phi.sample(2.0));
    let radial_max_error = [(0.0, phi_0), (1.0, phi_1), (2.0, phi_2)]
        .iter()
        .map(|&(r, v)| (v / exact(r) - 1.0).abs())
        .fold(0.0, f64::max);

    let cube = |f: &dyn Fn(f64) -> f64| -> Result<(CubeField, CubeField)> {
        let density = CubeField::from_fn(side, 2.0, |x, y, z| f((x * x + y * y + z * z).sqrt()))?;
        let phi = solve_potential_grid3d(&density)?;
        Ok((density, phi))
    };
    // Worst relative gap between the cube oracle and the radial evaluator at every cell.
    let compare = |f: &dyn Fn(f64) -> f64| -> Result<(f64, f64)> {
        let (_, phi3) = cube(f)?;
        let fine = make_radial_grid(4.0, 4001)?;
        let rho: Vec<f64> = fine.nodes().iter().map(|&r| f(r)).collect();
        let radial = GridFunction::from_values(&fine, potential_from_density(&fine, &rho))?;
        let mut worst: f64 = 0.0;
        for (idx, v) in phi3.values().iter().enumerate() {
            let [x, y, z] = phi3.position(idx);
            let want = radial.sample((x * x + y * y + z * z).sqrt());
            worst = worst.max((v / want - 1.0).abs());
        }
        let centre = phi3.values()[phi3.index(side / 2, side / 2, side / 2)];
        Ok((worst, centre))
    };
    let (cube_ball_error, cube_centre) = compare(&|r| if r < 1.0 { 1.0 } else { 0.0 })?;
    let (cube_gaussian_error, _) = compare(&|r| (-4.0 * r * r).exp())?;
    Ok(UnitBallOracle {
        phi_0,
        phi_1,
        phi_2,
        radial_max_error,
        cube_centre,
        cube_ball_error,
        cube_gaussian_error,
    })
}

pub fn unit_ball_check(radial_tol: f64, cube_tol: f64) -> Result<Check> {
    let o = unit_ball_oracle(32)?;
    let mut c = Check::new("potential_unit_ball");
    c.metric("phi_0", o.phi_0)
        .metric("phi_1", o.phi_1)
        .metric("phi_2", o.phi_2)
        .metric("radial_max_relative_error", o.radial_max_error)
        .metric("cube_ball_max_relative_error", o.cube_ball_error)
        .metric("cube_gaussian_max_relative_error", o.cube_gaussian_error);
    let passed = o.radial_max_error <= radial_tol
        && o.cube_ball_error <= cube_tol
        && o.cube_gaussian_error <= cube_tol;
    Ok(c.finish(
        passed,
        format!(
            "φ(0), φ(1), φ(2) = {:.7}, {:.7}, {:.7}; radial error {:e}; cube error {:.3}% (ball), {:.3}% (Gaussian)",
            o.phi_0,
            o.phi_1,
            o.phi_2,
            o.radial_max_error,
            100.0 * o.cube_ball_error,
            100.0 * o.cube_gaussian_error
        ),
    ))
}

/// `⟨Bu₁ − Bu₂, u₁ − u₂⟩ > 0` on `pairs` distinct random pairs, including near pairs.
pub fn strict_monotonicity(grid: &Arc<RadialGrid>, params: &SolverParams, seed: u64, pairs: usize) -> Result<Check> {
    let mut gen = RandomFunctions::new(seed);
    let mut failures = 0;
    let mut min_ratio = f64::INFINITY;
    for k in 0..pairs {
        let u1 = mixed_sample(&mut gen, grid, k).scaled(gen.uniform(0.05, 5.0));
        let u2 = if k % 4 == 3 {
            let eps = 10f64.powf(gen.uniform(-4.0, -1.0));
            u1.checked_add(&gen.signed(grid).scaled(eps))?
        } else {
            mixed_sample(&mut gen, grid, k + 1).scaled(gen.uniform(0.05, 5.0))
        };
        if u1.values() == u2.values() {
            continue;
        }
        let gap = monotonicity_gap(&u1, &u2, params)?;
        if !(gap > 0.0) {
            failures += 1;
        }
        let d = u1.checked_sub(&u2)?;
        min_ratio = min_ratio.min(gap / sobolev_integral(&d, params.p)?);
    }
    let mut c = Check::new("strict_monotonicity");
    c.metric("pairs", pairs as f64)
        .metric("failures", failures as f64)
        .metric("min_gap_over_p_integral", min_ratio);
    Ok(c.finish(failures == 0, format!("{failures} non-positive gaps in {pairs} pairs")))
}

/// Round trip `B⁻¹(Bu) = u` on smooth probes, with monotone inner energy traces.
pub fn invertibility(grid: &Arc<RadialGrid>, params: &SolverParams, seed: u64, count: usize, tol: f64) -> Result<Check> {
    let probes = crate::probes::ProbeLibrary::new(grid, params)?;
    let mut gen = RandomFunctions::new(seed);
    let mut worst: f64 = 0.0;
    let mut energy_increases = 0;
    let mut residual_increases = 0;
    let mut max_iterations = 0;
    for k in 0..count {
        let u = if k % 2 == 0 { gen.signed(grid) } else { gen.nonnegative(grid) };
        let u = u.scaled(gen.uniform(0.1, 3.0));
        let f = apply_b_vec(&u, params)?;
        let rep = invert_b_with(&f, params, params.tol_inner, &probes, None)?;
        let err = w_norm(&rep.solution.checked_sub(&u)?, params)? / w_norm(&u, params)?;
        worst = worst.max(err);
        max_iterations = max_iterations.max(rep.iterations);
        energy_increases += rep.energy_trace.windows(2).filter(|w| w[1] > w[0]).count();
        residual_increases += rep.residual_trace.windows(2).filter(|w| w[1] > w[0]).count();
    }
    let mut c = Check::new("b_invertibility");
    c.metric("max_relative_error", worst)
        .metric("energy_increases", energy_increases as f64)
        .metric("residual_increases", residual_increases as f64)
        .metric("max_inner_iterations", max_iterations as f64);
    Ok(c.finish(
        worst <= tol && energy_increases == 0 && residual_increases == 0,
        format!(
            "round-trip error {worst:e}; {energy_increases} energy increases, {residual_increases} residual increases"
        ),
    ))
}

/// Inverse order: `f₁ ⊴ f₂` coefficientwise gives `B⁻¹f₁ ≤ B⁻¹f₂` up to solver accuracy.
pub fn inverse_order(grid: &Arc<RadialGrid>, params: &SolverParams, seed: u64, pairs: usize) -> Result<Check> {
    let probes = crate::probes::ProbeLibrary::new(grid, params)?;
    let mut gen = RandomFunctions::new(seed);
    let mut worst: f64 = f64::NEG_INFINITY;
    for k in 0..pairs {
        let base = mixed_sample(&mut gen, grid, k).scaled(gen.uniform(0.1, 2.0));
        let bump = gen.nonnegative(grid).scaled(gen.uniform(0.01, 1.0));
        let f1 = DualVector::from_density(&base);
        let f2 = DualVector::from_density(&base.checked_add(&bump)?);
        let u1 = invert_b_with(&f1, params, params.tol_inner, &probes, None)?.solution;
        let u2 = invert_b_with(&f2, params, params.tol_inner, &probes, None)?.solution;
        let scale = u1.max_value().abs().max(u2.max_value().abs()).max(1e-300);
        worst = worst.max(u1.checked_sub(&u2)?.max_value() / scale);
    }
    let mut c = Check::new("b_inverse_increasing");
    c.metric("max_order_violation", worst);
    Ok(c.finish(worst <= 1e-8, format!("max (u₁ − u₂)/max|u| = {worst:e}")))
}

/// `⟨I′(u), ψ⟩` against central differences, and the `O(step²)` decay of the FD error.
pub fn gradient_consistency(ctx: &SolverContext, seed: u64, count: usize, tol: f64) -> Result<Check> {
    let grid = ctx.grid();
    let r_max = grid.r_max();
    let floor = GridFunction::from_fn(grid, |r| 0.1 * (1.0 - (r / r_max).powi(2)));
    let mut gen = RandomFunctions::new(seed);
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut worst: f64 = 0.0;
    // Relative FD error summed over all pairs, per step.
    let mut totals = vec![0.0; steps.len()];
    for _ in 0..count {
        // Bounded below by a multiple of the cutoff so that u ± sψ stays positive.
        let u = gen.nonnegative(grid).checked_add(&floor)?;
        let psi = gen.signed(grid);
        let exact = grad_i(&u, ctx)?.pairing(&psi)?;
        let fd = |s: f64| -> Result<f64> {
            let plus = energy_i(&u.checked_add(&psi.scaled(s))?, ctx)?;
            let minus = energy_i(&u.checked_sub(&psi.scaled(s))?, ctx)?;
            Ok((plus - minus) / (2.0 * s))
        };
        worst = worst.max(((fd(1e-4)? - exact) / exact).abs());
        for (total, &s) in totals.iter_mut().zip(&steps) {
            *total += ((fd(s)? - exact) / exact).abs();
        }
    }
    let mut orders: Vec<f64> = totals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    orders.sort_by(f64::total_cmp);
    let median_order = orders.get(orders.len() / 2).copied().unwrap_or(f64::NAN);
    let min_order = orders.first().copied().unwrap_or(f64::NAN);
    let mut c = Check::new("gradient_consistency");
    c.metric("max_relative_error", worst)
        .metric("median_observed_order", median_order)
        .metric("min_observed_order", min_order);
    Ok(c.finish(
        worst <= tol && median_order >= 1.8 && min_order >= 1.5,
        format!("max relative error {worst:e}; FD order median {median_order:.3}, min {min_order:.3}"),
    ))
}

/// `⟨Bv, v⟩` against the case-appropriate lower bound, with every case exercised.
pub fn coercivity(grid: &Arc<RadialGrid>, params: &SolverParams, seed: u64, count: usize) -> Result<Check> {
    let mut gen = RandomFunctions::new(seed);
    let mut violations = 0;
    let mut seen = [0usize; 3];
    let mut min_margin = [f64::INFINITY; 3];
    for k in 0..count {
        let v = mixed_sample(&mut gen, grid, k / 3);
        let (pn, qn) = (
            crate::grid::sobolev_norm(&v, params.p)?,
            crate::grid::sobolev_norm(&v, params.q)?,
        );
        // Target each case in turn; norms are 1-homogeneous so a scale selects the case.
        let (lo, hi) = (pn.min(qn), pn.max(qn));
        let scale = match k % 3 {
            0 => gen.uniform(1.0, 100.0) / qn,
            1 if qn < pn => (gen.uniform((1.0 / pn).ln(), (1.0 / qn).ln())).exp(),
            1 => (gen.uniform((1.0 / hi).ln(), (1.0 / lo).ln())).exp(),
            _ => gen.uniform(0.01, 1.0) / hi,
        };
        let w = coercivity_witness(&v.scaled(scale), params)?;
        let idx = match w.case {
            CoercivityCase::LargeQNorm => 0,
            CoercivityCase::MixedNorms => 1,
            CoercivityCase::SmallNorms => 2,
        };
        seen[idx] += 1;
        min_margin[idx] = min_margin[idx].min(w.pairing / w.lower_bound);
        let direct = apply_b(&v.scaled(scale), &v.scaled(scale), params)?;
        if !w.holds() || direct < w.lower_bound * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    let mut c = Check::new("coercivity");
    c.metric("violations", violations as f64)
        .metric("large_q_norm_cases", seen[0] as f64)
        .metric("mixed_cases", seen[1] as f64)
        .metric("small_norm_cases", seen[2] as f64)
        .metric("min_margin_large_q_norm", min_margin[0])
        .metric("min_margin_mixed", min_margin[1])
        .metric("min_margin_small_norms", min_margin[2]);
    Ok(c.finish(
        violations == 0 && seen.iter().all(|&s| s > 0),
        format!("{violations} violations; cases seen {seen:?}"),
    ))
}

/// `0 ≤ u₁ ≤ u₂` gives ordered `T` coefficients and ordered pairings with nonnegative
/// probes; also `G(u₁) ≤ G(u₂)` on a subset.
pub fn order_preservation(ctx: &SolverContext, seed: u64, pairs: usize, probes_per_pair: usize) -> Result<Check> {
    let grid = ctx.grid();
    let mut gen = RandomFunctions::new(seed);
    let mut coeff_violations = 0;
    let mut pairing_violations = 0;
    let mut negative_coeffs = 0;
    let mut g_worst: f64 = f64::NEG_INFINITY;
    for k in 0..pairs {
        let u1 = gen.nonnegative(grid).scaled(gen.uniform(0.01, 2.0));
        let u2 = u1.checked_add(&gen.nonnegative(grid).scaled(gen.uniform(0.0, 1.0)))?;
        let t1 = apply_t(&u1, &ctx.params, &ctx.spec, &ctx.pert)?;
        let t2 = apply_t(&u2, &ctx.params, &ctx.spec, &ctx.pert)?;
        coeff_violations += t1.coeffs().iter().zip(t2.coeffs()).filter(|(a, b)| a > b).count();
        negative_coeffs += t1.coeffs().iter().filter(|&&c| c < 0.0).count();
        for _ in 0..probes_per_pair {
            let v = gen.nonnegative(grid);
            if t1.pairing(&v)? > t2.pairing(&v)? {
                pairing_violations += 1;
            }
        }
        if k % 10 == 0 {
            let (g1, g2) = (map_g(&u1, ctx)?, map_g(&u2, ctx)?);
            let scale = g2.max_value().max(1e-300);
            g_worst = g_worst.max(g1.checked_sub(&g2)?.max_value() / scale);
        }
    }
    let mut c = Check::new("t_order_preserving");
    c.metric("coefficient_violations", coeff_violations as f64)
        .metric("pairing_violations", pairing_violations as f64)
        .metric("negative_coefficients", negative_coeffs as f64)
        .metric("g_max_order_violation", g_worst);
    Ok(c.finish(
        coeff_violations == 0 && pairing_violations == 0 && negative_coeffs == 0 && g_worst <= 1e-8,
        format!(
            "{coeff_violations} coefficient and {pairing_violations} pairing violations; G order gap {g_worst:e}"
        ),
    ))
}

/// Growth condition and monotonicity of `h` on the sample ladder.
pub fn growth(ctx: &SolverContext) -> Result<Check> {
    let rep = validate_growth(&ctx.spec, &ctx.params, 200);
    let mut c = Check::new("growth_condition");
    match rep {
        Ok(r) => {
            c.metric("max_violation", r.max_violation)
                .metric("d1_eta_norm", r.d1_eta_norm)
                .metric("d2_sup_norm", r.d2_sup_norm);
            Ok(c.finish(r.monotone && r.max_violation <= 0.0, "growth bound holds on the ladder"))
        }
        Err(e @ (Error::GrowthViolation { .. } | Error::NotMonotone { .. })) => Ok(c.finish(false, e.to_string())),
        Err(e) => Err(e),
    }
}

/// Certificate for `ctx` with the given seed and the default probe budget.
pub fn certificate(ctx: &SolverContext, seed: u64) -> Result<BallCertificate> {
    ball_certificate_with(
        ctx,
        &CertificateOptions {
            seed,
            ..Default::default()
        },
    )
}

/// The dual bound on `T` dominates the probe dual norm of `Tu` for `u` in the ball.
pub fn t_dual_domination(ctx: &SolverContext, cert: &BallCertificate, seed: u64, count: usize) -> Result<Check> {
    let grid = ctx.grid();
    let mut gen = RandomFunctions::new(seed);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let u = mixed_sample(&mut gen, grid, k);
        let norm = w_norm(&pos_part(&u), &ctx.params)?;
        if norm == 0.0 {
            continue;
        }
        let u = u.scaled(gen.uniform(0.0, 1.0) * cert.radius / norm);
        let measured = ctx.probes.dual_norm(&apply_t(&u, &ctx.params, &ctx.spec, &ctx.pert)?)?;
        let bound = t_dual_bound(&u, &ctx.params, &ctx.spec, &ctx.pert, cert)?;
        worst = worst.max(measured / bound);
    }
    let mut c = Check::new("t_dual_bound");
    c.metric("max_measured_over_bound", worst);
    Ok(c.finish(worst <= 1.0, format!("max measured/bound = {worst:.4}")))
}

/// `λ₀` arithmetic, smallness conditions, and ball invariance at `λ₀` and `λ₀/2`.
pub fn ball_invariance(ctx: &SolverContext, cert: &BallCertificate) -> Result<Check> {
    let arithmetic = lambda0_formula(0.5, 2.0, 2.5, 1.0);
    let (a, b) = smallness_terms(
        cert.radius,
        &ctx.params,
        [cert.c_star, cert.c_2star, cert.c_3star],
        cert.d1_eta_norm,
        cert.d2_sup_norm,
        ctx.spec.tau,
        ctx.spec.q_star,
    );
    let mut c = Check::new("ball_invariance");
    c.metric("radius", cert.radius)
        .metric("lambda0", cert.lambda0)
        .metric("lambda0_reference", arithmetic)
        .metric("smallness_p", a)
        .metric("smallness_q", b);
    let mut ok = (arithmetic - 0.0625).abs() <= 1e-15 && a <= 0.5 && b < 0.5;
    for (label, fraction) in [("max_norm_at_lambda0", 1.0), ("max_norm_at_half_lambda0", 0.5)] {
        let run = ctx
            .with_lambda(fraction * cert.lambda0)
            .with_certificate(cert.clone());
        let rep = match iterate(&run, None) {
            Ok(r) => r,
            Err(Error::OuterNotConverged { report }) => *report,
            Err(e) => return Err(e),
        };
        let max_norm = rep.norm_trace.iter().copied().fold(0.0, f64::max);
        c.metric(label, max_norm);
        ok &= max_norm <= cert.radius;
    }
    Ok(c.finish(
        ok,
        format!(
            "R = {:.4}, λ₀ = {:.4e}; iterates stay in the ball: {ok}",
            cert.radius, cert.lambda0
        ),
    ))
}

/// Full solve at `λ`, with every solution-quality diagnostic.
pub fn end_to_end(ctx: &SolverContext, cert: &BallCertificate, lambda: f64) -> Result<(Check, SolveReport)> {
    let run = ctx.with_lambda(lambda).with_certificate(cert.clone());
    let mut c = Check::new("end_to_end");
    let rep = match iterate(&run, None) {
        Ok(r) => r,
        Err(Error::OuterNotConverged { report }) => {
            let detail = format!("no convergence in {} outer iterations", report.iterations + 1);
            return Ok((c.finish(false, detail), *report));
        }
        Err(e) => return Err(e),
    };
    let u = &rep.solution;
    let tol = run.params.tol_outer;
    let residual = weak_residual(u, &run)?;
    let grad_norm = run.probes.dual_norm(&grad_i(u, &run)?)?;

    // ‖Gu‖_p^p + ‖Gu‖_q^q = ⟨Tu, Gu⟩ for the last step of the chain.
    let gu = map_g(u, &run)?;
    let lhs = sobolev_integral(&gu, run.params.p)? + sobolev_integral(&gu, run.params.q)?;
    let rhs = apply_t(u, &run.params, &run.spec, &run.pert)?.pairing(&gu)?;
    let chain_gap = (lhs - rhs).abs() / rhs.abs().max(1e-300);
    let g0 = map_g(&GridFunction::zeros(run.grid()), &run)?;
    let final_norm = *rep.norm_trace.last().unwrap();
    let nontrivial = final_norm >= (1.0 - tol) * w_norm(&g0, &run.params)? && final_norm > 0.0;
    let restart = iterate(&run, Some(u))?;

    c.metric("iterations", rep.iterations as f64)
        .metric("final_norm", final_norm)
        .metric("monotone_witness", rep.monotone_witness)
        .metric("weak_residual", residual)
        .metric("grad_i_dual_norm", grad_norm)
        .metric("neg_part_norm", rep.positivity.neg_part_norm)
        .metric("max_value", rep.positivity.max_value)
        .metric("bound_chain_gap", chain_gap)
        .metric("restart_iterations", restart.iterations as f64);
    let passed = rep.converged
        && rep.monotone
        && residual <= 10.0 * tol
        && grad_norm <= 10.0 * tol
        && rep.positivity.passed
        && nontrivial
        && chain_gap <= 1e-6
        && restart.iterations <= 1;
    let detail = format!(
        "{} iterations, ‖u*‖ = {final_norm:.6e}, max u* = {:.4e}, weak residual {residual:.2e}, ‖I′(u*)‖ {grad_norm:.2e}, monotone witness {:.2e}",
        rep.iterations, rep.positivity.max_value, rep.monotone_witness
    );
    Ok((c.finish(passed, detail), rep))
}

/// Relative change of `‖u*‖` between `coarse` and `fine` at a common `λ`.
pub fn refinement(coarse: &SolverContext, fine: &SolverContext, lambda: f64, tol: f64) -> Result<Check> {
    let a = iterate(&coarse.with_lambda(lambda), None)?;
    let b = iterate(&fine.with_lambda(lambda), None)?;
    let (na, nb) = (*a.norm_trace.last().unwrap(), *b.norm_trace.last().unwrap());
    let change = (nb - na).abs() / na;
    let mut c = Check::new("grid_refinement");
    c.metric("coarse_norm", na)
        .metric("fine_norm", nb)
        .metric("relative_change", change);
    Ok(c.finish(change <= tol, format!("‖u*‖ {na:.8e} → {nb:.8e}, change {change:.2e}")))
}

/// With the nonlocal term switched off the solve still converges, and the two solutions
/// differ by far more than either solve's residual; the nonnegative nonlocal source can
/// only raise the solution.
pub fn degenerate_mode(ctx: &SolverContext, lambda: f64) -> Result<Check> {
    let mut full_ctx = ctx.with_lambda(lambda);
    full_ctx.params.nonlocal_enabled = true;
    let mut deg_ctx = full_ctx.clone();
    deg_ctx.params.nonlocal_enabled = false;
    let full = iterate(&full_ctx, None)?;
    let mut c = Check::new("degenerate_mode");
    let deg = match iterate(&deg_ctx, None) {
        Ok(r) => r,
        Err(Error::OuterNotConverged { .. }) => return Ok(c.finish(false, "degenerate run did not converge")),
        Err(e) => return Err(e),
    };
    let diff = full.solution.checked_sub(&deg.solution)?;
    let diff_norm = w_norm(&diff, &full_ctx.params)?;
    let noise = weak_residual(&full.solution, &full_ctx)? + weak_residual(&deg.solution, &deg_ctx)?;
    // Solution error is at most a small multiple of the residual; the margin is generous.
    let floor = 1e3 * noise.max(f64::EPSILON * w_norm(&full.solution, &full_ctx.params)?);
    let ordered = diff.min_value() >= -floor;
    c.metric("difference_norm", diff_norm)
        .metric("difference_max", diff.max_value())
        .metric("noise_floor", floor)
        .metric("degenerate_iterations", deg.iterations as f64);
    Ok(c.finish(
        deg.converged && diff_norm > floor && ordered,
        format!("‖u_full − u_deg‖ = {diff_norm:.3e} against noise floor {floor:.1e}; u_full ≥ u_deg: {ordered}"),
    ))
}

/// Sample sizes for [`run_suite`].
#[derive(Debug, Clone, Copy)]
pub struct SuiteSizes {
    pub potential_samples: usize,
    pub monotonicity_pairs: usize,
    pub inversion_probes: usize,
    pub gradient_pairs: usize,
    pub coercivity_samples: usize,
    pub order_pairs: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            potential_samples: 200,
            monotonicity_pairs: 500,
            inversion_probes: 20,
            gradient_pairs: 20,
            coercivity_samples: 200,
            order_pairs: 100,
        }
    }
}

/// Runs every check on the problem produced by `build(n)` for the base node count `n`
/// and for `2n − 1` (refinement).
pub fn run_suite(
    build: &dyn Fn(usize) -> Result<SolverContext>,
    n: usize,
    seed: u64,
    sizes: SuiteSizes,
) -> Result<VerifyReport> {
    let ctx = build(n)?;
    let grid = ctx.grid().clone();
    let params = &ctx.params;
    let cert = certificate(&ctx, seed)?;
    let lambda = 0.5 * cert.lambda0;
    let mut checks = vec![
        potential_nonnegativity(&grid, params.q, seed, sizes.potential_samples)?,
        potential_homogeneity(&grid, seed, 1e-12)?,
        potential_bound(&grid, params, seed, sizes.potential_samples)?,
        unit_ball_check(1e-3, 0.05)?,
        strict_monotonicity(&grid, params, seed, sizes.monotonicity_pairs)?,
        invertibility(&grid, params, seed, sizes.inversion_probes, 1e-5)?,
        inverse_order(&grid, params, seed, 10)?,
        gradient_consistency(&ctx.with_lambda(lambda), seed, sizes.gradient_pairs, 1e-5)?,
        coercivity(&grid, params, seed, sizes.coercivity_samples)?,
        order_preservation(&ctx.with_lambda(lambda), seed, sizes.order_pairs, 10)?,
        growth(&ctx)?,
        t_dual_domination(&ctx.with_lambda(lambda), &cert, seed, 100)?,
        ball_invariance(&ctx, &cert)?,
        end_to_end(&ctx, &cert, lambda)?.0,
        refinement(&ctx, &build(2 * n - 1)?, lambda, 0.02)?,
        degenerate_mode(&ctx, lambda)?,
    ];
    checks.shrink_to_fit();
    Ok(VerifyReport {
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
