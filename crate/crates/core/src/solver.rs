//! Fixed-point map `G = B⁻¹ ∘ T`, monotone Picard iteration from zero, the ball
//! certificate `(C*, C**, C***, R, λ₀)`, and solution diagnostics.
//!
//! `G` is increasing on the ordered space (`T` is increasing and so is `B⁻¹`), and
//! `G(0) = B⁻¹(λg) ⪰ 0`, so the iterates `0 ⪯ G(0) ⪯ G²(0) ⪯ …` form a nondecreasing
//! chain. On a finite grid an order-bounded nondecreasing chain converges; the solver
//! records the monotonicity witness and the ball bound rather than assuming them.

use std::sync::Arc;

use serde::Serialize;

use crate::duality::{apply_b_vec, double_phase_energy, invert_b_with};
use crate::error::{Error, Result};
use crate::grid::{neg_part, w_norm, weighted_sum, DualVector, GridFunction, RadialGrid};
use crate::params::SolverParams;
use crate::potential::potential_from_density;
use crate::probes::{ProbeLibrary, RandomFunctions};
use crate::source::{
    apply_t, eval_h, lebesgue_norm, sup_norm, NonlinearitySpec, PerturbationSpec,
};

/// Everything the fixed-point map needs.
#[derive(Debug, Clone)]
pub struct SolverContext {
    pub params: SolverParams,
    pub spec: NonlinearitySpec,
    pub pert: PerturbationSpec,
    pub probes: ProbeLibrary,
    pub certificate: Option<BallCertificate>,
}

impl SolverContext {
    pub fn new(params: SolverParams, spec: NonlinearitySpec, pert: PerturbationSpec) -> Result<Self> {
        params.validate()?;
        spec.d1.same_grid(&pert.g)?;
        let probes = ProbeLibrary::new(pert.g.grid(), &params)?;
        Ok(SolverContext {
            params,
            spec,
            pert,
            probes,
            certificate: None,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.pert.g.grid()
    }

    pub fn with_certificate(mut self, certificate: BallCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    /// Same problem with a different `λ`; the probe library depends only on `p, q`.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut ctx = self.clone();
        ctx.params.lambda = lambda;
        ctx
    }
}

/// `G(u) = B⁻¹(T u)`, warm-started from `u`.
pub fn map_g(u: &GridFunction, ctx: &SolverContext) -> Result<GridFunction> {
    Ok(map_g_report(u, ctx)?.0)
}

fn map_g_report(u: &GridFunction, ctx: &SolverContext) -> Result<(GridFunction, usize)> {
    let tu = apply_t(u, &ctx.params, &ctx.spec, &ctx.pert)?;
    let rep = invert_b_with(&tu, &ctx.params, ctx.params.tol_inner, &ctx.probes, Some(u))?;
    if !rep.solution.is_finite() {
        return Err(Error::NonFinite("fixed-point map"));
    }
    Ok((rep.solution, rep.iterations))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PositivityRecord {
    pub neg_part_norm: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub passed: bool,
}

/// `‖u⁻‖` and the range of `u`; passes when `‖u⁻‖ ≤ tol_outer` and `max u > 0`.
pub fn check_positivity(u: &GridFunction, params: &SolverParams) -> Result<PositivityRecord> {
    let neg_part_norm = w_norm(&neg_part(u), params)?;
    let min_value = u.min_value();
    let max_value = u.max_value();
    Ok(PositivityRecord {
        neg_part_norm,
        min_value,
        max_value,
        passed: neg_part_norm <= params.tol_outer && max_value > 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: GridFunction,
    /// Index of the Picard step at which the stopping test passed.
    pub iterations: usize,
    pub converged: bool,
    pub lambda: f64,
    /// `w_norm(u_{k+1} − u_k) / max(1, w_norm(u_k))`.
    pub outer_residuals: Vec<f64>,
    /// `w_norm(u_k)`, starting with the initial iterate.
    pub norm_trace: Vec<f64>,
    /// `I(u_k)`, starting with the initial iterate.
    pub energy_trace: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub monotone: bool,
    /// `max_k max_i (u_k − u_{k+1})_i`; nonpositive for a nondecreasing chain.
    pub monotone_witness: f64,
    pub positivity: PositivityRecord,
    pub ball_radius: Option<f64>,
    pub ball_invariant: Option<bool>,
    pub warnings: Vec<String>,
}

/// Picard iteration `u_{k+1} = G(u_k)` from `u0` (zero when `None`).
pub fn iterate(ctx: &SolverContext, u0: Option<&GridFunction>) -> Result<SolveReport> {
    let params = &ctx.params;
    params.validate()?;
    let mut warnings = Vec::new();
    if let Some(cert) = &ctx.certificate {
        if params.lambda > cert.lambda0 {
            let msg = format!(
                "lambda = {:e} exceeds the certified threshold {:e}; ball invariance is not guaranteed",
                params.lambda, cert.lambda0
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mut u = match u0 {
        Some(u0) => {
            u0.same_grid(&ctx.pert.g)?;
            if !u0.is_zero() {
                warnings.push("non-zero start: monotonicity of the chain is not guaranteed".into());
            }
            u0.clone()
        }
        None => GridFunction::zeros(ctx.grid()),
    };

    let mut norm_trace = vec![w_norm(&u, params)?];
    let mut energy_trace = vec![energy_i(&u, ctx)?];
    let mut outer_residuals = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut witness = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..params.max_outer {
        let (next, inner) = map_g_report(&u, ctx)?;
        inner_iterations.push(inner);
        let diff = next.checked_sub(&u)?;
        witness = witness.max(-diff.max_value());
        let residual = w_norm(&diff, params)? / norm_trace.last().unwrap().max(1.0);
        outer_residuals.push(residual);
        norm_trace.push(w_norm(&next, params)?);
        energy_trace.push(energy_i(&next, ctx)?);
        u = next;
        iterations = k;
        if residual <= params.tol_outer {
            converged = true;
            break;
        }
    }

    let ball_radius = ctx.certificate.as_ref().map(|c| c.radius);
    let ball_invariant = ball_radius.map(|r| norm_trace.iter().all(|&m| m <= r));
    if ball_invariant == Some(false) {
        warnings.push("an iterate left the certified ball".into());
    }
    let monotone = witness <= 0.0;
    let report = SolveReport {
        positivity: check_positivity(&u, params)?,
        solution: u,
        iterations,
        converged,
        lambda: params.lambda,
        outer_residuals,
        norm_trace,
        energy_trace,
        inner_iterations,
        monotone,
        monotone_witness: witness,
        ball_radius,
        ball_invariant,
        warnings,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::OuterNotConverged {
            report: Box::new(report),
        })
    }
}

/// Empirical constants of the dual bound on `T` and the ball `(R, λ₀)` they certify.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCertificate {
    pub c_star: f64,
    pub c_2star: f64,
    pub c_3star: f64,
    pub radius: f64,
    pub lambda0: f64,
    pub probes_used: usize,
    pub safety_factor: f64,
    pub seed: u64,
    pub d1_eta_norm: f64,
    pub d2_sup_norm: f64,
    pub g_norm: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    pub n_probes: usize,
    pub seed: u64,
    pub safety_factor: f64,
    pub radius_search_max: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            n_probes: 64,
            seed: 0x5eed,
            safety_factor: 2.0,
            radius_search_max: 100.0,
        }
    }
}

/// `λ₀ = min{ R^{p−1} / (2^{p+1}‖g‖), R^{q−1} / (2^q‖g‖) }`.
pub fn lambda0_formula(radius: f64, p: f64, q: f64, g_norm: f64) -> f64 {
    let a = radius.powf(p - 1.0) / (2f64.powf(p + 1.0) * g_norm);
    let b = radius.powf(q - 1.0) / (2f64.powf(q) * g_norm);
    a.min(b)
}

/// Left-hand sides of the two smallness conditions on `R`.
pub fn smallness_terms(
    radius: f64,
    params: &SolverParams,
    c: [f64; 3],
    d1_eta_norm: f64,
    d2_sup_norm: f64,
    tau: f64,
    q_star: f64,
) -> (f64, f64) {
    let (p, q) = (params.p, params.q);
    let [c1, c2, c3] = c;
    let pow = |e: f64| radius.powf(e);
    let first = 2f64.powf(p)
        * (c1 * pow(2.0 * q - p) + c2 * d1_eta_norm * pow(tau - p) + c3 * d2_sup_norm * pow(q_star - p));
    let second = 2f64.powf(q - 1.0)
        * (c1 * pow(q) + c2 * d1_eta_norm * pow(tau - q) + c3 * d2_sup_norm * pow(q_star - q));
    (first, second)
}

/// Ball certificate with default options and `n_probes` random probes.
pub fn ball_certificate(ctx: &SolverContext, n_probes: usize) -> Result<BallCertificate> {
    ball_certificate_with(
        ctx,
        &CertificateOptions {
            n_probes,
            ..Default::default()
        },
    )
}

pub fn ball_certificate_with(ctx: &SolverContext, opts: &CertificateOptions) -> Result<BallCertificate> {
    if opts.n_probes < 32 {
        return Err(Error::InvalidArgument(format!(
            "certificate needs at least 32 probes, got {}",
            opts.n_probes
        )));
    }
    let params = &ctx.params;
    let spec = &ctx.spec;
    let grid = ctx.grid();
    let d1_eta_norm = lebesgue_norm(&spec.d1, params.eta());
    let d2_sup_norm = sup_norm(&spec.d2);
    let q = params.q;

    let mut gen = RandomFunctions::new(opts.seed);
    let mut ratios = [0.0f64; 3];
    for _ in 0..opts.n_probes {
        let u = gen.nonnegative(grid);
        let m = w_norm(&u, params)?;
        let dual = |coeffs: Vec<f64>| -> Result<f64> {
            ctx.probes.dual_norm(&DualVector::from_coeffs(grid, coeffs)?)
        };
        if params.nonlocal_enabled {
            let rho: Vec<f64> = u.values().iter().map(|v| v.powf(q)).collect();
            let phi = potential_from_density(grid, &rho);
            let term: Vec<f64> = phi
                .iter()
                .zip(u.values())
                .map(|(f, v)| f * v.powf(q - 1.0))
                .collect();
            ratios[0] = ratios[0].max(dual(term)? / m.powf(2.0 * q - 1.0));
        }
        if d1_eta_norm > 0.0 {
            let term = u
                .values()
                .iter()
                .zip(spec.d1.values())
                .map(|(v, d)| d * v.powf(spec.tau - 1.0))
                .collect();
            ratios[1] = ratios[1].max(dual(term)? / (d1_eta_norm * m.powf(spec.tau - 1.0)));
        }
        if d2_sup_norm > 0.0 {
            let term = u
                .values()
                .iter()
                .zip(spec.d2.values())
                .map(|(v, d)| d * v.powf(spec.q_star - 1.0))
                .collect();
            ratios[2] = ratios[2].max(dual(term)? / (d2_sup_norm * m.powf(spec.q_star - 1.0)));
        }
    }
    let c = ratios.map(|r| r * opts.safety_factor);

    let admissible = |r: f64| {
        let (a, b) = smallness_terms(r, params, c, d1_eta_norm, d2_sup_norm, spec.tau, spec.q_star);
        a <= 0.5 && b < 0.5
    };
    let radius = if admissible(opts.radius_search_max) {
        opts.radius_search_max
    } else {
        let (mut lo, mut hi) = (0.0, opts.radius_search_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo == 0.0 {
            return Err(Error::NoAdmissibleRadius {
                search_max: opts.radius_search_max,
            });
        }
        lo
    };

    Ok(BallCertificate {
        c_star: c[0],
        c_2star: c[1],
        c_3star: c[2],
        radius,
        lambda0: lambda0_formula(radius, params.p, params.q, ctx.pert.g_norm),
        probes_used: opts.n_probes,
        safety_factor: opts.safety_factor,
        seed: opts.seed,
        d1_eta_norm,
        d2_sup_norm,
        g_norm: ctx.pert.g_norm,
    })
}

/// Energy
/// `I(u) = (1/p)∫(|∇u|^p + |u|^p) + (1/q)∫(|∇u|^q + |u|^q) − (1/2q)∫φ_u|u|^q − ∫(H(x,u) + λgu)`.
pub fn energy_i(u: &GridFunction, ctx: &SolverContext) -> Result<f64> {
    let params = &ctx.params;
    let grid = u.grid();
    let mut e = double_phase_energy(u, &DualVector::zeros(grid), params)?;
    if params.nonlocal_enabled {
        let rho: Vec<f64> = u.values().iter().map(|v| v.abs().powf(params.q)).collect();
        let phi = potential_from_density(grid, &rho);
        let coupling: f64 = grid
            .weights()
            .iter()
            .zip(&phi)
            .zip(&rho)
            .map(|((w, f), r)| w * f * r)
            .sum();
        e -= coupling / (2.0 * params.q);
    }
    let reaction: Vec<f64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &t)| ctx.spec.antiderivative(i, t) + params.lambda * ctx.pert.g.values()[i] * t)
        .collect();
    e -= weighted_sum(grid.weights(), &reaction);
    if !e.is_finite() {
        return Err(Error::NonFinite("energy"));
    }
    Ok(e)
}

/// Nodal representation of `I′(u)`.
pub fn grad_i(u: &GridFunction, ctx: &SolverContext) -> Result<DualVector> {
    let params = &ctx.params;
    let grid = u.grid();
    let bu = apply_b_vec(u, params)?;
    let q = params.q;
    let phi = if params.nonlocal_enabled {
        let rho: Vec<f64> = u.values().iter().map(|v| v.abs().powf(q)).collect();
        potential_from_density(grid, &rho)
    } else {
        vec![0.0; u.len()]
    };
    let coeffs = bu
        .coeffs()
        .iter()
        .zip(u.values())
        .enumerate()
        .map(|(i, (b, &t))| {
            b - phi[i] * crate::duality::signed_pow(t, q)
                - eval_h(&ctx.spec, i, t)
                - params.lambda * ctx.pert.g.values()[i]
        })
        .collect();
    DualVector::from_coeffs(grid, coeffs)
}

/// Probe estimate of `‖Bu − Tu‖_{W′}`: `sup_v |⟨Bu, v⟩ − ⟨Tu, v⟩| / ‖v‖`.
pub fn weak_residual(u: &GridFunction, ctx: &SolverContext) -> Result<f64> {
    let bu = apply_b_vec(u, &ctx.params)?;
    let tu = apply_t(u, &ctx.params, &ctx.spec, &ctx.pert)?;
    ctx.probes.dual_norm(&bu.checked_sub(&tu)?)
}
