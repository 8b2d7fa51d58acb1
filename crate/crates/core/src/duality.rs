//! The double-phase duality map `B: W → W′`,
//!
//! ```text
//! ⟨Bu, v⟩ = ∫ (|∇u|^{p−2}∇u·∇v + |u|^{p−2}uv) + ∫ (|∇u|^{q−2}∇u·∇v + |u|^{q−2}uv),
//! ```
//!
//! and its inverse. `B` is the derivative of the convex energy
//! `J_f(u) = (1/p)∫(|∇u|^p + |u|^p) + (1/q)∫(|∇u|^q + |u|^q) − ⟨f, u⟩` at `f = 0`, so
//! `B⁻¹ f` is the unique minimizer of `J_f`. The minimizer is computed by damped
//! descent along the direction preconditioned with the tridiagonal linearization of `B`
//! at the current iterate, with Armijo backtracking.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{sobolev_integral, sobolev_norm, DualVector, GridFunction, RadialGrid};
use crate::linalg::SymTridiagonal;
use crate::params::SolverParams;
use crate::probes::ProbeLibrary;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const ENERGY_RESOLUTION: f64 = 1e-12;

/// `|x|^{s−2} x`, finite at `x = 0` for every `s > 1`.
#[inline]
pub(crate) fn signed_pow(x: f64, s: f64) -> f64 {
    x.signum() * x.abs().powf(s - 1.0)
}

#[inline]
fn flux(x: f64, p: f64, q: f64) -> f64 {
    signed_pow(x, p) + signed_pow(x, q)
}

#[inline]
fn potential(x: f64, p: f64, q: f64) -> f64 {
    let a = x.abs();
    a.powf(p) / p + a.powf(q) / q
}

/// Derivative of [`flux`]; the singular branch for `s < 2` is clamped.
#[inline]
fn flux_derivative(x: f64, p: f64, q: f64) -> f64 {
    let term = |s: f64| {
        let a = if s < 2.0 { x.abs().max(1e-8) } else { x.abs() };
        (s - 1.0) * a.powf(s - 2.0)
    };
    term(p) + term(q)
}

/// `⟨Bu, v⟩`.
pub fn apply_b(u: &GridFunction, v: &GridFunction, params: &SolverParams) -> Result<f64> {
    u.same_grid(v)?;
    let (p, q) = (params.p, params.q);
    let grid = u.grid();
    let gu = u.cell_gradient();
    let gv = v.cell_gradient();
    let grad: f64 = gu
        .iter()
        .zip(&gv)
        .zip(grid.cell_volumes())
        .map(|((a, b), vol)| vol * flux(*a, p, q) * b)
        .sum();
    let mass: f64 = u
        .values()
        .iter()
        .zip(v.values())
        .zip(grid.weights())
        .map(|((a, b), w)| w * flux(*a, p, q) * b)
        .sum();
    Ok(grad + mass)
}

/// Unweighted gradient of `u ↦ (1/p)∫… + (1/q)∫…` with respect to nodal values.
fn energy_gradient(grid: &RadialGrid, values: &[f64], p: f64, q: f64) -> Vec<f64> {
    let h = grid.spacing();
    let mut out: Vec<f64> = values
        .iter()
        .zip(grid.weights())
        .map(|(u, w)| w * flux(*u, p, q))
        .collect();
    for (c, vol) in grid.cell_volumes().iter().enumerate() {
        let g = (values[c + 1] - values[c]) / h;
        let a = vol * flux(g, p, q) / h;
        out[c] -= a;
        out[c + 1] += a;
    }
    out
}

/// Nodal representation of `Bu`: `⟨apply_b_vec(u), v⟩ = ⟨Bu, v⟩` for every `v`.
pub fn apply_b_vec(u: &GridFunction, params: &SolverParams) -> Result<DualVector> {
    let grid = u.grid();
    let g = energy_gradient(grid, u.values(), params.p, params.q);
    let coeffs = g.iter().zip(grid.weights()).map(|(g, w)| g / w).collect();
    DualVector::from_coeffs(grid, coeffs)
}

fn energy_values(grid: &RadialGrid, values: &[f64], f: &[f64], p: f64, q: f64) -> f64 {
    let h = grid.spacing();
    let grad: f64 = values
        .windows(2)
        .zip(grid.cell_volumes())
        .map(|(w, vol)| vol * potential((w[1] - w[0]) / h, p, q))
        .sum();
    let local: f64 = values
        .iter()
        .zip(f)
        .zip(grid.weights())
        .map(|((u, f), w)| w * (potential(*u, p, q) - f * u))
        .sum();
    grad + local
}

/// Sum of the magnitudes of the terms of `J_f(u)`; sets the roundoff level of `J_f`.
fn energy_scale(grid: &RadialGrid, values: &[f64], f: &[f64], p: f64, q: f64) -> f64 {
    let h = grid.spacing();
    let grad: f64 = values
        .windows(2)
        .zip(grid.cell_volumes())
        .map(|(w, vol)| vol * potential((w[1] - w[0]) / h, p, q))
        .sum();
    let local: f64 = values
        .iter()
        .zip(f)
        .zip(grid.weights())
        .map(|((u, f), w)| w * (potential(*u, p, q) + (f * u).abs()))
        .sum();
    grad + local
}

/// `J_f(u + step·d) − J_f(u)` by Simpson's rule on the directional derivative.
#[allow(clippy::too_many_arguments)]
fn simpson_difference(
    grid: &RadialGrid,
    u: &[f64],
    dir: &[f64],
    step: f64,
    f: &[f64],
    p: f64,
    q: f64,
    slope0: f64,
) -> f64 {
    let derivative = |t: f64| {
        let x: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, v)| v + t * dir.get(i).copied().unwrap_or(0.0))
            .collect();
        energy_gradient(grid, &x, p, q)
            .iter()
            .zip(grid.weights())
            .zip(f)
            .zip(dir)
            .map(|(((g, w), fc), d)| (g - w * fc) * d)
            .sum::<f64>()
    };
    step / 6.0 * (slope0 + 4.0 * derivative(0.5 * step) + derivative(step))
}

/// `J_f(u) = (1/p)∫(|∇u|^p + |u|^p) + (1/q)∫(|∇u|^q + |u|^q) − ⟨f, u⟩`.
pub fn double_phase_energy(u: &GridFunction, f: &DualVector, params: &SolverParams) -> Result<f64> {
    u.grid().check_same(f.grid())?;
    Ok(energy_values(u.grid(), u.values(), f.coeffs(), params.p, params.q))
}

#[derive(Debug, Clone, Serialize)]
pub struct InversionReport {
    #[serde(skip)]
    pub solution: GridFunction,
    /// Probe estimate of `‖B u − f‖_{W′}` at the returned solution.
    pub residual: f64,
    pub iterations: usize,
    /// `J_f` at every accepted iterate, starting with the initial guess.
    pub energy_trace: Vec<f64>,
    /// Dual residual at every accepted iterate.
    pub residual_trace: Vec<f64>,
}

/// `B⁻¹ f` from a zero initial guess.
pub fn invert_b(f: &DualVector, params: &SolverParams, tol: f64) -> Result<InversionReport> {
    let probes = ProbeLibrary::new(f.grid(), params)?;
    invert_b_with(f, params, tol, &probes, None)
}

/// `B⁻¹ f` using a prebuilt probe library and an optional warm start.
///
/// Converges when twice the dual-residual estimate is at most `tol · max(1, ‖f‖)`, so the
/// tolerance is absolute for data of unit size and relative beyond. The value at `r_max`
/// is held at zero.
pub fn invert_b_with(
    f: &DualVector,
    params: &SolverParams,
    tol: f64,
    probes: &ProbeLibrary,
    initial: Option<&GridFunction>,
) -> Result<InversionReport> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let grid: &Arc<RadialGrid> = f.grid();
    grid.check_same(probes.grid())?;
    let (p, q) = (params.p, params.q);
    let n = grid.len();
    let free = n - 1;
    let h = grid.spacing();
    let weights = grid.weights();
    let f_coeffs = f.coeffs();

    let mut u: Vec<f64> = match initial {
        Some(u0) => {
            u0.grid().check_same(grid)?;
            u0.values().to_vec()
        }
        None => vec![0.0; n],
    };
    u[n - 1] = 0.0;

    // Unweighted gradient of J_f and its probe dual norm.
    let residual_at = |x: &[f64]| -> Result<(Vec<f64>, f64)> {
        let mut grad = energy_gradient(grid, x, p, q);
        for ((g, w), fc) in grad.iter_mut().zip(weights).zip(f_coeffs) {
            *g -= w * fc;
        }
        let nodal = grad.iter().zip(weights).map(|(g, w)| g / w).collect();
        let residual = probes.dual_norm(&DualVector::from_coeffs(grid, nodal)?)?;
        Ok((grad, residual))
    };
    let target = tol * probes.dual_norm(f)?.max(1.0);

    let mut energy = energy_values(grid, &u, f_coeffs, p, q);
    let mut energy_trace = vec![energy];
    let (mut grad, mut residual) = residual_at(&u)?;
    let mut residual_trace = vec![residual];
    let mut trial = vec![0.0; n];

    for iteration in 0..=params.max_inner {
        if 2.0 * residual <= target {
            return Ok(InversionReport {
                solution: GridFunction::from_values(grid, u)?,
                residual,
                iterations: iteration,
                energy_trace,
                residual_trace,
            });
        }
        if iteration == params.max_inner {
            break;
        }

        // Tridiagonal linearization on the free nodes, with a small shift that vanishes
        // as the residual does.
        let shift = 1e-3 * residual.min(1.0) + 1e-14;
        let mut hess = SymTridiagonal::zeros(free);
        for (c, vol) in grid.cell_volumes().iter().enumerate() {
            let g = (u[c + 1] - u[c]) / h;
            hess.add_edge(c, vol * (flux_derivative(g, p, q) + shift) / (h * h));
        }
        for i in 0..free {
            hess.diag[i] += weights[i] * (flux_derivative(u[i], p, q) + shift);
        }
        let rhs: Vec<f64> = grad[..free].iter().map(|g| -g).collect();
        let dir = hess.solve(&rhs);
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) || dir.iter().any(|d| !d.is_finite()) {
            break;
        }

        // Armijo on J_f; among sufficient-decrease steps the first that also does not
        // raise the residual is preferred.
        let scale = energy_scale(grid, &u, f_coeffs, p, q);
        let mut step = 1.0;
        let mut fallback: Option<(f64, f64, f64)> = None;
        let mut accepted: Option<(f64, f64, Vec<f64>, f64)> = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..free {
                trial[i] = u[i] + step * dir[i];
            }
            trial[n - 1] = 0.0;
            let e = energy_values(grid, &trial, f_coeffs, p, q);
            let bound = ARMIJO_C1 * step * slope;
            let delta = if !e.is_finite() {
                None
            } else if e - energy <= bound {
                Some(e - energy)
            } else if (e - energy).abs() <= ENERGY_RESOLUTION * scale {
                // Below the resolution of J the difference is recovered from directional
                // derivatives, which stay accurate as the gradient vanishes.
                Some(simpson_difference(grid, &u, &dir, step, f_coeffs, p, q, slope)).filter(|d| *d <= bound)
            } else {
                None
            };
            if let Some(delta) = delta {
                let (g, r) = residual_at(&trial)?;
                if r <= residual {
                    accepted = Some((delta, e, g, r));
                    break;
                }
                fallback.get_or_insert((step, delta, e));
            }
            step *= 0.5;
        }
        let (delta, e, g, r) = match (accepted, fallback) {
            (Some(a), _) => a,
            (None, Some((step, delta, e))) => {
                for i in 0..free {
                    trial[i] = u[i] + step * dir[i];
                }
                trial[n - 1] = 0.0;
                let (g, r) = residual_at(&trial)?;
                (delta, e, g, r)
            }
            (None, None) => break,
        };
        std::mem::swap(&mut u, &mut trial);
        energy = e;
        grad = g;
        residual = r;
        residual_trace.push(residual);
        let last = *energy_trace.last().unwrap();
        energy_trace.push(last + delta);
    }

    Err(Error::InnerNotConverged {
        iterations: energy_trace.len() - 1,
        residual: *residual_trace.last().unwrap_or(&f64::INFINITY),
        energy_trace,
    })
}

/// `⟨Bu₁ − Bu₂, u₁ − u₂⟩`, strictly positive for distinct inputs when `p, q ≥ 2`.
pub fn monotonicity_gap(u1: &GridFunction, u2: &GridFunction, params: &SolverParams) -> Result<f64> {
    u1.same_grid(u2)?;
    if u1.values() == u2.values() {
        return Err(Error::IdenticalInputs);
    }
    let d = u1.checked_sub(u2)?;
    Ok(apply_b(u1, &d, params)? - apply_b(u2, &d, params)?)
}

/// Which of the three norm regimes a function falls in, ordered as in the
/// coercivity estimate for `⟨Bv, v⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoercivityCase {
    /// `‖v‖_{W^{1,q}} ≥ 1`: bound `2^{1−p}‖v‖^p`.
    LargeQNorm,
    /// `‖v‖_{W^{1,q}} < 1 ≤ ‖v‖_{W^{1,p}}`: bound `2^{−p}‖v‖^p`.
    MixedNorms,
    /// Both norms below one: bound `2^{1−q}‖v‖^q`.
    SmallNorms,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoercivityWitness {
    pub case: CoercivityCase,
    /// `⟨Bv, v⟩`.
    pub pairing: f64,
    pub lower_bound: f64,
    pub p_norm: f64,
    pub q_norm: f64,
}

impl CoercivityWitness {
    pub fn holds(&self) -> bool {
        self.pairing >= self.lower_bound
    }
}

pub fn coercivity_witness(v: &GridFunction, params: &SolverParams) -> Result<CoercivityWitness> {
    let (p, q) = (params.p, params.q);
    let p_norm = sobolev_norm(v, p)?;
    let q_norm = sobolev_norm(v, q)?;
    let total = p_norm + q_norm;
    let (case, lower_bound) = if q_norm >= 1.0 {
        (CoercivityCase::LargeQNorm, 2f64.powf(1.0 - p) * total.powf(p))
    } else if p_norm >= 1.0 {
        (CoercivityCase::MixedNorms, 2f64.powf(-p) * total.powf(p))
    } else {
        (CoercivityCase::SmallNorms, 2f64.powf(1.0 - q) * total.powf(q))
    };
    // ⟨Bv, v⟩ equals the sum of the two Sobolev integrals exactly.
    let pairing = sobolev_integral(v, p)? + sobolev_integral(v, q)?;
    Ok(CoercivityWitness {
        case,
        pairing,
        lower_bound,
        p_norm,
        q_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_radial_grid, w_norm};
    use crate::probes::RandomFunctions;

    fn setup() -> (Arc<RadialGrid>, SolverParams) {
        (make_radial_grid(10.0, 401).unwrap(), SolverParams::default())
    }

    #[test]
    fn b_of_zero_is_zero() {
        let (grid, params) = setup();
        let v = GridFunction::from_fn(&grid, |r| (-r).exp());
        assert_eq!(apply_b(&GridFunction::zeros(&grid), &v, &params).unwrap(), 0.0);
        assert!(apply_b_vec(&GridFunction::zeros(&grid), &params)
            .unwrap()
            .coeffs()
            .iter()
            .all(|&c| c == 0.0));
    }

    #[test]
    fn self_pairing_is_sum_of_sobolev_powers() {
        let (grid, params) = setup();
        let mut gen = RandomFunctions::new(1);
        for _ in 0..10 {
            let u = gen.signed(&grid).scaled(gen.uniform(0.1, 5.0));
            let lhs = apply_b(&u, &u, &params).unwrap();
            let rhs = sobolev_norm(&u, params.p).unwrap().powf(params.p)
                + sobolev_norm(&u, params.q).unwrap().powf(params.q);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn vector_form_matches_pairing() {
        let (grid, params) = setup();
        let mut gen = RandomFunctions::new(2);
        for _ in 0..10 {
            let u = gen.signed(&grid);
            let v = gen.signed(&grid);
            let bu = apply_b_vec(&u, &params).unwrap();
            let a = bu.pairing(&v).unwrap();
            let b = apply_b(&u, &v, &params).unwrap();
            let scale = apply_b(&u, &u, &params).unwrap().abs() + a.abs();
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn energy_at_zero_and_without_load() {
        let (grid, params) = setup();
        let f = DualVector::from_density(&GridFunction::from_fn(&grid, |r| (-r).exp()));
        assert_eq!(double_phase_energy(&GridFunction::zeros(&grid), &f, &params).unwrap(), 0.0);
        let u = GridFunction::from_fn(&grid, |r| (-r * r).exp());
        let zero = DualVector::zeros(&grid);
        assert!(double_phase_energy(&u, &zero, &params).unwrap() > 0.0);
    }

    #[test]
    fn inverting_zero_returns_zero() {
        let (grid, params) = setup();
        let rep = invert_b(&DualVector::zeros(&grid), &params, 1e-10).unwrap();
        assert!(rep.solution.is_zero());
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let (grid, params) = setup();
        assert!(invert_b(&DualVector::zeros(&grid), &params, 0.0).is_err());
    }

    #[test]
    fn round_trip_recovers_source() {
        let (grid, params) = setup();
        let mut gen = RandomFunctions::new(3);
        for _ in 0..4 {
            let u0 = gen.signed(&grid);
            let f = apply_b_vec(&u0, &params).unwrap();
            let rep = invert_b(&f, &params, 1e-10).unwrap();
            let err = w_norm(&rep.solution.checked_sub(&u0).unwrap(), &params).unwrap();
            assert!(err <= 1e-6 * w_norm(&u0, &params).unwrap(), "err = {err}");
            assert!(rep.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn non_convergence_reports_trace() {
        let (grid, params) = setup();
        let params = SolverParams {
            max_inner: 1,
            ..params
        };
        let f = DualVector::from_density(&GridFunction::from_fn(&grid, |r| 50.0 * (-r).exp()));
        match invert_b(&f, &params, 1e-14) {
            Err(Error::InnerNotConverged { energy_trace, .. }) => assert!(!energy_trace.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn gap_is_symmetric_and_rejects_identical_inputs() {
        let (grid, params) = setup();
        let mut gen = RandomFunctions::new(4);
        let u1 = gen.signed(&grid);
        let u2 = gen.signed(&grid);
        let a = monotonicity_gap(&u1, &u2, &params).unwrap();
        let b = monotonicity_gap(&u2, &u1, &params).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-12 * a);
        assert!(matches!(
            monotonicity_gap(&u1, &u1, &params),
            Err(Error::IdenticalInputs)
        ));
        let zero = GridFunction::zeros(&grid);
        let gap = monotonicity_gap(&u1, &zero, &params).unwrap();
        let expected = sobolev_integral(&u1, params.p).unwrap() + sobolev_integral(&u1, params.q).unwrap();
        assert!((gap - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn coercivity_cases_are_selected_by_norm_size() {
        let (grid, params) = setup();
        let u = GridFunction::from_fn(&grid, |r| (-r * r).exp());
        let unit = u.scaled(1.0 / sobolev_norm(&u, params.q).unwrap());
        let big = coercivity_witness(&unit.scaled(2.0), &params).unwrap();
        assert_eq!(big.case, CoercivityCase::LargeQNorm);
        let small = coercivity_witness(&unit.scaled(1e-3), &params).unwrap();
        assert_eq!(small.case, CoercivityCase::SmallNorms);
        assert!(big.holds() && small.holds());
    }
}
