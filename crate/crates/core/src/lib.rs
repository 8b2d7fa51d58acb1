//! Numerical toolkit for radially symmetric positive solutions of the double-phase
//! problem with a Newtonian (Schrödinger–Poisson) coupling
//!
//! `−Δ_p u − Δ_q u + |u|^{p−2}u + |u|^{q−2}u = φ_u |u|^{q−2}u + h(x, u) + λg`,
//! `−Δφ = |u|^q` in `ℝ³`,
//!
//! on a truncated ball. Solutions are computed as limits of the monotone chain
//! `u_{k+1} = B⁻¹(T u_k)` from `u_0 = 0`.

pub mod duality;
pub mod error;
pub mod grid;
mod linalg;
pub mod params;
pub mod potential;
pub mod probes;
pub mod quadrature;
pub mod solver;
pub mod source;
pub mod verify;

pub use duality::{
    apply_b, apply_b_vec, coercivity_witness, double_phase_energy, invert_b, invert_b_with,
    monotonicity_gap, CoercivityCase, CoercivityWitness, InversionReport,
};
pub use error::{Error, Result};
pub use grid::{
    integrate, leq, make_radial_grid, neg_part, pos_part, sobolev_integral, sobolev_norm, w_norm,
    DualVector, GridFunction, RadialGrid,
};
pub use params::{ParamMode, SolverParams};
pub use potential::{
    d12_norm, radial_laplacian, solve_potential_grid3d, solve_potential_radial, CubeField,
    PotentialReport,
};
pub use probes::{ProbeLibrary, RandomFunctions};
pub use solver::{
    ball_certificate, ball_certificate_with, check_positivity, energy_i, grad_i, iterate,
    lambda0_formula, map_g, smallness_terms, weak_residual, BallCertificate, CertificateOptions, PositivityRecord,
    SolveReport, SolverContext,
};
pub use verify::{default_problem, run_suite, Check, SuiteSizes, VerifyReport};
pub use source::{
    apply_t, eval_h, lebesgue_norm, sup_norm, t_dual_bound, validate_growth, NonlinearityKind,
    NonlinearitySpec, PerturbationSpec, PiecewiseLinear, Profile, ValidationReport,
};
