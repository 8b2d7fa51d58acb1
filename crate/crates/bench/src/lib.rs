//! Benchmark fixtures: the default problem at a given resolution, its certificate and a
//! converged solution.

use pqsp_core::{ball_certificate, verify, GridFunction, RandomFunctions, SolverContext, SolverParams};

pub const R_MAX: f64 = 20.0;
pub const SEED: u64 = 7;

pub struct Fixture {
    /// Context with `λ = λ₀/2`.
    pub ctx: SolverContext,
    pub sample: GridFunction,
}

pub fn fixture(n: usize) -> Fixture {
    let base = verify::default_problem(R_MAX, n, &SolverParams::default()).expect("default problem");
    let cert = ball_certificate(&base, 32).expect("certificate");
    let ctx = base.with_lambda(0.5 * cert.lambda0).with_certificate(cert);
    let sample = RandomFunctions::new(SEED).nonnegative(ctx.grid());
    Fixture { ctx, sample }
}
