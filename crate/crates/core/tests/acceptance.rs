//! Acceptance suite. Runs every criterion at its stated tolerance and sample size, prints
//! one PASS/FAIL line per criterion, and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pqsp_core::verify::{self, Check};
use pqsp_core::*;

const SEED: u64 = 20_240_601;
const N: usize = 2001;
const R_MAX: f64 = 20.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_check(c: Check) -> Outcome {
    Outcome {
        passed: c.passed,
        detail: c.detail,
    }
}

fn within(limit: Duration, elapsed: Duration, mut o: Outcome) -> Outcome {
    if elapsed > limit {
        o.passed = false;
    }
    o.detail = format!("{} [{:.2?} of {:?}]", o.detail, elapsed, limit);
    o
}

struct Problem {
    ctx: SolverContext,
    cert: BallCertificate,
}

impl Problem {
    fn lambda(&self) -> f64 {
        0.5 * self.cert.lambda0
    }
}

fn problem(n: usize) -> Result<SolverContext> {
    verify::default_problem(R_MAX, n, &SolverParams::default())
}

fn c1(_: &Problem) -> Result<Outcome> {
    let grid = make_radial_grid(R_MAX, N)?;
    let start = Instant::now();
    let c = verify::potential_nonnegativity(&grid, 2.5, SEED, 200)?;
    Ok(within(Duration::from_secs(10), start.elapsed(), from_check(c)))
}

fn c2(_: &Problem) -> Result<Outcome> {
    let grid = make_radial_grid(R_MAX, N)?;
    Ok(from_check(verify::potential_homogeneity(&grid, SEED, 1e-12)?))
}

fn c3(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::potential_bound(p.ctx.grid(), &p.ctx.params, SEED, 200)?))
}

fn c4(_: &Problem) -> Result<Outcome> {
    let start = Instant::now();
    let c = verify::unit_ball_check(1e-3, 0.05)?;
    Ok(within(Duration::from_secs(60), start.elapsed(), from_check(c)))
}

fn c5(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::strict_monotonicity(p.ctx.grid(), &p.ctx.params, SEED, 500)?))
}

fn c6(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::invertibility(p.ctx.grid(), &p.ctx.params, SEED, 20, 1e-5)?))
}

fn c7(p: &Problem) -> Result<Outcome> {
    let ctx = p.ctx.with_lambda(p.lambda());
    Ok(from_check(verify::gradient_consistency(&ctx, SEED, 20, 1e-5)?))
}

fn c8(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::coercivity(p.ctx.grid(), &p.ctx.params, SEED, 200)?))
}

fn c9(p: &Problem) -> Result<Outcome> {
    let ctx = p.ctx.with_lambda(p.lambda());
    Ok(from_check(verify::order_preservation(&ctx, SEED, 100, 10)?))
}

fn c10(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::ball_invariance(&p.ctx, &p.cert)?))
}

fn c11(p: &Problem) -> Result<Outcome> {
    let start = Instant::now();
    let (c, rep) = verify::end_to_end(&p.ctx, &p.cert, p.lambda())?;
    let mut o = from_check(c);
    if rep.iterations >= 200 {
        o.passed = false;
    }
    Ok(within(Duration::from_secs(300), start.elapsed(), o))
}

fn c12(p: &Problem) -> Result<Outcome> {
    let fine = problem(2 * N - 1)?;
    Ok(from_check(verify::refinement(&p.ctx, &fine, p.lambda(), 0.02)?))
}

fn c13(p: &Problem) -> Result<Outcome> {
    Ok(from_check(verify::degenerate_mode(&p.ctx, p.lambda())?))
}

fn main() -> ExitCode {
    let ctx = problem(N).expect("default problem");
    let cert = verify::certificate(&ctx, SEED).expect("ball certificate");
    let p = Problem { ctx, cert };

    let criteria: [(&str, fn(&Problem) -> Result<Outcome>); 13] = [
        ("potential nonnegativity", c1),
        ("potential q-homogeneity", c2),
        ("potential bound stability", c3),
        ("unit-ball potential oracle", c4),
        ("strict monotonicity of B", c5),
        ("invertibility of B", c6),
        ("gradient consistency", c7),
        ("coercivity", c8),
        ("order preservation of T", c9),
        ("ball invariance", c10),
        ("end-to-end solve", c11),
        ("grid refinement", c12),
        ("degenerate mode", c13),
    ];

    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run(&p).unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
