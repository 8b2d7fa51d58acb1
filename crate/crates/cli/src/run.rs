//! Orchestration of the four run modes and report emission.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use pqsp_core::{
    ball_certificate_with, grad_i, iterate, run_suite, solve_potential_radial, weak_residual,
    BallCertificate, CertificateOptions, Error as CoreError, SolveReport, SolverContext, SuiteSizes,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, Mode, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by a successful run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config_hash: &'a str,
    seed: u64,
    mode: Mode,
    report: T,
}

/// SHA-256 of the fully resolved configuration in canonical JSON form.
pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration is serializable");
    hex::encode(Sha256::digest(canonical))
}

struct Writer {
    dir: PathBuf,
    hash: String,
    seed: u64,
    mode: Mode,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path, cfg: &RunConfig, mode: Mode) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            hash: config_hash(cfg),
            seed: cfg.seed,
            mode,
            files: Vec::new(),
        })
    }

    /// Write-temp-then-rename, so readers never observe a partial file.
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |source| CliError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, report: T) -> Result<(), CliError> {
        let env = Envelope {
            version: VERSION,
            config_hash: &self.hash,
            seed: self.seed,
            mode: self.mode,
            report,
        };
        let mut bytes = serde_json::to_vec_pretty(&env)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

fn certificate(cfg: &RunConfig, ctx: &SolverContext) -> Result<BallCertificate, CoreError> {
    ball_certificate_with(
        ctx,
        &CertificateOptions {
            n_probes: cfg.certificate.probes,
            seed: cfg.seed,
            safety_factor: cfg.certificate.safety_factor,
            radius_search_max: cfg.certificate.radius_search_max,
        },
    )
}

/// Certificate, tolerating its absence when `λ` is given explicitly.
fn certificate_for_solve(cfg: &RunConfig, ctx: &SolverContext) -> Result<Option<BallCertificate>, CliError> {
    match certificate(cfg, ctx) {
        Ok(c) => Ok(Some(c)),
        Err(e @ CoreError::NoAdmissibleRadius { .. }) if cfg.params.lambda.is_some() => {
            log::warn!("{e}; solving without a ball certificate");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn lambda_for(cfg: &RunConfig, cert: Option<&BallCertificate>) -> Result<f64, CliError> {
    match (cfg.params.lambda, cert) {
        (Some(l), _) => Ok(l),
        (None, Some(c)) => Ok(cfg.params.lambda_fraction() * c.lambda0),
        (None, None) => Err(CliError::Invalid(vec![
            "invalid parameter `lambda`: required when no certificate is available".into(),
        ])),
    }
}

fn solve_at(ctx: &SolverContext, cert: Option<&BallCertificate>, lambda: f64) -> Result<(SolverContext, SolveReport, bool), CliError> {
    let mut run = ctx.with_lambda(lambda);
    if let Some(c) = cert {
        run = run.with_certificate(c.clone());
    }
    match iterate(&run, None) {
        Ok(r) => Ok((run, r, true)),
        Err(CoreError::OuterNotConverged { report }) => Ok((run, *report, false)),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct Diagnostics {
    weak_residual: f64,
    grad_i_dual_norm: f64,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    certificate: Option<&'a BallCertificate>,
    diagnostics: Diagnostics,
    solve: &'a SolveReport,
}

fn solution_csv(report: &SolveReport, q: f64) -> Result<String, CliError> {
    let u = &report.solution;
    let phi = solve_potential_radial(u, q)?.phi;
    let mut s = String::from("r,u,phi\n");
    for ((r, u), f) in u.grid().nodes().iter().zip(u.values()).zip(phi.values()) {
        writeln!(s, "{r},{u},{f}").unwrap();
    }
    Ok(s)
}

fn convergence_csv(report: &SolveReport) -> String {
    let mut s = String::from("iteration,residual,norm,energy\n");
    for (k, (norm, energy)) in report.norm_trace.iter().zip(&report.energy_trace).enumerate() {
        let residual = match k {
            0 => String::new(),
            _ => report.outer_residuals[k - 1].to_string(),
        };
        writeln!(s, "{k},{residual},{norm},{energy}").unwrap();
    }
    s
}

fn run_solve(cfg: &RunConfig, w: &mut Writer) -> Result<String, CliError> {
    let ctx = cfg.build_context(cfg.grid.n)?;
    let cert = certificate_for_solve(cfg, &ctx)?;
    let lambda = lambda_for(cfg, cert.as_ref())?;
    let (run, report, converged) = solve_at(&ctx, cert.as_ref(), lambda)?;
    let diagnostics = Diagnostics {
        weak_residual: weak_residual(&report.solution, &run)?,
        grad_i_dual_norm: run.probes.dual_norm(&grad_i(&report.solution, &run)?)?,
    };
    if cfg.wants(Format::Csv) {
        w.write("solution.csv", solution_csv(&report, run.params.q)?.as_bytes())?;
        w.write("convergence.csv", convergence_csv(&report).as_bytes())?;
    }
    if cfg.wants(Format::Json) {
        w.json(
            "report.json",
            SolveOutput {
                certificate: cert.as_ref(),
                diagnostics,
                solve: &report,
            },
        )?;
    }
    let summary = format!(
        "λ = {lambda:e}: {} after {} iterations, ‖u*‖ = {:e}, max u* = {:e}",
        if converged { "converged" } else { "not converged" },
        report.iterations,
        report.norm_trace.last().copied().unwrap_or(0.0),
        report.positivity.max_value
    );
    if converged {
        Ok(summary)
    } else {
        Err(CliError::NotConverged(summary))
    }
}

fn run_certificate(cfg: &RunConfig, w: &mut Writer) -> Result<String, CliError> {
    let ctx = cfg.build_context(cfg.grid.n)?;
    let cert = certificate(cfg, &ctx)?;
    if cfg.wants(Format::Json) {
        w.json("certificate.json", &cert)?;
    }
    Ok(format!("R = {:e}, λ₀ = {:e}", cert.radius, cert.lambda0))
}

#[derive(Serialize)]
struct SweepSummary {
    lambdas: Vec<f64>,
    final_norms: Vec<f64>,
    converged: Vec<bool>,
    /// Soft check: final norms nondecreasing in `λ`.
    norms_nondecreasing: bool,
    certificate: Option<BallCertificate>,
}

fn run_sweep(cfg: &RunConfig, w: &mut Writer) -> Result<String, CliError> {
    let ctx = cfg.build_context(cfg.grid.n)?;
    let cert = if cfg.sweep.lambda_values.is_empty() {
        Some(certificate(cfg, &ctx)?)
    } else {
        certificate_for_solve(cfg, &ctx)?
    };
    let lambdas: Vec<f64> = if cfg.sweep.lambda_values.is_empty() {
        let l0 = cert.as_ref().map(|c| c.lambda0).unwrap_or(0.0);
        cfg.sweep.lambda_fractions.iter().map(|f| f * l0).collect()
    } else {
        cfg.sweep.lambda_values.clone()
    };
    let runs: Vec<(SolveReport, bool)> = lambdas
        .par_iter()
        .map(|&l| solve_at(&ctx, cert.as_ref(), l).map(|(_, r, ok)| (r, ok)))
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("lambda,final_norm,iterations,positive\n");
    for (k, (l, (report, _))) in lambdas.iter().zip(&runs).enumerate() {
        if cfg.wants(Format::Json) {
            w.json(&format!("report-{k:03}.json"), report)?;
        }
        let norm = report.norm_trace.last().copied().unwrap_or(0.0);
        writeln!(csv, "{l},{norm},{},{}", report.iterations, report.positivity.passed).unwrap();
    }
    if cfg.wants(Format::Csv) {
        w.write("sweep-summary.csv", csv.as_bytes())?;
    }

    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]));
    let final_norms: Vec<f64> = runs.iter().map(|(r, _)| *r.norm_trace.last().unwrap()).collect();
    let nondecreasing = order.windows(2).all(|p| final_norms[p[0]] <= final_norms[p[1]]);
    if !nondecreasing {
        log::warn!("final norms are not nondecreasing in λ");
    }
    let converged: Vec<bool> = runs.iter().map(|(_, ok)| *ok).collect();
    if cfg.wants(Format::Json) {
        w.json(
            "sweep.json",
            SweepSummary {
                lambdas: lambdas.clone(),
                final_norms,
                converged: converged.clone(),
                norms_nondecreasing: nondecreasing,
                certificate: cert,
            },
        )?;
    }
    let summary = format!(
        "{} λ values, {} converged, norms nondecreasing: {nondecreasing}",
        lambdas.len(),
        converged.iter().filter(|c| **c).count()
    );
    if converged.iter().all(|c| *c) {
        Ok(summary)
    } else {
        Err(CliError::NotConverged(summary))
    }
}

fn run_verify(cfg: &RunConfig, w: &mut Writer) -> Result<String, CliError> {
    let build = |n: usize| cfg.build_context(n).map_err(|e| CoreError::InvalidArgument(e.to_string()));
    let report = run_suite(&build, cfg.grid.n, cfg.seed, SuiteSizes::default())?;
    if cfg.wants(Format::Json) {
        w.json("verify.json", &report)?;
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let summary = format!(
        "{} of {} checks passed",
        report.checks.len() - failed.len(),
        report.checks.len()
    );
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::PropertyFailure(format!("{summary}; failed: {}", failed.join(", "))))
    }
}

/// Executes `cfg.mode`, writing reports under `out`.
///
/// On non-convergence or property failure the reports are still written before the
/// error is returned.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let mut w = Writer::new(out, cfg, cfg.mode)?;
    let result = match cfg.mode {
        Mode::Solve => run_solve(cfg, &mut w),
        Mode::Verify => run_verify(cfg, &mut w),
        Mode::Certificate => run_certificate(cfg, &mut w),
        Mode::Sweep => run_sweep(cfg, &mut w),
    };
    result.map(|summary| RunOutcome { files: w.files, summary })
}
