//! Run configuration: a TOML file with every field optional except where noted.
//!
//! ```toml
//! mode = "solve"            # solve | verify | certificate | sweep
//! seed = 42
//!
//! [grid]
//! r_max = 20.0
//! n = 2001
//!
//! [params]
//! p = 2.0
//! q = 2.5
//! tau = 2.5
//! # lambda = 0.05         # absolute; otherwise lambda_fraction · λ₀
//! lambda_fraction = 0.5
//!
//! [nonlinearity]
//! kind = "remark11"         # remark11 | power | table
//!
//! [perturbation]
//! g_kind = "gaussian"       # gaussian | compact-bump | table
//! amplitude = 1.0
//!
//! [sweep]
//! lambda_fractions = [0.25, 0.5, 1.0]
//!
//! [output]
//! directory = "pqsp-output"
//! formats = ["json", "csv"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pqsp_core::{
    make_radial_grid, NonlinearitySpec, ParamMode, PerturbationSpec, Profile, RadialGrid,
    SolverContext, SolverParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Solve,
    Verify,
    Certificate,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { r_max: 20.0, n: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub tau: Option<f64>,
    /// Absolute `λ`; takes precedence over `lambda_fraction`.
    pub lambda: Option<f64>,
    /// `λ = lambda_fraction · λ₀` from the ball certificate.
    pub lambda_fraction: Option<f64>,
    pub tol_inner: Option<f64>,
    pub tol_outer: Option<f64>,
    pub max_inner: Option<usize>,
    pub max_outer: Option<usize>,
    pub nonlocal_enabled: Option<bool>,
    pub mode: Option<ParamMode>,
}

pub const DEFAULT_LAMBDA_FRACTION: f64 = 0.5;

impl ParamsConfig {
    /// Solver parameters with defaults filled in; `tau` defaults to `q`.
    pub fn resolve(&self) -> SolverParams {
        let d = SolverParams::default();
        let q = self.q.unwrap_or(d.q);
        SolverParams {
            p: self.p.unwrap_or(d.p),
            q,
            lambda: self.lambda.unwrap_or(0.0),
            tau: self.tau.unwrap_or(q),
            tol_inner: self.tol_inner.unwrap_or(d.tol_inner),
            tol_outer: self.tol_outer.unwrap_or(d.tol_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            nonlocal_enabled: self.nonlocal_enabled.unwrap_or(d.nonlocal_enabled),
            mode: self.mode.unwrap_or(d.mode),
        }
    }

    pub fn lambda_fraction(&self) -> f64 {
        self.lambda_fraction.unwrap_or(DEFAULT_LAMBDA_FRACTION)
    }
}

/// Two-column `t, h` (or `r, value`) CSV file; a header line is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Remark11,
    Power {
        d1: Profile,
        d2: Profile,
    },
    Table {
        #[serde(default)]
        t: Vec<f64>,
        #[serde(default)]
        h: Vec<f64>,
        /// Alternative to inline `t`, `h`.
        file: Option<PathBuf>,
        #[serde(default = "unit_profile")]
        envelope: Profile,
        /// Declared growth coefficients; validated by sampling.
        d1: Profile,
        d2: Profile,
    },
}

fn unit_profile() -> Profile {
    Profile::Constant { value: 1.0 }
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig::Remark11
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GKind {
    #[default]
    Gaussian,
    CompactBump,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    pub g_kind: GKind,
    pub amplitude: f64,
    /// Gaussian width.
    pub width: f64,
    /// Compact-bump radius.
    pub radius: f64,
    /// Table breakpoints and values (scaled by `amplitude`).
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub file: Option<PathBuf>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            g_kind: GKind::Gaussian,
            amplitude: 1.0,
            width: 1.0,
            radius: 2.0,
            r: Vec::new(),
            values: Vec::new(),
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Absolute `λ` values; take precedence over `lambda_fractions`.
    pub lambda_values: Vec<f64>,
    pub lambda_fractions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambda_values: Vec::new(),
            lambda_fractions: vec![0.25, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("pqsp-output"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    pub probes: usize,
    pub safety_factor: f64,
    pub radius_search_max: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        let d = pqsp_core::CertificateOptions::default();
        CertificateConfig {
            probes: d.n_probes,
            safety_factor: d.safety_factor,
            radius_search_max: d.radius_search_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub nonlinearity: NonlinearityConfig,
    pub perturbation: PerturbationConfig,
    pub certificate: CertificateConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::default(),
            seed: DEFAULT_SEED,
            grid: GridConfig::default(),
            params: ParamsConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            perturbation: PerturbationConfig::default(),
            certificate: CertificateConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Reads two numeric columns; lines that do not parse as numbers are skipped only
/// before the first data row.
fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.len() == 2)
            .then(|| Some((cols[0].parse::<f64>().ok()?, cols[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some((x, y)) => {
                a.push(x);
                b.push(y);
            }
            None if a.is_empty() => continue,
            None => return Err(format!("{}:{}: expected two numbers", path.display(), lineno + 1)),
        }
    }
    Ok((a, b))
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Invalid(vec![e.to_string()]))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let NonlinearityConfig::Table { file: Some(f), .. } = &mut self.nonlinearity {
            fix(f);
        }
        if let Some(f) = &mut self.perturbation.file {
            fix(f);
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        self.params.resolve()
    }

    /// Every validation problem, each naming its field.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errors = Vec::new();
        if let Err(e) = make_radial_grid(self.grid.r_max, self.grid.n) {
            errors.push(format!("grid: {e}"));
        }
        let params = self.solver_params();
        if let Err(e) = params.validate() {
            errors.push(e.to_string());
        }
        if let Some(f) = self.params.lambda_fraction {
            if !(f >= 0.0 && f.is_finite()) {
                errors.push("invalid parameter `lambda_fraction`: must be finite and ≥ 0".into());
            }
        }
        if self.sweep.lambda_values.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            errors.push("invalid parameter `sweep.lambda_values`: entries must be finite and ≥ 0".into());
        }
        if self.sweep.lambda_fractions.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            errors.push("invalid parameter `sweep.lambda_fractions`: entries must be finite and ≥ 0".into());
        }
        if self.mode == Mode::Sweep && self.sweep.lambda_values.is_empty() && self.sweep.lambda_fractions.is_empty() {
            errors.push("invalid parameter `sweep`: no λ values given".into());
        }
        if self.certificate.probes < 32 {
            errors.push("invalid parameter `certificate.probes`: at least 32 required".into());
        }
        if !(self.certificate.safety_factor >= 1.0) {
            errors.push("invalid parameter `certificate.safety_factor`: must be ≥ 1".into());
        }
        if let NonlinearityConfig::Table { file: Some(f), .. } = &self.nonlinearity {
            if !f.is_file() {
                errors.push(format!("nonlinearity.file: {} does not exist", f.display()));
            }
        }
        if let Some(f) = &self.perturbation.file {
            if !f.is_file() {
                errors.push(format!("perturbation.file: {} does not exist", f.display()));
            }
        }
        if errors.is_empty() {
            // Descriptor errors only make sense once the grid and exponents are valid.
            if let Err(e) = self.build_context(self.grid.n) {
                errors.push(e.to_string());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errors))
        }
    }

    fn nonlinearity(&self, grid: &Arc<RadialGrid>, params: &SolverParams) -> Result<NonlinearitySpec, CliError> {
        let field = |e: pqsp_core::Error| CliError::Invalid(vec![format!("nonlinearity: {e}")]);
        match &self.nonlinearity {
            NonlinearityConfig::Remark11 => Ok(NonlinearitySpec::remark11(grid, params)),
            NonlinearityConfig::Power { d1, d2 } => NonlinearitySpec::power(grid, params, d1, d2).map_err(field),
            NonlinearityConfig::Table {
                t,
                h,
                file,
                envelope,
                d1,
                d2,
            } => {
                let (t, h) = match file {
                    Some(f) => read_table(f).map_err(|e| CliError::Invalid(vec![format!("nonlinearity.file: {e}")]))?,
                    None => (t.clone(), h.clone()),
                };
                NonlinearitySpec::table(grid, params, t, h, envelope, d1, d2).map_err(field)
            }
        }
    }

    fn perturbation(&self, grid: &Arc<RadialGrid>, params: &SolverParams) -> Result<PerturbationSpec, CliError> {
        let p = &self.perturbation;
        let profile = match p.g_kind {
            GKind::Gaussian => Profile::Gaussian {
                amplitude: p.amplitude,
                width: p.width,
            },
            GKind::CompactBump => Profile::CompactBump {
                amplitude: p.amplitude,
                radius: p.radius,
            },
            GKind::Table => {
                let (r, values) = match &p.file {
                    Some(f) => read_table(f).map_err(|e| CliError::Invalid(vec![format!("perturbation.file: {e}")]))?,
                    None => (p.r.clone(), p.values.clone()),
                };
                Profile::Table {
                    r,
                    values: values.iter().map(|v| p.amplitude * v).collect(),
                }
            }
        };
        PerturbationSpec::from_profile(grid, &profile, params)
            .map_err(|e| CliError::Invalid(vec![format!("perturbation: {e}")]))
    }

    /// Problem on a grid with `n` nodes; `λ` is left at the configured absolute value.
    pub fn build_context(&self, n: usize) -> Result<SolverContext, CliError> {
        let params = self.solver_params();
        let grid = make_radial_grid(self.grid.r_max, n).map_err(|e| CliError::Invalid(vec![format!("grid: {e}")]))?;
        let spec = self.nonlinearity(&grid, &params)?;
        let pert = self.perturbation(&grid, &params)?;
        SolverContext::new(params, spec, pert).map_err(|e| CliError::Invalid(vec![e.to_string()]))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

/// Reads and validates a configuration file. Relative table paths resolve against the
/// file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(vec![format!("{}: {e}", path.display())]))?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::from_toml(&text, base)
}
