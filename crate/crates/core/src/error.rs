use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{field}`: {message}")]
    InvalidParam { field: &'static str, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("monotonicity gap is undefined for identical inputs")]
    IdenticalInputs,

    #[error("3-D oracle grid of {n}^3 points exceeds the {max}^3 limit")]
    OracleTooLarge { n: usize, max: usize },

    #[error("growth bound violated at node {node}, t = {t:e} (excess {violation:e})")]
    GrowthViolation { node: usize, t: f64, violation: f64 },

    #[error("nonlinearity is not nondecreasing at node {node} between t = {t_lo:e} and t = {t_hi:e}")]
    NotMonotone { node: usize, t_lo: f64, t_hi: f64 },

    #[error("inverse of B did not converge in {iterations} iterations (residual {residual:e})")]
    InnerNotConverged {
        iterations: usize,
        residual: f64,
        energy_trace: Vec<f64>,
    },

    #[error("Picard iteration did not converge in {} iterations", .report.iterations)]
    OuterNotConverged { report: Box<SolveReport> },

    #[error("no admissible ball radius in (0, {search_max}]")]
    NoAdmissibleRadius { search_max: f64 },
}

impl Error {
    pub(crate) fn param(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            message: message.into(),
        }
    }
}
