use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which exponent range is accepted.
///
/// `Strict` requires `2 ≤ p < q < 3`, the range in which the double-phase operator is
/// strictly monotone with a well-conditioned linearization. `Relaxed` accepts the wider
/// `3/4 < p < q < 3` and only logs a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    #[default]
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub tau: f64,
    /// Dual-residual tolerance of each inner `B⁻¹` solve.
    pub tol_inner: f64,
    /// Relative step tolerance of the outer Picard iteration.
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// When false the Poisson coupling is dropped (the local `p&q` equation).
    pub nonlocal_enabled: bool,
    pub mode: ParamMode,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            p: 2.0,
            q: 2.5,
            lambda: 0.0,
            tau: 2.5,
            tol_inner: 1e-12,
            tol_outer: 1e-8,
            max_inner: 200,
            max_outer: 200,
            nonlocal_enabled: true,
            mode: ParamMode::Strict,
        }
    }
}

impl SolverParams {
    /// Critical Sobolev exponent `3p / (3 − p)`.
    pub fn q_star(&self) -> f64 {
        3.0 * self.p / (3.0 - self.p)
    }

    /// Integrability exponent of `d₁`: `6 / (6 − τ)`.
    pub fn eta(&self) -> f64 {
        6.0 / (6.0 - self.tau)
    }

    /// Lebesgue exponent of the perturbation `g`: `3q / (4q − 3)`.
    pub fn g_exponent(&self) -> f64 {
        3.0 * self.q / (4.0 * self.q - 3.0)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("p", self.p),
            ("q", self.q),
            ("lambda", self.lambda),
            ("tau", self.tau),
            ("tol_inner", self.tol_inner),
            ("tol_outer", self.tol_outer),
        ] {
            if !v.is_finite() {
                return Err(Error::param(field, "must be finite"));
            }
        }
        let p_min = match self.mode {
            ParamMode::Strict => 2.0,
            ParamMode::Relaxed => 0.75,
        };
        match self.mode {
            ParamMode::Strict if self.p < 2.0 => {
                return Err(Error::param("p", "2 ≤ p violated (strict mode)"));
            }
            ParamMode::Relaxed if self.p <= p_min => {
                return Err(Error::param("p", "3/4 < p violated"));
            }
            _ => {}
        }
        if self.p >= self.q {
            return Err(Error::param("q", "p < q violated"));
        }
        if self.q >= 3.0 {
            return Err(Error::param("q", "q < 3 violated"));
        }
        if self.tau < self.q {
            return Err(Error::param("tau", "q ≤ tau violated"));
        }
        if self.tau >= self.q_star() {
            return Err(Error::param("tau", "tau < q* violated"));
        }
        if self.lambda < 0.0 {
            return Err(Error::param("lambda", "lambda ≥ 0 violated"));
        }
        if self.tol_inner <= 0.0 {
            return Err(Error::param("tol_inner", "must be positive"));
        }
        if self.tol_outer <= 0.0 {
            return Err(Error::param("tol_outer", "must be positive"));
        }
        if self.max_inner == 0 {
            return Err(Error::param("max_inner", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(Error::param("max_outer", "must be positive"));
        }
        if self.mode == ParamMode::Relaxed && self.p < 2.0 {
            log::warn!(
                "relaxed mode with p = {} < 2: strict monotonicity of B may fail numerically",
                self.p
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message(params: &SolverParams) -> String {
        params.validate().unwrap_err().to_string()
    }

    #[test]
    fn defaults_are_valid() {
        let p = SolverParams::default();
        p.validate().unwrap();
        assert_eq!(p.q_star(), 6.0);
        assert!((p.eta() - 6.0 / 3.5).abs() < 1e-15);
        assert!((p.g_exponent() - 7.5 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn ordering_violations_name_the_constraint() {
        let bad = SolverParams {
            p: 2.5,
            q: 2.0,
            tau: 2.0,
            ..Default::default()
        };
        assert!(message(&bad).contains("p < q violated"));

        let base = SolverParams::default();
        let at_critical = SolverParams {
            tau: base.q_star(),
            ..base.clone()
        };
        assert!(message(&at_critical).contains("tau < q* violated"));

        let low_tau = SolverParams { tau: 2.2, ..base };
        assert!(message(&low_tau).contains("q ≤ tau"));
    }

    #[test]
    fn strict_and_relaxed_ranges() {
        let sub_quadratic = SolverParams {
            p: 1.5,
            q: 2.0,
            tau: 2.2,
            ..Default::default()
        };
        assert!(sub_quadratic.validate().is_err());
        let relaxed = SolverParams {
            mode: ParamMode::Relaxed,
            ..sub_quadratic
        };
        relaxed.validate().unwrap();

        let too_low = SolverParams {
            p: 0.7,
            q: 1.0,
            tau: 1.0,
            mode: ParamMode::Relaxed,
            ..Default::default()
        };
        assert!(too_low.validate().is_err());
        let q_too_big = SolverParams {
            q: 3.0,
            tau: 3.0,
            ..Default::default()
        };
        assert!(q_too_big.validate().is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        let p = SolverParams::default().with_lambda(-1.0);
        assert!(message(&p).contains("lambda"));
    }
}
