//! The right-hand side operator
//!
//! ```text
//! ⟨Tu, v⟩ = ∫ (φ_{u⁺} |u⁺|^{q−2} u⁺ + h(x, u⁺) + λ g(x)) v dx,
//! ```
//!
//! the registry of admissible nonlinearities `h`, and the perturbation `g`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pos_part, w_norm, DualVector, GridFunction, RadialGrid};
use crate::params::SolverParams;
use crate::potential::potential_from_density;
use crate::solver::BallCertificate;

/// Radial coefficient profile used to declare `d₁`, `d₂`, envelopes and `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Constant { value: f64 },
    /// `amplitude · exp(−(r / width)²)`
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude / (1 + r²)`
    Lorentzian { amplitude: f64 },
    /// `amplitude · (1 − (r/radius)²)²` inside `radius`, zero outside.
    CompactBump { amplitude: f64, radius: f64 },
    /// Piecewise-linear through `(r, values)`, constant beyond the ends.
    Table { r: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Constant { value: 0.0 }
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<GridFunction> {
        let values: Vec<f64> = match self {
            Profile::Constant { value } => vec![*value; grid.len()],
            Profile::Gaussian { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidArgument("gaussian width must be positive".into()));
                }
                grid.nodes()
                    .iter()
                    .map(|r| amplitude * (-(r / width).powi(2)).exp())
                    .collect()
            }
            Profile::Lorentzian { amplitude } => {
                grid.nodes().iter().map(|r| amplitude / (1.0 + r * r)).collect()
            }
            Profile::CompactBump { amplitude, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument("bump radius must be positive".into()));
                }
                grid.nodes()
                    .iter()
                    .map(|r| {
                        let x = r / radius;
                        if x < 1.0 {
                            amplitude * (1.0 - x * x).powi(2)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            Profile::Table { r, values } => {
                let table = PiecewiseLinear::new(r.clone(), values.clone())?;
                grid.nodes().iter().map(|&x| table.eval(x)).collect()
            }
        };
        GridFunction::from_values(grid, values)
    }
}

/// Piecewise-linear function through sorted breakpoints, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidArgument(
                "table needs at least two points and matching lengths".into(),
            ));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("table"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("table abscissae must increase strictly".into()));
        }
        Ok(PiecewiseLinear { x, y })
    }

    fn segment(&self, t: f64) -> usize {
        self.x.partition_point(|&v| v <= t).clamp(1, self.x.len() - 1) - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.segment(t);
        let s = (t - self.x[k]) / (self.x[k + 1] - self.x[k]);
        self.y[k] + s * (self.y[k + 1] - self.y[k])
    }

    /// `∫_{x₀}^t` of the interpolant, for `t ≥ x₀`.
    pub fn integral_from_start(&self, t: f64) -> f64 {
        let n = self.x.len();
        let mut acc = 0.0;
        for k in 0..n - 1 {
            let (a, b) = (self.x[k], self.x[k + 1]);
            if t <= a {
                return acc;
            }
            let end = t.min(b);
            acc += 0.5 * (self.y[k] + self.eval(end)) * (end - a);
        }
        if t > self.x[n - 1] {
            acc += self.y[n - 1] * (t - self.x[n - 1]);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// `h(x, t) = |t|^{q*−1} / (1 + |x|²)`.
    Remark11,
    /// `h(x, t) = d₁(x) t^{τ−1} + d₂(x) t^{q*−1}` for `t ≥ 0`.
    Power,
    /// `h(x, t) = envelope(x) · table(t)`, validated nondecreasing at load.
    Table {
        table: PiecewiseLinear,
        envelope: GridFunction,
    },
}

/// An admissible nonlinearity `h` together with the majorant
/// `|h(x,t)| ≤ d₁(x)|t|^{τ−1} + d₂(x)|t|^{q*−1}` it is declared to satisfy.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub d1: GridFunction,
    pub d2: GridFunction,
    pub tau: f64,
    pub q_star: f64,
}

fn nonnegative(f: &GridFunction, what: &'static str) -> Result<()> {
    if f.min_value() < 0.0 {
        return Err(Error::InvalidArgument(format!("{what} must be nonnegative")));
    }
    Ok(())
}

impl NonlinearitySpec {
    pub fn remark11(grid: &Arc<RadialGrid>, params: &SolverParams) -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::Remark11,
            d1: GridFunction::zeros(grid),
            d2: GridFunction::from_fn(grid, |r| 1.0 / (1.0 + r * r)),
            tau: params.tau,
            q_star: params.q_star(),
        }
    }

    pub fn power(
        grid: &Arc<RadialGrid>,
        params: &SolverParams,
        d1: &Profile,
        d2: &Profile,
    ) -> Result<Self> {
        let d1 = d1.sample(grid)?;
        let d2 = d2.sample(grid)?;
        nonnegative(&d1, "d1")?;
        nonnegative(&d2, "d2")?;
        Ok(NonlinearitySpec {
            kind: NonlinearityKind::Power,
            d1,
            d2,
            tau: params.tau,
            q_star: params.q_star(),
        })
    }

    /// `h ≡ 0`.
    pub fn zero(grid: &Arc<RadialGrid>, params: &SolverParams) -> Self {
        Self::power(grid, params, &Profile::zero(), &Profile::zero()).expect("zero profiles are valid")
    }

    pub fn table(
        grid: &Arc<RadialGrid>,
        params: &SolverParams,
        t: Vec<f64>,
        h: Vec<f64>,
        envelope: &Profile,
        d1: &Profile,
        d2: &Profile,
    ) -> Result<Self> {
        let table = PiecewiseLinear::new(t, h)?;
        if table.x[0] != 0.0 {
            return Err(Error::InvalidArgument("table must start at t = 0".into()));
        }
        if table.y[0] < 0.0 {
            return Err(Error::InvalidArgument("table values must be nonnegative".into()));
        }
        if let Some(k) = (0..table.y.len() - 1).find(|&k| table.y[k + 1] < table.y[k]) {
            return Err(Error::NotMonotone {
                node: 0,
                t_lo: table.x[k],
                t_hi: table.x[k + 1],
            });
        }
        let envelope = envelope.sample(grid)?;
        nonnegative(&envelope, "envelope")?;
        let d1 = d1.sample(grid)?;
        let d2 = d2.sample(grid)?;
        nonnegative(&d1, "d1")?;
        nonnegative(&d2, "d2")?;
        Ok(NonlinearitySpec {
            kind: NonlinearityKind::Table { table, envelope },
            d1,
            d2,
            tau: params.tau,
            q_star: params.q_star(),
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.d1.grid()
    }

    /// `H(x, t) = ∫₀^t h(x, s) ds`, in closed form for every registry kind.
    pub fn antiderivative(&self, node: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let d1 = self.d1.values()[node];
        let d2 = self.d2.values()[node];
        match &self.kind {
            NonlinearityKind::Remark11 => d2 * t.powf(self.q_star) / self.q_star,
            NonlinearityKind::Power => {
                d1 * t.powf(self.tau) / self.tau + d2 * t.powf(self.q_star) / self.q_star
            }
            NonlinearityKind::Table { table, envelope } => {
                envelope.values()[node] * table.integral_from_start(t)
            }
        }
    }

    /// Declared majorant `d₁|t|^{τ−1} + d₂|t|^{q*−1}`.
    pub fn growth_bound(&self, node: usize, t: f64) -> f64 {
        let a = t.abs();
        self.d1.values()[node] * a.powf(self.tau - 1.0) + self.d2.values()[node] * a.powf(self.q_star - 1.0)
    }
}

/// `h(x_i, t)`; zero for `t < 0`.
pub fn eval_h(spec: &NonlinearitySpec, node: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d1 = spec.d1.values()[node];
    let d2 = spec.d2.values()[node];
    match &spec.kind {
        NonlinearityKind::Remark11 => d2 * t.powf(spec.q_star - 1.0),
        NonlinearityKind::Power => d1 * t.powf(spec.tau - 1.0) + d2 * t.powf(spec.q_star - 1.0),
        NonlinearityKind::Table { table, envelope } => envelope.values()[node] * table.eval(t),
    }
}

/// Discrete `L^s` norm `(∫ |f|^s)^{1/s}`.
pub fn lebesgue_norm(f: &GridFunction, s: f64) -> f64 {
    let sum: f64 = f
        .values()
        .iter()
        .zip(f.grid().weights())
        .map(|(v, w)| w * v.abs().powf(s))
        .sum();
    sum.powf(1.0 / s)
}

pub fn sup_norm(f: &GridFunction) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Largest `h − majorant` over the sample ladder; zero or negative on success.
    pub max_violation: f64,
    pub samples: usize,
    pub monotone: bool,
    pub d1_eta_norm: f64,
    pub d2_sup_norm: f64,
}

/// Checks the sign condition, monotonicity in `t`, and the growth bound on a
/// log-spaced ladder `t ∈ [1e−6, 1e6]` at every node.
pub fn validate_growth(spec: &NonlinearitySpec, params: &SolverParams, n_samples: usize) -> Result<ValidationReport> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "growth validation needs at least 100 samples, got {n_samples}"
        )));
    }
    let ladder: Vec<f64> = (0..n_samples)
        .map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / (n_samples - 1) as f64))
        .collect();
    let mut max_violation = f64::NEG_INFINITY;
    let mut witness: Option<(usize, f64, f64)> = None;
    for node in 0..spec.grid().len() {
        let (mut prev, mut prev_t) = (0.0, 0.0);
        for &t in &ladder {
            if eval_h(spec, node, -t) != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "h(x, t) must vanish for t < 0 (node {node}, t = {t:e})"
                )));
            }
            let h = eval_h(spec, node, t);
            if h < prev {
                return Err(Error::NotMonotone {
                    node,
                    t_lo: prev_t,
                    t_hi: t,
                });
            }
            (prev, prev_t) = (h, t);
            let bound = spec.growth_bound(node, t);
            let excess = h.abs() - bound;
            if excess > max_violation {
                max_violation = excess;
            }
            if excess > 1e-12 * bound.max(f64::MIN_POSITIVE) && witness.map_or(true, |(_, _, e)| excess > e) {
                witness = Some((node, t, excess));
            }
        }
    }
    if let Some((node, t, violation)) = witness {
        return Err(Error::GrowthViolation { node, t, violation });
    }
    Ok(ValidationReport {
        max_violation: max_violation.max(0.0),
        samples: n_samples,
        monotone: true,
        d1_eta_norm: lebesgue_norm(&spec.d1, params.eta()),
        d2_sup_norm: sup_norm(&spec.d2),
    })
}

/// The nonnegative perturbation `g ≢ 0` and its `L^{3q/(4q−3)}` norm.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    pub g: GridFunction,
    pub g_norm: f64,
}

impl PerturbationSpec {
    pub fn new(g: GridFunction, params: &SolverParams) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::NonFinite("perturbation"));
        }
        if g.min_value() < 0.0 {
            return Err(Error::InvalidArgument("g must be nonnegative".into()));
        }
        if g.is_zero() {
            return Err(Error::InvalidArgument("g must not vanish identically".into()));
        }
        let g_norm = lebesgue_norm(&g, params.g_exponent());
        Ok(PerturbationSpec { g, g_norm })
    }

    pub fn from_profile(grid: &Arc<RadialGrid>, profile: &Profile, params: &SolverParams) -> Result<Self> {
        Self::new(profile.sample(grid)?, params)
    }

    /// `g(r) = amplitude · exp(−r²)`.
    pub fn gaussian(grid: &Arc<RadialGrid>, amplitude: f64, params: &SolverParams) -> Result<Self> {
        Self::from_profile(
            grid,
            &Profile::Gaussian {
                amplitude,
                width: 1.0,
            },
            params,
        )
    }
}

/// Nodal pieces of `Tu`: nonlocal term, `h(x, u⁺)`, and `λg`.
pub(crate) struct SourceTerms {
    pub nonlocal: Vec<f64>,
    pub reaction: Vec<f64>,
    pub load: Vec<f64>,
}

pub(crate) fn source_terms(
    u: &GridFunction,
    params: &SolverParams,
    spec: &NonlinearitySpec,
    pert: &PerturbationSpec,
) -> Result<SourceTerms> {
    u.same_grid(&spec.d1)?;
    u.same_grid(&pert.g)?;
    if !u.is_finite() {
        return Err(Error::NonFinite("source argument"));
    }
    let up = pos_part(u);
    let q = params.q;
    let nonlocal = if params.nonlocal_enabled {
        let rho: Vec<f64> = up.values().iter().map(|v| v.powf(q)).collect();
        let phi = potential_from_density(u.grid(), &rho);
        phi.iter()
            .zip(up.values())
            .map(|(f, v)| f * v.powf(q - 1.0))
            .collect()
    } else {
        vec![0.0; u.len()]
    };
    let reaction = up
        .values()
        .iter()
        .enumerate()
        .map(|(i, &t)| eval_h(spec, i, t))
        .collect();
    let load = pert.g.values().iter().map(|g| params.lambda * g).collect();
    Ok(SourceTerms {
        nonlocal,
        reaction,
        load,
    })
}

/// Nodal coefficients of `Tu`; all nonnegative.
pub fn apply_t(
    u: &GridFunction,
    params: &SolverParams,
    spec: &NonlinearitySpec,
    pert: &PerturbationSpec,
) -> Result<DualVector> {
    let terms = source_terms(u, params, spec, pert)?;
    let coeffs = terms
        .nonlocal
        .iter()
        .zip(&terms.reaction)
        .zip(&terms.load)
        .map(|((a, b), c)| a + b + c)
        .collect();
    DualVector::from_coeffs(u.grid(), coeffs)
}

/// Right-hand side of the dual-norm estimate for `Tu`:
/// `C*‖u⁺‖^{2q−1} + C**‖d₁‖_η‖u⁺‖^{τ−1} + C***‖d₂‖_∞‖u⁺‖^{q*−1} + λ‖g‖`.
pub fn t_dual_bound(
    u: &GridFunction,
    params: &SolverParams,
    spec: &NonlinearitySpec,
    pert: &PerturbationSpec,
    constants: &BallCertificate,
) -> Result<f64> {
    let m = w_norm(&pos_part(u), params)?;
    let d1 = lebesgue_norm(&spec.d1, params.eta());
    let d2 = sup_norm(&spec.d2);
    let power = |e: f64| if m == 0.0 { 0.0 } else { m.powf(e) };
    Ok(constants.c_star * power(2.0 * params.q - 1.0)
        + constants.c_2star * d1 * power(spec.tau - 1.0)
        + constants.c_3star * d2 * power(spec.q_star - 1.0)
        + params.lambda * pert.g_norm)
}
