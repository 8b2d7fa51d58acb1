//! Radial discretization of ℝ³ and the discrete function space built on it.
//!
//! Functions are nodal values on a uniform radial grid `0 = r_0 < … < r_{n-1} = r_max`.
//! Between nodes they are read as piecewise linear, which fixes every integral on the
//! grid:
//!
//! * zeroth-order terms use the nodal weights `w_i = ∫ φ_i(r) 4πr² dr` of the hat
//!   functions `φ_i` (trapezoid rule against the measure `4πr² dr`);
//! * gradient terms use the constant slope of each cell times the cell volume.
//!
//! Both families of weights are strictly positive, so the pointwise order on nodal values
//! is the order cone of the discrete space.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::SolverParams;

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

/// Uniform radial grid on `[0, r_max]` together with its quadrature data.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cell_volumes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Arc<Self>> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "node count must be at least {MIN_NODES}, got {n}"
            )));
        }
        let h = r_max / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        nodes[n - 1] = r_max;

        // Exact moments of the two hat functions on the cell [a, a + h] against r² dr,
        // written in the shifted variable so nothing cancels for large a.
        let mut weights = vec![0.0; n];
        let mut cell_volumes = Vec::with_capacity(n - 1);
        for c in 0..n - 1 {
            let a = nodes[c];
            let left = h * (a * a / 2.0 + a * h / 3.0 + h * h / 12.0);
            let right = h * (a * a / 2.0 + 2.0 * a * h / 3.0 + h * h / 4.0);
            weights[c] += 4.0 * PI * left;
            weights[c + 1] += 4.0 * PI * right;
            cell_volumes.push(4.0 * PI * h * (a * a + a * h + h * h / 3.0));
        }
        Ok(Arc::new(RadialGrid {
            r_max,
            spacing: h,
            nodes,
            weights,
            cell_volumes,
        }))
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nodal quadrature weights against `4πr² dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Volume of the spherical shell spanned by each cell; `len() - 1` entries.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn ball_volume(&self) -> f64 {
        4.0 * PI * self.r_max.powi(3) / 3.0
    }
}

/// Builds the uniform radial grid with `n` nodes on `[0, r_max]`.
pub fn make_radial_grid(r_max: f64, n: usize) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(r_max, n)
}

/// Real nodal function on a [`RadialGrid`].
#[derive(Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("n", &self.values.len())
            .field("r_max", &self.grid.r_max)
            .finish()
    }
}

impl serde::Serialize for GridFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GridFunction", 3)?;
        st.serialize_field("r_max", &self.grid.r_max)?;
        st.serialize_field("n", &self.values.len())?;
        st.serialize_field("values", &self.values)?;
        st.end()
    }
}

impl GridFunction {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<RadialGrid>, value: f64) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: grid.nodes().iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn from_values(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        self.grid.check_same(&other.grid)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn checked_add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Slope of the piecewise-linear interpolant on each cell.
    pub fn cell_gradient(&self) -> Vec<f64> {
        let h = self.grid.spacing;
        self.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Linear interpolation at radius `r`; clamps to the end values outside `[0, r_max]`.
    pub fn sample(&self, r: f64) -> f64 {
        let n = self.values.len();
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= self.grid.r_max {
            return self.values[n - 1];
        }
        let x = r / self.grid.spacing;
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[i + 1]
    }
}

impl RadialGrid {
    pub(crate) fn check_same(self: &Arc<Self>, other: &Arc<RadialGrid>) -> Result<()> {
        if Arc::ptr_eq(self, other) || **self == **other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discrete `∫_{ℝ³} f dx` over the truncated ball.
pub fn integrate(f: &GridFunction) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite("integrand"));
    }
    Ok(weighted_sum(f.grid.weights(), f.values()))
}

pub(crate) fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// `∫ |∇u|^s + |u|^s`, the `s`-th power of [`sobolev_norm`].
pub fn sobolev_integral(u: &GridFunction, s: f64) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("Sobolev exponent must be ≥ 1, got {s}")));
    }
    let grad: f64 = u
        .cell_gradient()
        .iter()
        .zip(u.grid.cell_volumes())
        .map(|(g, vol)| vol * g.abs().powf(s))
        .sum();
    let mass: f64 = u
        .values
        .iter()
        .zip(u.grid.weights())
        .map(|(v, w)| w * v.abs().powf(s))
        .sum();
    Ok(grad + mass)
}

/// Discrete `‖u‖_{W^{1,s}} = (∫ |∇u|^s + |u|^s)^{1/s}`.
pub fn sobolev_norm(u: &GridFunction, s: f64) -> Result<f64> {
    Ok(sobolev_integral(u, s)?.powf(1.0 / s))
}

/// Norm of `W = W^{1,p} ∩ W^{1,q}`: `‖u‖_{W^{1,p}} + ‖u‖_{W^{1,q}}`.
pub fn w_norm(u: &GridFunction, params: &SolverParams) -> Result<f64> {
    Ok(sobolev_norm(u, params.p)? + sobolev_norm(u, params.q)?)
}

/// `u⁺ = max{u, 0}`.
pub fn pos_part(u: &GridFunction) -> GridFunction {
    u.map(|v| v.max(0.0))
}

/// `u⁻ = −min{u, 0}`.
pub fn neg_part(u: &GridFunction) -> GridFunction {
    u.map(|v| (-v).max(0.0))
}

/// `u ⪯ v`: `v − u` lies in the cone of nodewise nonnegative functions.
pub fn leq(u: &GridFunction, v: &GridFunction) -> Result<bool> {
    u.same_grid(v)?;
    Ok(u.values.iter().zip(&v.values).all(|(a, b)| b - a >= 0.0))
}

/// Linear functional on grid functions, `⟨f, v⟩ = Σ_i w_i f_i v_i`.
#[derive(Clone, PartialEq)]
pub struct DualVector {
    grid: Arc<RadialGrid>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for DualVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualVector")
            .field("n", &self.coeffs.len())
            .finish()
    }
}

impl DualVector {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        DualVector {
            grid: Arc::clone(grid),
            coeffs: vec![0.0; grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<RadialGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("dual vector"));
        }
        Ok(DualVector {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// The functional `v ↦ ∫ f v dx` for a nodal density `f`.
    pub fn from_density(f: &GridFunction) -> Self {
        DualVector {
            grid: Arc::clone(&f.grid),
            coeffs: f.values.clone(),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn pairing(&self, v: &GridFunction) -> Result<f64> {
        self.grid.check_same(&v.grid)?;
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(&self.coeffs)
            .zip(&v.values)
            .map(|((w, c), x)| w * c * x)
            .sum())
    }

    pub fn scaled(&self, t: f64) -> Self {
        DualVector {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|c| t * c).collect(),
        }
    }

    pub fn checked_sub(&self, other: &DualVector) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(DualVector {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn checked_add(&self, other: &DualVector) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(DualVector {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Coefficientwise order `f ⊴ g`; with positive weights it implies
    /// `⟨f, v⟩ ≤ ⟨g, v⟩` for every nonnegative `v`.
    pub fn leq(&self, other: &DualVector) -> Result<bool> {
        self.grid.check_same(&other.grid)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a <= b))
    }
}
