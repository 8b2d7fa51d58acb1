//! Newtonian potential `φ_u = (1/4π) ∫ |u(y)|^q / |x − y| dy`, the decaying solution of
//! `−Δφ = |u|^q`.
//!
//! For radial data the angular integral collapses to
//! `φ(r) = (1/r) ∫₀^r s² ρ(s) ds + ∫_r^{r_max} s ρ(s) ds` with `ρ = |u|^q`, evaluated here
//! with prefix sums in O(n). The discrete kernel `A_ij = w_j / (4π max(r_i, r_j))` makes
//! `w_i A_ij` symmetric, which is what lets the nonlocal energy
//! `(1/2q) Σ_i w_i φ_i ρ_i` have the exact nodal gradient `w_i φ_i |u_i|^{q−2} u_i`.
//!
//! [`solve_potential_grid3d`] is an independent brute-force check on a small Cartesian grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RadialGrid};

/// Average of `1/|x|` over the unit cube centred at the origin.
pub const CUBE_SELF_KERNEL: f64 = 2.380_077_363_979_553_5;

/// Largest side length accepted by the 3-D oracle.
pub const MAX_ORACLE_SIDE: usize = 32;

#[derive(Debug, Clone)]
pub struct PotentialReport {
    pub phi: GridFunction,
    /// Discrete `‖∇φ‖_{L²}` over the truncated ball.
    pub d12_norm: f64,
    pub min_value: f64,
}

/// Potential generated by a nonnegative nodal density.
pub(crate) fn potential_from_density(grid: &Arc<RadialGrid>, rho: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let r = grid.nodes();
    let w = grid.weights();
    let h = grid.spacing();
    let inv4pi = 1.0 / (4.0 * PI);

    // tail[k] = Σ_{j ≥ k} w_j ρ_j / r_j  (k ≥ 1)
    let mut tail = vec![0.0; n + 1];
    for j in (1..n).rev() {
        tail[j] = tail[j + 1] + w[j] * rho[j] / r[j];
    }
    let mut phi = vec![0.0; n];
    // The hat function at the origin integrates s ds exactly to h²/6.
    phi[0] = h * h / 6.0 * rho[0] + inv4pi * tail[1];
    let mut inner = w[0] * rho[0];
    for i in 1..n {
        inner += w[i] * rho[i];
        phi[i] = inv4pi * (inner / r[i] + tail[i + 1]);
    }
    phi
}

/// Radial potential `φ_u` of `|u|^q`.
pub fn solve_potential_radial(u: &GridFunction, q: f64) -> Result<PotentialReport> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent q must be positive, got {q}")));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("potential source"));
    }
    let rho: Vec<f64> = u.values().iter().map(|v| v.abs().powf(q)).collect();
    let values = potential_from_density(u.grid(), &rho);
    let phi = GridFunction::from_values(u.grid(), values)?;
    let d12_norm = d12_norm(&phi)?;
    let min_value = phi.min_value();
    Ok(PotentialReport {
        phi,
        d12_norm,
        min_value,
    })
}

/// Discrete `D^{1,2}` norm `(∫ |∇φ|²)^{1/2}`.
pub fn d12_norm(phi: &GridFunction) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::NonFinite("potential"));
    }
    let s: f64 = phi
        .cell_gradient()
        .iter()
        .zip(phi.grid().cell_volumes())
        .map(|(g, v)| v * g * g)
        .sum();
    Ok(s.sqrt())
}

/// Discrete radial Laplacian `(1/r²)(r² φ′)′` at interior nodes; zero at both ends.
pub fn radial_laplacian(phi: &GridFunction) -> Vec<f64> {
    let grid = phi.grid();
    let r = grid.nodes();
    let h = grid.spacing();
    let v = phi.values();
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let rp = r[i] + 0.5 * h;
        let rm = r[i] - 0.5 * h;
        out[i] = (rp * rp * (v[i + 1] - v[i]) - rm * rm * (v[i] - v[i - 1])) / (h * h * r[i] * r[i]);
    }
    out
}

/// Scalar field on the cell centres of the cube `[-L, L]³`, `L = side · spacing / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeField {
    side: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl CubeField {
    pub fn new(side: usize, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if side == 0 || !(spacing > 0.0) {
            return Err(Error::InvalidArgument("cube side and spacing must be positive".into()));
        }
        if values.len() != side * side * side {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                side * side * side,
                values.len()
            )));
        }
        Ok(CubeField {
            side,
            spacing,
            values,
        })
    }

    /// Samples `f(x, y, z)` on the `side³` cell centres of `[-half_width, half_width]³`.
    pub fn from_fn(side: usize, half_width: f64, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let spacing = 2.0 * half_width / side as f64;
        let mut values = Vec::with_capacity(side * side * side);
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    let [x, y, z] = Self::coord(side, spacing, i, j, k);
                    values.push(f(x, y, z));
                }
            }
        }
        Self::new(side, spacing, values)
    }

    fn coord(side: usize, spacing: f64, i: usize, j: usize, k: usize) -> [f64; 3] {
        let c = |m: usize| (m as f64 + 0.5 - side as f64 / 2.0) * spacing;
        [c(i), c(j), c(k)]
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.side + j) * self.side + k
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let s = self.side;
        Self::coord(s, self.spacing, idx / (s * s), (idx / s) % s, idx % s)
    }
}

/// Direct summation `φ(x_i) = (1/4π) Σ_j ρ_j h³ / |x_i − x_j|`.
///
/// The self cell uses the exact cell average of the kernel, `κ / h` with
/// `κ =` [`CUBE_SELF_KERNEL`].
pub fn solve_potential_grid3d(density: &CubeField) -> Result<CubeField> {
    let s = density.side;
    if s > MAX_ORACLE_SIDE {
        return Err(Error::OracleTooLarge {
            n: s,
            max: MAX_ORACLE_SIDE,
        });
    }
    if density.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("3-D density"));
    }
    let h = density.spacing;

    // The kernel only depends on index offsets.
    let mut kernel = vec![0.0; s * s * s];
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                let d2 = (a * a + b * b + c * c) as f64;
                kernel[(a * s + b) * s + c] = if d2 == 0.0 {
                    CUBE_SELF_KERNEL
                } else {
                    1.0 / d2.sqrt()
                };
            }
        }
    }
    let sources: Vec<(usize, usize, usize, f64)> = (0..s * s * s)
        .filter(|&idx| density.values[idx] != 0.0)
        .map(|idx| (idx / (s * s), (idx / s) % s, idx % s, density.values[idx]))
        .collect();
    let scale = h * h / (4.0 * PI);

    let values: Vec<f64> = (0..s * s * s)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (s * s), (idx / s) % s, idx % s);
            let sum: f64 = sources
                .iter()
                .map(|&(a, b, c, rho)| {
                    let off = (i.abs_diff(a) * s + j.abs_diff(b)) * s + k.abs_diff(c);
                    rho * kernel[off]
                })
                .sum();
            scale * sum
        })
        .collect();
    CubeField::new(s, h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_radial_grid;

    #[test]
    fn zero_source_gives_zero_potential() {
        let grid = make_radial_grid(5.0, 101).unwrap();
        let rep = solve_potential_radial(&GridFunction::zeros(&grid), 2.5).unwrap();
        assert!(rep.phi.is_zero());
        assert_eq!(rep.d12_norm, 0.0);
        assert_eq!(d12_norm(&GridFunction::zeros(&grid)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = make_radial_grid(5.0, 101).unwrap();
        let u = GridFunction::constant(&grid, 1.0);
        assert!(solve_potential_radial(&u, 0.0).is_err());
        let mut bad = u.clone();
        bad.values_mut()[4] = f64::NAN;
        assert!(solve_potential_radial(&bad, 2.0).is_err());
    }

    #[test]
    fn doubling_source_scales_by_two_to_the_q() {
        let grid = make_radial_grid(6.0, 301).unwrap();
        let u = GridFunction::from_fn(&grid, |r| (-r * r).exp() * (2.0 * r).cos());
        let q = 2.5;
        let a = solve_potential_radial(&u, q).unwrap().phi;
        let b = solve_potential_radial(&u.scaled(2.0), q).unwrap().phi;
        let factor = 2f64.powf(q);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((y - factor * x).abs() <= 1e-12 * (factor * x).abs());
        }
    }

    #[test]
    fn potential_decreases_outside_support() {
        let grid = make_radial_grid(6.0, 601).unwrap();
        let u = GridFunction::from_fn(&grid, |r| if r < 2.0 { 1.0 - r / 2.0 } else { 0.0 });
        let phi = solve_potential_radial(&u, 2.0).unwrap().phi;
        let r = grid.nodes();
        for i in 0..grid.len() - 1 {
            if r[i] >= 2.0 {
                assert!(phi.values()[i + 1] <= phi.values()[i]);
            }
        }
    }

    #[test]
    fn d12_norm_is_homogeneous() {
        let grid = make_radial_grid(6.0, 301).unwrap();
        let phi = GridFunction::from_fn(&grid, |r| 1.0 / (1.0 + r * r));
        let a = d12_norm(&phi).unwrap();
        assert!((d12_norm(&phi.scaled(2.0)).unwrap() - 2.0 * a).abs() < 1e-13 * a);
    }

    #[test]
    fn oracle_guards_size() {
        let big = CubeField::new(33, 0.1, vec![0.0; 33 * 33 * 33]).unwrap();
        assert!(matches!(
            solve_potential_grid3d(&big),
            Err(Error::OracleTooLarge { .. })
        ));
        let zero = CubeField::new(8, 0.1, vec![0.0; 512]).unwrap();
        assert!(solve_potential_grid3d(&zero).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_positions_are_cell_centres() {
        let f = CubeField::from_fn(4, 2.0, |x, _, _| x).unwrap();
        assert_eq!(f.spacing(), 1.0);
        assert_eq!(f.position(0), [-1.5, -1.5, -1.5]);
        assert_eq!(f.values()[f.index(3, 0, 0)], 1.5);
    }
}
