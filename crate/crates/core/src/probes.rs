//! Dual-norm estimation and seeded random grid functions.
//!
//! The dual norm `‖f‖_{W'} = sup_{‖v‖ ≤ 1} |⟨f, v⟩|` is not computable exactly. It is
//! estimated from below by a fixed library of 32 smooth directions plus the steepest
//! direction of `f`, taken as its `W^{1,2}` Riesz representer (one tridiagonal solve).
//! All directions vanish at `r_max`, matching the Dirichlet truncation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{w_norm, DualVector, GridFunction, RadialGrid};
use crate::linalg::SymTridiagonal;
use crate::params::SolverParams;

pub const LIBRARY_SIZE: usize = 32;

const CENTER_FRACTIONS: [f64; 4] = [0.0, 0.15, 0.35, 0.6];
const WIDTH_FRACTIONS: [f64; 8] = [0.02, 0.035, 0.06, 0.1, 0.16, 0.25, 0.4, 0.6];

/// Radius of the region the library concentrates on.
fn active_radius(grid: &RadialGrid) -> f64 {
    grid.r_max().min(8.0)
}

fn cutoff(r: f64, r_max: f64) -> f64 {
    let x = r / r_max;
    (1.0 - x * x).max(0.0)
}

#[derive(Debug, Clone)]
pub struct ProbeLibrary {
    grid: Arc<RadialGrid>,
    params: SolverParams,
    directions: Vec<GridFunction>,
    riesz: SymTridiagonal,
}

impl ProbeLibrary {
    pub fn new(grid: &Arc<RadialGrid>, params: &SolverParams) -> Result<Self> {
        let l = active_radius(grid);
        let r_max = grid.r_max();
        let h = grid.spacing();
        let mut directions = Vec::with_capacity(LIBRARY_SIZE);
        for &cf in &CENTER_FRACTIONS {
            for &wf in &WIDTH_FRACTIONS {
                let (c, w) = (cf * l, (wf * l).max(2.0 * h));
                let v = GridFunction::from_fn(grid, |r| {
                    let x = (r - c) / w;
                    (-x * x).exp() * cutoff(r, r_max)
                });
                let norm = w_norm(&v, params)?;
                directions.push(v.scaled(1.0 / norm));
            }
        }

        // Stiffness plus lumped mass on the free nodes 0..n-1.
        let free = grid.len() - 1;
        let mut riesz = SymTridiagonal::zeros(free);
        for (c, vol) in grid.cell_volumes().iter().enumerate() {
            riesz.add_edge(c, vol / (h * h));
        }
        for (d, w) in riesz.diag.iter_mut().zip(grid.weights()) {
            *d += w;
        }

        Ok(ProbeLibrary {
            grid: Arc::clone(grid),
            params: params.clone(),
            directions,
            riesz,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// The fixed directions, each normalized to unit `W` norm.
    pub fn directions(&self) -> &[GridFunction] {
        &self.directions
    }

    /// `W^{1,2}` Riesz representer of `f`: solves `(−Δ + 1) z = f` on the grid with
    /// `z(r_max) = 0`, so that `⟨f, z⟩ = ‖z‖²_{W^{1,2}}`.
    pub fn steepest_direction(&self, f: &DualVector) -> GridFunction {
        let free = self.riesz.len();
        let rhs: Vec<f64> = self
            .grid
            .weights()
            .iter()
            .zip(f.coeffs())
            .take(free)
            .map(|(w, c)| w * c)
            .collect();
        let mut z = self.riesz.solve(&rhs);
        z.push(0.0);
        GridFunction::from_values(&self.grid, z).unwrap_or_else(|_| GridFunction::zeros(&self.grid))
    }

    /// Lower estimate of `‖f‖_{W'}`.
    pub fn dual_norm(&self, f: &DualVector) -> Result<f64> {
        let mut best: f64 = 0.0;
        for v in &self.directions {
            best = best.max(f.pairing(v)?.abs());
        }
        let z = self.steepest_direction(f);
        let nz = w_norm(&z, &self.params)?;
        if nz > 0.0 {
            best = best.max(f.pairing(&z)?.abs() / nz);
        }
        Ok(best)
    }
}

/// Seeded generator of smooth random grid functions.
///
/// Each sample is a sum of one to three Gaussian bumps with random centers, widths
/// and amplitudes, multiplied by a cutoff that vanishes at `r_max`.
#[derive(Debug, Clone)]
pub struct RandomFunctions {
    rng: ChaCha8Rng,
}

impl RandomFunctions {
    pub fn new(seed: u64) -> Self {
        RandomFunctions {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn bumps(&mut self, grid: &Arc<RadialGrid>, signed: bool) -> GridFunction {
        let l = active_radius(grid);
        let r_max = grid.r_max();
        let h = grid.spacing();
        let count = self.rng.random_range(1..=3);
        let bumps: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                let c = self.rng.random_range(0.0..0.5 * l);
                let w = (l * self.rng.random_range(0.04..0.4)).max(3.0 * h);
                let a = if signed {
                    self.rng.random_range(-1.0..1.0)
                } else {
                    self.rng.random_range(0.05..1.0)
                };
                (c, w, a)
            })
            .collect();
        GridFunction::from_fn(grid, |r| {
            let s: f64 = bumps
                .iter()
                .map(|&(c, w, a)| {
                    let x = (r - c) / w;
                    a * (-x * x).exp()
                })
                .sum();
            s * cutoff(r, r_max)
        })
    }

    /// Smooth function of either sign.
    pub fn signed(&mut self, grid: &Arc<RadialGrid>) -> GridFunction {
        self.bumps(grid, true)
    }

    /// Smooth nonnegative function, not identically zero.
    pub fn nonnegative(&mut self, grid: &Arc<RadialGrid>) -> GridFunction {
        self.bumps(grid, false)
    }

    /// Independent uniform nodal values in `[-1, 1]`, zero at `r_max`.
    pub fn rough(&mut self, grid: &Arc<RadialGrid>) -> GridFunction {
        let n = grid.len();
        let mut values: Vec<f64> = (0..n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
        values[n - 1] = 0.0;
        GridFunction::from_values(grid, values).expect("finite by construction")
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_radial_grid;

    #[test]
    fn library_is_normalized_and_vanishes_at_boundary() {
        let grid = make_radial_grid(20.0, 801).unwrap();
        let params = SolverParams::default();
        let lib = ProbeLibrary::new(&grid, &params).unwrap();
        assert_eq!(lib.directions().len(), LIBRARY_SIZE);
        for v in lib.directions() {
            assert!((w_norm(v, &params).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(*v.values().last().unwrap(), 0.0);
        }
    }

    #[test]
    fn steepest_direction_attains_the_h1_dual_norm() {
        let grid = make_radial_grid(10.0, 401).unwrap();
        let lib = ProbeLibrary::new(&grid, &SolverParams::default()).unwrap();
        let f = DualVector::from_density(&GridFunction::from_fn(&grid, |r| (-r * r).exp()));
        let z = lib.steepest_direction(&f);
        // ⟨f, z⟩ equals the discrete H¹ norm squared of z.
        let h1_sq = crate::grid::sobolev_integral(&z, 2.0).unwrap();
        let pairing = f.pairing(&z).unwrap();
        assert!((pairing - h1_sq).abs() < 1e-10 * h1_sq);
    }

    #[test]
    fn dual_norm_is_homogeneous() {
        let grid = make_radial_grid(10.0, 401).unwrap();
        let lib = ProbeLibrary::new(&grid, &SolverParams::default()).unwrap();
        let f = DualVector::from_density(&GridFunction::from_fn(&grid, |r| (-r).exp()));
        let a = lib.dual_norm(&f).unwrap();
        let b = lib.dual_norm(&f.scaled(-3.0)).unwrap();
        assert!(a > 0.0);
        assert!((b - 3.0 * a).abs() < 1e-12 * a);
        assert_eq!(lib.dual_norm(&DualVector::zeros(&grid)).unwrap(), 0.0);
    }

    #[test]
    fn random_functions_are_reproducible() {
        let grid = make_radial_grid(8.0, 201).unwrap();
        let a = RandomFunctions::new(7).signed(&grid);
        let b = RandomFunctions::new(7).signed(&grid);
        assert_eq!(a, b);
        let mut gen = RandomFunctions::new(8);
        for _ in 0..20 {
            let u = gen.nonnegative(&grid);
            assert!(u.min_value() >= 0.0 && u.max_value() > 0.0);
        }
    }
}
