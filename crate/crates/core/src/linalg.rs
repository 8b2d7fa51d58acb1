//! Tridiagonal systems arising from the cellwise gradient on the radial grid.

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone)]
pub(crate) struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn zeros(n: usize) -> Self {
        SymTridiagonal {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Adds the 2×2 block `k · [[1, −1], [−1, 1]]` on rows `i, i + 1`.
    /// Rows beyond the matrix are constrained degrees of freedom and are skipped.
    pub fn add_edge(&mut self, i: usize, k: f64) {
        let n = self.len();
        if i < n {
            self.diag[i] += k;
        }
        if i + 1 < n {
            self.diag[i + 1] += k;
            self.off[i] -= k;
        }
    }

    /// Thomas algorithm. The matrix must be nonsingular; for the SPD systems built
    /// here no pivoting is needed.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }

    #[cfg(test)]
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_spd_system() {
        let n = 50;
        let mut m = SymTridiagonal::zeros(n);
        for i in 0..n {
            m.add_edge(i, 1.0 + i as f64 * 0.1);
            m.diag[i] += 0.5;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = m.mul(&x);
        let y = m.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
