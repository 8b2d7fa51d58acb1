//! Gauss–Legendre rules, used as a generic antiderivative for `h(x, ·)`.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_a^b f` with the 64-point Gauss–Legendre rule.
pub fn integrate_gl64(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = RULE.get_or_init(|| gauss_legendre(64));
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // ∫_0^2 x^{100} dx
        let exact = 2f64.powi(101) / 101.0;
        let got = integrate_gl64(|x| x.powi(100), 0.0, 2.0);
        assert!((got / exact - 1.0).abs() < 1e-12);
        let got = integrate_gl64(|x| x.powf(4.5), 0.0, 1.3);
        assert!((got / (1.3f64.powf(5.5) / 5.5) - 1.0).abs() < 1e-10);
    }
}
