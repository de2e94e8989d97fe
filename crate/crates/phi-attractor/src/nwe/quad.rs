//! Gauss-Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`, computed by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Rule mapped to `[a, b]`.
pub fn on_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|v| m + h * v).collect(), w.iter().map(|v| h * v).collect())
}

/// Composite rule: `panels` equal panels with `n` nodes each.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|j| {
            let m = a + (j as f64 + 0.5) * h;
            x.iter().zip(&w).map(|(xi, wi)| wi * f(m + 0.5 * h * xi)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Composite Simpson rule on equally spaced samples; needs an odd count.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of at least 3 samples");
    let inner: f64 = values[1..n - 1].iter().enumerate().map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v }).sum();
    h / 3.0 * (values[0] + inner + values[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn sine_square_on_half_period() {
        let (x, w) = on_interval(32, 0.0, PI);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin().powi(2)).sum();
        assert!((q - PI / 2.0).abs() < 1e-14);
        assert!((composite(|v: f64| (-v * v).exp(), -10.0, 10.0, 40, 8) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
        let exact = 3f64.powi(4) / 4.0 - 4.5;
        assert!((simpson(&v, 0.3) - exact).abs() < 1e-12);
    }
}
