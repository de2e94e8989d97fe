//! Time grids used by the checkers and fitters.

use crate::error::{invalid, Result};

/// `n` points geometrically spaced on `[lo, hi]`, endpoints included.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return invalid(format!("bad geometric grid [{lo}, {hi}] with {n} points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Geometric grid with a fixed density per decade.
pub fn per_decade(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return invalid("bad per-decade grid");
    }
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1) + 1;
    geometric(lo, hi, n)
}

/// `n + 1` evenly spaced points from `lo` to `hi`.
pub fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![lo];
    }
    let h = (hi - lo) / n as f64;
    (0..=n).map(|i| lo + h * i as f64).collect()
}

pub fn decades(grid: &[f64]) -> f64 {
    match (grid.first(), grid.last()) {
        (Some(&a), Some(&b)) if a > 0.0 && b > a => (b / a).log10(),
        _ => 0.0,
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_hits_endpoints() {
        let g = geometric(1.0, 1e6, 256).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[255], 1e6);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn per_decade_density() {
        let g = per_decade(1.0, 100.0, 24).unwrap();
        assert_eq!(g.len(), 49);
        assert!((decades(&g) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 3.0).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }
}
