//! Kolmogorov-Smirnov distance to the standard normal.

use statrs::distribution::{ContinuousCDF, Normal};

/// `sup_x |F_n(x) - Phi(x)|` for the empirical distribution of `sample`.
pub fn ks_standard_normal(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let phi = Normal::standard();
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Some(d)
}
