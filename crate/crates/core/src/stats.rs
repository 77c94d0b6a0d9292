//! Small statistical helpers: Kolmogorov–Smirnov tests, summary statistics,
//! log-log regression and median-of-means.

use crate::error::{Error, Result};
use statrs::distribution::{Beta, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value with Stephens' small-sample correction.
fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Domain("KS test on an empty sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n) })
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS test on an empty sample".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, en) })
}

/// CDF of `Beta(a, b)`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    let dist = Beta::new(a, b).map_err(|e| Error::Domain(format!("Beta({a}, {b}): {e}")))?;
    Ok(dist.cdf(x))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn sem(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Lower median: for an even count, the smaller of the two middle values.
pub fn lower_median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Domain("median of an empty sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v[(v.len() - 1) / 2])
}

/// Splits `xs` into `groups` consecutive batches of equal size and returns the
/// lower median of the batch means.
pub fn median_of_means(xs: &[f64], groups: usize) -> Result<f64> {
    if groups == 0 || xs.len() < groups || xs.len() % groups != 0 {
        return Err(Error::Domain(format!("{} samples cannot be split into {groups} equal batches", xs.len())));
    }
    let size = xs.len() / groups;
    let means: Vec<f64> = xs.chunks(size).map(mean).collect();
    lower_median(&means)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("linear fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("linear fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, slope_stderr })
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return Err(Error::Domain("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kolmogorov_tail_reference_points() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn uniform_grid_passes() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic < 1e-3 && r.p_value > 0.99);
        let shifted: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn beta_cdf_closed_form() {
        // Beta(2, 1) has CDF x².
        assert!((beta_cdf(2.0, 1.0, 0.3).unwrap() - 0.09).abs() < 1e-12);
    }

    #[test]
    fn medians() {
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median_of_means(&[1.0, 3.0, 10.0, 10.0, 0.0, 0.0], 3).unwrap(), 2.0);
    }

    proptest! {
        #[test]
        fn two_sample_statistic_is_symmetric(a in prop::collection::vec(-10.0f64..10.0, 1..40),
                                              b in prop::collection::vec(-10.0f64..10.0, 1..40)) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert!((ab.statistic - ba.statistic).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.statistic));
        }

        #[test]
        fn exact_power_law_slope(k in -3.0f64..3.0, c in 0.1f64..10.0) {
            let x = [1.0, 2.0, 4.0, 8.0];
            let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(k)).collect();
            let fit = log_log_slope(&x, &y).unwrap();
            prop_assert!((fit.slope - k).abs() < 1e-9);
        }
    }
}
