//! Statistical checks tying Monte Carlo output to the closed forms.

pub mod bounds;
pub mod outage;
pub mod suite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::special::{gamma_p, gamma_q};
use crate::analytics::AnalyticsError;
use crate::channel::ChannelError;

pub use bounds::{bound_sweep, BoundRow};
pub use outage::{outage_mc, slope_fit, wilson_interval, OutagePoint, SlopeFit};
pub use suite::{run_suites, summary_table, CheckResult, SuiteReport, ValidationOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("empty sample")]
    EmptySample,
    #[error("high-SNR window has {found} usable points, need {needed}")]
    InsufficientTail { found: usize, needed: usize },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid validation option {field}: {reason}")]
    Option { field: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GofTest {
    #[serde(rename = "KS")]
    Ks,
    ChiSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub test: GofTest,
    pub statistic: f64,
    pub threshold: f64,
    pub n_samples: usize,
    /// Asymptotic p-value where one is available.
    pub p_value: Option<f64>,
    pub pass: bool,
}

/// 5 % asymptotic critical value of the KS statistic, `1.36/√n`.
pub fn ks_threshold(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Two-sided one-sample KS statistic `sup |F_n − F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_compare(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofReport, ValidationError> {
    if samples.is_empty() {
        return Err(ValidationError::EmptySample);
    }
    let statistic = ks_statistic(samples, cdf);
    let threshold = ks_threshold(samples.len());
    Ok(GofReport {
        test: GofTest::Ks,
        statistic,
        threshold,
        n_samples: samples.len(),
        p_value: Some(kolmogorov_p_value(statistic, samples.len())),
        pass: statistic < threshold,
    })
}

/// Asymptotic `P(√n D > λ)` from the Kolmogorov series.
fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let lambda = d * (n as f64).sqrt();
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper `alpha` quantile of χ² with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    let a = df as f64 / 2.0;
    let (mut lo, mut hi) = (0.0, df as f64 + 100.0 * (df as f64).sqrt() + 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_q(a, mid / 2.0) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Point `x` in `[lo, hi]` with `cdf(x) = target`, by bisection.
fn invert_cdf(cdf: &impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if cdf(m) < target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Pearson χ² test on `bins` equal-probability cells of `cdf` over the
/// support `[lo, hi]`. The cell count is reduced so that every cell expects at
/// least 20 samples; the test passes when the p-value exceeds 0.01.
pub fn chi_square_compare(
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    support: (f64, f64),
    bins: usize,
) -> Result<GofReport, ValidationError> {
    let n = samples.len();
    if n == 0 {
        return Err(ValidationError::EmptySample);
    }
    let bins = bins.min(n / 20).max(2);
    let edges: Vec<f64> = (1..bins).map(|i| invert_cdf(&cdf, i as f64 / bins as f64, support.0, support.1)).collect();
    let mut counts = vec![0usize; bins];
    for &x in samples {
        counts[edges.partition_point(|&e| e < x)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = bins - 1;
    let p_value = gamma_q(df as f64 / 2.0, statistic / 2.0);
    let threshold = chi_square_critical(df, 0.01);
    debug_assert!((gamma_p(df as f64 / 2.0, threshold / 2.0) - 0.99).abs() < 1e-9);
    Ok(GofReport {
        test: GofTest::ChiSquare,
        statistic,
        threshold,
        n_samples: n,
        p_value: Some(p_value),
        pass: statistic < threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{misalignment_cdf, sample_misalignment};
    use crate::rng::{Component, SeedTree};
    use rand::Rng;

    #[test]
    fn ks_calibration_near_nominal() {
        let tree = SeedTree::new(21);
        let reps = 200;
        let passes = (0..reps)
            .filter(|&r| {
                let mut rng = tree.stream(r, Component::Generic);
                let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
                ks_compare(&xs, |x| x.clamp(0.0, 1.0)).unwrap().pass
            })
            .count();
        // 95 % nominal; binomial 3σ band at 200 repetitions is about ±4.6 %.
        assert!((176..=200).contains(&passes), "{passes}");
    }

    #[test]
    fn ks_detects_perturbed_rho() {
        let mut rng = SeedTree::new(22).stream(0, Component::Misalignment);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_misalignment(4.0, &mut rng)).collect();
        assert!(ks_compare(&xs, |x| misalignment_cdf(x, 4.0).unwrap()).unwrap().pass);
        assert!(!ks_compare(&xs, |x| misalignment_cdf(x, 4.4).unwrap()).unwrap().pass);
    }

    #[test]
    fn chi_square_critical_values() {
        // Tabulated 99 % quantiles.
        assert!((chi_square_critical(1, 0.01) - 6.634_896_601).abs() < 1e-6);
        assert!((chi_square_critical(10, 0.01) - 23.209_251_159).abs() < 1e-6);
    }

    #[test]
    fn chi_square_uniform() {
        let mut rng = SeedTree::new(23).stream(0, Component::Generic);
        let xs: Vec<f64> = (0..50_000).map(|_| rng.random::<f64>()).collect();
        assert!(chi_square_compare(&xs, |x| x, (0.0, 1.0), 50).unwrap().pass);
        let skewed: Vec<f64> = xs.iter().map(|x| x.powf(1.05)).collect();
        assert!(!chi_square_compare(&skewed, |x| x, (0.0, 1.0), 50).unwrap().pass);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(ks_compare(&[], |x| x), Err(ValidationError::EmptySample));
    }
}
