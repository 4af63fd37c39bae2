//! Monte Carlo outage curves and high-SNR slope regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::channel::{ChannelModel, ChannelStreams};
use crate::config::db_to_linear;
use crate::rng::SeedTree;

/// Two-sided 95 % normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Draws per independent stream; also the unit of parallel work.
pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub gamma_bar_db: f64,
    pub n: u64,
    pub outages: u64,
    pub p_hat: f64,
    /// 95 % Wilson interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Counts `γ < γ_th` in `n` draws at each average SNR of `grid_db`.
///
/// Grid point `i` uses the sub-tree `tree.child(i)` and chunk `c` of it the
/// streams of trial `c`, so results are independent of scheduling.
pub fn outage_mc(model: &ChannelModel, gamma_th: f64, grid_db: &[f64], n: u64, tree: &SeedTree) -> Vec<OutagePoint> {
    let chunks = n.div_ceil(CHUNK);
    let jobs: Vec<(usize, u64)> = (0..grid_db.len()).flat_map(|i| (0..chunks).map(move |c| (i, c))).collect();
    let counts: Vec<u64> = jobs
        .par_iter()
        .map(|&(i, c)| {
            let m = model.with_avg_snr(db_to_linear(grid_db[i]));
            let mut streams = ChannelStreams::new(&tree.child(i as u64), c);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).filter(|_| m.draw(&mut streams).gamma < gamma_th).count() as u64
        })
        .collect();
    grid_db
        .iter()
        .enumerate()
        .map(|(i, &db)| {
            let outages: u64 = counts[i * chunks as usize..(i + 1) * chunks as usize].iter().sum();
            let (ci_lo, ci_hi) = wilson_interval(outages, n, Z95);
            OutagePoint { gamma_bar_db: db, n, outages, p_hat: outages as f64 / n as f64, ci_lo, ci_hi }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `−d log10 P̂ / d(γ̄_dB / 10)`, i.e. the diversity-order estimate.
    pub slope: f64,
    pub std_err: f64,
    pub intercept: f64,
    pub n_points: usize,
}

pub const MIN_TAIL_POINTS: usize = 4;

/// Least-squares slope of `log10 P̂` against `γ̄_dB/10` over the points inside
/// `window` (dB, inclusive) with `P̂ < 0.1` and a CI narrower than half a
/// decade.
pub fn slope_fit(points: &[OutagePoint], window: Option<(f64, f64)>) -> Result<SlopeFit, ValidationError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| window.is_none_or(|(lo, hi)| p.gamma_bar_db >= lo && p.gamma_bar_db <= hi))
        .filter(|p| p.outages > 0 && p.p_hat < 0.1 && p.ci_lo > 0.0 && (p.ci_hi / p.ci_lo).log10() < 0.5)
        .map(|p| (p.gamma_bar_db / 10.0, p.p_hat.log10()))
        .collect();
    let n = usable.len();
    if n < MIN_TAIL_POINTS {
        return Err(ValidationError::InsufficientTail { found: n, needed: MIN_TAIL_POINTS });
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = usable.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let std_err = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope: -b, std_err, intercept: a, n_points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(db: f64, p: f64, n: u64) -> OutagePoint {
        let outages = (p * n as f64).round() as u64;
        let (ci_lo, ci_hi) = wilson_interval(outages, n, Z95);
        OutagePoint { gamma_bar_db: db, n, outages, p_hat: outages as f64 / n as f64, ci_lo, ci_hi }
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 1000, Z95);
        // scipy's Wilson interval for 30/1000.
        assert!((lo - 0.021_093_738_828_834_696).abs() < 1e-14);
        assert!((hi - 0.042_503_414_147_587_126).abs() < 1e-14);
        let (lo, _) = wilson_interval(0, 1000, Z95);
        assert!(lo < 1e-15);
    }

    #[test]
    fn recovers_exact_power_law() {
        let pts: Vec<_> = (0..8)
            .map(|i| {
                let db = 30.0 + 5.0 * i as f64;
                point(db, 0.05 * 10f64.powf(-1.5 * (db - 30.0) / 10.0), 100_000_000)
            })
            .collect();
        let fit = slope_fit(&pts, None).unwrap();
        assert!((fit.slope - 1.5).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn insufficient_tail() {
        let pts = vec![point(10.0, 0.5, 1000), point(20.0, 0.2, 1000), point(30.0, 0.05, 1000)];
        assert!(matches!(slope_fit(&pts, None), Err(ValidationError::InsufficientTail { found: 1, .. })));
    }
}
