//! Delay and energy of frame collection under FTP and ATP, their bounds and
//! concentration inequalities.
//!
//! Delay is counted in slots and energy in transmissions (one unit per packet
//! sent, collisions included).

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, EULER_GAMMA};
use std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn scaled(self, factor: f64) -> Bounds {
        Bounds { lower: self.lower * factor, upper: self.upper * factor }
    }
}

/// Exact value of a delay or energy quantity with its bracket and the
/// leading-order scaling expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEnergyReport {
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
    pub scaling_reference: f64,
}

impl DelayEnergyReport {
    pub fn delay_ftp(k: u64) -> Result<Self, AnalyticsError> {
        let b = delay_bounds_ftp(k)?;
        let kf = k as f64;
        Ok(Self { exact: delay_ftp(k), lower: b.lower, upper: b.upper, scaling_reference: kf * kf.ln() })
    }

    pub fn delay_atp(k: u64) -> Result<Self, AnalyticsError> {
        let b = delay_bounds_atp(k)?;
        Ok(Self { exact: delay_atp(k), lower: b.lower, upper: b.upper, scaling_reference: k as f64 * E })
    }

    pub fn energy_ftp(k: u64) -> Result<Self, AnalyticsError> {
        let b = energy_bounds_ftp(k)?;
        Ok(Self { exact: energy_ftp(k), lower: b.lower, upper: b.upper, scaling_reference: k as f64 * (E - 1.0) })
    }

    /// Total-energy form of the ATP bracket.
    pub fn energy_atp(k: u64) -> Result<Self, AnalyticsError> {
        let b = energy_bounds_atp(k)?.total;
        Ok(Self { exact: energy_atp(k), lower: b.lower, upper: b.upper, scaling_reference: k as f64 * E })
    }
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

fn check_probability(p: f64) -> Result<(), AnalyticsError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidArgument { what: "p", value: p })
    }
}

fn require_k(k: u64, min: u64) -> Result<(), AnalyticsError> {
    if k >= min {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidArgument { what: "K", value: k as f64 })
    }
}

/// `H_K = Σ_{k=1..K} 1/k`.
pub fn harmonic(k: u64) -> f64 {
    compensated_sum((1..=k).rev().map(|i| 1.0 / i as f64))
}

/// `Σ_{k=1..K} 1 / (k p (1-p)^{k-1})`.
pub fn expected_delay_exact(k: u64, p: f64) -> Result<f64, AnalyticsError> {
    check_probability(p)?;
    if p == 1.0 && k >= 2 {
        return Err(AnalyticsError::DivergentTerm(format!("p = 1 with K = {k} collides forever")));
    }
    let log_q = (-p).ln_1p();
    Ok(compensated_sum((1..=k).map(|i| {
        if i == 1 {
            return 1.0 / p;
        }
        let kf = i as f64;
        1.0 / (kf * p * ((kf - 1.0) * log_q).exp())
    })))
}

/// Expected slots for FTP with `p = 1/K`, written with `r = 1 - 1/K` as
/// `(K-1) Σ 1 / (k r^k)`.
pub fn delay_ftp(k: u64) -> f64 {
    if k <= 1 {
        return k as f64;
    }
    let kf = k as f64;
    let log_r = (-1.0 / kf).ln_1p();
    (kf - 1.0) * compensated_sum((1..=k).map(|i| 1.0 / (i as f64 * (i as f64 * log_r).exp())))
}

/// `(k/(k-1))^{k-1}`, with the lone-user term equal to 1.
fn atp_term(i: u64) -> f64 {
    if i <= 1 {
        return 1.0;
    }
    let kf = i as f64;
    (-(kf - 1.0) * (-1.0 / kf).ln_1p()).exp()
}

/// Expected slots for ATP: `Σ_{k=1..K} (k/(k-1))^{k-1}`.
pub fn delay_atp(k: u64) -> f64 {
    compensated_sum((1..=k).map(atp_term))
}

/// FTP delay bracket, valid for `K ≥ 3`.
pub fn delay_bounds_ftp(k: u64) -> Result<Bounds, AnalyticsError> {
    require_k(k, 3)?;
    let kf = k as f64;
    let ln_k = kf.ln();
    Ok(Bounds {
        lower: (kf - 1.0) * (ln_k + 1.0 / (1.0 + 2.0 * kf) + EULER_GAMMA + 1.0),
        upper: (kf - 1.0) * (ln_k + 1.0 / (kf * (kf - 1.0)) + kf / (kf - 1.0) * E + 1.0),
    })
}

/// ATP delay bracket, valid for `K ≥ 2`.
pub fn delay_bounds_atp(k: u64) -> Result<Bounds, AnalyticsError> {
    require_k(k, 2)?;
    let kf = k as f64;
    Ok(Bounds { lower: kf * E - E * (EULER_GAMMA + kf.ln() + 1.0 / (2.0 * kf)), upper: kf * E })
}

/// Expected number of packets lost to collision in a slot with `k`
/// contenders: `kp − kp(1−p)^{k−1}`.
pub fn expected_collisions_given_failure(k: u64, p: f64) -> f64 {
    let kf = k as f64;
    kf * p - kf * p * (1.0 - p).powf(kf - 1.0)
}

/// Mean number of slots until the next success, `1/P_s` with
/// `P_s = kp(1−p)^{k−1}`.
pub fn expected_attempts_between_successes(k: u64, p: f64) -> Result<f64, AnalyticsError> {
    let kf = k as f64;
    let ps = kf * p * (1.0 - p).powf(kf - 1.0);
    if ps > 0.0 && ps <= 1.0 {
        Ok(1.0 / ps)
    } else {
        Err(AnalyticsError::DivergentTerm(format!("success probability {ps} for k = {k}, p = {p}")))
    }
}

/// Expected transmissions: `Σ_{k=1..K} (1−p)^{−(k−1)}`.
pub fn energy_exact(k: u64, p: f64) -> Result<f64, AnalyticsError> {
    check_probability(p)?;
    if p == 1.0 && k >= 2 {
        return Err(AnalyticsError::DivergentTerm(format!("p = 1 with K = {k} collides forever")));
    }
    let log_q = (-p).ln_1p();
    Ok(compensated_sum((1..=k).map(|i| if i == 1 { 1.0 } else { (-(i as f64 - 1.0) * log_q).exp() })))
}

/// Expected FTP transmissions: `(K−1)/K Σ_{k=1..K} r^{−k}`.
pub fn energy_ftp(k: u64) -> f64 {
    if k <= 1 {
        return k as f64;
    }
    let kf = k as f64;
    let log_r = (-1.0 / kf).ln_1p();
    (kf - 1.0) / kf * compensated_sum((1..=k).map(|i| 1.0 / (i as f64 * log_r).exp()))
}

/// Geometric closed form `(K−1)(r^{−K} − 1)` of [`energy_ftp`].
pub fn energy_ftp_closed(k: u64) -> f64 {
    if k <= 1 {
        return k as f64;
    }
    let kf = k as f64;
    let log_r = (-1.0 / kf).ln_1p();
    (kf - 1.0) * (-kf * log_r).exp_m1()
}

/// Expected ATP transmissions; the series coincides with [`delay_atp`].
pub fn energy_atp(k: u64) -> f64 {
    delay_atp(k)
}

/// FTP energy bracket, valid for `K ≥ 3`. The upper end is
/// `(K−1)(e(K−1)/(K−2) − 1)`, which grows linearly in `K`.
pub fn energy_bounds_ftp(k: u64) -> Result<Bounds, AnalyticsError> {
    require_k(k, 3)?;
    let kf = k as f64;
    Ok(Bounds { lower: 1.5 * kf - 1.0 / (2.0 * kf) - 1.0, upper: (kf - 1.0) * (E * (kf - 1.0) / (kf - 2.0) - 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtpEnergyBounds {
    /// Bracket on `E_ATP / K`.
    pub per_user: Bounds,
    /// Bracket on `E_ATP`.
    pub total: Bounds,
}

/// ATP energy bracket, valid for `K ≥ 2`.
pub fn energy_bounds_atp(k: u64) -> Result<AtpEnergyBounds, AnalyticsError> {
    require_k(k, 2)?;
    let kf = k as f64;
    let per_user = Bounds { lower: E - E / kf * (EULER_GAMMA + kf.ln() + 1.0 / (2.0 * kf)), upper: E };
    Ok(AtpEnergyBounds { per_user, total: per_user.scaled(kf) })
}

/// Bracket on `E_ATP − E_FTP`, valid for `K ≥ 3`:
/// `(e−1)H_K + K − e(K−1)²/(K−2) − 1 < ΔE < Ke − 3K/2 + 1/(2K) + 1`.
pub fn energy_gap_bounds(k: u64) -> Result<Bounds, AnalyticsError> {
    require_k(k, 3)?;
    let kf = k as f64;
    Ok(Bounds {
        lower: (E - 1.0) * harmonic(k) + kf - E * (kf - 1.0) * (kf - 1.0) / (kf - 2.0) - 1.0,
        upper: kf * E - 1.5 * kf + 1.0 / (2.0 * kf) + 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoeffdingKind {
    Delay,
    Energy,
}

/// Tail bound on the deviation of an `n`-sample mean:
/// `2 exp(−2ε²/n)` for delay and `2 exp(−2ε²/(n(n−1)²))` for energy.
/// The energy form is vacuous (returns 2) at `n = 1`.
pub fn hoeffding_bound(epsilon: f64, n: u64, kind: HoeffdingKind) -> f64 {
    let nf = n.max(1) as f64;
    let denom = match kind {
        HoeffdingKind::Delay => nf,
        HoeffdingKind::Energy => nf * (nf - 1.0) * (nf - 1.0),
    };
    if denom == 0.0 {
        return 2.0;
    }
    2.0 * (-2.0 * epsilon * epsilon / denom).exp()
}

/// Smallest `ε` at which [`hoeffding_bound`] equals `level`.
pub fn hoeffding_epsilon(level: f64, n: u64, kind: HoeffdingKind) -> f64 {
    let nf = n.max(1) as f64;
    let denom = match kind {
        HoeffdingKind::Delay => nf,
        HoeffdingKind::Energy => nf * (nf - 1.0) * (nf - 1.0),
    };
    (denom * (2.0 / level).ln() / 2.0).max(0.0).sqrt()
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::type_complexity)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn small_cases_by_hand() {
        assert_eq!(expected_delay_exact(1, 1.0).unwrap(), 1.0);
        assert_eq!(expected_delay_exact(2, 0.5).unwrap(), 4.0);
        assert!(matches!(expected_delay_exact(2, 1.0), Err(AnalyticsError::DivergentTerm(_))));
        assert_eq!(delay_ftp(1), 1.0);
        assert!(rel(delay_ftp(2), 4.0) < 1e-15);
        assert_eq!(delay_atp(1), 1.0);
        assert!(rel(delay_atp(2), 3.0) < 1e-15);
        assert_eq!(energy_exact(1, 0.3).unwrap(), 1.0);
        assert_eq!(energy_exact(2, 0.5).unwrap(), 3.0);
        assert!(rel(energy_ftp(2), 3.0) < 1e-15);
        assert!(rel(energy_atp(2), 3.0) < 1e-15);
        assert_eq!(delay_ftp(0), 0.0);
        assert_eq!(delay_atp(0), 0.0);
    }

    #[test]
    fn frozen_series_values() {
        // 40-digit evaluations of the same finite sums.
        let cases: [(fn(u64) -> f64, u64, f64); 9] = [
            (delay_ftp, 10, 39.434_865_850_444_403),
            (delay_atp, 10, 22.765_181_994_816_741),
            (energy_ftp, 10, 16.811_747_917_131_972),
            (delay_ftp, 40, 219.478_393_122_528_88),
            (delay_atp, 40, 102.471_143_085_829_64),
            (energy_ftp, 40, 68.369_264_738_684_053),
            (delay_ftp, 1000, 8_795.787_871_507_159_2),
            (delay_atp, 1000, 2_707.660_330_949_151_8),
            (energy_ftp, 1000, 1_717.922_574_226_407_5),
        ];
        for (f, k, v) in cases {
            assert!(rel(f(k), v) < 1e-13, "K={k}: {} vs {v}", f(k));
        }
    }

    #[test]
    fn fixed_probability_identities() {
        for k in 2..=200u64 {
            let p = 1.0 / k as f64;
            assert!(rel(delay_ftp(k), expected_delay_exact(k, p).unwrap()) < 1e-12);
            assert!(rel(energy_ftp(k), energy_exact(k, p).unwrap()) < 1e-12);
            assert!(rel(energy_ftp(k), energy_ftp_closed(k)) < 1e-12);
        }
    }

    #[test]
    fn lemma_brackets_at_reference_points() {
        let b = delay_bounds_ftp(10).unwrap();
        assert!(rel(b.lower, 35.346_778_249_631_635) < 1e-13);
        assert!(rel(b.upper, 57.006_084_121_536_864) < 1e-13);
        assert!(b.contains(delay_ftp(10)));
        assert!(rel(delay_bounds_atp(40).unwrap().upper, 108.731_273_138_361_81) < 1e-14);
        let b = energy_bounds_ftp(40).unwrap();
        assert!(rel(b.lower, 58.9875) < 1e-14);
        assert!(rel(b.upper, 69.802_806_870_689_679) < 1e-13);
        let b = energy_bounds_atp(40).unwrap().total;
        assert!(rel(b.lower, 97.100_845_775_008_494) < 1e-13);
        assert!(rel(b.upper, 108.731_273_138_361_81) < 1e-13);
        let gap = energy_atp(40) - energy_ftp(40);
        assert!(rel(gap, 34.101_878_347_145_586) < 1e-12);
        assert!(energy_gap_bounds(40).unwrap().contains(gap));
        assert!(delay_bounds_ftp(2).is_err());
        assert!(delay_bounds_atp(1).is_err());
    }

    #[test]
    fn relative_energy_gain_tends_to_one_over_e() {
        let g = (energy_atp(1000) - energy_ftp(1000)) / energy_atp(1000);
        assert!(rel(g, 0.365_532_465_579_166_08) < 1e-12);
        assert!((g - 1.0 / E).abs() < 0.05);
    }

    #[test]
    fn collisions_and_attempts() {
        assert_eq!(expected_collisions_given_failure(2, 1.0), 2.0);
        assert_eq!(expected_collisions_given_failure(1, 0.3), 0.0);
        assert!(rel(expected_collisions_given_failure(3, 1.0 / 3.0), 1.0 - 4.0 / 9.0) < 1e-15);
        assert_eq!(expected_attempts_between_successes(1, 1.0).unwrap(), 1.0);
        assert_eq!(expected_attempts_between_successes(2, 0.5).unwrap(), 2.0);
        assert!(expected_attempts_between_successes(2, 1.0).is_err());
    }

    #[test]
    fn hoeffding_shape() {
        assert_eq!(hoeffding_bound(0.0, 10, HoeffdingKind::Delay), 2.0);
        assert_eq!(hoeffding_bound(3.0, 1, HoeffdingKind::Energy), 2.0);
        let mut prev = 2.0;
        for i in 1..100 {
            let b = hoeffding_bound(i as f64 * 0.1, 10, HoeffdingKind::Delay);
            assert!(b < prev);
            prev = b;
        }
        for kind in [HoeffdingKind::Delay, HoeffdingKind::Energy] {
            let eps = hoeffding_epsilon(0.1, 50, kind);
            assert!((hoeffding_bound(eps, 50, kind) - 0.1).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn atp_beats_ftp_on_delay_and_loses_on_energy(k in 3u64..3000) {
            prop_assert!(delay_atp(k) < delay_ftp(k));
            prop_assert!(energy_atp(k) > energy_ftp(k));
        }

        #[test]
        fn delay_is_decreasing_in_p_near_optimum(k in 2u64..200, scale in 0.2f64..0.95) {
            // The optimum of a fixed p for K users lies at or above 1/K.
            let p0 = scale / k as f64;
            let p1 = 1.0 / k as f64;
            prop_assert!(expected_delay_exact(k, p0).unwrap() > expected_delay_exact(k, p1).unwrap());
        }

        #[test]
        fn energy_increasing_in_p(k in 2u64..300, s in 0.01f64..3.0, ds in 0.001f64..0.5) {
            let p = s / k as f64;
            let p2 = (s + ds) / k as f64;
            prop_assert!(energy_exact(k, p).unwrap() < energy_exact(k, p2).unwrap());
        }
    }
}
