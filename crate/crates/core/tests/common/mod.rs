#![allow(dead_code)]

use thzra_core::{FadingParams, GammaAbsorption, MisalignmentParams, ThzLinkParams};

/// 300 GHz over 100 m with high-gain antennas, so `a_l ≈ 0.25`.
pub fn link(avg_snr_db: f64) -> ThzLinkParams {
    ThzLinkParams {
        frequency_hz: 300e9,
        distance_m: 100.0,
        gain_tx: 10f64.powf(5.5),
        gain_rx: 10f64.powf(5.5),
        temperature_k: 296.0,
        humidity_pct: 50.0,
        pressure_hpa: 1013.25,
        k_t: 0.1,
        k_r: 0.1,
        avg_snr: 10f64.powf(avg_snr_db / 10.0),
    }
}

/// Gamma absorption with shape `k` and `z = 8.686/(β d_km) = z` at 100 m.
pub fn absorption_for_z(k: f64, z: f64) -> GammaAbsorption {
    GammaAbsorption::new(k, 8.686 / (z * 0.1)).unwrap()
}

pub fn misalignment(rho: f64) -> MisalignmentParams {
    MisalignmentParams::new(rho).unwrap()
}

pub fn alpha_mu(alpha: f64, mu: f64) -> FadingParams {
    FadingParams::alpha_mu(alpha, mu)
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
