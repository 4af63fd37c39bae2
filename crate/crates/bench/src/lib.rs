//! Shared fixtures for the criterion benchmarks.

use thzra_core::{AbsorptionModel, ChannelModel, FadingParams, GammaAbsorption, MisalignmentParams, ThzLinkParams};

/// 300 GHz over 100 m, 55 dBi antennas, γ̄ = 45 dB.
pub fn reference_link() -> ThzLinkParams {
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
        avg_snr: 10f64.powf(4.5),
    }
}

/// `k = 3`, `z = 8` at 100 m.
pub fn reference_absorption() -> GammaAbsorption {
    GammaAbsorption::new(3.0, 10.8575).unwrap()
}

pub fn fading(alpha: f64, eta: f64, kappa: f64, mu: f64) -> FadingParams {
    FadingParams { alpha, eta, kappa, mu, enabled: true, ..FadingParams::default() }
}

pub fn channel(fading: &FadingParams) -> ChannelModel {
    ChannelModel::new(
        &reference_link(),
        &AbsorptionModel::GammaRandom(reference_absorption()),
        fading,
        &MisalignmentParams::new(4.0).unwrap(),
    )
    .unwrap()
}
