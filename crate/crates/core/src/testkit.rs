//! Shared helpers for unit tests.

use crate::config::ThzLinkParams;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = kronrod(f, a, b);
    if err <= tol.max(1e-300) || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, tol / 2.0, depth - 1) + adapt(f, m, b, tol / 2.0, depth - 1)
}

/// Adaptive 7/15-point Gauss–Kronrod quadrature with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

/// 300 GHz, 20 m, 20 dBi antennas, moderate impairments, γ̄ = 40 dB.
pub fn sample_link() -> ThzLinkParams {
    ThzLinkParams {
        frequency_hz: 300e9,
        distance_m: 20.0,
        gain_tx: 100.0,
        gain_rx: 100.0,
        temperature_k: 296.0,
        humidity_pct: 50.0,
        pressure_hpa: 1013.25,
        k_t: 0.1,
        k_r: 0.1,
        avg_snr: 1e4,
    }
}

/// 300 GHz over 100 m with high-gain antennas (`a_l ≈ 0.25`) and γ̄ = 45 dB,
/// so that outage is neither certain nor negligible at γ_th = 1.
pub fn outage_link() -> ThzLinkParams {
    ThzLinkParams {
        distance_m: 100.0,
        gain_tx: 10f64.powf(5.5),
        gain_rx: 10f64.powf(5.5),
        avg_snr: 10f64.powf(4.5),
        ..sample_link()
    }
}

#[test]
fn quadrature_is_accurate() {
    let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-14);
    assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    let v = integrate(|x| -x.ln(), 0.0, 1.0, 1e-12);
    assert!((v - 1.0).abs() < 1e-9);
}
