//! Molecular absorption: the deterministic water-vapour fit and the
//! Gamma-distributed random model, and the path gain they induce.

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::ChannelError;
use crate::analytics::special::gamma_q;
use crate::config::{AbsorptionProfile, GammaAbsorption, ThzLinkParams, SPEED_OF_LIGHT};

/// Buck's saturation vapour pressure over water (hPa), with the pressure
/// enhancement factor. `temperature_k` in kelvin, `pressure_hpa` in hPa.
pub fn buck_saturation_pressure(temperature_k: f64, pressure_hpa: f64) -> Result<f64, ChannelError> {
    if !(temperature_k > 200.0 && temperature_k < 350.0) {
        return Err(ChannelError::OutOfRange { what: "temperature (K), valid on (200, 350)", value: temperature_k });
    }
    if !(pressure_hpa > 0.0) {
        return Err(ChannelError::OutOfRange { what: "pressure (hPa)", value: pressure_hpa });
    }
    let t_c = temperature_k - 273.15;
    let enhancement = 1.0007 + 3.46e-6 * pressure_hpa;
    Ok(6.1121 * enhancement * (17.502 * t_c / (240.97 + t_c)).exp())
}

const BUILTIN_PROFILE: &str = include_str!("../../profiles/water_vapour_275_400ghz.profile");

/// The shipped 275–400 GHz coefficient set.
pub fn builtin_profile() -> AbsorptionProfile {
    static PROFILE: OnceLock<AbsorptionProfile> = OnceLock::new();
    PROFILE.get_or_init(|| parse_profile(BUILTIN_PROFILE).expect("shipped profile parses")).clone()
}

pub fn load_profile(path: &Path) -> Result<AbsorptionProfile, ChannelError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ChannelError::ProfileMissing(format!("{}: {e}", path.display())))?;
    parse_profile(&text)
}

/// Parses `key = value` lines. A `# units:` header line is mandatory; other
/// `#` lines are comments. All sixteen coefficients must be present.
pub fn parse_profile(text: &str) -> Result<AbsorptionProfile, ChannelError> {
    let mut values: [Option<f64>; 16] = [None; 16];
    let mut saw_units = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim_start().starts_with("units:") {
                saw_units = true;
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ChannelError::ProfileMalformed(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| {
            ChannelError::ProfileMalformed(format!("line {}: `{}` is not a number", lineno + 1, value.trim()))
        })?;
        let slot = profile_slot(key)
            .ok_or_else(|| ChannelError::ProfileMalformed(format!("line {}: unknown key `{key}`", lineno + 1)))?;
        if values[slot].replace(value).is_some() {
            return Err(ChannelError::ProfileMalformed(format!("duplicate key `{key}`")));
        }
    }
    if !saw_units {
        return Err(ChannelError::ProfileMalformed("missing `# units:` header".into()));
    }
    let mut flat = [0.0; 16];
    for (i, v) in values.iter().enumerate() {
        flat[i] = v.ok_or_else(|| ChannelError::ProfileMissing(format!("key `{}` absent", slot_name(i))))?;
    }
    let mut q = [0.0; 10];
    q.copy_from_slice(&flat[..10]);
    let mut poly = [0.0; 4];
    poly.copy_from_slice(&flat[12..]);
    Ok(AbsorptionProfile { q, line_centers: [flat[10], flat[11]], poly })
}

fn profile_slot(key: &str) -> Option<usize> {
    (0..16).find(|&i| slot_name(i) == key)
}

fn slot_name(i: usize) -> String {
    match i {
        0..=9 => format!("q{}", i + 1),
        10 | 11 => format!("p{}", i - 9),
        _ => format!("c{}", i - 11),
    }
}

/// Renders a profile in the file format accepted by [`parse_profile`].
pub fn format_profile(p: &AbsorptionProfile) -> String {
    let mut out = String::from(
        "# units: q1..q10 dimensionless; p1 p2 cm^-1; c1 1/(m Hz^3); c2 1/(m Hz^2); c3 1/(m Hz); c4 1/m\n",
    );
    let flat: Vec<f64> = p.q.iter().chain(&p.line_centers).chain(&p.poly).copied().collect();
    for (i, v) in flat.iter().enumerate() {
        out.push_str(&format!("{} = {:e}\n", slot_name(i), v));
    }
    out
}

/// Volume mixing ratio of water vapour, `(ψ/100) p_w(T,p) / p`.
pub fn water_vapour_ratio(link: &ThzLinkParams) -> Result<f64, ChannelError> {
    let p_w = buck_saturation_pressure(link.temperature_k, link.pressure_hpa)?;
    Ok(link.humidity_pct / 100.0 * p_w / link.pressure_hpa)
}

/// Deterministic absorption coefficient ζ (1/m) at the link's frequency and
/// atmosphere. Two resonance terms plus the cubic tail; the tail is a band
/// fit and can dip below zero outside it, so the result is floored at zero.
pub fn absorption_deterministic(link: &ThzLinkParams, profile: &AbsorptionProfile) -> Result<f64, ChannelError> {
    let v = water_vapour_ratio(link)?;
    Ok(absorption_coefficient(link.frequency_hz, v, profile).max(0.0))
}

/// Raw fit value for a given mixing ratio (may be negative off-band).
pub fn absorption_coefficient(frequency_hz: f64, v: f64, profile: &AbsorptionProfile) -> f64 {
    let q = &profile.q;
    let wavenumber = frequency_hz / (100.0 * SPEED_OF_LIGHT);
    let line = |a: f64, b: f64, c: f64, d: f64, e: f64, center: f64| {
        let width = d * v + e;
        let detune = wavenumber - center;
        a * v * (b * v + c) / (width * width + detune * detune)
    };
    let [c1, c2, c3, c4] = profile.poly;
    let f = frequency_hz;
    line(q[0], q[1], q[2], q[3], q[4], profile.line_centers[0])
        + line(q[5], q[6], q[7], q[8], q[9], profile.line_centers[1])
        + ((c1 * f + c2) * f + c3) * f
        + c4
}

/// Draws the absorption coefficient in dB/km.
pub fn sample_absorption_db<R: Rng + ?Sized>(model: &GammaAbsorption, rng: &mut R) -> f64 {
    // Parameters were validated upstream.
    Gamma::new(model.shape, model.scale_db_per_km).expect("validated gamma parameters").sample(rng)
}

/// `h_l = a_l exp(-½ ζ_dB d_km / 4.343)`.
pub fn path_gain_from_absorption(zeta_db_per_km: f64, link: &ThzLinkParams) -> f64 {
    link.a_l() * (-0.5 * zeta_db_per_km * link.distance_km() / 4.343).exp()
}

/// `h_l = a_l exp(-½ ζ d)` for ζ in 1/m.
pub fn path_gain_deterministic(zeta_per_m: f64, link: &ThzLinkParams) -> f64 {
    link.a_l() * (-0.5 * zeta_per_m * link.distance_m).exp()
}

/// Density of the path gain under Gamma absorption:
/// `z^k a_l^{-z} / Γ(k) · ln(a_l/h)^{k-1} · h^{z-1}` on `(0, a_l]`.
pub fn path_gain_pdf(h_l: f64, model: &GammaAbsorption, link: &ThzLinkParams) -> Result<f64, ChannelError> {
    let a_l = link.a_l();
    if !(h_l > 0.0 && h_l <= a_l) {
        return Err(ChannelError::Domain { what: "path gain outside (0, a_l]", value: h_l });
    }
    let k = model.shape;
    let z = model.z(link.distance_km());
    let log_ratio = (a_l / h_l).ln();
    if log_ratio == 0.0 {
        return Ok(if k > 1.0 {
            0.0
        } else if k == 1.0 {
            z / a_l
        } else {
            f64::INFINITY
        });
    }
    // Work in logs; a_l^{-z} and h^{z-1} under/overflow separately for large z.
    let ln_pdf = k * z.ln() - z * a_l.ln() - crate::analytics::special::ln_gamma(k)
        + (k - 1.0) * log_ratio.ln()
        + (z - 1.0) * h_l.ln();
    Ok(ln_pdf.exp())
}

/// `P(h_l ≤ x) = Q(k, z ln(a_l/x))`.
pub fn path_gain_cdf(x: f64, model: &GammaAbsorption, link: &ThzLinkParams) -> f64 {
    let a_l = link.a_l();
    if x <= 0.0 {
        return 0.0;
    }
    if x >= a_l {
        return 1.0;
    }
    gamma_q(model.shape, model.z(link.distance_km()) * (a_l / x).ln())
}
