//! Antenna pointing errors.
//!
//! The gain `h_p` has density `-ρ² ln(x) x^{ρ-1}` on `(0, 1)`. With
//! `w = x^ρ` this becomes `-ln w` on `(0, 1)`, the law of a product of two
//! independent uniforms, so `(U V)^{1/ρ}` samples it exactly.

use rand::Rng;
use rand_distr::Open01;

use super::ChannelError;

pub fn sample_misalignment<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v: f64 = rng.sample(Open01);
    (u * v).powf(1.0 / rho)
}

pub fn misalignment_pdf(x: f64, rho: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -rho * rho * x.ln() * x.powf(rho - 1.0)
}

/// `P(h_p ≤ x) = x^ρ (1 − ρ ln x)`.
pub fn misalignment_cdf(x: f64, rho: f64) -> Result<f64, ChannelError> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(ChannelError::Domain { what: "misalignment gain outside (0, 1]", value: x });
    }
    Ok(x.powf(rho) * (1.0 - rho * x.ln()))
}
