//! SNR distribution without short-term fading, outage and diversity order.
//!
//! With fading disabled `h = h_l h_p`, and the log-attenuation
//! `T = ln(a_l / h)` is the sum of two independent Gamma variables:
//! `ln(a_l/h_l) ~ Gamma(k, rate z)` from the random absorption and
//! `ln(1/h_p) ~ Gamma(2, rate ρ)` from the pointing error. Outage at
//! threshold γ is `P(T > t)` with `t = ln(a_l / γ_h)`.
//!
//! Writing `c = z − ρ` and `I_n = ∫_0^t l^{n−1} e^{−c l} dl`,
//!
//! ```text
//! P(T > t) = Q(k, z t) + z^k e^{−ρt} / Γ(k) · [ I_k + ρ (t I_k − I_{k+1}) ]
//! f_T(t)   = z^k ρ² e^{−ρt} / Γ(k) · (t I_k − I_{k+1})
//! ```
//!
//! Both brackets are integrals of positive functions. They are evaluated
//! through series with positive terms (a Kummer-type series for `c > 0`, a
//! Poisson-weighted series for `c < 0`), so no cancellation occurs.

use serde::{Deserialize, Serialize};

use super::special::{gamma_q, ln_gamma};
use super::AnalyticsError;
use crate::config::{GammaAbsorption, ThzLinkParams};

/// Smallest `|z − ρ|` accepted by the closed forms.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Tolerance on the raw CDF before clamping to `[0, 1]`.
const CLAMP_SLACK: f64 = 1e-9;

/// Threshold, average SNR and impairment level of one outage evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    pub gamma_th: f64,
    pub gamma_bar: f64,
    pub k_h: f64,
    /// `sqrt(γ_th / (γ̄ (1 − γ_th k_h²)))`; `None` at or above the SNR ceiling.
    pub gamma_h: Option<f64>,
}

impl OutageQuery {
    pub fn new(gamma_th: f64, gamma_bar: f64, k_h: f64) -> Self {
        let slack = 1.0 - gamma_th * k_h * k_h;
        let gamma_h = if slack > 0.0 { Some((gamma_th / (gamma_bar * slack)).sqrt()) } else { None };
        OutageQuery { gamma_th, gamma_bar, k_h, gamma_h }
    }

    pub fn for_link(gamma_th: f64, link: &ThzLinkParams) -> Self {
        Self::new(gamma_th, link.avg_snr, link.k_h())
    }

    pub fn hits_ceiling(&self) -> bool {
        self.gamma_h.is_none()
    }

    /// `dγ_h/dγ = 1 / (2 γ_h γ̄ (1 − γ k_h²)²)`.
    pub fn gamma_h_derivative(&self) -> Option<f64> {
        let gh = self.gamma_h?;
        let slack = 1.0 - self.gamma_th * self.k_h * self.k_h;
        Some(1.0 / (2.0 * gh * self.gamma_bar * slack * slack))
    }
}

/// Outage probability together with the ceiling flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageValue {
    pub probability: f64,
    /// Set when `γ_th k_h² ≥ 1`: the threshold lies above the SNR ceiling and
    /// outage is certain.
    pub ceiling: bool,
}

/// Parameters of the no-fading closed forms for one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoFadingModel {
    pub k: f64,
    pub z: f64,
    pub rho: f64,
    pub a_l: f64,
}

impl NoFadingModel {
    pub fn new(k: f64, z: f64, rho: f64, a_l: f64) -> Result<Self, AnalyticsError> {
        if !(k >= 1.0 && k.fract() == 0.0) {
            return Err(AnalyticsError::NonIntegerShape(k));
        }
        for (what, v) in [("z", z), ("rho", rho), ("a_l", a_l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AnalyticsError::InvalidArgument { what, value: v });
            }
        }
        if (z - rho).abs() < DEGENERACY_TOLERANCE {
            return Err(AnalyticsError::DegenerateParams { z, rho });
        }
        Ok(NoFadingModel { k, z, rho, a_l })
    }

    pub fn from_link(absorption: &GammaAbsorption, rho: f64, link: &ThzLinkParams) -> Result<Self, AnalyticsError> {
        Self::new(absorption.shape, absorption.z(link.distance_km()), rho, link.a_l())
    }

    /// `ln` of the two weighted brackets
    /// `A = z^k e^{−ρt} I_k / Γ(k)` and `B = z^k e^{−ρt} (t I_k − I_{k+1}) / Γ(k)`.
    fn brackets(&self, t: f64) -> (f64, f64) {
        let k = self.k;
        let c = self.z - self.rho;
        let base = k * (self.z * t).ln();
        if c > 0.0 {
            // e^{−x} Σ x^m / Γ(k+m+1) and e^{−x} Σ x^m (m+1) / Γ(k+m+2), x = ct.
            let x = c * t;
            let ln_x = x.ln();
            let mut la = -x - ln_gamma(k + 1.0);
            let (mut sa, mut sb) = (0.0, 0.0);
            let mut m = 0.0;
            loop {
                let a = la.exp();
                let b = a * (m + 1.0) / (k + m + 1.0);
                sa += a;
                sb += b;
                if (m > x && a <= 1e-18 * sa) || m > 1e7 {
                    break;
                }
                m += 1.0;
                la += ln_x - (k + m).ln();
            }
            (base - self.rho * t + sa.ln(), base + t.ln() - self.rho * t + sb.ln())
        } else {
            // Poisson(y) weights, y = −ct.
            let y = -c * t;
            let ln_y = y.ln();
            let mut lp = -y;
            let (mut sa, mut sb) = (0.0, 0.0);
            let mut m = 0.0;
            loop {
                let p = lp.exp();
                let a = p / (k + m);
                sa += a;
                sb += a / (k + m + 1.0);
                if (m > y && a <= 1e-18 * sa) || m > 1e7 {
                    break;
                }
                m += 1.0;
                lp += ln_y - m.ln();
            }
            let pre = base - self.z * t - ln_gamma(k);
            (pre + sa.ln(), pre + t.ln() + sb.ln())
        }
    }

    /// `P(T > t)`, i.e. `P(h < a_l e^{−t})`.
    pub fn tail_log_attenuation(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let (la, lb) = self.brackets(t);
        gamma_q(self.k, self.z * t) + la.exp() + self.rho * lb.exp()
    }

    /// Density of `T = ln(a_l / h)`.
    pub fn log_attenuation_pdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (_, lb) = self.brackets(t);
        self.rho * self.rho * lb.exp()
    }

    /// `P(h ≤ x)` for the composite gain `h = h_l h_p`.
    pub fn gain_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.tail_log_attenuation((self.a_l / x).ln())
    }

    pub fn gain_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.a_l {
            return 0.0;
        }
        self.log_attenuation_pdf((self.a_l / x).ln()) / x
    }

    /// `F_γ(γ_th)` with range checking of the raw value.
    pub fn snr_cdf(&self, q: &OutageQuery) -> Result<OutageValue, AnalyticsError> {
        if !(q.gamma_th > 0.0) {
            return Ok(OutageValue { probability: 0.0, ceiling: false });
        }
        let Some(gamma_h) = q.gamma_h else {
            return Ok(OutageValue { probability: 1.0, ceiling: true });
        };
        let raw = self.gain_cdf(gamma_h);
        if !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&raw) {
            return Err(AnalyticsError::NumericalFailure { what: "no-fading SNR CDF", value: raw });
        }
        Ok(OutageValue { probability: raw.clamp(0.0, 1.0), ceiling: false })
    }

    /// `f_γ(γ) = f_h(γ_h) dγ_h/dγ` with `γ = q.gamma_th`.
    pub fn snr_pdf(&self, q: &OutageQuery) -> f64 {
        match (q.gamma_h, q.gamma_h_derivative()) {
            (Some(gh), Some(dgh)) if q.gamma_th > 0.0 => self.gain_pdf(gh) * dgh,
            _ => 0.0,
        }
    }
}

/// CDF of the SNR without short-term fading, evaluated at `q.gamma_th`.
pub fn cdf_snr_no_fading(
    q: &OutageQuery,
    absorption: &GammaAbsorption,
    rho: f64,
    link: &ThzLinkParams,
) -> Result<OutageValue, AnalyticsError> {
    NoFadingModel::from_link(absorption, rho, link)?.snr_cdf(q)
}

/// Density of the SNR without short-term fading, evaluated at `q.gamma_th`.
pub fn pdf_snr_no_fading(
    q: &OutageQuery,
    absorption: &GammaAbsorption,
    rho: f64,
    link: &ThzLinkParams,
) -> Result<f64, AnalyticsError> {
    Ok(NoFadingModel::from_link(absorption, rho, link)?.snr_pdf(q))
}

/// Probability that the SNR falls below `q.gamma_th`.
pub fn outage_probability(
    q: &OutageQuery,
    absorption: &GammaAbsorption,
    rho: f64,
    link: &ThzLinkParams,
) -> Result<OutageValue, AnalyticsError> {
    cdf_snr_no_fading(q, absorption, rho, link)
}

/// High-SNR outage exponents of fading, pointing error and absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityOrder {
    pub fading: f64,
    pub misalignment: f64,
    pub absorption: f64,
    pub effective: f64,
}

impl DiversityOrder {
    pub fn set(&self) -> [f64; 3] {
        [self.fading, self.misalignment, self.absorption]
    }
}

/// `{αμ/2, ρ/2, z/2}` and their minimum. Pass `alpha = ∞` when fading is
/// disabled.
pub fn diversity_order(alpha: f64, mu: f64, rho: f64, z: f64) -> DiversityOrder {
    let fading = alpha * mu / 2.0;
    let misalignment = rho / 2.0;
    let absorption = z / 2.0;
    DiversityOrder { fading, misalignment, absorption, effective: fading.min(misalignment).min(absorption) }
}
