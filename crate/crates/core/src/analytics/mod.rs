//! Closed-form statistics of the link and of the access schemes.

pub mod access;
pub mod outage;
pub mod special;

use thiserror::Error;

pub use access::{
    delay_atp, delay_bounds_atp, delay_bounds_ftp, delay_ftp, energy_atp, energy_bounds_atp, energy_bounds_ftp,
    energy_exact, energy_ftp, energy_ftp_closed, energy_gap_bounds, expected_attempts_between_successes,
    expected_collisions_given_failure, expected_delay_exact, harmonic, hoeffding_bound, hoeffding_epsilon,
    AtpEnergyBounds, Bounds, DelayEnergyReport, HoeffdingKind,
};
pub use outage::{
    cdf_snr_no_fading, diversity_order, outage_probability, pdf_snr_no_fading, DiversityOrder, NoFadingModel,
    OutageQuery, OutageValue,
};
pub use special::{gamma_p, gamma_q, gamma_upper_incomplete, ln_gamma};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("degenerate parameters: |z - rho| too small (z = {z}, rho = {rho})")]
    DegenerateParams { z: f64, rho: f64 },
    #[error("closed form requires an integer absorption shape, got k = {0}")]
    NonIntegerShape(f64),
    #[error("series diverges: {0}")]
    DivergentTerm(String),
    #[error("invalid argument {what} = {value}")]
    InvalidArgument { what: &'static str, value: f64 },
    #[error("numerical failure in {what}: raw value {value}")]
    NumericalFailure { what: &'static str, value: f64 },
}
