//! Random channel components and the hardware-impaired SNR.

pub mod absorption;
pub mod fading;
pub mod misalignment;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AbsorptionModel, FadingParams, MisalignmentParams, ThzLinkParams};
use crate::rng::{Component, SeedTree, SimRng};

pub use absorption::{
    absorption_deterministic, buck_saturation_pressure, path_gain_cdf, path_gain_from_absorption, path_gain_pdf,
    sample_absorption_db,
};
pub use fading::{sample_fading, FadingSampler};
pub use misalignment::{misalignment_cdf, misalignment_pdf, sample_misalignment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("absorption profile missing: {0}")]
    ProfileMissing(String),
    #[error("absorption profile malformed: {0}")]
    ProfileMalformed(String),
    #[error("{what}: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("unsupported fading parameters: {0}")]
    UnsupportedParams(String),
}

/// One realisation of every channel component for a single link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub h_l: f64,
    pub h_f: f64,
    pub h_p: f64,
    pub h: f64,
    pub gamma: f64,
}

/// `γ = γ̄ h² / (k_h² γ̄ h² + 1)`.
pub fn impaired_snr(h: f64, avg_snr: f64, k_h: f64) -> f64 {
    let s = avg_snr * h * h;
    s / (k_h * k_h * s + 1.0)
}

/// Independent generators for the three random components of one link.
#[derive(Debug, Clone)]
pub struct ChannelStreams {
    pub absorption: SimRng,
    pub fading: SimRng,
    pub misalignment: SimRng,
}

impl ChannelStreams {
    pub fn new(tree: &SeedTree, trial: u64) -> Self {
        ChannelStreams {
            absorption: tree.stream(trial, Component::Absorption),
            fading: tree.stream(trial, Component::Fading),
            misalignment: tree.stream(trial, Component::Misalignment),
        }
    }
}

#[derive(Debug, Clone)]
enum PathLoss {
    Fixed(f64),
    Random { gamma: Gamma<f64>, a_l: f64, exponent_per_db: f64 },
}

/// Validated channel parameters with everything that does not change between
/// draws precomputed.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    path: PathLoss,
    fading: Option<FadingSampler>,
    rho: f64,
    avg_snr: f64,
    k_h: f64,
}

impl ChannelModel {
    pub fn new(
        link: &ThzLinkParams,
        absorption: &AbsorptionModel,
        fading: &FadingParams,
        misalignment: &MisalignmentParams,
    ) -> Result<Self, ChannelError> {
        let path = match absorption {
            AbsorptionModel::Deterministic(profile) => {
                let zeta = absorption_deterministic(link, profile)?;
                PathLoss::Fixed(absorption::path_gain_deterministic(zeta, link))
            }
            AbsorptionModel::GammaRandom(g) => PathLoss::Random {
                gamma: Gamma::new(g.shape, g.scale_db_per_km)
                    .map_err(|_| ChannelError::OutOfRange { what: "gamma absorption parameters", value: g.shape })?,
                a_l: link.a_l(),
                exponent_per_db: -0.5 * link.distance_km() / 4.343,
            },
        };
        let fading = if fading.enabled { Some(FadingSampler::new(fading)?) } else { None };
        if !(misalignment.rho > 0.0) {
            return Err(ChannelError::OutOfRange { what: "misalignment rho", value: misalignment.rho });
        }
        Ok(ChannelModel { path, fading, rho: misalignment.rho, avg_snr: link.avg_snr, k_h: link.k_h() })
    }

    /// Same model with a different average SNR.
    pub fn with_avg_snr(&self, avg_snr: f64) -> Self {
        ChannelModel { avg_snr, ..self.clone() }
    }

    pub fn avg_snr(&self) -> f64 {
        self.avg_snr
    }

    pub fn k_h(&self) -> f64 {
        self.k_h
    }

    fn path_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.path {
            PathLoss::Fixed(h) => *h,
            PathLoss::Random { gamma, a_l, exponent_per_db } => a_l * (exponent_per_db * gamma.sample(rng)).exp(),
        }
    }

    fn compose(&self, h_l: f64, h_f: f64, h_p: f64) -> ChannelDraw {
        let h = h_l * h_f * h_p;
        ChannelDraw { h_l, h_f, h_p, h, gamma: impaired_snr(h, self.avg_snr, self.k_h) }
    }

    /// Draws every component from its own stream.
    pub fn draw(&self, streams: &mut ChannelStreams) -> ChannelDraw {
        let h_l = self.path_gain(&mut streams.absorption);
        let h_f = match &self.fading {
            Some(f) => f.sample(&mut streams.fading),
            None => 1.0,
        };
        let h_p = sample_misalignment(self.rho, &mut streams.misalignment);
        self.compose(h_l, h_f, h_p)
    }

    /// Draws every component from one generator, in the order path loss,
    /// fading, misalignment.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        let h_l = self.path_gain(rng);
        let h_f = match &self.fading {
            Some(f) => f.sample(rng),
            None => 1.0,
        };
        let h_p = sample_misalignment(self.rho, rng);
        self.compose(h_l, h_f, h_p)
    }
}

pub fn draw_channel<R: Rng + ?Sized>(
    link: &ThzLinkParams,
    absorption: &AbsorptionModel,
    fading: &FadingParams,
    misalignment: &MisalignmentParams,
    rng: &mut R,
) -> Result<ChannelDraw, ChannelError> {
    Ok(ChannelModel::new(link, absorption, fading, misalignment)?.draw_with(rng))
}
