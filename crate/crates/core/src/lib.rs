//! Desk-scale laboratory for multiuser random access over THz links.
//!
//! The crate is split along the physical pipeline:
//!
//! * [`config`] holds every parameter type together with its invariants and
//!   the flat key/value document they are validated from.
//! * [`channel`] samples random absorption, α-η-κ-μ fading and pointing
//!   errors, and composes the hardware-impaired SNR.
//! * [`analytics`] evaluates the closed forms: no-fading SNR distribution,
//!   diversity order, delay/energy series, their bounds and concentration
//!   inequalities.
//! * [`protocol`] simulates QoS admission followed by FTP/ATP slotted random
//!   access on a collision channel, plus a centrally scheduled baseline.
//! * [`validation`] ties the Monte Carlo output back to the analytics.
//! * [`rng`] provides reproducible, independently seeded streams.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod config;
pub mod protocol;
pub mod rng;
pub mod validation;

#[cfg(test)]
pub(crate) mod testkit;

pub use analytics::{AnalyticsError, DiversityOrder, OutageQuery};
pub use channel::{ChannelDraw, ChannelError, ChannelModel};
pub use config::{
    AbsorptionModel, AbsorptionProfile, AdmissionMode, ConfigError, EnergyCosts, EnergyModel, FadingParams,
    GammaAbsorption, MisalignmentParams, ProtocolConfig, RawConfig, RawValue, Scheme, ThzLinkParams, ValidatedConfig,
};
pub use protocol::{AggregateStats, FrameTrace, SlotOutcome};
pub use rng::{Component, SeedTree, SimRng};
pub use validation::GofReport;
