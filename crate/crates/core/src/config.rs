//! Parameter types, their invariants, and validation from a flat key/value
//! document.
//!
//! The raw document is a map of dotted keys (`link.f_hz`,
//! `absorption.kbeta_db_per_km`, `protocol.scheme`, ...) to scalar or list
//! values. Whatever text format carries it, [`validate_config`] is the single
//! gate: everything downstream receives a [`ValidatedConfig`] whose derived
//! constants are computed from, and only from, its parts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Upper end of the typical transceiver impairment range.
pub const MAX_IMPAIRMENT: f64 = 0.4;

/// dB-to-neper factor used for power absorption, `20/ln 10` rounded as in the
/// path-gain model.
pub const DB_ABSORPTION_FACTOR: f64 = 8.686;

pub const HPA_PER_ATM: f64 = 1013.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("field `{field}` = {value} is out of range: expected {bound}")]
    OutOfRange { field: String, value: String, bound: String },
    #[error("absorption shape k = {0} must be a positive integer for the closed-form path")]
    NonIntegerShape(f64),
    #[error("field `{field}` has the wrong type: expected {expected}")]
    WrongType { field: String, expected: &'static str },
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("absorption profile unavailable: {0}")]
    ProfileMissing(String),
}

fn out_of_range(field: &str, value: impl fmt::Display, bound: &str) -> ConfigError {
    ConfigError::OutOfRange { field: field.to_string(), value: value.to_string(), bound: bound.to_string() }
}

// ---------------------------------------------------------------------------
// Raw document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<RawValue>),
}

impl RawValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            RawValue::Int(i) => Some(i as f64),
            RawValue::Float(f) => Some(f),
            _ => None,
        }
    }
}

impl From<f64> for RawValue {
    fn from(v: f64) -> Self {
        RawValue::Float(v)
    }
}
impl From<i64> for RawValue {
    fn from(v: i64) -> Self {
        RawValue::Int(v)
    }
}
impl From<bool> for RawValue {
    fn from(v: bool) -> Self {
        RawValue::Bool(v)
    }
}
impl From<&str> for RawValue {
    fn from(v: &str) -> Self {
        RawValue::Str(v.to_string())
    }
}

/// Flat dotted-key document plus the directory relative paths resolve against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, RawValue>,
    base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<RawValue>) -> &mut Self {
        self.entries.insert(key.into(), value.into());
        self
    }

    pub fn remove(&mut self, key: &str) -> Option<RawValue> {
        self.entries.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&RawValue> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &RawValue)> {
        self.entries.iter()
    }

    /// Keys under `section.`.
    pub fn section_keys<'a>(&'a self, section: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.keys().filter_map(move |k| k.strip_prefix(section).and_then(|r| r.strip_prefix('.')))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| ConfigError::WrongType { field: key.to_string(), expected: "number" }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| ConfigError::MissingField(key.to_string()))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::Int(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(RawValue::Int(i)) => Err(out_of_range(key, i, ">= 0")),
            Some(RawValue::Float(f)) if f.fract() == 0.0 && *f >= 0.0 && *f < 9.0e15 => Ok(Some(*f as u64)),
            Some(_) => Err(ConfigError::WrongType { field: key.to_string(), expected: "non-negative integer" }),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(ConfigError::WrongType { field: key.to_string(), expected: "boolean" }),
        }
    }

    pub fn str(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::Str(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(ConfigError::WrongType { field: key.to_string(), expected: "string" }),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::List(items)) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| ConfigError::WrongType { field: key.to_string(), expected: "list of numbers" })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => v
                .as_f64()
                .map(|x| Some(vec![x]))
                .ok_or_else(|| ConfigError::WrongType { field: key.to_string(), expected: "list of numbers" }),
        }
    }

    pub fn str_list(&self, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::Str(s)) => Ok(Some(vec![s.clone()])),
            Some(RawValue::List(items)) => items
                .iter()
                .map(|v| match v {
                    RawValue::Str(s) => Ok(s.clone()),
                    _ => Err(ConfigError::WrongType { field: key.to_string(), expected: "list of strings" }),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(ConfigError::WrongType { field: key.to_string(), expected: "list of strings" }),
        }
    }

    /// Exactly one of two alternative keys, e.g. a dB and a linear form.
    pub fn one_of(&self, a: &str, b: &str) -> Result<Option<(usize, f64)>, ConfigError> {
        match (self.f64(a)?, self.f64(b)?) {
            (Some(_), Some(_)) => Err(ConfigError::Invalid {
                field: a.to_string(),
                reason: format!("give either `{a}` or `{b}`, not both"),
            }),
            (Some(x), None) => Ok(Some((0, x))),
            (None, Some(x)) => Ok(Some((1, x))),
            (None, None) => Ok(None),
        }
    }

    pub fn reject_unknown(&self, section: &str, known: &[&str]) -> Result<(), ConfigError> {
        for key in self.section_keys(section) {
            if !known.contains(&key) {
                return Err(ConfigError::UnknownField(format!("{section}.{key}")));
            }
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

// ---------------------------------------------------------------------------
// Link
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PressureUnit {
    #[serde(rename = "hPa")]
    HectoPascal,
    #[serde(rename = "atm")]
    Atmosphere,
}

impl PressureUnit {
    pub fn to_hpa(self, value: f64) -> f64 {
        match self {
            PressureUnit::HectoPascal => value,
            PressureUnit::Atmosphere => value * HPA_PER_ATM,
        }
    }
}

/// Deployment physics of one user-to-AP link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThzLinkParams {
    pub frequency_hz: f64,
    pub distance_m: f64,
    /// Linear antenna gains.
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub temperature_k: f64,
    /// Relative humidity in percent.
    pub humidity_pct: f64,
    /// Always hPa internally.
    pub pressure_hpa: f64,
    pub k_t: f64,
    pub k_r: f64,
    /// Linear average SNR γ̄.
    pub avg_snr: f64,
}

impl ThzLinkParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("link.f_hz", self.frequency_hz)?;
        positive("link.d_m", self.distance_m)?;
        positive("link.g_t", self.gain_tx)?;
        positive("link.g_r", self.gain_rx)?;
        positive("link.temperature_k", self.temperature_k)?;
        positive("link.pressure", self.pressure_hpa)?;
        if !(0.0..=100.0).contains(&self.humidity_pct) {
            return Err(out_of_range("link.humidity_pct", self.humidity_pct, "[0, 100]"));
        }
        for (field, v) in [("link.k_t", self.k_t), ("link.k_r", self.k_r)] {
            if !(0.0..=MAX_IMPAIRMENT).contains(&v) {
                return Err(out_of_range(field, v, "[0, 0.4]"));
            }
        }
        if !(self.avg_snr >= 0.0) || !self.avg_snr.is_finite() {
            return Err(out_of_range("link.avg_snr", self.avg_snr, ">= 0 and finite"));
        }
        Ok(())
    }

    /// Aggregate hardware impairment `sqrt(k_t² + k_r²)`.
    pub fn k_h(&self) -> f64 {
        self.k_t.hypot(self.k_r)
    }

    /// Free-space amplitude gain `c sqrt(G_t G_r) / (4π f d)`.
    pub fn a_l(&self) -> f64 {
        SPEED_OF_LIGHT * (self.gain_tx * self.gain_rx).sqrt()
            / (4.0 * std::f64::consts::PI * self.frequency_hz * self.distance_m)
    }

    pub fn distance_km(&self) -> f64 {
        self.distance_m / 1000.0
    }

    /// SNR ceiling `1/k_h²` imposed by the impairments (infinite when ideal).
    pub fn snr_ceiling(&self) -> f64 {
        let kh = self.k_h();
        if kh > 0.0 {
            1.0 / (kh * kh)
        } else {
            f64::INFINITY
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(out_of_range(field, v, "> 0 and finite"))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(out_of_range(field, v, ">= 0 and finite"))
    }
}

// ---------------------------------------------------------------------------
// Absorption
// ---------------------------------------------------------------------------

/// Coefficients of the two-line water-vapour absorption fit plus its cubic
/// frequency tail. `line_centers` are in cm⁻¹, `poly` maps Hz to 1/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionProfile {
    pub q: [f64; 10],
    pub line_centers: [f64; 2],
    pub poly: [f64; 4],
}

/// Gamma(k, β) model of the absorption coefficient in dB/km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaAbsorption {
    pub shape: f64,
    pub scale_db_per_km: f64,
}

impl GammaAbsorption {
    pub fn new(shape: f64, scale_db_per_km: f64) -> Result<Self, ConfigError> {
        positive("absorption.k", shape)?;
        positive("absorption.beta_db_per_km", scale_db_per_km)?;
        Ok(GammaAbsorption { shape, scale_db_per_km })
    }

    /// Parameterised by the mean absorption `kβ` instead of the scale.
    pub fn from_mean(shape: f64, mean_db_per_km: f64) -> Result<Self, ConfigError> {
        positive("absorption.k", shape)?;
        positive("absorption.kbeta_db_per_km", mean_db_per_km)?;
        Self::new(shape, mean_db_per_km / shape)
    }

    pub fn mean_db_per_km(&self) -> f64 {
        self.shape * self.scale_db_per_km
    }

    /// Path-gain exponent `z = 8.686 / (β d_km)`.
    pub fn z(&self, distance_km: f64) -> f64 {
        DB_ABSORPTION_FACTOR / (self.scale_db_per_km * distance_km)
    }

    pub fn integer_shape(&self) -> Result<u32, ConfigError> {
        let k = self.shape;
        if k >= 1.0 && k.fract() == 0.0 && k <= f64::from(u32::MAX) {
            Ok(k as u32)
        } else {
            Err(ConfigError::NonIntegerShape(k))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbsorptionModel {
    Deterministic(AbsorptionProfile),
    GammaRandom(GammaAbsorption),
}

impl AbsorptionModel {
    pub fn as_gamma(&self) -> Option<&GammaAbsorption> {
        match self {
            AbsorptionModel::GammaRandom(g) => Some(g),
            AbsorptionModel::Deterministic(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Fading and misalignment
// ---------------------------------------------------------------------------

/// α-η-κ-μ short-term fading parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub alpha: f64,
    pub eta: f64,
    pub kappa: f64,
    pub mu: f64,
    pub p_ext: f64,
    pub q_ext: f64,
    pub r_hat: f64,
    pub enabled: bool,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams { alpha: 2.0, eta: 1.0, kappa: 0.0, mu: 1.0, p_ext: 1.0, q_ext: 1.0, r_hat: 1.0, enabled: false }
    }
}

impl FadingParams {
    pub fn disabled() -> Self {
        Self::default()
    }

    /// The η = 1, κ = 0 special case.
    pub fn alpha_mu(alpha: f64, mu: f64) -> Self {
        FadingParams { alpha, mu, enabled: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.enabled {
            return Ok(());
        }
        positive("fading.alpha", self.alpha)?;
        positive("fading.eta", self.eta)?;
        non_negative("fading.kappa", self.kappa)?;
        positive("fading.mu", self.mu)?;
        positive("fading.r_hat", self.r_hat)?;
        positive("fading.p", self.p_ext)?;
        positive("fading.q", self.q_ext)?;
        if self.p_ext != 1.0 || self.q_ext != 1.0 {
            return Err(ConfigError::Invalid {
                field: "fading.p".into(),
                reason: "only the symmetric p = q = 1 construction can be sampled".into(),
            });
        }
        Ok(())
    }
}

/// Pointing-error severity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisalignmentParams {
    pub rho: f64,
}

impl MisalignmentParams {
    pub fn new(rho: f64) -> Result<Self, ConfigError> {
        positive("misalignment.rho", rho)?;
        Ok(MisalignmentParams { rho })
    }

    /// `ρ = sqrt(w_B² / σ_θ²)` from the beamwidth and angular fluctuation.
    pub fn from_beam(beamwidth: f64, sigma_theta: f64) -> Result<Self, ConfigError> {
        positive("misalignment.beamwidth", beamwidth)?;
        positive("misalignment.sigma_theta", sigma_theta)?;
        Self::new((beamwidth * beamwidth / (sigma_theta * sigma_theta)).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ftp,
    Atp,
    Optimal,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ftp, Scheme::Atp, Scheme::Optimal];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ftp => "ftp",
            Scheme::Atp => "atp",
            Scheme::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ftp" => Ok(Scheme::Ftp),
            "atp" => Ok(Scheme::Atp),
            "optimal" => Ok(Scheme::Optimal),
            other => Err(ConfigError::Invalid {
                field: "protocol.scheme".into(),
                reason: format!("unknown scheme `{other}` (ftp|atp|optimal)"),
            }),
        }
    }
}

/// Per-event energy prices in μJ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCosts {
    pub tx_uj: f64,
    pub ack_uj: f64,
    pub idle_uj: f64,
}

impl Default for EnergyCosts {
    fn default() -> Self {
        EnergyCosts { tx_uj: 1200.0, ack_uj: 120.0, idle_uj: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyModel {
    /// One unit per packet transmission, ACK and idle free.
    Unit,
    Realistic(EnergyCosts),
}

impl EnergyModel {
    /// Prices used for μJ reporting; unit mode falls back to the defaults.
    pub fn costs(&self) -> EnergyCosts {
        match self {
            EnergyModel::Unit => EnergyCosts::default(),
            EnergyModel::Realistic(c) => *c,
        }
    }
}

/// How the AP estimates each user's SNR before admission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AdmissionMode {
    /// One instantaneous channel draw per user.
    Instantaneous,
    /// Mean SNR over several independent pilot draws per user.
    Averaged { draws: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub scheme: Scheme,
    pub n_total: usize,
    /// Linear admission threshold.
    pub gamma_qos: f64,
    pub energy_model: EnergyModel,
    pub trials: usize,
    pub seed: u64,
    pub admission: AdmissionMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            scheme: Scheme::Atp,
            n_total: 10,
            gamma_qos: 0.0,
            energy_model: EnergyModel::Unit,
            trials: 5000,
            seed: 1,
            admission: AdmissionMode::Instantaneous,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_total < 1 {
            return Err(out_of_range("protocol.n_total", self.n_total, ">= 1"));
        }
        if self.trials < 1 {
            return Err(out_of_range("protocol.trials", self.trials, ">= 1"));
        }
        non_negative("protocol.gamma_qos", self.gamma_qos)?;
        if let EnergyModel::Realistic(c) = self.energy_model {
            non_negative("protocol.e_tx_uj", c.tx_uj)?;
            non_negative("protocol.e_ack_uj", c.ack_uj)?;
            non_negative("protocol.e_idle_uj", c.idle_uj)?;
        }
        if let AdmissionMode::Averaged { draws } = self.admission {
            if draws < 1 {
                return Err(out_of_range("protocol.estimate_draws", draws, ">= 1"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Validated bundle
// ---------------------------------------------------------------------------

/// Constants derived from the validated parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub k_h: f64,
    pub a_l: f64,
    /// Present for the Gamma absorption model only.
    pub z: Option<f64>,
}

/// Immutable, fully validated parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    link: ThzLinkParams,
    absorption: AbsorptionModel,
    fading: FadingParams,
    misalignment: MisalignmentParams,
    protocol: ProtocolConfig,
    derived: DerivedConstants,
}

impl ValidatedConfig {
    pub fn from_parts(
        link: ThzLinkParams,
        absorption: AbsorptionModel,
        fading: FadingParams,
        misalignment: MisalignmentParams,
        protocol: ProtocolConfig,
    ) -> Result<Self, ConfigError> {
        link.validate()?;
        if let AbsorptionModel::GammaRandom(g) = &absorption {
            GammaAbsorption::new(g.shape, g.scale_db_per_km)?;
        }
        fading.validate()?;
        MisalignmentParams::new(misalignment.rho)?;
        protocol.validate()?;
        let derived = DerivedConstants {
            k_h: link.k_h(),
            a_l: link.a_l(),
            z: absorption.as_gamma().map(|g| g.z(link.distance_km())),
        };
        if !(derived.a_l > 0.0 && derived.a_l.is_finite()) {
            return Err(out_of_range("link", derived.a_l, "a_l > 0 and finite"));
        }
        Ok(ValidatedConfig { link, absorption, fading, misalignment, protocol, derived })
    }

    pub fn link(&self) -> &ThzLinkParams {
        &self.link
    }
    pub fn absorption(&self) -> &AbsorptionModel {
        &self.absorption
    }
    pub fn fading(&self) -> &FadingParams {
        &self.fading
    }
    pub fn misalignment(&self) -> &MisalignmentParams {
        &self.misalignment
    }
    pub fn protocol(&self) -> &ProtocolConfig {
        &self.protocol
    }
    pub fn derived(&self) -> &DerivedConstants {
        &self.derived
    }

    pub fn into_parts(self) -> (ThzLinkParams, AbsorptionModel, FadingParams, MisalignmentParams, ProtocolConfig) {
        (self.link, self.absorption, self.fading, self.misalignment, self.protocol)
    }

    /// Canonical raw form. Uses linear/hPa/scale keys so that validating the
    /// result reproduces every derived constant bit for bit.
    pub fn to_raw(&self) -> RawConfig {
        let mut raw = RawConfig::new();
        let l = &self.link;
        raw.set("link.f_hz", l.frequency_hz)
            .set("link.d_m", l.distance_m)
            .set("link.g_t", l.gain_tx)
            .set("link.g_r", l.gain_rx)
            .set("link.temperature_k", l.temperature_k)
            .set("link.humidity_pct", l.humidity_pct)
            .set("link.pressure", l.pressure_hpa)
            .set("link.pressure_unit", "hPa")
            .set("link.k_t", l.k_t)
            .set("link.k_r", l.k_r)
            .set("link.avg_snr", l.avg_snr);
        match &self.absorption {
            AbsorptionModel::GammaRandom(g) => {
                raw.set("absorption.model", "gamma")
                    .set("absorption.k", g.shape)
                    .set("absorption.beta_db_per_km", g.scale_db_per_km);
            }
            AbsorptionModel::Deterministic(p) => {
                raw.set("absorption.model", "deterministic");
                for (i, q) in p.q.iter().enumerate() {
                    raw.set(format!("absorption.q{}", i + 1), *q);
                }
                raw.set("absorption.p1", p.line_centers[0]).set("absorption.p2", p.line_centers[1]);
                for (i, c) in p.poly.iter().enumerate() {
                    raw.set(format!("absorption.c{}", i + 1), *c);
                }
            }
        }
        let f = &self.fading;
        raw.set("fading.enabled", f.enabled)
            .set("fading.alpha", f.alpha)
            .set("fading.eta", f.eta)
            .set("fading.kappa", f.kappa)
            .set("fading.mu", f.mu)
            .set("fading.p", f.p_ext)
            .set("fading.q", f.q_ext)
            .set("fading.r_hat", f.r_hat);
        raw.set("misalignment.rho", self.misalignment.rho);
        let p = &self.protocol;
        raw.set("protocol.scheme", p.scheme.as_str())
            .set("protocol.n_total", p.n_total as i64)
            .set("protocol.gamma_qos", p.gamma_qos)
            .set("protocol.trials", p.trials as i64)
            .set("protocol.seed", RawValue::Int(p.seed as i64));
        match p.energy_model {
            EnergyModel::Unit => {
                raw.set("protocol.energy_model", "unit");
            }
            EnergyModel::Realistic(c) => {
                raw.set("protocol.energy_model", "realistic")
                    .set("protocol.e_tx_uj", c.tx_uj)
                    .set("protocol.e_ack_uj", c.ack_uj)
                    .set("protocol.e_idle_uj", c.idle_uj);
            }
        }
        match p.admission {
            AdmissionMode::Instantaneous => {
                raw.set("protocol.admission", "instantaneous");
            }
            AdmissionMode::Averaged { draws } => {
                raw.set("protocol.admission", "averaged").set("protocol.estimate_draws", i64::from(draws));
            }
        }
        raw
    }
}

const LINK_KEYS: &[&str] = &[
    "f_hz",
    "d_m",
    "g_t",
    "g_r",
    "g_t_dbi",
    "g_r_dbi",
    "temperature_k",
    "humidity_pct",
    "pressure",
    "pressure_unit",
    "k_t",
    "k_r",
    "avg_snr",
    "avg_snr_db",
];
const ABSORPTION_KEYS: &[&str] = &[
    "model",
    "k",
    "kbeta_db_per_km",
    "beta_db_per_km",
    "profile",
    "q1",
    "q2",
    "q3",
    "q4",
    "q5",
    "q6",
    "q7",
    "q8",
    "q9",
    "q10",
    "p1",
    "p2",
    "c1",
    "c2",
    "c3",
    "c4",
];
const FADING_KEYS: &[&str] = &["enabled", "alpha", "eta", "kappa", "mu", "p", "q", "r_hat"];
const MISALIGNMENT_KEYS: &[&str] = &["rho", "beamwidth", "sigma_theta"];
const PROTOCOL_KEYS: &[&str] = &[
    "scheme",
    "n_total",
    "gamma_qos",
    "gamma_qos_db",
    "energy_model",
    "e_tx_uj",
    "e_ack_uj",
    "e_idle_uj",
    "trials",
    "seed",
    "admission",
    "estimate_draws",
];

/// Validates a raw document into the parameter bundle.
///
/// Sections other than `link`, `absorption`, `fading`, `misalignment` and
/// `protocol` are ignored here; they belong to the individual commands.
pub fn validate_config(raw: &RawConfig) -> Result<ValidatedConfig, ConfigError> {
    raw.reject_unknown("link", LINK_KEYS)?;
    raw.reject_unknown("absorption", ABSORPTION_KEYS)?;
    raw.reject_unknown("fading", FADING_KEYS)?;
    raw.reject_unknown("misalignment", MISALIGNMENT_KEYS)?;
    raw.reject_unknown("protocol", PROTOCOL_KEYS)?;

    let link = parse_link(raw)?;
    let absorption = parse_absorption(raw)?;
    let fading = parse_fading(raw)?;
    let misalignment = parse_misalignment(raw)?;
    let protocol = parse_protocol(raw)?;
    ValidatedConfig::from_parts(link, absorption, fading, misalignment, protocol)
}

fn gain(raw: &RawConfig, linear: &str, dbi: &str) -> Result<f64, ConfigError> {
    match raw.one_of(linear, dbi)? {
        Some((0, g)) => Ok(g),
        Some((_, g_db)) => Ok(db_to_linear(g_db)),
        None => Err(ConfigError::MissingField(linear.to_string())),
    }
}

fn parse_link(raw: &RawConfig) -> Result<ThzLinkParams, ConfigError> {
    let unit = match raw.str("link.pressure_unit")?.unwrap_or("hPa") {
        "hPa" | "hpa" => PressureUnit::HectoPascal,
        "atm" => PressureUnit::Atmosphere,
        other => {
            return Err(ConfigError::Invalid {
                field: "link.pressure_unit".into(),
                reason: format!("unknown unit `{other}` (hPa|atm)"),
            })
        }
    };
    let pressure = raw.f64("link.pressure")?.unwrap_or(match unit {
        PressureUnit::HectoPascal => HPA_PER_ATM,
        PressureUnit::Atmosphere => 1.0,
    });
    let avg_snr = match raw.one_of("link.avg_snr", "link.avg_snr_db")? {
        Some((0, x)) => x,
        Some((_, db)) => db_to_linear(db),
        None => return Err(ConfigError::MissingField("link.avg_snr_db".into())),
    };
    Ok(ThzLinkParams {
        frequency_hz: raw.require_f64("link.f_hz")?,
        distance_m: raw.require_f64("link.d_m")?,
        gain_tx: gain(raw, "link.g_t", "link.g_t_dbi")?,
        gain_rx: gain(raw, "link.g_r", "link.g_r_dbi")?,
        temperature_k: raw.f64("link.temperature_k")?.unwrap_or(296.0),
        humidity_pct: raw.f64("link.humidity_pct")?.unwrap_or(50.0),
        pressure_hpa: unit.to_hpa(pressure),
        k_t: raw.f64("link.k_t")?.unwrap_or(0.0),
        k_r: raw.f64("link.k_r")?.unwrap_or(0.0),
        avg_snr,
    })
}

fn parse_absorption(raw: &RawConfig) -> Result<AbsorptionModel, ConfigError> {
    let model = raw.str("absorption.model")?.ok_or_else(|| ConfigError::MissingField("absorption.model".into()))?;
    match model {
        "gamma" => {
            let k = raw.require_f64("absorption.k")?;
            let g = match raw.one_of("absorption.kbeta_db_per_km", "absorption.beta_db_per_km")? {
                Some((0, mean)) => GammaAbsorption::from_mean(k, mean)?,
                Some((_, beta)) => GammaAbsorption::new(k, beta)?,
                None => return Err(ConfigError::MissingField("absorption.kbeta_db_per_km".into())),
            };
            Ok(AbsorptionModel::GammaRandom(g))
        }
        "deterministic" => {
            let profile = match raw.str("absorption.profile")? {
                Some("builtin") => crate::channel::absorption::builtin_profile(),
                Some(path) => {
                    let path = match raw.base_dir() {
                        Some(dir) if Path::new(path).is_relative() => dir.join(path),
                        _ => PathBuf::from(path),
                    };
                    crate::channel::absorption::load_profile(&path)
                        .map_err(|e| ConfigError::ProfileMissing(e.to_string()))?
                }
                None => inline_profile(raw)?,
            };
            Ok(AbsorptionModel::Deterministic(profile))
        }
        other => Err(ConfigError::Invalid {
            field: "absorption.model".into(),
            reason: format!("unknown model `{other}` (gamma|deterministic)"),
        }),
    }
}

fn inline_profile(raw: &RawConfig) -> Result<AbsorptionProfile, ConfigError> {
    let need = |key: String| -> Result<f64, ConfigError> {
        raw.f64(&key)?.ok_or_else(|| ConfigError::ProfileMissing(format!("`{key}` not given and no profile file")))
    };
    let mut q = [0.0; 10];
    for (i, slot) in q.iter_mut().enumerate() {
        *slot = need(format!("absorption.q{}", i + 1))?;
    }
    let mut poly = [0.0; 4];
    for (i, slot) in poly.iter_mut().enumerate() {
        *slot = need(format!("absorption.c{}", i + 1))?;
    }
    Ok(AbsorptionProfile { q, line_centers: [need("absorption.p1".into())?, need("absorption.p2".into())?], poly })
}

fn parse_fading(raw: &RawConfig) -> Result<FadingParams, ConfigError> {
    let d = FadingParams::default();
    Ok(FadingParams {
        enabled: raw.bool("fading.enabled")?.unwrap_or(false),
        alpha: raw.f64("fading.alpha")?.unwrap_or(d.alpha),
        eta: raw.f64("fading.eta")?.unwrap_or(d.eta),
        kappa: raw.f64("fading.kappa")?.unwrap_or(d.kappa),
        mu: raw.f64("fading.mu")?.unwrap_or(d.mu),
        p_ext: raw.f64("fading.p")?.unwrap_or(d.p_ext),
        q_ext: raw.f64("fading.q")?.unwrap_or(d.q_ext),
        r_hat: raw.f64("fading.r_hat")?.unwrap_or(d.r_hat),
    })
}

fn parse_misalignment(raw: &RawConfig) -> Result<MisalignmentParams, ConfigError> {
    let rho = raw.f64("misalignment.rho")?;
    let beam = raw.f64("misalignment.beamwidth")?;
    let sigma = raw.f64("misalignment.sigma_theta")?;
    match (rho, beam, sigma) {
        (Some(r), None, None) => MisalignmentParams::new(r),
        (None, Some(w), Some(s)) => MisalignmentParams::from_beam(w, s),
        (None, None, None) => Err(ConfigError::MissingField("misalignment.rho".into())),
        _ => Err(ConfigError::Invalid {
            field: "misalignment.rho".into(),
            reason: "give either `rho` or both `beamwidth` and `sigma_theta`".into(),
        }),
    }
}

fn parse_protocol(raw: &RawConfig) -> Result<ProtocolConfig, ConfigError> {
    let d = ProtocolConfig::default();
    let scheme = match raw.str("protocol.scheme")? {
        Some(s) => s.parse()?,
        None => d.scheme,
    };
    let gamma_qos = match raw.one_of("protocol.gamma_qos", "protocol.gamma_qos_db")? {
        Some((0, x)) => x,
        Some((_, db)) => db_to_linear(db),
        None => d.gamma_qos,
    };
    let costs = EnergyCosts::default();
    let energy_model = match raw.str("protocol.energy_model")?.unwrap_or("unit") {
        "unit" => EnergyModel::Unit,
        "realistic" => EnergyModel::Realistic(EnergyCosts {
            tx_uj: raw.f64("protocol.e_tx_uj")?.unwrap_or(costs.tx_uj),
            ack_uj: raw.f64("protocol.e_ack_uj")?.unwrap_or(costs.ack_uj),
            idle_uj: raw.f64("protocol.e_idle_uj")?.unwrap_or(costs.idle_uj),
        }),
        other => {
            return Err(ConfigError::Invalid {
                field: "protocol.energy_model".into(),
                reason: format!("unknown energy model `{other}` (unit|realistic)"),
            })
        }
    };
    let admission = match raw.str("protocol.admission")?.unwrap_or("instantaneous") {
        "instantaneous" => AdmissionMode::Instantaneous,
        "averaged" => {
            let draws = raw.u64("protocol.estimate_draws")?.unwrap_or(8);
            AdmissionMode::Averaged {
                draws: u32::try_from(draws).map_err(|_| out_of_range("protocol.estimate_draws", draws, "<= 2^32-1"))?,
            }
        }
        other => {
            return Err(ConfigError::Invalid {
                field: "protocol.admission".into(),
                reason: format!("unknown admission mode `{other}` (instantaneous|averaged)"),
            })
        }
    };
    let seed = match raw.get("protocol.seed") {
        // Seeds are bit patterns; negative TOML integers wrap.
        Some(RawValue::Int(i)) => *i as u64,
        Some(_) => raw.u64("protocol.seed")?.unwrap_or(d.seed),
        None => d.seed,
    };
    Ok(ProtocolConfig {
        scheme,
        n_total: raw.u64("protocol.n_total")?.map_or(d.n_total, |n| n as usize),
        gamma_qos,
        energy_model,
        trials: raw.u64("protocol.trials")?.map_or(d.trials, |n| n as usize),
        seed,
        admission,
    })
}
