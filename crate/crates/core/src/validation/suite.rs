//! Configurable validation suites producing machine-readable reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bound_sweep, chi_square_compare, ks_compare, outage_mc, GofReport, ValidationError};
use crate::analytics::{delay_atp, delay_ftp, energy_atp, energy_ftp, gamma_p, NoFadingModel, OutageQuery};
use crate::channel::{
    misalignment_cdf, path_gain_cdf, path_gain_from_absorption, sample_absorption_db, sample_misalignment,
    ChannelModel, FadingSampler,
};
use crate::config::{db_to_linear, AbsorptionModel, EnergyModel, FadingParams, RawConfig, Scheme, ValidatedConfig};
use crate::protocol::{run_batch_with_tree, BatchSpec, Population};
use crate::rng::{Component, SeedTree};

const KEYS: &[&str] = &[
    "ks_samples",
    "chi_square_bins",
    "outage_draws",
    "outage_grid_db",
    "gamma_th_db",
    "sigma",
    "rho_perturbation",
    "protocol_k",
    "protocol_trials",
    "protocol_tolerance",
    "bound_k_max",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub ks_samples: usize,
    pub chi_square_bins: usize,
    pub outage_draws: u64,
    pub outage_grid_db: Vec<f64>,
    pub gamma_th: f64,
    /// Width of the agreement band in binomial standard errors.
    pub sigma: f64,
    /// Relative error deliberately applied to ρ on the analytic side.
    pub rho_perturbation: f64,
    pub protocol_k: Vec<u64>,
    pub protocol_trials: usize,
    pub protocol_tolerance: f64,
    pub bound_k_max: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            ks_samples: 100_000,
            chi_square_bins: 50,
            outage_draws: 1_000_000,
            outage_grid_db: (0..10).map(|i| 40.0 + 2.0 * f64::from(i)).collect(),
            gamma_th: 1.0,
            sigma: 3.0,
            rho_perturbation: 0.0,
            protocol_k: vec![2, 5, 10, 20, 40],
            protocol_trials: 5000,
            protocol_tolerance: 0.02,
            bound_k_max: 10_000,
        }
    }
}

fn option_error(field: &str, reason: impl Into<String>) -> ValidationError {
    ValidationError::Option { field: format!("validation.{field}"), reason: reason.into() }
}

impl ValidationOptions {
    /// Reads the optional `validation.*` keys; missing keys keep defaults.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ValidationError> {
        let conv = |e: crate::config::ConfigError| option_error("", e.to_string());
        raw.reject_unknown("validation", KEYS).map_err(conv)?;
        let mut o = ValidationOptions::default();
        let count =
            |key: &str| -> Result<Option<u64>, ValidationError> { raw.u64(&format!("validation.{key}")).map_err(conv) };
        if let Some(v) = count("ks_samples")? {
            o.ks_samples = v as usize;
        }
        if let Some(v) = count("chi_square_bins")? {
            o.chi_square_bins = v as usize;
        }
        if let Some(v) = count("outage_draws")? {
            o.outage_draws = v;
        }
        if let Some(v) = count("protocol_trials")? {
            o.protocol_trials = v as usize;
        }
        if let Some(v) = count("bound_k_max")? {
            o.bound_k_max = v;
        }
        if let Some(v) = raw.f64_list("validation.outage_grid_db").map_err(conv)? {
            o.outage_grid_db = v;
        }
        if let Some(v) = raw.f64("validation.gamma_th_db").map_err(conv)? {
            o.gamma_th = db_to_linear(v);
        }
        if let Some(v) = raw.f64("validation.sigma").map_err(conv)? {
            o.sigma = v;
        }
        if let Some(v) = raw.f64("validation.rho_perturbation").map_err(conv)? {
            o.rho_perturbation = v;
        }
        if let Some(v) = raw.f64("validation.protocol_tolerance").map_err(conv)? {
            o.protocol_tolerance = v;
        }
        if let Some(v) = raw.f64_list("validation.protocol_k").map_err(conv)? {
            o.protocol_k = v.iter().map(|&k| k as u64).collect();
        }
        o.check()?;
        Ok(o)
    }

    fn check(&self) -> Result<(), ValidationError> {
        if self.ks_samples < 1000 {
            return Err(option_error("ks_samples", "need at least 1000 samples"));
        }
        if self.outage_draws < 10_000 {
            return Err(option_error("outage_draws", "need at least 10^4 draws per grid point"));
        }
        if self.protocol_trials < 1 {
            return Err(option_error("protocol_trials", "need at least one trial"));
        }
        if self.protocol_k.iter().any(|&k| k < 1) {
            return Err(option_error("protocol_k", "K must be >= 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(option_error("sigma", "must be positive"));
        }
        if !(self.rho_perturbation > -1.0) {
            return Err(option_error("rho_perturbation", "must exceed -1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub skipped: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn gof(name: impl Into<String>, r: &GofReport) -> Self {
        CheckResult {
            name: name.into(),
            pass: r.pass,
            skipped: false,
            statistic: r.statistic,
            threshold: r.threshold,
            detail: format!("{:?} n={} p={:.4}", r.test, r.n_samples, r.p_value.unwrap_or(f64::NAN)),
        }
    }

    fn skipped(name: impl Into<String>, why: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass: true,
            skipped: true,
            statistic: f64::NAN,
            threshold: f64::NAN,
            detail: why.into(),
        }
    }

    fn failed(name: impl Into<String>, why: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass: false,
            skipped: false,
            statistic: f64::NAN,
            threshold: f64::NAN,
            detail: why.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<CheckResult>) -> Self {
        SuiteReport { suite: suite.into(), pass: checks.iter().all(|c| c.pass), checks }
    }
}

fn sampler_suite(cfg: &ValidatedConfig, o: &ValidationOptions, tree: &SeedTree) -> SuiteReport {
    let n = o.ks_samples;
    let rho = cfg.misalignment().rho;
    let rho_model = rho * (1.0 + o.rho_perturbation);
    let mut checks = Vec::new();

    let mut rng = tree.stream(0, Component::Misalignment);
    let xs: Vec<f64> = (0..n).map(|_| sample_misalignment(rho, &mut rng)).collect();
    match ks_compare(&xs, |x| misalignment_cdf(x, rho_model).unwrap_or(if x <= 0.0 { 0.0 } else { 1.0 })) {
        Ok(r) => checks.push(CheckResult::gof("misalignment_ks", &r)),
        Err(e) => checks.push(CheckResult::failed("misalignment_ks", e.to_string())),
    }

    match cfg.absorption() {
        AbsorptionModel::GammaRandom(g) => {
            let mut rng = tree.stream(0, Component::Absorption);
            let zs: Vec<f64> = (0..n).map(|_| sample_absorption_db(g, &mut rng)).collect();
            let scale = g.scale_db_per_km;
            if let Ok(r) = ks_compare(&zs, |x| gamma_p(g.shape, x.max(0.0) / scale)) {
                checks.push(CheckResult::gof("absorption_gamma_ks", &r));
            }
            let link = cfg.link();
            let hs: Vec<f64> = zs.iter().map(|&z| path_gain_from_absorption(z, link)).collect();
            match chi_square_compare(&hs, |x| path_gain_cdf(x, g, link), (0.0, link.a_l()), o.chi_square_bins) {
                Ok(r) => checks.push(CheckResult::gof("path_gain_chi_square", &r)),
                Err(e) => checks.push(CheckResult::failed("path_gain_chi_square", e.to_string())),
            }
        }
        AbsorptionModel::Deterministic(_) => {
            checks.push(CheckResult::skipped("absorption_gamma_ks", "deterministic absorption"));
        }
    }

    let f = cfg.fading();
    let am = FadingParams { eta: 1.0, kappa: 0.0, enabled: true, ..*f };
    match FadingSampler::new(&am) {
        Ok(s) => {
            let mut rng = tree.stream(0, Component::Fading);
            let scale = am.mu / am.r_hat.powf(am.alpha);
            let ys: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).powf(am.alpha) * scale).collect();
            if let Ok(r) = ks_compare(&ys, |x| gamma_p(am.mu, x.max(0.0))) {
                checks.push(CheckResult::gof("fading_alpha_mu_ks", &r));
            }
        }
        Err(e) => checks.push(CheckResult::skipped("fading_alpha_mu_ks", e.to_string())),
    }
    SuiteReport::new("samplers", checks)
}

fn outage_suite(cfg: &ValidatedConfig, o: &ValidationOptions, tree: &SeedTree) -> Result<SuiteReport, ValidationError> {
    let AbsorptionModel::GammaRandom(g) = cfg.absorption() else {
        return Ok(SuiteReport::new(
            "outage",
            vec![CheckResult::skipped("no_fading_closed_form", "deterministic absorption")],
        ));
    };
    let link = cfg.link();
    let rho = cfg.misalignment().rho;
    let analytic = match NoFadingModel::from_link(g, rho * (1.0 + o.rho_perturbation), link) {
        Ok(m) => m,
        Err(e) => {
            return Ok(SuiteReport::new("outage", vec![CheckResult::failed("no_fading_closed_form", e.to_string())]))
        }
    };
    let model = ChannelModel::new(link, cfg.absorption(), &FadingParams::disabled(), cfg.misalignment())?;
    let points = outage_mc(&model, o.gamma_th, &o.outage_grid_db, o.outage_draws, tree);
    let mut checks = Vec::with_capacity(points.len());
    for p in points {
        let q = OutageQuery::new(o.gamma_th, db_to_linear(p.gamma_bar_db), link.k_h());
        let name = format!("outage_{}db", p.gamma_bar_db);
        match analytic.snr_cdf(&q) {
            Ok(v) => {
                let se = (v.probability * (1.0 - v.probability) / p.n as f64).sqrt();
                let dev = (p.p_hat - v.probability).abs();
                let threshold = o.sigma * se;
                checks.push(CheckResult {
                    name,
                    pass: dev <= threshold,
                    skipped: false,
                    statistic: dev,
                    threshold,
                    detail: format!("mc={} closed_form={} n={}", p.p_hat, v.probability, p.n),
                });
            }
            Err(e) => checks.push(CheckResult::failed(name, e.to_string())),
        }
    }
    Ok(SuiteReport::new("outage", checks))
}

fn protocol_suite(o: &ValidationOptions, tree: &SeedTree) -> SuiteReport {
    let cells: Vec<(u64, Scheme)> =
        o.protocol_k.iter().flat_map(|&k| [Scheme::Ftp, Scheme::Atp].map(|s| (k, s))).collect();
    let checks: Vec<Vec<CheckResult>> = cells
        .par_iter()
        .map(|&(k, scheme)| {
            let spec = BatchSpec {
                scheme,
                energy_model: EnergyModel::Unit,
                trials: o.protocol_trials,
                population: Population::Active(k as u32),
            };
            let stats = run_batch_with_tree(&spec, &tree.child(k).named(scheme.as_str())).stats;
            let (d, e) = match scheme {
                Scheme::Ftp => (delay_ftp(k), energy_ftp(k)),
                _ => (delay_atp(k), energy_atp(k)),
            };
            [("delay", stats.mean_delay(), d), ("energy", stats.mean_transmissions(), e)]
                .into_iter()
                .map(|(what, sim, exact)| {
                    let err = (sim / exact - 1.0).abs();
                    CheckResult {
                        name: format!("{scheme}_{what}_k{k}"),
                        pass: err < o.protocol_tolerance,
                        skipped: false,
                        statistic: err,
                        threshold: o.protocol_tolerance,
                        detail: format!("simulated={sim} exact={exact} trials={}", o.protocol_trials),
                    }
                })
                .collect()
        })
        .collect();
    SuiteReport::new("protocol", checks.into_iter().flatten().collect())
}

fn bounds_suite(o: &ValidationOptions) -> SuiteReport {
    let ks: Vec<u64> = (3..=o.bound_k_max.max(3)).collect();
    let rows = bound_sweep(&ks);
    let names = rows[0].checks().map(|(n, _)| n);
    let checks = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let failures: Vec<u64> = rows.iter().filter(|r| r.checks()[i].1 == Some(false)).map(|r| r.k).collect();
            CheckResult {
                name: (*name).to_string(),
                pass: failures.is_empty(),
                skipped: false,
                statistic: failures.len() as f64,
                threshold: 0.0,
                detail: if failures.is_empty() {
                    format!("K = 3..={}", o.bound_k_max)
                } else {
                    format!("violated at K = {:?}", &failures[..failures.len().min(10)])
                },
            }
        })
        .collect();
    SuiteReport::new("bounds", checks)
}

/// Runs every suite; reports are ordered by suite name.
pub fn run_suites(
    cfg: &ValidatedConfig,
    o: &ValidationOptions,
    seed: u64,
) -> Result<Vec<SuiteReport>, ValidationError> {
    let root = SeedTree::new(seed);
    let mut reports = vec![
        sampler_suite(cfg, o, &root.named("samplers")),
        outage_suite(cfg, o, &root.named("outage"))?,
        protocol_suite(o, &root.named("protocol")),
        bounds_suite(o),
    ];
    reports.sort_by(|a, b| a.suite.cmp(&b.suite));
    Ok(reports)
}

/// Fixed-width text table of all checks.
pub fn summary_table(reports: &[SuiteReport]) -> String {
    let mut out = format!("{:<10} {:<28} {:<6} {:>14} {:>14}\n", "suite", "check", "result", "statistic", "threshold");
    for r in reports {
        for c in &r.checks {
            let result = if c.skipped {
                "skip"
            } else if c.pass {
                "pass"
            } else {
                "FAIL"
            };
            out.push_str(&format!(
                "{:<10} {:<28} {:<6} {:>14.6e} {:>14.6e}\n",
                r.suite, c.name, result, c.statistic, c.threshold
            ));
        }
    }
    out
}
