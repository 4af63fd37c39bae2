//! `simulate`: Monte Carlo delay and energy over a K sweep and a scheme list.

use std::path::Path;

use serde::Serialize;
use thzra_core::analytics::{delay_atp, delay_ftp, energy_atp, energy_ftp};
use thzra_core::protocol::{run_batch_with_tree, BatchResult, BatchSpec, Population};
use thzra_core::{AggregateStats, ChannelModel, ConfigError, RawConfig, Scheme, SeedTree, ValidatedConfig};

use super::u64_list;
use crate::error::CliError;
use crate::output::{Cell, Csv, OutputDir, RunContext, RunStatus};

pub const AGGREGATE_SCHEMA: &str = "thzra.simulate.aggregate/1";
pub const TRIALS_SCHEMA: &str = "thzra.simulate.trials/1";

pub const AGGREGATE_COLUMNS: &[&str] = &[
    "K",
    "scheme",
    "n_trials",
    "mean_k",
    "mean_delay",
    "stderr_delay",
    "mean_energy_units",
    "stderr_energy_units",
    "mean_energy_uJ",
    "stderr_energy_uJ",
    "mean_transmissions",
    "stderr_transmissions",
    "exact_delay",
    "exact_energy_units",
];

const KEYS: &[&str] = &["k", "schemes", "population", "trial_dump"];

/// How the active users of a frame are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationMode {
    /// `K` users are active in every frame.
    Active,
    /// `K` users are provisioned and pass QoS admission on fresh channels.
    Admission,
}

#[derive(Debug, Clone)]
pub struct SimulatePlan {
    pub ks: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub population: PopulationMode,
    pub trials: usize,
    pub trial_dump: bool,
}

pub fn schemes_from(raw: &RawConfig, key: &str) -> Result<Option<Vec<Scheme>>, CliError> {
    let Some(names) = raw.str_list(key)? else { return Ok(None) };
    Ok(Some(names.iter().map(|s| s.parse::<Scheme>()).collect::<Result<_, ConfigError>>()?))
}

pub fn population_from(raw: &RawConfig, key: &str) -> Result<PopulationMode, CliError> {
    match raw.str(key)? {
        None | Some("active") => Ok(PopulationMode::Active),
        Some("admission") => Ok(PopulationMode::Admission),
        Some(other) => Err(ConfigError::Invalid {
            field: key.into(),
            reason: format!("unknown population `{other}` (active|admission)"),
        }
        .into()),
    }
}

impl SimulatePlan {
    pub fn from_raw(raw: &RawConfig, cfg: &ValidatedConfig, trials: Option<usize>) -> Result<Self, CliError> {
        raw.reject_unknown("simulate", KEYS)?;
        let n_total = cfg.protocol().n_total as u64;
        Ok(SimulatePlan {
            ks: u64_list(raw, "simulate.k", 1)?.unwrap_or_else(|| (1..=n_total).collect()),
            schemes: schemes_from(raw, "simulate.schemes")?.unwrap_or_else(|| Scheme::ALL.to_vec()),
            population: population_from(raw, "simulate.population")?,
            trials: trials.unwrap_or(cfg.protocol().trials),
            trial_dump: raw.bool("simulate.trial_dump")?.unwrap_or(true),
        })
    }
}

/// Exact expected slots and transmissions for `K` always-active users.
pub fn exact_access(scheme: Scheme, k: u64) -> (f64, f64) {
    match scheme {
        Scheme::Ftp => (delay_ftp(k), energy_ftp(k)),
        Scheme::Atp => (delay_atp(k), energy_atp(k)),
        Scheme::Optimal => (k as f64, k as f64),
    }
}

/// Runs one `(K, scheme)` batch.
pub fn run_cell(
    cfg: &ValidatedConfig,
    channel: Option<&ChannelModel>,
    mode: PopulationMode,
    scheme: Scheme,
    k: u64,
    trials: usize,
    tree: &SeedTree,
) -> BatchResult {
    let p = cfg.protocol();
    let population = match (mode, channel) {
        (PopulationMode::Admission, Some(ch)) => {
            Population::Admission { n_total: k as usize, gamma_qos: p.gamma_qos, mode: p.admission, channel: ch }
        }
        _ => Population::Active(k as u32),
    };
    let spec = BatchSpec { scheme, energy_model: p.energy_model, trials, population };
    run_batch_with_tree(&spec, tree)
}

pub fn aggregate_row(k: u64, s: &AggregateStats, mode: PopulationMode) -> Vec<Cell> {
    let (d, e) = match mode {
        PopulationMode::Active => {
            let (d, e) = exact_access(s.scheme, k);
            (Cell::F(d), Cell::F(e))
        }
        PopulationMode::Admission => (Cell::Empty, Cell::Empty),
    };
    vec![
        Cell::U(k),
        Cell::from(s.scheme.as_str()),
        Cell::from(s.n_trials),
        Cell::F(s.mean_k),
        Cell::F(s.delay.mean),
        Cell::F(s.delay.std_err),
        Cell::F(s.energy_units.mean),
        Cell::F(s.energy_units.std_err),
        Cell::F(s.energy_uj.mean),
        Cell::F(s.energy_uj.std_err),
        Cell::F(s.transmissions.mean),
        Cell::F(s.transmissions.std_err),
        d,
        e,
    ]
}

pub fn channel_for(cfg: &ValidatedConfig, mode: PopulationMode) -> Result<Option<ChannelModel>, CliError> {
    match mode {
        PopulationMode::Active => Ok(None),
        PopulationMode::Admission => {
            Ok(Some(ChannelModel::new(cfg.link(), cfg.absorption(), cfg.fading(), cfg.misalignment())?))
        }
    }
}

#[derive(Debug, Serialize)]
struct AggregateEntry {
    k: u64,
    stats: AggregateStats,
}

pub fn run(ctx: &RunContext, raw: &RawConfig, cfg: &ValidatedConfig, out: &Path) -> Result<u8, CliError> {
    let plan = SimulatePlan::from_raw(raw, cfg, ctx.trials)?;
    let channel = channel_for(cfg, plan.population)?;
    let mut dir = OutputDir::create(out)?;
    let root = SeedTree::new(ctx.seed).named("simulate");

    let mut aggregate = Csv::new(AGGREGATE_SCHEMA, AGGREGATE_COLUMNS);
    let mut dump = Csv::new(
        TRIALS_SCHEMA,
        &["K", "scheme", "trial_id", "k_admitted", "total_slots", "total_transmissions", "energy_units", "energy_uJ"],
    );
    let mut entries = Vec::new();
    for &k in &plan.ks {
        for &scheme in &plan.schemes {
            let tree = root.child(k).named(scheme.as_str());
            let result = run_cell(cfg, channel.as_ref(), plan.population, scheme, k, plan.trials, &tree);
            aggregate.push(&aggregate_row(k, &result.stats, plan.population));
            if plan.trial_dump {
                for t in &result.trials {
                    dump.push(&[
                        Cell::U(k),
                        Cell::from(scheme.as_str()),
                        Cell::U(t.trial_id),
                        Cell::from(t.k_admitted),
                        Cell::U(t.total_slots),
                        Cell::U(t.total_transmissions),
                        Cell::F(t.energy_units),
                        Cell::F(t.energy_uj),
                    ]);
                }
            }
            entries.push(AggregateEntry { k, stats: result.stats });
        }
    }
    dir.stage("simulate");
    dir.write_csv("aggregate.csv", &aggregate)?;
    if plan.trial_dump {
        dir.write_csv("trials.csv", &dump)?;
    }
    dir.write_json("aggregate.json", &entries)?;
    dir.stage("write");
    dir.finish(ctx, RunStatus::Complete, Vec::new())?;
    Ok(0)
}
