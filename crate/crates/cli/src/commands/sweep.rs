//! `sweep`: cartesian parameter grid, one CSV per cell, resumable.
//!
//! Each cell is seeded by its label, so a cell's output does not depend on
//! which other cells exist or were computed in the same run. Cell files are
//! written atomically; a file that exists is complete, and a rerun over the
//! same output directory only computes the missing cells.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thzra_core::analytics::{NoFadingModel, OutageQuery};
use thzra_core::config::{db_to_linear, validate_config};
use thzra_core::validation::outage_mc;
use thzra_core::{AbsorptionModel, ChannelModel, ConfigError, RawConfig, RawValue, Scheme, SeedTree, ValidatedConfig};

use super::simulate::{
    aggregate_row, channel_for, population_from, run_cell, schemes_from, PopulationMode, AGGREGATE_COLUMNS,
};
use crate::error::CliError;
use crate::output::{Cell, Csv, OutputDir, RunContext, RunStatus};

/// Sweepable axes in the order they vary (last fastest).
pub const AXES: &[&str] = &["k", "avg_snr_db", "kbeta_db_per_km", "rho", "alpha", "mu", "k_h"];

const KEYS: &[&str] = &[
    "kind",
    "grid_db",
    "draws",
    "gamma_th_db",
    "schemes",
    "population",
    "k",
    "avg_snr_db",
    "kbeta_db_per_km",
    "rho",
    "alpha",
    "mu",
    "k_h",
];

pub const OUTAGE_CELL_SCHEMA: &str = "thzra.sweep.outage_cell/1";
pub const PROTOCOL_CELL_SCHEMA: &str = "thzra.sweep.protocol_cell/1";
pub const SUMMARY_SCHEMA: &str = "thzra.sweep.summary/1";
const OUTAGE_COLUMNS: &[&str] = &["gamma_bar_db", "n", "outages", "p_hat", "ci_lo", "ci_hi", "p_closed"];
const PLAN_NAME: &str = "plan.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Outage,
    Protocol,
}

/// Everything that determines the content of the cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub kind: SweepKind,
    pub seed: u64,
    pub axes: Vec<(String, Vec<f64>)>,
    pub grid_db: Vec<f64>,
    pub draws: u64,
    pub gamma_th_db: f64,
    pub schemes: Vec<Scheme>,
    pub admission: bool,
    pub trials: usize,
    pub base: Vec<(String, RawValue)>,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub label: String,
    pub values: Vec<f64>,
    pub file: String,
}

impl SweepPlan {
    pub fn from_raw(
        raw: &RawConfig,
        cfg: &ValidatedConfig,
        seed: u64,
        trials: Option<usize>,
    ) -> Result<Self, CliError> {
        raw.reject_unknown("sweep", KEYS)?;
        let kind = match raw.str("sweep.kind")? {
            None | Some("outage") => SweepKind::Outage,
            Some("protocol") => SweepKind::Protocol,
            Some(other) => {
                return Err(ConfigError::Invalid {
                    field: "sweep.kind".into(),
                    reason: format!("unknown kind `{other}` (outage|protocol)"),
                }
                .into())
            }
        };
        let mut axes = Vec::new();
        for &name in AXES {
            if let Some(values) = raw.f64_list(&format!("sweep.{name}"))? {
                if values.is_empty() {
                    return Err(
                        ConfigError::Invalid { field: format!("sweep.{name}"), reason: "empty axis".into() }.into()
                    );
                }
                axes.push((name.to_string(), values));
            }
        }
        if axes.is_empty() {
            return Err(CliError::Config("sweep declares no axes".into()));
        }
        let has = |n: &str| axes.iter().any(|(a, _)| a == n);
        if kind == SweepKind::Outage && (has("k") || has("avg_snr_db")) {
            return Err(CliError::Config(
                "outage sweeps span sweep.grid_db per cell; axes k and avg_snr_db apply to protocol sweeps".into(),
            ));
        }
        let admission = population_from(raw, "sweep.population")? == PopulationMode::Admission;
        let grid_db =
            raw.f64_list("sweep.grid_db")?.unwrap_or_else(|| (0..=8).map(|i| 30.0 + 5.0 * f64::from(i)).collect());
        let draws = raw.u64("sweep.draws")?.unwrap_or(100_000);
        if draws == 0 {
            return Err(ConfigError::OutOfRange {
                field: "sweep.draws".into(),
                value: "0".into(),
                bound: ">= 1".into(),
            }
            .into());
        }
        Ok(SweepPlan {
            kind,
            seed,
            axes,
            grid_db,
            draws,
            gamma_th_db: raw.f64("sweep.gamma_th_db")?.unwrap_or(0.0),
            schemes: schemes_from(raw, "sweep.schemes")?.unwrap_or_else(|| vec![Scheme::Ftp, Scheme::Atp]),
            admission,
            trials: trials.unwrap_or(cfg.protocol().trials),
            base: cfg.to_raw().iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        })
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let total: usize = self.axes.iter().map(|(_, v)| v.len()).product();
        (0..total)
            .map(|index| {
                let mut rem = index;
                let mut values = vec![0.0; self.axes.len()];
                for (slot, (_, vals)) in values.iter_mut().zip(&self.axes).rev() {
                    *slot = vals[rem % vals.len()];
                    rem /= vals.len();
                }
                let label =
                    self.axes.iter().zip(&values).map(|((n, _), v)| format!("{n}={v}")).collect::<Vec<_>>().join("_");
                let file = format!("cells/cell_{index:04}_{label}.csv");
                SweepCell { index, label, values, file }
            })
            .collect()
    }

    /// Configuration of one cell: the base document with the axis values applied.
    pub fn cell_config(&self, cell: &SweepCell) -> Result<ValidatedConfig, CliError> {
        let mut raw = RawConfig::new();
        for (k, v) in &self.base {
            raw.set(k.clone(), v.clone());
        }
        for ((name, _), &v) in self.axes.iter().zip(&cell.values) {
            match name.as_str() {
                "k" => {
                    raw.set("protocol.n_total", RawValue::Float(v));
                }
                "avg_snr_db" => {
                    raw.remove("link.avg_snr");
                    raw.set("link.avg_snr_db", v);
                }
                "kbeta_db_per_km" => {
                    if raw.str("absorption.model")? != Some("gamma") {
                        return Err(CliError::Config("axis kbeta_db_per_km needs absorption.model = \"gamma\"".into()));
                    }
                    raw.remove("absorption.beta_db_per_km");
                    raw.set("absorption.kbeta_db_per_km", v);
                }
                "rho" => {
                    raw.set("misalignment.rho", v);
                }
                "alpha" => {
                    raw.set("fading.alpha", v);
                }
                "mu" => {
                    raw.set("fading.mu", v);
                }
                "k_h" => {
                    let each = v / std::f64::consts::SQRT_2;
                    raw.set("link.k_t", each).set("link.k_r", each);
                }
                other => unreachable!("axis {other}"),
            }
        }
        validate_config(&raw).map_err(|e| CliError::Config(format!("cell {}: {e}", cell.label)))
    }

    fn run_cell(&self, cell: &SweepCell, cfg: &ValidatedConfig) -> Result<Csv, CliError> {
        let tree = SeedTree::new(self.seed).named("sweep").named(&cell.label);
        match self.kind {
            SweepKind::Outage => {
                let ch = ChannelModel::new(cfg.link(), cfg.absorption(), cfg.fading(), cfg.misalignment())?;
                let gamma_th = db_to_linear(self.gamma_th_db);
                let closed = match cfg.absorption() {
                    AbsorptionModel::GammaRandom(g) if !cfg.fading().enabled => {
                        NoFadingModel::from_link(g, cfg.misalignment().rho, cfg.link()).ok()
                    }
                    _ => None,
                };
                let mut csv = Csv::new(OUTAGE_CELL_SCHEMA, OUTAGE_COLUMNS);
                for p in outage_mc(&ch, gamma_th, &self.grid_db, self.draws, &tree) {
                    let exact = closed.as_ref().and_then(|m| {
                        let q = OutageQuery::new(gamma_th, db_to_linear(p.gamma_bar_db), ch.k_h());
                        m.snr_cdf(&q).ok().map(|v| v.probability)
                    });
                    csv.push(&[
                        Cell::F(p.gamma_bar_db),
                        Cell::U(p.n),
                        Cell::U(p.outages),
                        Cell::F(p.p_hat),
                        Cell::F(p.ci_lo),
                        Cell::F(p.ci_hi),
                        Cell::from(exact),
                    ]);
                }
                Ok(csv)
            }
            SweepKind::Protocol => {
                let mode = if self.admission { PopulationMode::Admission } else { PopulationMode::Active };
                let channel = channel_for(cfg, mode)?;
                let k = cfg.protocol().n_total as u64;
                let mut csv = Csv::new(PROTOCOL_CELL_SCHEMA, AGGREGATE_COLUMNS);
                for &scheme in &self.schemes {
                    let r = run_cell(cfg, channel.as_ref(), mode, scheme, k, self.trials, &tree.named(scheme.as_str()));
                    csv.push(&aggregate_row(k, &r.stats, mode));
                }
                Ok(csv)
            }
        }
    }
}

/// Concatenates the cell tables, prefixed with the cell index and axis values.
fn summary(plan: &SweepPlan, cells: &[SweepCell], dir: &OutputDir) -> Result<Csv, CliError> {
    let inner = match plan.kind {
        SweepKind::Outage => OUTAGE_COLUMNS,
        SweepKind::Protocol => AGGREGATE_COLUMNS,
    };
    let mut columns: Vec<&str> = vec!["cell"];
    columns.extend(plan.axes.iter().map(|(n, _)| n.as_str()));
    columns.extend(inner);
    let mut csv = Csv::new(SUMMARY_SCHEMA, &columns);
    for cell in cells {
        let path = dir.path(&cell.file);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let prefix: Vec<String> =
            std::iter::once(cell.index.to_string()).chain(cell.values.iter().map(|v| v.to_string())).collect();
        for line in text.lines().skip(2).filter(|l| !l.is_empty()) {
            csv.push_raw(&format!("{},{line}", prefix.join(",")));
        }
    }
    Ok(csv)
}

pub fn run(
    ctx: &RunContext,
    raw: &RawConfig,
    cfg: &ValidatedConfig,
    out: &Path,
    max_cells: Option<usize>,
) -> Result<u8, CliError> {
    let plan = SweepPlan::from_raw(raw, cfg, ctx.seed, ctx.trials)?;
    let cells = plan.cells();
    let configs: Vec<ValidatedConfig> = cells.iter().map(|c| plan.cell_config(c)).collect::<Result<_, _>>()?;

    let mut dir = OutputDir::create(out)?;
    let plan_path = dir.path(PLAN_NAME);
    if plan_path.exists() {
        let text = fs::read_to_string(&plan_path).map_err(|e| CliError::io(&plan_path, e))?;
        let previous: Option<SweepPlan> = serde_json::from_str(&text).ok();
        if previous.as_ref() != Some(&plan) {
            return Err(CliError::Config(format!(
                "{} belongs to a different sweep; use a fresh output directory",
                out.display()
            )));
        }
        dir.adopt(PLAN_NAME, "json")?;
    } else {
        dir.write_json(PLAN_NAME, &plan)?;
    }

    let (done, pending): (Vec<&SweepCell>, Vec<&SweepCell>) = cells.iter().partition(|c| dir.path(&c.file).exists());
    for c in &done {
        dir.adopt(&c.file, "csv")?;
    }
    let budget = max_cells.unwrap_or(usize::MAX).min(pending.len());
    let (now, later) = pending.split_at(budget);
    let results: Vec<(usize, Csv)> = now
        .par_iter()
        .map(|c| {
            let csv = plan.run_cell(c, &configs[c.index])?;
            crate::output::write_atomic(&dir.path(&c.file), csv.render().as_bytes())?;
            Ok((c.index, csv))
        })
        .collect::<Result<_, CliError>>()?;
    for (i, _) in &results {
        dir.adopt(&cells[*i].file, "csv")?;
    }
    dir.stage("cells");
    println!(
        "sweep: {} cells, {} reused, {} computed, {} pending",
        cells.len(),
        done.len(),
        results.len(),
        later.len()
    );

    if later.is_empty() {
        let csv = summary(&plan, &cells, &dir)?;
        dir.write_csv("summary.csv", &csv)?;
        dir.finish(ctx, RunStatus::Complete, Vec::new())?;
    } else {
        let notes = later.iter().map(|c| format!("pending cell {}", c.label)).collect();
        dir.finish(ctx, RunStatus::PartialRun, notes)?;
    }
    Ok(0)
}
