//! `analyze`: exact series with their brackets, the fading-free outage curve
//! and the diversity orders.

use std::path::Path;

use serde::Serialize;
use thzra_core::analytics::{diversity_order, Bounds, NoFadingModel, OutageQuery};
use thzra_core::config::db_to_linear;
use thzra_core::validation::bound_sweep;
use thzra_core::{AbsorptionModel, DiversityOrder, RawConfig, ValidatedConfig};

use crate::error::CliError;
use crate::output::{Cell, Csv, OutputDir, RunContext, RunStatus};

pub const ACCESS_SCHEMA: &str = "thzra.analyze.access/1";
pub const OUTAGE_SCHEMA: &str = "thzra.analyze.outage/1";

pub const ACCESS_COLUMNS: &[&str] = &[
    "K", "d_ftp", "d_ftp_lo", "d_ftp_hi", "d_atp", "d_atp_lo", "d_atp_hi", "e_ftp", "e_ftp_lo", "e_ftp_hi", "e_atp",
    "e_atp_lo", "e_atp_hi", "gap", "gap_lo", "gap_hi",
];

const KEYS: &[&str] = &["k_min", "k_max", "gamma_bar_db", "gamma_th_db"];

#[derive(Debug, Serialize)]
struct DiversityReport {
    alpha: Option<f64>,
    mu: Option<f64>,
    rho: f64,
    z: f64,
    /// `αμ/2`, absent when fading is disabled.
    fading: Option<f64>,
    misalignment: f64,
    absorption: f64,
    effective: f64,
}

fn bracket(b: Option<Bounds>) -> [Cell; 2] {
    match b {
        Some(b) => [Cell::F(b.lower), Cell::F(b.upper)],
        None => [Cell::Empty, Cell::Empty],
    }
}

pub fn run(ctx: &RunContext, raw: &RawConfig, cfg: &ValidatedConfig, out: &Path) -> Result<u8, CliError> {
    raw.reject_unknown("analyze", KEYS)?;
    let k_min = raw.u64("analyze.k_min")?.unwrap_or(1).max(1);
    let k_max = raw.u64("analyze.k_max")?.unwrap_or(100).max(k_min);
    let grid =
        raw.f64_list("analyze.gamma_bar_db")?.unwrap_or_else(|| (0..=20).map(|i| 30.0 + 2.0 * f64::from(i)).collect());
    let gamma_th = db_to_linear(raw.f64("analyze.gamma_th_db")?.unwrap_or(0.0));

    // Build the outage model first so that degenerate (z, ρ) fails before any output.
    let rho = cfg.misalignment().rho;
    let outage = match cfg.absorption() {
        AbsorptionModel::GammaRandom(g) => Some((NoFadingModel::from_link(g, rho, cfg.link())?, g)),
        AbsorptionModel::Deterministic(_) => None,
    };

    let mut dir = OutputDir::create(out)?;
    let mut notes = Vec::new();

    let ks: Vec<u64> = (k_min..=k_max).collect();
    let mut access = Csv::new(ACCESS_SCHEMA, ACCESS_COLUMNS);
    for r in bound_sweep(&ks) {
        let mut row = vec![Cell::U(r.k), Cell::F(r.d_ftp)];
        row.extend(bracket(r.d_ftp_bounds));
        row.push(Cell::F(r.d_atp));
        row.extend(bracket(r.d_atp_bounds));
        row.push(Cell::F(r.e_ftp));
        row.extend(bracket(r.e_ftp_bounds));
        row.push(Cell::F(r.e_atp));
        row.extend(bracket(r.e_atp_bounds));
        row.push(Cell::F(r.gap));
        row.extend(bracket(r.gap_bounds));
        access.push(&row);
    }
    dir.stage("access");
    dir.write_csv("access.csv", &access)?;

    match outage {
        Some((model, g)) => {
            if cfg.fading().enabled {
                notes.push("outage.csv is the closed form without short-term fading".to_string());
            }
            let mut csv = Csv::new(OUTAGE_SCHEMA, &["gamma_bar_db", "p_out"]);
            for &db in &grid {
                let q = OutageQuery::new(gamma_th, db_to_linear(db), cfg.link().k_h());
                csv.push(&[Cell::F(db), Cell::F(model.snr_cdf(&q)?.probability)]);
            }
            dir.write_csv("outage.csv", &csv)?;
            let f = cfg.fading();
            let z = g.z(cfg.link().distance_km());
            let d: DiversityOrder = diversity_order(f.alpha, f.mu, rho, z);
            let report = DiversityReport {
                alpha: f.enabled.then_some(f.alpha),
                mu: f.enabled.then_some(f.mu),
                rho,
                z,
                fading: f.enabled.then_some(d.fading),
                misalignment: d.misalignment,
                absorption: d.absorption,
                effective: if f.enabled { d.effective } else { d.misalignment.min(d.absorption) },
            };
            dir.write_json("diversity.json", &report)?;
        }
        None => notes.push("deterministic absorption: no outage closed form or diversity orders".to_string()),
    }
    dir.stage("outage");
    dir.finish(ctx, RunStatus::Complete, notes)?;
    Ok(0)
}
