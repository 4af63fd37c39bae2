//! `validate`: statistical suites with the 0/1/2 exit-code contract.

use std::path::Path;

use thzra_core::validation::{run_suites, summary_table, ValidationOptions};
use thzra_core::{RawConfig, ValidatedConfig};

use crate::error::CliError;
use crate::output::{Cell, Csv, OutputDir, RunContext, RunStatus};

pub const SUMMARY_SCHEMA: &str = "thzra.validate.summary/1";

pub fn run(ctx: &RunContext, raw: &RawConfig, cfg: &ValidatedConfig, out: &Path) -> Result<u8, CliError> {
    let mut opts = ValidationOptions::from_raw(raw)?;
    if let Some(t) = ctx.trials {
        opts.protocol_trials = t;
    }
    let mut dir = OutputDir::create(out)?;
    let reports = run_suites(cfg, &opts, ctx.seed)?;
    dir.stage("suites");

    let mut csv = Csv::new(SUMMARY_SCHEMA, &["suite", "check", "result", "statistic", "threshold"]);
    for r in &reports {
        dir.write_json(&format!("reports/{}.json", r.suite), r)?;
        for c in &r.checks {
            let result = if c.skipped {
                "skip"
            } else if c.pass {
                "pass"
            } else {
                "fail"
            };
            csv.push(&[
                Cell::from(r.suite.as_str()),
                Cell::from(c.name.as_str()),
                Cell::from(result),
                Cell::F(c.statistic),
                Cell::F(c.threshold),
            ]);
        }
    }
    dir.write_json("options.json", &opts)?;
    dir.write_csv("summary.csv", &csv)?;
    let table = summary_table(&reports);
    dir.write_text("summary.txt", &table)?;
    print!("{table}");

    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.suite.as_str()).collect();
    let notes = failed.iter().map(|s| format!("suite {s} failed")).collect();
    dir.finish(ctx, RunStatus::Complete, notes)?;
    if failed.is_empty() {
        println!("all suites passed");
        Ok(0)
    } else {
        println!("failed suites: {}", failed.join(", "));
        Ok(1)
    }
}
