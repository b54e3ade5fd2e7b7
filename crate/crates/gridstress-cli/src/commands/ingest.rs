//! `gridstress ingest`: parse the raw files, persist one normalized CSV per
//! variable, and summarize coverage.

use crate::config::{OutputFormat, RegionConfig};
use crate::data::load_region;
use crate::error::CliError;
use crate::render::{format_date, write_table, write_text, Table};
use gridstress_core::ingest::{coverage_report, write_normalized_csv};
use gridstress_core::timeseries::HourlySeries;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct CoverageRecord {
    variable: String,
    hours_present: usize,
    hours_missing: usize,
    longest_gap_hours: usize,
    missing_days: Vec<String>,
}

pub fn run(region: &RegionConfig, format: OutputFormat, out_dir: &Path) -> Result<(), CliError> {
    let data = load_region(region)?;
    let dir = out_dir.join(&region.id);

    // Fixed variable order keeps reruns byte-identical.
    let series: Vec<&HourlySeries> = [
        data.demand.as_ref(),
        data.forecast.as_ref(),
        data.interchange.as_ref(),
        data.temperature.as_ref(),
    ]
    .into_iter()
    .flatten()
    .collect();

    let mut coverage = Table {
        name: "coverage",
        columns: ["variable", "hours_present", "hours_missing", "longest_gap_hours", "missing_days"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
        records: Vec::new(),
    };

    for s in &series {
        let path = dir.join(format!("normalized_{}.csv", s.variable().name()));
        let mut buffer = Vec::new();
        write_normalized_csv(s, &mut buffer).map_err(|e| CliError::file(&path, e))?;
        write_text(&path, &String::from_utf8(buffer).expect("normalized output is UTF-8"))?;
        println!("[{}] wrote {} ({} hours)", region.id, path.display(), s.len());

        let report = coverage_report(s, None)?;
        let missing_days: Vec<String> =
            report.missing_days.iter().copied().map(format_date).collect();
        coverage.rows.push(vec![
            s.variable().name().to_string(),
            report.present.to_string(),
            report.missing.to_string(),
            report.longest_gap.to_string(),
            missing_days.join(";"),
        ]);
        coverage.records.push(CoverageRecord {
            variable: s.variable().name().to_string(),
            hours_present: report.present,
            hours_missing: report.missing,
            longest_gap_hours: report.longest_gap,
            missing_days,
        });
    }

    write_table(&dir, &region.id, &coverage, format)?;
    Ok(())
}
