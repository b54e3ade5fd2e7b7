//! `gridstress indicators`: daily peak/trough, ramp rate, forecast error
//! with daily means, interchange daily means, daily totals, and (when
//! configured) the cross-year aligned demand table.
//!
//! A missing variable skips its tables with a warning; the command fails
//! only if nothing at all could be produced.

use crate::config::{AnalysisConfig, OutputFormat, RegionConfig};
use crate::data::{data_extent, has_data, load_region, slice_to_window};
use crate::error::CliError;
use crate::render::{format_date, format_timestamp, sig6, sig6_opt, write_table, Table};
use chrono::NaiveDate;
use gridstress_core::indicators::{
    daily_peak_trough, forecast_error, interchange_daily_mean, ramp_rate, PeakTrough,
};
use gridstress_core::timeseries::{
    align_series, daily_aggregate, DailySeries, DateRange, HourlySeries, Reducer,
};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct SeriesPoint {
    timestamp: String,
    value_mwh: Option<f64>,
}

#[derive(Serialize)]
struct DailyPoint {
    date: String,
    value_mwh: Option<f64>,
    coverage: u32,
}

#[derive(Serialize)]
struct AlignedPoint {
    day_offset: u32,
    hour: u32,
    value_a_mwh: Option<f64>,
    value_b_mwh: Option<f64>,
}

pub fn run(
    config: &AnalysisConfig,
    region: &RegionConfig,
    window_names: &[String],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<(), CliError> {
    let window = match window_names {
        [] => None,
        [name] => Some(*config.window(name)?),
        _ => {
            return Err(CliError::Input(
                "indicators takes at most one --window".to_string(),
            ))
        }
    };
    let where_clause = match window_names {
        [name] => format!(" in window {name:?}"),
        _ => String::new(),
    };

    let data = load_region(region)?;
    let dir = out_dir.join(&region.id);
    let mut produced = 0usize;

    let restrict = |series: &HourlySeries| match &window {
        Some(w) => slice_to_window(series, w),
        None => series.clone(),
    };
    let warn = |what: &str| {
        eprintln!("warning: [{}] {what}; skipping", region.id);
    };

    // Demand-backed tables.
    let demand = data.demand.as_ref().map(&restrict).filter(has_data);
    match &demand {
        Some(demand) => {
            let report = daily_peak_trough(demand, config.model.min_coverage)?;
            if !report.omitted_days.is_empty() {
                eprintln!(
                    "warning: [{}] peak/trough omitted {} day(s) under {} present hours",
                    region.id,
                    report.omitted_days.len(),
                    config.model.min_coverage
                );
            }
            write_table(&dir, &region.id, &peak_trough_table(&report.rows), format)?;
            produced += 1;

            match ramp_rate(demand) {
                Ok(ramp) => {
                    write_table(
                        &dir,
                        &region.id,
                        &series_table("ramp_rate", "ramp_mwh", &ramp),
                        format,
                    )?;
                    produced += 1;
                }
                Err(e) => warn(&format!("ramp rate not computable ({e})")),
            }

            let totals = daily_aggregate(demand, Reducer::Sum, 24)?;
            write_table(&dir, &region.id, &daily_table("daily_totals", "total_mwh", &totals), format)?;
            produced += 1;
        }
        None => {
            if data.demand.is_some() {
                warn(&format!("no demand data{where_clause}"));
            } else {
                warn("no demand column configured");
            }
        }
    }

    // Forecast error, hourly and as daily means.
    match (&demand, data.forecast.as_ref().map(&restrict).filter(has_data)) {
        (Some(demand), Some(forecast)) => match forecast_error(demand, &forecast) {
            Ok(error) => {
                write_table(
                    &dir,
                    &region.id,
                    &series_table("forecast_error", "error_mwh", &error),
                    format,
                )?;
                let daily = daily_aggregate(&error, Reducer::Mean, 1)?;
                write_table(
                    &dir,
                    &region.id,
                    &daily_table("forecast_error_daily", "mean_error_mwh", &daily),
                    format,
                )?;
                produced += 2;
            }
            Err(e) => warn(&format!("forecast error not computable ({e})")),
        },
        (_, None) => {
            if data.forecast.is_some() {
                warn(&format!("no forecast data{where_clause}"));
            } else {
                warn("no forecast column configured");
            }
        }
        (None, Some(_)) => warn("forecast error needs demand data"),
    }

    // Interchange daily means.
    match data.interchange.as_ref().map(&restrict).filter(has_data) {
        Some(interchange) => {
            let daily = interchange_daily_mean(&interchange)?;
            write_table(
                &dir,
                &region.id,
                &daily_table("interchange_daily", "mean_interchange_mwh", &daily),
                format,
            )?;
            produced += 1;
        }
        None => {
            if data.interchange.is_some() {
                warn(&format!("no interchange data{where_clause}"));
            } else {
                warn("no interchange column configured");
            }
        }
    }

    // Cross-year aligned comparison. It spans whole years, so it only runs
    // when the command is not restricted to a window.
    if let (None, Some(month), Some((year_a, year_b))) =
        (&window, config.indicators.align_month, config.indicators.align_years)
    {
        match &data.demand {
            Some(full_demand) => {
                match aligned_table(full_demand, month, year_a, year_b) {
                    Ok(table) => {
                        write_table(&dir, &region.id, &table, format)?;
                        produced += 1;
                    }
                    Err(e) => warn(&format!("aligned comparison not computable ({e})")),
                }
            }
            None => warn("aligned comparison needs a demand column"),
        }
    }

    if produced == 0 {
        return Err(CliError::InsufficientData(format!(
            "no indicator table could be produced{where_clause}"
        )));
    }
    Ok(())
}

fn peak_trough_table(rows: &[PeakTrough]) -> Table<PeakTrough> {
    Table {
        name: "peak_trough",
        columns: ["date", "peak_mwh", "trough_mwh"].map(String::from).to_vec(),
        rows: rows
            .iter()
            .map(|r| vec![format_date(r.date), sig6(r.peak_mwh), sig6(r.trough_mwh)])
            .collect(),
        records: rows.to_vec(),
    }
}

fn series_table(name: &'static str, column: &str, series: &HourlySeries) -> Table<SeriesPoint> {
    Table {
        name,
        columns: vec!["timestamp".to_string(), column.to_string()],
        rows: series
            .iter()
            .map(|(ts, v)| vec![format_timestamp(ts), sig6_opt(v)])
            .collect(),
        records: series
            .iter()
            .map(|(ts, v)| SeriesPoint { timestamp: format_timestamp(ts), value_mwh: v })
            .collect(),
    }
}

fn daily_table(name: &'static str, column: &str, series: &DailySeries) -> Table<DailyPoint> {
    Table {
        name,
        columns: vec!["date".to_string(), column.to_string(), "coverage".to_string()],
        rows: series
            .iter()
            .map(|(date, v, c)| vec![format_date(date), sig6_opt(v), c.to_string()])
            .collect(),
        records: series
            .iter()
            .map(|(date, v, c)| DailyPoint { date: format_date(date), value_mwh: v, coverage: c })
            .collect(),
    }
}

fn aligned_table(
    demand: &HourlySeries,
    month: u32,
    year_a: i32,
    year_b: i32,
) -> Result<Table<AlignedPoint>, CliError> {
    // Slice each year, then trim to where it actually has data so the
    // table does not trail off into months of empty slots.
    let year_slice = |year: i32| -> Result<HourlySeries, CliError> {
        let range = DateRange::new(
            NaiveDate::from_ymd_opt(year, 1, 1).expect("January 1st exists"),
            NaiveDate::from_ymd_opt(year, 12, 31).expect("December 31st exists"),
        )?;
        let sliced = slice_to_window(demand, &range);
        let extent = data_extent(&sliced).ok_or_else(|| {
            CliError::InsufficientData(format!("demand has no data in year {year}"))
        })?;
        Ok(slice_to_window(&sliced, &extent))
    };
    let a = year_slice(year_a)?;
    let b = year_slice(year_b)?;
    let rows = align_series(&a, &b, month)?;
    Ok(Table {
        name: "aligned_demand",
        columns: vec![
            "day_offset".to_string(),
            "hour".to_string(),
            format!("demand_{year_a}_mwh"),
            format!("demand_{year_b}_mwh"),
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.day_offset.to_string(),
                    r.hour.to_string(),
                    sig6_opt(r.value_a),
                    sig6_opt(r.value_b),
                ]
            })
            .collect(),
        records: rows
            .iter()
            .map(|r| AlignedPoint {
                day_offset: r.day_offset,
                hour: r.hour,
                value_a_mwh: r.value_a,
                value_b_mwh: r.value_b,
            })
            .collect(),
    })
}
