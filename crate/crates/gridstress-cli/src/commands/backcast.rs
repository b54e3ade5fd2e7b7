//! `gridstress backcast`: fit the hour-of-week degree-day demand model on
//! the training window, predict counterfactual demand over the event
//! window, and write the daily change table with its confidence bands.
//!
//! Windows come from the config by name: `train`, `event` and `base` by
//! default, or three explicit `--window` flags in that order. The daily
//! change sigma is the standard deviation of day-summed training residuals,
//! expressed as a fraction of the base window's mean daily demand.

use crate::config::{AnalysisConfig, OutputFormat, RegionConfig, Setpoints};
use crate::data::{load_region, slice_to_window, union_range};
use crate::error::CliError;
use crate::render::{format_date, format_timestamp, sig6, sig6_opt, write_table, write_text, Table};
use chrono::NaiveDate;
use gridstress_core::stats::{mean, sample_std};
use gridstress_core::timeseries::{daily_aggregate, hour_ending_day, Reducer};
use gridstress_core::weather::{
    build_design, change_series, fit_ols, predict_counterfactual, search_setpoints, ChangePoint,
    DegreeParams, Design, FitOutput, ModelRecord, SetpointScore,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize)]
struct CounterfactualPoint {
    timestamp: String,
    counterfactual_mwh: Option<f64>,
}

#[derive(Serialize)]
struct ChangeRecord {
    date: String,
    observed_mwh: f64,
    counterfactual_mwh: f64,
    change_pct: f64,
    ci95_lo: f64,
    ci95_hi: f64,
    ci99_lo: f64,
    ci99_hi: f64,
}

pub fn run(
    config: &AnalysisConfig,
    region: &RegionConfig,
    window_names: &[String],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<(), CliError> {
    let (train_name, event_name, base_name) = match window_names {
        [] => ("train", "event", "base"),
        [t, e, b] => (t.as_str(), e.as_str(), b.as_str()),
        _ => {
            return Err(CliError::Input(
                "backcast takes no --window flags (uses windows named train, event, base) \
                 or exactly three in that order"
                    .to_string(),
            ))
        }
    };
    let train = *config.window(train_name)?;
    let event = *config.window(event_name)?;
    let base = *config.window(base_name)?;

    let data = load_region(region)?;
    let demand = data.demand.as_ref().ok_or_else(|| {
        CliError::Input(format!(
            "region {:?} has no demand column configured; backcast needs demand",
            region.id
        ))
    })?;
    let temps = data.temperature.as_ref().ok_or_else(|| {
        CliError::Input(format!(
            "region {:?} declares no weather_csv; backcast needs hourly temperatures",
            region.id
        ))
    })?;

    let demand_train = slice_to_window(demand, &train);
    let temps_train = slice_to_window(temps, &train);
    let dir = out_dir.join(&region.id);

    // Choose setpoints, then fit once at the chosen pair.
    let (params, search_table) = match &config.model.setpoints {
        Setpoints::Fixed { heating, cooling } => (DegreeParams::new(*heating, *cooling)?, None),
        Setpoints::Search { heating_grid, cooling_grid } => {
            let search = search_setpoints(
                &temps_train,
                &demand_train,
                heating_grid,
                cooling_grid,
                config.model.criterion,
            )
            .map_err(|e| CliError::from(e).in_window(train_name, &train))?;
            (search.best, Some(search.table))
        }
    };
    let design = build_design(&temps_train, &demand_train, params)
        .map_err(|e| CliError::from(e).in_window(train_name, &train))?;
    let fit = fit_ols(&design).map_err(|e| CliError::from(e).in_window(train_name, &train))?;
    for warning in &fit.warnings {
        eprintln!("warning: [{}] {warning}", region.id);
    }

    // The model file keeps full float precision so it reloads bit-exactly.
    let record =
        ModelRecord { model: fit.model.clone(), diagnostics: fit.diagnostics.clone() };
    let model_path = dir.join("model.json");
    let mut model_json = record.to_json()?;
    model_json.push('\n');
    write_text(&model_path, &model_json)?;
    println!("[{}] wrote {}", region.id, model_path.display());

    if let Some(table) = &search_table {
        write_table(&dir, &region.id, &scores_table(table), format)?;
    }

    let temps_event = slice_to_window(temps, &event);
    let counterfactual = predict_counterfactual(&fit.model, &temps_event)
        .map_err(|e| CliError::from(e).in_window(event_name, &event))?;
    write_table(&dir, &region.id, &counterfactual_table(&counterfactual), format)?;

    // Daily error spread of the fit, from complete training days.
    let sigma_mwh = daily_residual_spread(&design, &fit, train_name)?;

    let span = union_range(&base, &event);
    let observed_daily = daily_aggregate(&slice_to_window(demand, &span), Reducer::Sum, 24)?;
    let base_totals = observed_daily.present_in(&base);
    if base_totals.len() < 7 {
        return Err(CliError::InsufficientData(format!(
            "base window {base_name:?} ({base}) holds {} complete day(s) of demand; need at least 7",
            base_totals.len()
        )));
    }
    let base_mean = mean(&base_totals);
    if base_mean <= 0.0 {
        return Err(CliError::InsufficientData(format!(
            "base window {base_name:?} mean daily demand is {base_mean}; must be positive"
        )));
    }
    let sigma_daily = sigma_mwh / base_mean;

    let counterfactual_daily = daily_aggregate(&counterfactual, Reducer::Sum, 24)?;
    let changes = change_series(&observed_daily, &counterfactual_daily, &base, sigma_daily)
        .map_err(|e| CliError::from(e).in_window(base_name, &base))?;
    if changes.is_empty() {
        eprintln!(
            "warning: [{}] no event day has both a complete observed and a complete \
             counterfactual total",
            region.id
        );
    }
    write_table(&dir, &region.id, &changes_table(&changes), format)?;

    println!(
        "[{}] setpoints ({}, {}) degF; in-sample mean rel. error {}%, std {}%, R2 {}; \
         daily sigma {}% of base mean",
        region.id,
        sig6(fit.model.degree_params.heating_setpoint()),
        sig6(fit.model.degree_params.cooling_setpoint()),
        sig6(100.0 * fit.diagnostics.mean_rel_error),
        sig6(100.0 * fit.diagnostics.std_rel_error),
        sig6(fit.diagnostics.r_squared),
        sig6(100.0 * sigma_daily),
    );
    Ok(())
}

/// Standard deviation of day-summed residuals over the training window's
/// complete (24-residual) days.
fn daily_residual_spread(
    design: &Design,
    fit: &FitOutput,
    train_name: &str,
) -> Result<f64, CliError> {
    let mut day_sums: BTreeMap<NaiveDate, (u32, f64)> = BTreeMap::new();
    for (ts, r) in design.timestamps.iter().zip(&fit.diagnostics.residuals) {
        let entry = day_sums.entry(hour_ending_day(*ts)).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += r;
    }
    let sums: Vec<f64> =
        day_sums.values().filter(|(count, _)| *count == 24).map(|(_, sum)| *sum).collect();
    if sums.len() < 2 {
        return Err(CliError::InsufficientData(format!(
            "training window {train_name:?} has {} complete residual day(s); \
             need at least 2 to estimate the daily error spread",
            sums.len()
        )));
    }
    let sigma = sample_std(&sums);
    // Negated so a NaN spread also lands on the error path.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sigma > 0.0) {
        return Err(CliError::InsufficientData(
            "training residuals have zero daily spread; confidence bands are undefined"
                .to_string(),
        ));
    }
    Ok(sigma)
}

fn scores_table(table: &[SetpointScore]) -> Table<SetpointScore> {
    Table {
        name: "setpoint_scores",
        columns: ["heating_degf", "cooling_degf", "score"].map(String::from).to_vec(),
        rows: table
            .iter()
            .map(|s| vec![sig6(s.heating), sig6(s.cooling), sig6_opt(s.score)])
            .collect(),
        records: table.to_vec(),
    }
}

fn counterfactual_table(series: &gridstress_core::timeseries::HourlySeries) -> Table<CounterfactualPoint> {
    Table {
        name: "counterfactual",
        columns: ["timestamp", "counterfactual_mwh"].map(String::from).to_vec(),
        rows: series
            .iter()
            .map(|(ts, v)| vec![format_timestamp(ts), sig6_opt(v)])
            .collect(),
        records: series
            .iter()
            .map(|(ts, v)| CounterfactualPoint {
                timestamp: format_timestamp(ts),
                counterfactual_mwh: v,
            })
            .collect(),
    }
}

fn changes_table(changes: &[ChangePoint]) -> Table<ChangeRecord> {
    Table {
        name: "changes",
        columns: [
            "date",
            "observed_mwh",
            "counterfactual_mwh",
            "change_pct",
            "ci95_lo",
            "ci95_hi",
            "ci99_lo",
            "ci99_hi",
        ]
        .map(String::from)
        .to_vec(),
        rows: changes
            .iter()
            .map(|c| {
                vec![
                    format_date(c.date),
                    sig6(c.observed_mwh),
                    sig6(c.counterfactual_mwh),
                    sig6(c.change_pct),
                    sig6(c.ci95.0),
                    sig6(c.ci95.1),
                    sig6(c.ci99.0),
                    sig6(c.ci99.1),
                ]
            })
            .collect(),
        records: changes
            .iter()
            .map(|c| ChangeRecord {
                date: format_date(c.date),
                observed_mwh: c.observed_mwh,
                counterfactual_mwh: c.counterfactual_mwh,
                change_pct: c.change_pct,
                ci95_lo: c.ci95.0,
                ci95_hi: c.ci95.1,
                ci99_lo: c.ci99.0,
                ci99_hi: c.ci99.1,
            })
            .collect(),
    }
}

impl CliError {
    /// Tag an error with the window whose data produced it.
    fn in_window(self, name: &str, range: &gridstress_core::timeseries::DateRange) -> CliError {
        let tag = |msg: String| format!("window {name:?} ({range}): {msg}");
        match self {
            CliError::Input(msg) => CliError::Input(tag(msg)),
            CliError::InsufficientData(msg) => CliError::InsufficientData(tag(msg)),
            CliError::Numerical(msg) => CliError::Numerical(tag(msg)),
        }
    }
}
