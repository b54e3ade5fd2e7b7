//! `gridstress density`: estimate one indicator's distribution over two
//! named windows on a shared grid and summarize how it shifted.

use crate::config::{AnalysisConfig, DensityIndicator, OutputFormat, RegionConfig};
use crate::data::{load_region, RegionData};
use crate::error::CliError;
use crate::render::{sig6, write_table, Table};
use gridstress_core::density::{compare_periods, DensityError, PeriodComparison, SummaryDeltas};
use gridstress_core::indicators::{forecast_error, interchange_daily_mean, ramp_rate};
use gridstress_core::timeseries::{daily_aggregate, DailySeries, DateRange, HourlySeries, Reducer};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    density_a: f64,
    density_b: f64,
}

#[derive(Serialize)]
struct WindowSummary {
    window: String,
    n_samples: usize,
    bandwidth: f64,
    sample_mean: f64,
    sample_std: f64,
}

enum IndicatorSeries {
    Hourly(HourlySeries),
    Daily(DailySeries),
}

pub fn run(
    config: &AnalysisConfig,
    region: &RegionConfig,
    window_names: &[String],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<(), CliError> {
    let [name_a, name_b] = window_names else {
        return Err(CliError::Input(
            "density needs exactly two --window flags (the periods to compare)".to_string(),
        ));
    };
    let window_a = *config.window(name_a)?;
    let window_b = *config.window(name_b)?;

    let data = load_region(region)?;
    let indicator = config.density.indicator;
    let series = indicator_series(&data, indicator, region)?;

    let bandwidth = config.density.bandwidth;
    let comparison = match &series {
        IndicatorSeries::Hourly(s) => compare_periods(s, &window_a, &window_b, bandwidth),
        IndicatorSeries::Daily(s) => compare_periods(s, &window_a, &window_b, bandwidth),
    }
    .map_err(|e| name_thin_window(e, name_a, &window_a, name_b))?;

    let dir = out_dir.join(&region.id);
    write_table(&dir, &region.id, &curves_table(&comparison, name_a, name_b), format)?;
    write_table(
        &dir,
        &region.id,
        &summary_table(&comparison, name_a, name_b),
        format,
    )?;
    write_table(&dir, &region.id, &deltas_table(&comparison.deltas), format)?;
    println!(
        "[{}] density of {} compared over {name_a:?} vs {name_b:?}",
        region.id,
        indicator.name()
    );
    Ok(())
}

/// Attach the window's config name to a thin-window error; the range alone
/// is hard to map back to the config.
fn name_thin_window(
    err: DensityError,
    name_a: &str,
    window_a: &DateRange,
    name_b: &str,
) -> CliError {
    match &err {
        DensityError::WindowTooThin { window, found } => {
            let name = if window == window_a { name_a } else { name_b };
            CliError::InsufficientData(format!(
                "window {name:?} ({window}) holds {found} sample(s); need at least 2"
            ))
        }
        _ => err.into(),
    }
}

fn indicator_series(
    data: &RegionData,
    indicator: DensityIndicator,
    region: &RegionConfig,
) -> Result<IndicatorSeries, CliError> {
    let need = |variable: &str| {
        CliError::Input(format!(
            "region {:?} has no {variable} column configured; density indicator {:?} needs it",
            region.id,
            indicator.name()
        ))
    };
    let demand = || data.demand.as_ref().ok_or_else(|| need("demand"));
    Ok(match indicator {
        DensityIndicator::Demand => IndicatorSeries::Hourly(demand()?.clone()),
        DensityIndicator::RampRate => IndicatorSeries::Hourly(ramp_rate(demand()?)?),
        DensityIndicator::ForecastError => {
            let forecast = data.forecast.as_ref().ok_or_else(|| need("forecast"))?;
            IndicatorSeries::Hourly(forecast_error(demand()?, forecast)?)
        }
        DensityIndicator::InterchangeDaily => {
            let interchange = data.interchange.as_ref().ok_or_else(|| need("interchange"))?;
            IndicatorSeries::Daily(interchange_daily_mean(interchange)?)
        }
        DensityIndicator::DailyTotal => {
            IndicatorSeries::Daily(daily_aggregate(demand()?, Reducer::Sum, 24)?)
        }
    })
}

fn curves_table(cmp: &PeriodComparison, name_a: &str, name_b: &str) -> Table<CurvePoint> {
    let rows = cmp
        .a
        .grid
        .iter()
        .zip(&cmp.a.density)
        .zip(&cmp.b.density)
        .map(|((&x, &da), &db)| vec![sig6(x), sig6(da), sig6(db)])
        .collect();
    let records = cmp
        .a
        .grid
        .iter()
        .zip(&cmp.a.density)
        .zip(&cmp.b.density)
        .map(|((&x, &da), &db)| CurvePoint { x, density_a: da, density_b: db })
        .collect();
    Table {
        name: "density_curves",
        columns: vec![
            "x".to_string(),
            format!("density_{name_a}"),
            format!("density_{name_b}"),
        ],
        rows,
        records,
    }
}

fn summary_table(cmp: &PeriodComparison, name_a: &str, name_b: &str) -> Table<WindowSummary> {
    let row = |name: &str, est: &gridstress_core::density::DensityEstimate| WindowSummary {
        window: name.to_string(),
        n_samples: est.n_samples,
        bandwidth: est.bandwidth,
        sample_mean: est.sample_mean,
        sample_std: est.sample_std,
    };
    let records = vec![row(name_a, &cmp.a), row(name_b, &cmp.b)];
    Table {
        name: "density_summary",
        columns: ["window", "n_samples", "bandwidth", "sample_mean", "sample_std"]
            .map(String::from)
            .to_vec(),
        rows: records
            .iter()
            .map(|r| {
                vec![
                    r.window.clone(),
                    r.n_samples.to_string(),
                    sig6(r.bandwidth),
                    sig6(r.sample_mean),
                    sig6(r.sample_std),
                ]
            })
            .collect(),
        records,
    }
}

fn deltas_table(deltas: &SummaryDeltas) -> Table<SummaryDeltas> {
    Table {
        name: "density_deltas",
        columns: ["d_mean", "d_std", "d_p01", "d_p99"].map(String::from).to_vec(),
        rows: vec![vec![
            sig6(deltas.mean),
            sig6(deltas.std),
            sig6(deltas.p01),
            sig6(deltas.p99),
        ]],
        records: vec![*deltas],
    }
}
