//! Parsers for hourly grid exports and weather-station observations.
//!
//! Input is delimited text (UTF-8, LF or CRLF) with a header row. Grid files
//! are described by a [`GridCsvSchema`] so differing export shapes can be
//! absorbed by configuration instead of code. Output series are always
//! hour-contiguous: interior gaps are filled with explicit missing markers,
//! never interpolated.
//!
//! Values use the hour-ending convention throughout; an observation stamped
//! exactly on the hour belongs to the hour it ends. A repeated timestamp
//! (the duplicated fall-DST hour) keeps its first occurrence; a timestamp
//! that moves backwards is an ordering error.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use thiserror::Error;

use crate::timeseries::{hour_ending_day, DateRange, HourlySeries, TimeseriesError, Variable};

/// Default timestamp pattern: hour-ending local time, e.g. `2020-03-02 01:00`.
pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M";

/// Default plausibility bounds for temperatures, in °F. Values outside are
/// rejected so unit mix-ups (°C fed as °F) surface early.
pub const DEFAULT_TEMP_BOUNDS_DEGF: (f64, f64) = (-60.0, 140.0);

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    SchemaInvalid(String),
    #[error("header is missing declared column {column:?}")]
    MissingColumn { column: String },
    #[error("no parseable data rows in input")]
    EmptyInput,
    #[error("timestamp {ts} at line {line} moves backwards (previous row was {previous})")]
    OutOfOrderTimestamp { line: u64, ts: NaiveDateTime, previous: NaiveDateTime },
    #[error("{0} temperature observation(s) outside plausibility bounds: {1}")]
    TemperatureOutOfBounds(usize, String),
    #[error("window {window} extends outside the series range {series_range}")]
    WindowOutsideSeries { window: DateRange, series_range: String },
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

/// Shape of a delimited grid export: which columns hold the timestamp and
/// which hold each variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCsvSchema {
    pub timestamp_column: String,
    /// chrono `strftime` pattern; see [`DEFAULT_TIMESTAMP_FORMAT`].
    pub timestamp_format: String,
    pub value_columns: BTreeMap<Variable, String>,
    pub delimiter: char,
    /// Whether values may carry thousands separators (`"1,234"`).
    pub decimal_grouping: bool,
}

impl GridCsvSchema {
    /// Schema for a single-variable file with columns `timestamp,<variable>`;
    /// the shape this crate itself writes via [`write_normalized_csv`].
    pub fn normalized(variable: Variable) -> Self {
        let mut value_columns = BTreeMap::new();
        value_columns.insert(variable, variable.name().to_string());
        GridCsvSchema {
            timestamp_column: "timestamp".to_string(),
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.to_string(),
            value_columns,
            delimiter: ',',
            decimal_grouping: false,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.timestamp_column.is_empty() {
            return Err(IngestError::SchemaInvalid("timestamp column not named".into()));
        }
        if self.value_columns.is_empty() {
            return Err(IngestError::SchemaInvalid("no value columns named".into()));
        }
        if self.delimiter.is_ascii_digit() {
            return Err(IngestError::SchemaInvalid(format!(
                "delimiter {:?} must not be a digit",
                self.delimiter
            )));
        }
        Ok(())
    }
}

/// A single weather-station reading. Timestamps may be sub-hourly and
/// irregular; plausibility bounds are enforced when observations are folded
/// into an hourly series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherObservation {
    pub timestamp: NaiveDateTime,
    pub temperature_degf: f64,
}

/// Parse a grid export into one hour-contiguous series per declared variable.
///
/// Rows whose timestamp does not parse to an hour boundary are skipped;
/// unparseable or empty value cells become missing. A repeated timestamp
/// keeps the first row. Timestamps moving backwards are an error, as is an
/// input with no parseable rows at all.
pub fn parse_grid_csv(
    input: impl Read,
    schema: &GridCsvSchema,
    region_id: &str,
) -> Result<Vec<HourlySeries>, IngestError> {
    schema.validate()?;

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .from_reader(input);

    let headers = reader.headers()?.clone();
    let column_index = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn { column: name.to_string() })
    };

    let ts_idx = column_index(&schema.timestamp_column)?;
    let variables: Vec<Variable> = schema.value_columns.keys().copied().collect();
    let mut value_idx = Vec::with_capacity(variables.len());
    for var in &variables {
        value_idx.push(column_index(&schema.value_columns[var])?);
    }

    // (timestamp, one parsed cell per variable)
    let mut rows: Vec<(NaiveDateTime, Vec<Option<f64>>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);

        let ts = match parse_hour_ending(record.get(ts_idx).unwrap_or(""), &schema.timestamp_format)
        {
            Some(ts) => ts,
            None => continue, // unparseable row
        };

        if let Some((previous, _)) = rows.last() {
            if ts == *previous {
                continue; // duplicated local hour (fall DST): keep first
            }
            if ts < *previous {
                return Err(IngestError::OutOfOrderTimestamp { line, ts, previous: *previous });
            }
        }

        let values = value_idx
            .iter()
            .map(|&i| parse_value(record.get(i).unwrap_or(""), schema.decimal_grouping))
            .collect();
        rows.push((ts, values));
    }

    if rows.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let start = rows[0].0;
    let end = rows[rows.len() - 1].0;
    let len = (end - start).num_hours() as usize + 1;

    let mut series = Vec::with_capacity(variables.len());
    for (vi, var) in variables.iter().enumerate() {
        let mut values = vec![None; len];
        for (ts, cells) in &rows {
            let slot = (*ts - start).num_hours() as usize;
            values[slot] = cells[vi];
        }
        series.push(HourlySeries::new(region_id, *var, start, values)?);
    }
    Ok(series)
}

fn parse_hour_ending(text: &str, format: &str) -> Option<NaiveDateTime> {
    let ts = NaiveDateTime::parse_from_str(text.trim(), format).ok()?;
    (ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0).then_some(ts)
}

fn parse_value(cell: &str, decimal_grouping: bool) -> Option<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return None;
    }
    let cleaned = if decimal_grouping {
        trimmed.replace(',', "")
    } else {
        trimmed.to_string()
    };
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a weather file with columns `timestamp,temperature_degF`.
///
/// Rows that fail to parse are skipped; bounds are checked later when the
/// observations are bucketed (so the error can list every offending row).
pub fn parse_weather_csv(
    input: impl Read,
    timestamp_format: &str,
) -> Result<Vec<WeatherObservation>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    let headers = reader.headers()?.clone();
    let ts_idx = headers
        .iter()
        .position(|h| h.trim() == "timestamp")
        .ok_or_else(|| IngestError::MissingColumn { column: "timestamp".into() })?;
    let temp_idx = headers
        .iter()
        .position(|h| h.trim() == "temperature_degF")
        .ok_or_else(|| IngestError::MissingColumn { column: "temperature_degF".into() })?;

    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record?;
        let ts = match NaiveDateTime::parse_from_str(
            record.get(ts_idx).unwrap_or("").trim(),
            timestamp_format,
        ) {
            Ok(ts) => ts,
            Err(_) => continue,
        };
        let temp = match record.get(temp_idx).unwrap_or("").trim().parse::<f64>() {
            Ok(t) => t,
            Err(_) => continue,
        };
        observations.push(WeatherObservation { timestamp: ts, temperature_degf: temp });
    }
    if observations.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(observations)
}

/// Fold raw observations into an hourly mean-temperature series.
///
/// Each hour-ending bucket `(t−1h, t]` receives the arithmetic mean of the
/// observations inside it; hours with no observations are missing. All
/// observations must fall inside `bounds` (°F), otherwise the offending rows
/// are reported together.
pub fn hourly_mean_temperature(
    observations: &[WeatherObservation],
    region_id: &str,
    bounds: (f64, f64),
) -> Result<HourlySeries, IngestError> {
    if observations.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let offenders: Vec<String> = observations
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            !o.temperature_degf.is_finite()
                || o.temperature_degf < bounds.0
                || o.temperature_degf > bounds.1
        })
        .map(|(i, o)| format!("row {} ({} = {} degF)", i + 1, o.timestamp, o.temperature_degf))
        .collect();
    if !offenders.is_empty() {
        let shown = offenders.iter().take(8).cloned().collect::<Vec<_>>().join(", ");
        let suffix = if offenders.len() > 8 { ", ..." } else { "" };
        return Err(IngestError::TemperatureOutOfBounds(
            offenders.len(),
            format!("{shown}{suffix}"),
        ));
    }

    let mut sorted: Vec<&WeatherObservation> = observations.iter().collect();
    sorted.sort_by_key(|o| o.timestamp);

    // Sum and count per hour-ending bucket, keyed by hours since the first
    // bucket so the output comes out contiguous.
    let first_bucket = ceil_to_hour(sorted[0].timestamp);
    let last_bucket = ceil_to_hour(sorted[sorted.len() - 1].timestamp);
    let len = (last_bucket - first_bucket).num_hours() as usize + 1;
    let mut sums = vec![0.0f64; len];
    let mut counts = vec![0usize; len];
    for obs in &sorted {
        let slot = (ceil_to_hour(obs.timestamp) - first_bucket).num_hours() as usize;
        sums[slot] += obs.temperature_degf;
        counts[slot] += 1;
    }

    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(HourlySeries::new(region_id, Variable::Temperature, first_bucket, values)?)
}

/// The hour-ending bucket an instant belongs to: an observation exactly on
/// the hour ends that hour; anything later belongs to the next boundary.
fn ceil_to_hour(ts: NaiveDateTime) -> NaiveDateTime {
    let truncated = ts
        .date()
        .and_hms_opt(ts.hour(), 0, 0)
        .expect("hour truncation is valid");
    if ts == truncated {
        ts
    } else {
        truncated + Duration::hours(1)
    }
}

/// Gap summary for a series over a window of days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub present: usize,
    pub missing: usize,
    /// Longest run of consecutive missing hours.
    pub longest_gap: usize,
    /// Days with at least one missing hour.
    pub missing_days: Vec<NaiveDate>,
}

/// Count present and missing hours, the longest gap, and the days touched by
/// any gap. With no window the series' own range is summarized; an explicit
/// window must lie inside the series range.
pub fn coverage_report(
    series: &HourlySeries,
    window: Option<&DateRange>,
) -> Result<CoverageReport, IngestError> {
    let hours: Vec<(NaiveDateTime, Option<f64>)> = match window {
        None => series.iter().collect(),
        Some(range) => {
            let in_range = series.end().is_some_and(|end| {
                let first = range.hour_endings().next().expect("non-empty range");
                first >= series.start() && range.hour_endings().last().expect("non-empty") <= end
            });
            if !in_range {
                let series_range = match series.end() {
                    Some(end) => format!("{}..{}", series.start(), end),
                    None => "empty".to_string(),
                };
                return Err(IngestError::WindowOutsideSeries { window: *range, series_range });
            }
            range.hour_endings().map(|ts| (ts, series.value_at(ts))).collect()
        }
    };

    let mut present = 0usize;
    let mut missing = 0usize;
    let mut longest_gap = 0usize;
    let mut run = 0usize;
    let mut missing_days = Vec::new();
    for (ts, value) in &hours {
        match value {
            Some(_) => {
                present += 1;
                run = 0;
            }
            None => {
                missing += 1;
                run += 1;
                longest_gap = longest_gap.max(run);
                let day = hour_ending_day(*ts);
                if missing_days.last() != Some(&day) {
                    missing_days.push(day);
                }
            }
        }
    }
    Ok(CoverageReport { present, missing, longest_gap, missing_days })
}

/// Write a series as normalized CSV: header `timestamp,<variable>`, one row
/// per hour, empty cell for missing. Values use the shortest decimal form
/// that parses back to the identical float, so a write/read cycle is
/// value-for-value lossless.
pub fn write_normalized_csv(
    series: &HourlySeries,
    mut out: impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "timestamp,{}", series.variable().name())?;
    for (ts, value) in series.iter() {
        match value {
            Some(v) => writeln!(out, "{},{}", ts.format(DEFAULT_TIMESTAMP_FORMAT), v)?,
            None => writeln!(out, "{},", ts.format(DEFAULT_TIMESTAMP_FORMAT))?,
        }
    }
    Ok(())
}

/// Read back a file produced by [`write_normalized_csv`].
pub fn read_normalized_csv(
    input: impl Read,
    region_id: &str,
    variable: Variable,
) -> Result<HourlySeries, IngestError> {
    let schema = GridCsvSchema::normalized(variable);
    let mut series = parse_grid_csv(input, &schema, region_id)?;
    Ok(series.remove(0))
}
