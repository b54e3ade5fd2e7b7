//! Calendar-aware hourly time-series containers.
//!
//! Everything here works in the local clock time of one region's balancing
//! authority and follows the hour-ending convention: the sample labelled
//! `2020-03-02 01:00` covers the hour `(00:00, 01:00]`. A calendar day
//! therefore consists of the 24 hour-ending stamps `01:00` through `24:00`
//! (midnight of the next day).
//!
//! Missing hours are explicit `None` markers. Nothing in this module
//! interpolates or imputes: gap handling is left to the caller. Daylight
//! saving is absorbed upstream at ingest (the nonexistent spring hour stays
//! missing, the duplicated fall hour keeps its first occurrence) so every
//! local day has exactly 24 slots and hour-of-week arithmetic never drifts.
//!
//! Series are immutable after construction; all operations are pure.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hours in one week; the period of the hour-of-week index.
pub const HOURS_PER_WEEK: u32 = 168;

/// Errors from constructing or operating on time-series containers.
#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("timestamp {0} is not on an hour boundary")]
    UnalignedTimestamp(NaiveDateTime),
    #[error("value at index {index} is not finite ({value})")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("month {0} is outside 1..=12")]
    InvalidMonth(u32),
    #[error("series for region {region_id} does not cover month {month}")]
    MonthNotCovered { region_id: String, month: u32 },
    #[error("min_coverage {0} is outside 0..=24")]
    InvalidMinCoverage(u32),
    #[error("dates are not strictly increasing at index {0}")]
    DatesNotIncreasing(usize),
    #[error("dates ({dates}), values ({values}) and coverage ({coverage}) lengths differ")]
    LengthMismatch { dates: usize, values: usize, coverage: usize },
    #[error("coverage {coverage} at index {index} exceeds 24")]
    CoverageOutOfRange { index: usize, coverage: u32 },
    #[error("invalid date range: start {start} is after end {end}")]
    InvalidDateRange { start: NaiveDate, end: NaiveDate },
}

/// The physical variable a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Demand,
    Forecast,
    Interchange,
    Temperature,
}

impl Variable {
    /// The unit a series of this variable carries. Demand, forecast and
    /// interchange are hourly energies; temperature is degrees Fahrenheit.
    pub fn unit(self) -> Unit {
        match self {
            Variable::Demand | Variable::Forecast | Variable::Interchange => Unit::MegawattHours,
            Variable::Temperature => Unit::DegreesFahrenheit,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Demand => "demand",
            Variable::Forecast => "forecast",
            Variable::Interchange => "interchange",
            Variable::Temperature => "temperature",
        }
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "demand" => Ok(Variable::Demand),
            "forecast" => Ok(Variable::Forecast),
            "interchange" => Ok(Variable::Interchange),
            "temperature" => Ok(Variable::Temperature),
            other => Err(format!("unknown variable {other:?}")),
        }
    }
}

/// Unit of measure, fixed by the variable kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    MegawattHours,
    DegreesFahrenheit,
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unit::MegawattHours => f.write_str("MWh"),
            Unit::DegreesFahrenheit => f.write_str("degF"),
        }
    }
}

/// One region's hourly values of a single variable.
///
/// Timestamps are implicit: sample `i` is the hour ending at
/// `start + i hours`. `None` marks a missing hour. All present values are
/// finite (enforced at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    region_id: String,
    variable: Variable,
    start: NaiveDateTime,
    values: Vec<Option<f64>>,
}

impl HourlySeries {
    /// Build a series from its first hour-ending timestamp and values.
    pub fn new(
        region_id: impl Into<String>,
        variable: Variable,
        start: NaiveDateTime,
        values: Vec<Option<f64>>,
    ) -> Result<Self, TimeseriesError> {
        require_hour_aligned(start)?;
        for (index, v) in values.iter().enumerate() {
            if let Some(value) = v {
                if !value.is_finite() {
                    return Err(TimeseriesError::NonFiniteValue { index, value: *value });
                }
            }
        }
        Ok(HourlySeries { region_id: region_id.into(), variable, start, values })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn unit(&self) -> Unit {
        self.variable.unit()
    }

    /// Hour-ending timestamp of the first sample.
    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Hour-ending timestamp of the last sample, if the series is non-empty.
    pub fn end(&self) -> Option<NaiveDateTime> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.start + Duration::hours(self.values.len() as i64 - 1))
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Timestamp of sample `i` (valid for any `i`, including one past the end).
    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::hours(i as i64)
    }

    /// Index of the sample labelled `ts`, if it falls inside the series.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        if ts < self.start {
            return None;
        }
        let hours = (ts - self.start).num_hours();
        if (ts - self.start) != Duration::hours(hours) {
            return None; // not hour-aligned with the series
        }
        let i = hours as usize;
        (i < self.values.len()).then_some(i)
    }

    /// Value at timestamp `ts`; `None` for missing or out-of-range hours.
    pub fn value_at(&self, ts: NaiveDateTime) -> Option<f64> {
        self.index_of(ts).and_then(|i| self.values[i])
    }

    /// Iterate `(hour-ending timestamp, value)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDateTime, Option<f64>)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| (self.timestamp(i), *v))
    }

    /// Present (non-missing) values inside a date window, in time order.
    pub fn present_in(&self, window: &DateRange) -> Vec<f64> {
        window
            .hour_endings()
            .filter_map(|ts| self.value_at(ts))
            .collect()
    }
}

/// One region's daily values of a single variable, with per-day coverage of
/// the source hours (0–24 non-missing hours behind each day).
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    region_id: String,
    variable: Variable,
    dates: Vec<NaiveDate>,
    values: Vec<Option<f64>>,
    coverage: Vec<u32>,
}

impl DailySeries {
    pub fn new(
        region_id: impl Into<String>,
        variable: Variable,
        dates: Vec<NaiveDate>,
        values: Vec<Option<f64>>,
        coverage: Vec<u32>,
    ) -> Result<Self, TimeseriesError> {
        if dates.len() != values.len() || dates.len() != coverage.len() {
            return Err(TimeseriesError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
                coverage: coverage.len(),
            });
        }
        for (index, pair) in dates.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(TimeseriesError::DatesNotIncreasing(index + 1));
            }
        }
        for (index, v) in values.iter().enumerate() {
            if let Some(value) = v {
                if !value.is_finite() {
                    return Err(TimeseriesError::NonFiniteValue { index, value: *value });
                }
            }
        }
        for (index, &c) in coverage.iter().enumerate() {
            if c > 24 {
                return Err(TimeseriesError::CoverageOutOfRange { index, coverage: c });
            }
        }
        Ok(DailySeries { region_id: region_id.into(), variable, dates, values, coverage })
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn coverage(&self) -> &[u32] {
        &self.coverage
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, Option<f64>, u32)> + '_ {
        self.dates
            .iter()
            .zip(&self.values)
            .zip(&self.coverage)
            .map(|((d, v), c)| (*d, *v, *c))
    }

    /// Value on `date`; `None` for missing or absent days.
    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .and_then(|i| self.values[i])
    }

    /// Present (non-missing) values inside a date window, in date order.
    pub fn present_in(&self, window: &DateRange) -> Vec<f64> {
        self.iter()
            .filter(|(d, v, _)| window.contains(*d) && v.is_some())
            .map(|(_, v, _)| v.unwrap())
            .collect()
    }
}

/// Inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, TimeseriesError> {
        if start > end {
            return Err(TimeseriesError::InvalidDateRange { start, end });
        }
        Ok(DateRange { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn num_days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.num_days() as usize)
    }

    /// The hour-ending timestamps belonging to the days of this range:
    /// `start 01:00` through `end+1 00:00`.
    pub fn hour_endings(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        let first = self.start.and_hms_opt(1, 0, 0).expect("01:00 exists");
        (0..self.num_days() * 24).map(move |h| first + Duration::hours(h))
    }

    /// Whether two ranges share any date.
    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl std::fmt::Display for DateRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

fn require_hour_aligned(ts: NaiveDateTime) -> Result<(), TimeseriesError> {
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(TimeseriesError::UnalignedTimestamp(ts));
    }
    Ok(())
}

/// The calendar day an hour-ending timestamp belongs to. Midnight labels the
/// 24th hour of the *previous* day.
pub fn hour_ending_day(ts: NaiveDateTime) -> NaiveDate {
    if ts.hour() == 0 {
        ts.date().pred_opt().expect("date has a predecessor")
    } else {
        ts.date()
    }
}

/// Hour-of-day in 1..=24 under the hour-ending convention.
pub fn hour_of_day_ending(ts: NaiveDateTime) -> u32 {
    if ts.hour() == 0 {
        24
    } else {
        ts.hour()
    }
}

/// Hour-of-week index in 1..=168.
///
/// The hour ending Monday 01:00 is 1; the index advances by one per hour and
/// wraps after Sunday's 24th hour (Monday 00:00 maps to 168).
pub fn hour_of_week(ts: NaiveDateTime) -> Result<u32, TimeseriesError> {
    require_hour_aligned(ts)?;
    // Shift to the hour-beginning stamp so day-of-week arithmetic is plain.
    let begin = ts - Duration::hours(1);
    let dow = begin.weekday().num_days_from_monday();
    Ok(dow * 24 + begin.hour() + 1)
}

/// Date of the first Monday of the given month.
pub fn first_monday_offset(year: i32, month: u32) -> Result<NaiveDate, TimeseriesError> {
    let first = NaiveDate::from_ymd_opt(year, month, 1)
        .ok_or(TimeseriesError::InvalidMonth(month))?;
    let shift = (7 - first.weekday().num_days_from_monday()) % 7;
    Ok(first + Duration::days(shift as i64))
}

/// One row of a cross-year alignment: the same (day offset, hour) slot in
/// both series, where day offset 0 is each series' own first Monday of the
/// anchor month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedRow {
    pub day_offset: u32,
    /// Hour of day in 1..=24, hour-ending.
    pub hour: u32,
    pub value_a: Option<f64>,
    pub value_b: Option<f64>,
}

/// Pair two series hour-by-hour with their first Mondays of `month` aligned.
///
/// Each series anchors on the first Monday of the first occurrence of
/// `month` within its own range. Rows run from that Monday to the later of
/// the two series' ends; slots outside either series carry `None`.
pub fn align_series(
    a: &HourlySeries,
    b: &HourlySeries,
    month: u32,
) -> Result<Vec<AlignedRow>, TimeseriesError> {
    if !(1..=12).contains(&month) {
        return Err(TimeseriesError::InvalidMonth(month));
    }
    let anchor_a = month_anchor(a, month)?;
    let anchor_b = month_anchor(b, month)?;

    let days_a = days_from_anchor(a, anchor_a);
    let days_b = days_from_anchor(b, anchor_b);
    let total_days = days_a.max(days_b).max(0) as u32;

    let mut rows = Vec::with_capacity(total_days as usize * 24);
    for day_offset in 0..total_days {
        for hour in 1..=24u32 {
            let slot = Duration::days(day_offset as i64) + Duration::hours(hour as i64);
            let ts_a = anchor_a.and_hms_opt(0, 0, 0).expect("midnight exists") + slot;
            let ts_b = anchor_b.and_hms_opt(0, 0, 0).expect("midnight exists") + slot;
            rows.push(AlignedRow {
                day_offset,
                hour,
                value_a: a.value_at(ts_a),
                value_b: b.value_at(ts_b),
            });
        }
    }
    Ok(rows)
}

/// First Monday of the first occurrence of `month` inside the series range.
fn month_anchor(series: &HourlySeries, month: u32) -> Result<NaiveDate, TimeseriesError> {
    let not_covered = || TimeseriesError::MonthNotCovered {
        region_id: series.region_id.clone(),
        month,
    };
    let first_day = hour_ending_day(series.start);
    let last_day = match series.end() {
        Some(end) => hour_ending_day(end),
        None => return Err(not_covered()),
    };
    let mut cursor = first_day;
    while cursor <= last_day {
        if cursor.month() == month {
            return first_monday_offset(cursor.year(), month);
        }
        // Jump to the first day of the next month.
        cursor = NaiveDate::from_ymd_opt(
            if cursor.month() == 12 { cursor.year() + 1 } else { cursor.year() },
            if cursor.month() == 12 { 1 } else { cursor.month() + 1 },
            1,
        )
        .expect("valid month start");
    }
    Err(not_covered())
}

fn days_from_anchor(series: &HourlySeries, anchor: NaiveDate) -> i64 {
    match series.end() {
        Some(end) => (hour_ending_day(end) - anchor).num_days() + 1,
        None => 0,
    }
}

/// How a day of hourly values is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reducer {
    Sum,
    Mean,
    Max,
    Min,
}

impl Reducer {
    fn apply(self, values: &[f64]) -> f64 {
        match self {
            Reducer::Sum => values.iter().sum(),
            Reducer::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Reducer::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Reducer::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Reduce an hourly series to local-clock calendar days.
///
/// Every day from the first to the last covered by the series appears in the
/// output. A day's value is the reducer applied to its non-missing hours;
/// days with fewer than `min_coverage` present hours (or none at all) are
/// marked missing, with the observed coverage still recorded.
pub fn daily_aggregate(
    series: &HourlySeries,
    reducer: Reducer,
    min_coverage: u32,
) -> Result<DailySeries, TimeseriesError> {
    if min_coverage > 24 {
        return Err(TimeseriesError::InvalidMinCoverage(min_coverage));
    }
    if series.is_empty() {
        return DailySeries::new(series.region_id.clone(), series.variable, vec![], vec![], vec![]);
    }

    let first_day = hour_ending_day(series.start);
    let last_day = hour_ending_day(series.end().expect("non-empty"));

    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut coverage = Vec::new();

    let mut day = first_day;
    while day <= last_day {
        let mut present = Vec::new();
        for hour in 1..=24i64 {
            let ts = day.and_hms_opt(0, 0, 0).expect("midnight exists") + Duration::hours(hour);
            if let Some(v) = series.value_at(ts) {
                present.push(v);
            }
        }
        let count = present.len() as u32;
        dates.push(day);
        coverage.push(count);
        if count == 0 || count < min_coverage {
            values.push(None);
        } else {
            values.push(Some(reducer.apply(&present)));
        }
        day = day.succ_opt().expect("date has a successor");
    }

    DailySeries::new(series.region_id.clone(), series.variable, dates, values, coverage)
}
