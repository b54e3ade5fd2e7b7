//! Loading a region's raw files into series, and window slicing shared by
//! the analysis commands. Every command reads the raw inputs declared in
//! the config; none depends on another command having run first.

use crate::config::RegionConfig;
use crate::error::CliError;
use gridstress_core::ingest::{
    hourly_mean_temperature, parse_grid_csv, parse_weather_csv, DEFAULT_TEMP_BOUNDS_DEGF,
};
use gridstress_core::timeseries::{DateRange, HourlySeries, Variable};
use std::fs::File;
use std::io::BufReader;

/// Everything a region's files provide, keyed by variable.
pub struct RegionData {
    pub demand: Option<HourlySeries>,
    pub forecast: Option<HourlySeries>,
    pub interchange: Option<HourlySeries>,
    pub temperature: Option<HourlySeries>,
}

pub fn load_region(region: &RegionConfig) -> Result<RegionData, CliError> {
    let file = File::open(&region.grid_csv).map_err(|e| CliError::file(&region.grid_csv, e))?;
    let series = parse_grid_csv(BufReader::new(file), &region.schema, &region.id)
        .map_err(|e| CliError::from(e).prefix_path(&region.grid_csv))?;

    let mut data = RegionData {
        demand: None,
        forecast: None,
        interchange: None,
        temperature: None,
    };
    for s in series {
        match s.variable() {
            Variable::Demand => data.demand = Some(s),
            Variable::Forecast => data.forecast = Some(s),
            Variable::Interchange => data.interchange = Some(s),
            Variable::Temperature => data.temperature = Some(s),
        }
    }

    if let Some(path) = &region.weather_csv {
        let file = File::open(path).map_err(|e| CliError::file(path, e))?;
        let observations =
            parse_weather_csv(BufReader::new(file), &region.weather_timestamp_format)
                .map_err(|e| CliError::from(e).prefix_path(path))?;
        let temps = hourly_mean_temperature(&observations, &region.id, DEFAULT_TEMP_BOUNDS_DEGF)
            .map_err(|e| CliError::from(e).prefix_path(path))?;
        data.temperature = Some(temps);
    }

    Ok(data)
}

/// Restrict a series to a window's hours. Hours the source does not cover
/// come back missing, so the result always spans the whole window.
pub fn slice_to_window(series: &HourlySeries, window: &DateRange) -> HourlySeries {
    let values: Vec<Option<f64>> = window.hour_endings().map(|ts| series.value_at(ts)).collect();
    let start = window.hour_endings().next().expect("date ranges are non-empty");
    HourlySeries::new(series.region_id(), series.variable(), start, values)
        .expect("window hours are aligned and sliced values are already finite")
}

/// Does the series hold any value at all?
pub fn has_data(series: &HourlySeries) -> bool {
    series.values().iter().any(Option::is_some)
}

/// The smallest date window covering the series' present values.
pub fn data_extent(series: &HourlySeries) -> Option<DateRange> {
    use gridstress_core::timeseries::hour_ending_day;
    let mut present = series.iter().filter(|(_, v)| v.is_some());
    let first = present.next()?.0;
    let last = present.last().map_or(first, |(ts, _)| ts);
    DateRange::new(hour_ending_day(first), hour_ending_day(last)).ok()
}

/// The smallest range covering both windows.
pub fn union_range(a: &DateRange, b: &DateRange) -> DateRange {
    DateRange::new(a.start.min(b.start), a.end.max(b.end))
        .expect("min start never exceeds max end")
}

impl CliError {
    /// Prefix an error with the file it came from, keeping its class.
    fn prefix_path(self, path: &std::path::Path) -> CliError {
        let tag = |msg: String| format!("{}: {msg}", path.display());
        match self {
            CliError::Input(msg) => CliError::Input(tag(msg)),
            CliError::InsufficientData(msg) => CliError::InsufficientData(tag(msg)),
            CliError::Numerical(msg) => CliError::Numerical(tag(msg)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series_over(days: u32) -> HourlySeries {
        let start = NaiveDate::from_ymd_opt(2020, 3, 1)
            .unwrap()
            .and_hms_opt(1, 0, 0)
            .unwrap();
        let values = (0..days * 24).map(|k| Some(1000.0 + k as f64)).collect();
        HourlySeries::new("X", Variable::Demand, start, values).unwrap()
    }

    #[test]
    fn slicing_keeps_window_span_and_values() {
        let series = series_over(10);
        let window = DateRange::new(
            NaiveDate::from_ymd_opt(2020, 3, 3).unwrap(),
            NaiveDate::from_ymd_opt(2020, 3, 4).unwrap(),
        )
        .unwrap();
        let sliced = slice_to_window(&series, &window);
        assert_eq!(sliced.len(), 48);
        // First sliced hour is the window's first hour ending, 01:00.
        assert_eq!(
            sliced.start(),
            NaiveDate::from_ymd_opt(2020, 3, 3).unwrap().and_hms_opt(1, 0, 0).unwrap()
        );
        assert_eq!(sliced.values()[0], series.value_at(sliced.start()));
        assert!(has_data(&sliced));
    }

    #[test]
    fn slicing_outside_the_series_yields_all_missing() {
        let series = series_over(2);
        let window = DateRange::new(
            NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2021, 1, 2).unwrap(),
        )
        .unwrap();
        let sliced = slice_to_window(&series, &window);
        assert_eq!(sliced.len(), 48);
        assert!(!has_data(&sliced));
    }

    #[test]
    fn union_covers_both_windows() {
        let a = DateRange::new(
            NaiveDate::from_ymd_opt(2020, 2, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 2, 14).unwrap(),
        )
        .unwrap();
        let b = DateRange::new(
            NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 4, 30).unwrap(),
        )
        .unwrap();
        let u = union_range(&a, &b);
        assert_eq!(u.start, a.start);
        assert_eq!(u.end, b.end);
    }
}
