//! Randomized properties of the stress indicators.
//!
//! Every property here holds for any well-formed input, so each one runs
//! against 1,000 generated cases: varied lengths, gap patterns, coverage
//! thresholds, and line parameters.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use gridstress_core::indicators::{daily_peak_trough, forecast_error, ramp_rate, trend_fit};
use gridstress_core::timeseries::{hour_ending_day, DailySeries, HourlySeries, Variable};
use proptest::collection::vec;
use proptest::prelude::*;
use std::collections::BTreeMap;

const CASES: u32 = 1_000;

fn start_hour() -> NaiveDateTime {
    // A Monday, hour ending 01:00.
    NaiveDate::from_ymd_opt(2020, 3, 2).unwrap().and_hms_opt(1, 0, 0).unwrap()
}

fn demand_series(values: Vec<Option<f64>>) -> HourlySeries {
    HourlySeries::new("PROP", Variable::Demand, start_hour(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    /// Over a gap-free stretch the hourly changes telescope: they sum to
    /// the final value minus the first.
    #[test]
    fn ramp_changes_telescope(values in vec(500.0..5000.0f64, 2..240)) {
        let demand = demand_series(values.iter().copied().map(Some).collect());
        let ramp = ramp_rate(&demand).unwrap();
        let total: f64 = ramp.values().iter().flatten().sum();
        let expected = values.last().unwrap() - values.first().unwrap();
        prop_assert!(
            (total - expected).abs() <= 1e-9 * expected.abs().max(1.0),
            "telescoped sum {total} vs endpoint difference {expected}",
        );
    }

    /// A change is reported exactly for the hours whose pair of samples is
    /// complete, and the first hour never has one.
    #[test]
    fn ramp_missing_exactly_where_pairs_break(
        values in vec(prop::option::weighted(0.8, 100.0..4000.0f64), 2..200),
    ) {
        let demand = demand_series(values.clone());
        let ramp = ramp_rate(&demand).unwrap();
        prop_assert_eq!(ramp.len(), demand.len());
        prop_assert_eq!(ramp.values()[0], None);
        for k in 1..values.len() {
            match (values[k - 1], values[k]) {
                (Some(prev), Some(cur)) => {
                    prop_assert_eq!(ramp.values()[k], Some(cur - prev))
                }
                _ => prop_assert_eq!(ramp.values()[k], None),
            }
        }
    }

    /// Each reported day's peak and trough bracket every present hour of that
    /// day, only days meeting the coverage floor are reported, and reported
    /// plus omitted days together are exactly the days the series touches.
    #[test]
    fn peak_and_trough_bracket_every_hour(
        values in vec(prop::option::weighted(0.8, 100.0..4000.0f64), 1..220),
        min_coverage in 1u32..=24,
    ) {
        let demand = demand_series(values);
        let report = daily_peak_trough(&demand, min_coverage).unwrap();

        // Group the hours by day independently of the implementation.
        let mut by_day: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
        for (ts, value) in demand.iter() {
            by_day.entry(hour_ending_day(ts)).or_default().extend(value);
        }

        let mut accounted: Vec<NaiveDate> = report.rows.iter().map(|r| r.date).collect();
        accounted.extend(report.omitted_days.iter().copied());
        accounted.sort();
        let touched: Vec<NaiveDate> = by_day.keys().copied().collect();
        prop_assert_eq!(accounted, touched);

        for row in &report.rows {
            let hours = &by_day[&row.date];
            prop_assert!(hours.len() as u32 >= min_coverage);
            for &h in hours {
                prop_assert!(
                    row.trough_mwh <= h && h <= row.peak_mwh,
                    "hour {h} outside [{}, {}] on {}",
                    row.trough_mwh,
                    row.peak_mwh,
                    row.date,
                );
            }
            prop_assert!(hours.contains(&row.peak_mwh));
            prop_assert!(hours.contains(&row.trough_mwh));
        }
        for date in &report.omitted_days {
            prop_assert!((by_day[date].len() as u32) < min_coverage);
        }
    }

    /// A forecast equal to the demand itself has zero error wherever demand
    /// is present and a missing error wherever it is not.
    #[test]
    fn forecast_error_of_itself_vanishes(
        values in vec(prop::option::weighted(0.85, 100.0..4000.0f64), 2..200),
    ) {
        let demand = demand_series(values.clone());
        let forecast =
            HourlySeries::new("PROP", Variable::Forecast, start_hour(), values.clone()).unwrap();
        let error = forecast_error(&demand, &forecast).unwrap();
        prop_assert_eq!(error.len(), demand.len());
        prop_assert_eq!(error.start(), demand.start());
        for (k, &err) in error.values().iter().enumerate() {
            match values[k] {
                Some(_) => prop_assert_eq!(err, Some(0.0)),
                None => prop_assert_eq!(err, None),
            }
        }
    }

    /// On a noiseless line the fit recovers slope and intercept essentially
    /// exactly, explains all variance, and finds the slope significant.
    #[test]
    fn trend_recovers_noiseless_line(
        slope in -50.0..50.0f64,
        intercept in -1.0e4..1.0e4f64,
        n in 3usize..200,
    ) {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let dates: Vec<NaiveDate> =
            (0..n).map(|d| anchor + Duration::days(d as i64)).collect();
        let values: Vec<Option<f64>> =
            (0..n).map(|d| Some(intercept + slope * d as f64)).collect();
        let daily =
            DailySeries::new("PROP", Variable::Demand, dates, values, vec![24; n]).unwrap();

        let fit = trend_fit(&daily, anchor).unwrap();
        prop_assert_eq!(fit.n, n);
        prop_assert!((fit.slope - slope).abs() <= 1e-9 * slope.abs().max(1.0));
        prop_assert!((fit.intercept - intercept).abs() <= 1e-9 * intercept.abs().max(1.0));
        if slope.abs() > 1e-6 {
            prop_assert!((fit.r_squared - 1.0).abs() <= 1e-9);
            prop_assert!(fit.p_value_slope < 1e-3);
        }
    }

    /// Bounded noise well under the planted tilt cannot hide the trend: the
    /// slope stays significant at any conventional level.
    #[test]
    fn trend_flags_a_strong_planted_trend(
        noise in vec(-1.0..1.0f64, 30..120),
        slope in 1.0..10.0f64,
    ) {
        let n = noise.len();
        let anchor = NaiveDate::from_ymd_opt(2019, 7, 1).unwrap();
        let amplitude = slope * n as f64 / 100.0;
        let dates: Vec<NaiveDate> =
            (0..n).map(|d| anchor + Duration::days(d as i64)).collect();
        let values: Vec<Option<f64>> = noise
            .iter()
            .enumerate()
            .map(|(d, e)| Some(5_000.0 + slope * d as f64 + amplitude * e))
            .collect();
        let daily =
            DailySeries::new("PROP", Variable::Demand, dates, values, vec![24; n]).unwrap();

        let fit = trend_fit(&daily, anchor).unwrap();
        prop_assert!(fit.p_value_slope < 1e-3, "p = {}", fit.p_value_slope);
        prop_assert!((fit.slope - slope).abs() < slope * 0.25);
    }
}
