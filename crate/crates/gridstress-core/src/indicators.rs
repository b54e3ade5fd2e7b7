//! Grid-stress indicators derived from hourly series: daily peak and trough,
//! hour-over-hour ramp rate, day-ahead forecast error, interchange means, and
//! simple linear trends on daily values.
//!
//! Every indicator treats missing hours as absent rather than zero. Days
//! without enough present hours are dropped and reported, never extrapolated.

use chrono::{NaiveDate, NaiveDateTime};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::stats;
use crate::timeseries::{
    daily_aggregate, hour_ending_day, DailySeries, HourlySeries, Reducer, TimeseriesError,
    Variable,
};

/// Days below this many present hours are dropped from peak/trough output.
pub const DEFAULT_PEAK_TROUGH_MIN_COVERAGE: u32 = 20;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("expected a {expected} series, got {found}")]
    WrongVariable { expected: Variable, found: Variable },
    #[error("min_coverage must be in 1..=24, got {0}")]
    InvalidMinCoverage(u32),
    #[error("insufficient data: need at least {needed} values, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("series ranges do not overlap")]
    NoOverlap,
    #[error("series regions differ: {left:?} vs {right:?}")]
    RegionMismatch { left: String, right: String },
    #[error("regressor has zero variance; trend is undefined")]
    DegenerateRegressor,
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

/// Extremes of one day's demand, taken over that day's present hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakTrough {
    pub date: NaiveDate,
    pub peak_mwh: f64,
    pub trough_mwh: f64,
}

/// Peak/trough rows plus the days that were dropped for thin coverage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakTroughReport {
    pub rows: Vec<PeakTrough>,
    pub omitted_days: Vec<NaiveDate>,
}

/// Ordinary least squares of a daily series on days-since-anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    /// MWh per day.
    pub slope: f64,
    /// Fitted value at the anchor date, MWh.
    pub intercept: f64,
    /// Share of variance explained, in `[0, 1]`.
    pub r_squared: f64,
    /// Two-sided t-test p-value for the slope, in `[0, 1]`.
    pub p_value_slope: f64,
    /// Number of days entering the fit.
    pub n: usize,
}

/// Daily demand extremes over present hours, hour-ending local days.
///
/// A day enters the output only if at least `min_coverage` of its hours are
/// present; the rest are listed in `omitted_days`. Use
/// [`DEFAULT_PEAK_TROUGH_MIN_COVERAGE`] unless the data source says otherwise.
pub fn daily_peak_trough(
    demand: &HourlySeries,
    min_coverage: u32,
) -> Result<PeakTroughReport, IndicatorError> {
    require_variable(demand, Variable::Demand)?;
    if !(1..=24).contains(&min_coverage) {
        return Err(IndicatorError::InvalidMinCoverage(min_coverage));
    }

    // count of present hours, running max, running min
    let mut days: BTreeMap<NaiveDate, (u32, f64, f64)> = BTreeMap::new();
    for (ts, value) in demand.iter() {
        let day = days
            .entry(hour_ending_day(ts))
            .or_insert((0, f64::NEG_INFINITY, f64::INFINITY));
        if let Some(v) = value {
            day.0 += 1;
            day.1 = day.1.max(v);
            day.2 = day.2.min(v);
        }
    }

    let mut rows = Vec::new();
    let mut omitted_days = Vec::new();
    for (date, (count, peak, trough)) in days {
        if count >= min_coverage {
            rows.push(PeakTrough { date, peak_mwh: peak, trough_mwh: trough });
        } else {
            omitted_days.push(date);
        }
    }
    Ok(PeakTroughReport { rows, omitted_days })
}

/// Hour-over-hour demand change, `d_k − d_{k−1}`.
///
/// The output covers the same hours as the input; its first hour is missing
/// (no predecessor) and any hour whose pair has a missing side is missing.
/// The result keeps the demand variable tag since it is measured in MWh.
pub fn ramp_rate(demand: &HourlySeries) -> Result<HourlySeries, IndicatorError> {
    require_variable(demand, Variable::Demand)?;
    if demand.len() < 2 {
        return Err(IndicatorError::InsufficientData { needed: 2, found: demand.len() });
    }

    let input = demand.values();
    let mut values = vec![None; input.len()];
    for k in 1..input.len() {
        if let (Some(cur), Some(prev)) = (input[k], input[k - 1]) {
            values[k] = Some(cur - prev);
        }
    }
    Ok(HourlySeries::new(demand.region_id(), demand.variable(), demand.start(), values)?)
}

/// Day-ahead forecast error, `d_k − d̂_k`, over the ranges' overlap.
///
/// Positive values mean the forecast undershot actual demand. Missing hours
/// in either input are missing in the output.
pub fn forecast_error(
    demand: &HourlySeries,
    forecast: &HourlySeries,
) -> Result<HourlySeries, IndicatorError> {
    require_variable(demand, Variable::Demand)?;
    require_variable(forecast, Variable::Forecast)?;
    if demand.region_id() != forecast.region_id() {
        return Err(IndicatorError::RegionMismatch {
            left: demand.region_id().to_string(),
            right: forecast.region_id().to_string(),
        });
    }

    let (Some(d_end), Some(f_end)) = (demand.end(), forecast.end()) else {
        return Err(IndicatorError::NoOverlap);
    };
    let start: NaiveDateTime = demand.start().max(forecast.start());
    let end = d_end.min(f_end);
    if start > end {
        return Err(IndicatorError::NoOverlap);
    }

    let len = (end - start).num_hours() as usize + 1;
    let values = (0..len)
        .map(|i| {
            let ts = start + chrono::Duration::hours(i as i64);
            match (demand.value_at(ts), forecast.value_at(ts)) {
                (Some(d), Some(f)) => Some(d - f),
                _ => None,
            }
        })
        .collect();
    Ok(HourlySeries::new(demand.region_id(), Variable::Demand, start, values)?)
}

/// Least-squares line through `(days since anchor, daily value)`.
///
/// Slope significance is a two-sided t-test with `n − 2` degrees of freedom.
/// A series with no vertical variance fits a flat line exactly; that case
/// reports `r_squared` 0 and p-value 1 rather than dividing by zero.
pub fn trend_fit(daily: &DailySeries, anchor: NaiveDate) -> Result<TrendFit, IndicatorError> {
    let points: Vec<(f64, f64)> = daily
        .iter()
        .filter_map(|(date, value, _)| value.map(|v| ((date - anchor).num_days() as f64, v)))
        .collect();
    let n = points.len();
    if n < 3 {
        return Err(IndicatorError::InsufficientData { needed: 3, found: n });
    }

    let x_mean = stats::mean(&points.iter().map(|p| p.0).collect::<Vec<_>>());
    let y_mean = stats::mean(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &points {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(IndicatorError::DegenerateRegressor);
    }

    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (x, y) in &points {
        let fitted = intercept + slope * x;
        sse += (y - fitted) * (y - fitted);
        sst += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if sst == 0.0 { 0.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };

    let dof = (n - 2) as f64;
    let se = (sse / dof / sxx).sqrt();
    let p_value_slope = if se == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        stats::students_t_two_sided_p(slope / se, dof)
    };

    Ok(TrendFit { slope, intercept, r_squared, p_value_slope, n })
}

/// Daily mean of hourly interchange over present hours; a day's coverage is
/// recorded alongside its mean, and a day with no present hours is missing.
pub fn interchange_daily_mean(
    interchange: &HourlySeries,
) -> Result<DailySeries, IndicatorError> {
    require_variable(interchange, Variable::Interchange)?;
    Ok(daily_aggregate(interchange, Reducer::Mean, 1)?)
}

fn require_variable(series: &HourlySeries, expected: Variable) -> Result<(), IndicatorError> {
    if series.variable() != expected {
        return Err(IndicatorError::WrongVariable { expected, found: series.variable() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::{Duration, NaiveDate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn day_start(y: i32, m: u32, d: u32) -> NaiveDateTime {
        // First hour-ending stamp of the local day.
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(1, 0, 0).unwrap()
    }

    fn demand(values: Vec<Option<f64>>) -> HourlySeries {
        HourlySeries::new("FLA", Variable::Demand, day_start(2020, 3, 2), values).unwrap()
    }

    #[test]
    fn constant_day_has_equal_peak_and_trough() {
        let report = daily_peak_trough(&demand(vec![Some(100.0); 24]), 20).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].peak_mwh, 100.0);
        assert_eq!(report.rows[0].trough_mwh, 100.0);
        assert_eq!(report.rows[0].date, NaiveDate::from_ymd_opt(2020, 3, 2).unwrap());
        assert!(report.omitted_days.is_empty());
    }

    #[test]
    fn ascending_day_peaks_at_24() {
        let values = (1..=24).map(|v| Some(v as f64)).collect();
        let report = daily_peak_trough(&demand(values), 20).unwrap();
        assert_eq!(report.rows[0].peak_mwh, 24.0);
        assert_eq!(report.rows[0].trough_mwh, 1.0);
    }

    #[test]
    fn all_missing_day_is_omitted_and_listed() {
        let mut values = vec![Some(50.0); 24];
        values.extend(vec![None; 24]);
        values.extend(vec![Some(60.0); 24]);
        let report = daily_peak_trough(&demand(values), 20).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.omitted_days, vec![NaiveDate::from_ymd_opt(2020, 3, 3).unwrap()]);
    }

    #[test]
    fn under_covered_day_is_omitted() {
        let mut values = vec![Some(50.0); 24];
        // Second day: only 19 present hours, below the threshold of 20.
        values.extend((0..24).map(|h| if h < 19 { Some(60.0) } else { None }));
        let report = daily_peak_trough(&demand(values), 20).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.omitted_days.len(), 1);
    }

    #[test]
    fn peak_trough_brackets_every_hour() {
        let values: Vec<Option<f64>> =
            (0..48).map(|h| Some(1000.0 + 37.0 * ((h * h) % 23) as f64)).collect();
        let series = demand(values.clone());
        let report = daily_peak_trough(&series, 24).unwrap();
        for row in &report.rows {
            for (ts, v) in series.iter() {
                if hour_ending_day(ts) == row.date {
                    let v = v.unwrap();
                    assert!(row.trough_mwh <= v && v <= row.peak_mwh);
                }
            }
        }
    }

    #[test]
    fn peak_trough_rejects_temperature_series() {
        let series =
            HourlySeries::new("FLA", Variable::Temperature, day_start(2020, 3, 2), vec![
                Some(70.0);
                24
            ])
            .unwrap();
        assert!(matches!(
            daily_peak_trough(&series, 20),
            Err(IndicatorError::WrongVariable { .. })
        ));
    }

    #[test]
    fn peak_trough_rejects_zero_min_coverage() {
        assert!(matches!(
            daily_peak_trough(&demand(vec![Some(1.0); 24]), 0),
            Err(IndicatorError::InvalidMinCoverage(0))
        ));
    }

    #[test]
    fn ramp_of_constant_series_is_zero() {
        let out = ramp_rate(&demand(vec![Some(5.0); 24])).unwrap();
        assert_eq!(out.values()[0], None);
        assert!(out.values()[1..].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn ramp_matches_hand_computed_differences() {
        let out = ramp_rate(&demand(vec![Some(100.0), Some(150.0), Some(130.0)])).unwrap();
        assert_eq!(out.values(), &[None, Some(50.0), Some(-20.0)]);
    }

    #[test]
    fn ramp_missing_hour_knocks_out_two_outputs() {
        let out =
            ramp_rate(&demand(vec![Some(100.0), None, Some(130.0), Some(140.0)])).unwrap();
        assert_eq!(out.values(), &[None, None, None, Some(10.0)]);
    }

    #[test]
    fn ramp_needs_two_hours() {
        assert!(matches!(
            ramp_rate(&demand(vec![Some(1.0)])),
            Err(IndicatorError::InsufficientData { needed: 2, found: 1 })
        ));
    }

    #[test]
    fn ramp_telescopes_over_a_gap_free_day() {
        let values: Vec<Option<f64>> =
            (0..24).map(|h| Some(900.0 + 13.0 * ((h * 7) % 11) as f64)).collect();
        let series = demand(values.clone());
        let ramps = ramp_rate(&series).unwrap();
        let total: f64 = ramps.values()[1..].iter().map(|v| v.unwrap()).sum();
        let expected = values[23].unwrap() - values[0].unwrap();
        assert_relative_eq!(total, expected, max_relative = 1e-12);
    }

    fn forecast_series(start: NaiveDateTime, values: Vec<Option<f64>>) -> HourlySeries {
        HourlySeries::new("FLA", Variable::Forecast, start, values).unwrap()
    }

    #[test]
    fn perfect_forecast_gives_zero_error() {
        let d = demand(vec![Some(100.0), Some(120.0), Some(90.0)]);
        let f = forecast_series(d.start(), vec![Some(100.0), Some(120.0), Some(90.0)]);
        let err = forecast_error(&d, &f).unwrap();
        assert!(err.values().iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn under_forecast_is_positive_error() {
        let d = demand(vec![Some(100.0)]);
        let f = forecast_series(d.start(), vec![Some(90.0)]);
        let err = forecast_error(&d, &f).unwrap();
        assert_eq!(err.values(), &[Some(10.0)]);
    }

    #[test]
    fn forecast_error_propagates_missing() {
        let d = demand(vec![Some(100.0), None, Some(90.0)]);
        let f = forecast_series(d.start(), vec![Some(90.0), Some(95.0), None]);
        let err = forecast_error(&d, &f).unwrap();
        assert_eq!(err.values(), &[Some(10.0), None, None]);
    }

    #[test]
    fn forecast_error_covers_only_the_overlap() {
        let d = demand(vec![Some(100.0), Some(110.0), Some(120.0), Some(130.0)]);
        let f = forecast_series(d.start() + Duration::hours(2), vec![Some(100.0), Some(100.0)]);
        let err = forecast_error(&d, &f).unwrap();
        assert_eq!(err.start(), d.start() + Duration::hours(2));
        assert_eq!(err.values(), &[Some(20.0), Some(30.0)]);
    }

    #[test]
    fn disjoint_ranges_error() {
        let d = demand(vec![Some(100.0), Some(110.0)]);
        let f = forecast_series(d.start() + Duration::hours(48), vec![Some(1.0), Some(2.0)]);
        assert!(matches!(forecast_error(&d, &f), Err(IndicatorError::NoOverlap)));
    }

    #[test]
    fn forecast_error_checks_regions() {
        let d = demand(vec![Some(100.0)]);
        let f = HourlySeries::new("TAL", Variable::Forecast, d.start(), vec![Some(90.0)]).unwrap();
        assert!(matches!(forecast_error(&d, &f), Err(IndicatorError::RegionMismatch { .. })));
    }

    fn daily(values: Vec<Option<f64>>) -> DailySeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let dates: Vec<NaiveDate> = (0..values.len()).map(|i| start + Duration::days(i as i64)).collect();
        let coverage = vec![24; values.len()];
        DailySeries::new("FLA", Variable::Demand, dates, values, coverage).unwrap()
    }

    #[test]
    fn exact_line_recovers_slope_and_intercept() {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let values = (0..30).map(|x| Some(2.0 * x as f64 + 5.0)).collect();
        let fit = trend_fit(&daily(values), anchor).unwrap();
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 5.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        assert_eq!(fit.n, 30);
    }

    #[test]
    fn constant_series_has_no_trend() {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let fit = trend_fit(&daily(vec![Some(42.0); 30]), anchor).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);
        assert_eq!(fit.p_value_slope, 1.0);
    }

    #[test]
    fn noisy_line_matches_independent_least_squares() {
        // y = 3x + e with e ~ N(0, 0.01); the oracle is a dense SVD solve of
        // the same system, built without reusing the closed-form estimator.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut normal = move || {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let n = 100usize;
        let ys: Vec<f64> = (0..n).map(|x| 3.0 * x as f64 + 0.1 * normal()).collect();

        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let fit = trend_fit(&daily(ys.iter().map(|y| Some(*y)).collect()), anchor).unwrap();

        let design = nalgebra::DMatrix::from_fn(n, 2, |r, c| if c == 0 { r as f64 } else { 1.0 });
        let rhs = nalgebra::DVector::from_vec(ys);
        let theta = design
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .expect("full-rank two-column system");

        assert_relative_eq!(fit.slope, theta[0], max_relative = 1e-9);
        assert_relative_eq!(fit.intercept, theta[1], epsilon = 1e-9);
        assert!((fit.slope - 3.0).abs() < 0.02);
        assert!(fit.p_value_slope < 1e-3);
    }

    #[test]
    fn residuals_sum_to_zero_and_are_orthogonal_to_x() {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let values: Vec<Option<f64>> =
            (0..40).map(|x| Some(1.5 * x as f64 + ((x * 13) % 7) as f64)).collect();
        let series = daily(values);
        let fit = trend_fit(&series, anchor).unwrap();

        let mut residual_sum = 0.0;
        let mut cross = 0.0;
        let mut scale = 0.0f64;
        for (date, value, _) in series.iter() {
            let x = (date - anchor).num_days() as f64;
            let y = value.unwrap();
            let r = y - (fit.intercept + fit.slope * x);
            residual_sum += r;
            cross += r * x;
            scale = scale.max(y.abs());
        }
        assert!(residual_sum.abs() < 1e-9 * scale.max(1.0));
        assert!(cross.abs() < 1e-7 * scale.max(1.0) * 40.0);
    }

    #[test]
    fn vertical_shift_moves_only_the_intercept() {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let base: Vec<Option<f64>> =
            (0..25).map(|x| Some(0.7 * x as f64 + ((x * 5) % 11) as f64)).collect();
        let shifted: Vec<Option<f64>> = base.iter().map(|v| v.map(|y| y + 250.0)).collect();
        let fit_a = trend_fit(&daily(base), anchor).unwrap();
        let fit_b = trend_fit(&daily(shifted), anchor).unwrap();
        assert_relative_eq!(fit_b.intercept, fit_a.intercept + 250.0, max_relative = 1e-12);
        assert_relative_eq!(fit_b.slope, fit_a.slope, max_relative = 1e-12);
        assert_relative_eq!(fit_b.r_squared, fit_a.r_squared, max_relative = 1e-12);
    }

    #[test]
    fn trend_needs_three_days() {
        let anchor = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let err = trend_fit(&daily(vec![Some(1.0), Some(2.0), None]), anchor).unwrap_err();
        assert!(matches!(err, IndicatorError::InsufficientData { needed: 3, found: 2 }));
    }

    fn interchange(values: Vec<Option<f64>>) -> HourlySeries {
        HourlySeries::new("FLA", Variable::Interchange, day_start(2020, 3, 2), values).unwrap()
    }

    #[test]
    fn interchange_mean_of_constant_day() {
        let out = interchange_daily_mean(&interchange(vec![Some(500.0); 24])).unwrap();
        assert_eq!(out.values(), &[Some(500.0)]);
        assert_eq!(out.coverage(), &[24]);
    }

    #[test]
    fn interchange_signs_cancel() {
        let mut values = vec![Some(100.0); 12];
        values.extend(vec![Some(-100.0); 12]);
        let out = interchange_daily_mean(&interchange(values)).unwrap();
        assert_eq!(out.values(), &[Some(0.0)]);
    }

    #[test]
    fn interchange_partial_day_records_coverage() {
        let mut values = vec![Some(200.0); 23];
        values.push(None);
        let out = interchange_daily_mean(&interchange(values)).unwrap();
        assert_eq!(out.values(), &[Some(200.0)]);
        assert_eq!(out.coverage(), &[23]);
    }

    #[test]
    fn interchange_rejects_demand_series() {
        assert!(matches!(
            interchange_daily_mean(&demand(vec![Some(1.0); 24])),
            Err(IndicatorError::WrongVariable { .. })
        ));
    }
}
