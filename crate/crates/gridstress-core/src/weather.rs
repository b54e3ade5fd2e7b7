//! Weather-corrected counterfactual demand.
//!
//! Hourly demand is modeled as a quadratic response to heating and cooling
//! degrees plus an hour-of-week baseload:
//!
//! ```text
//! d_k = α_H·(T^H_k)² + α_C·(T^C_k)² + b_w(k),   w(k) ∈ 1..=168
//! ```
//!
//! The 170 parameters (two degree coefficients, 168 baseloads) are estimated
//! by ordinary least squares over a training window, then applied to a later
//! period's temperatures to predict what demand would have been under normal
//! behavior. The gap between observed and predicted demand is the
//! behavioral change, reported daily with ±2σ / ±3σ bands.
//!
//! Fitting uses a singular value decomposition of the design matrix rather
//! than the normal equations; the result is mathematically the same for a
//! full-rank design and numerically far better behaved.

use chrono::{NaiveDate, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{mean, sample_std};
use crate::timeseries::{
    hour_ending_day, hour_of_week, DailySeries, DateRange, HourlySeries, TimeseriesError,
    Variable,
};

/// Model parameter count: α_H, α_C, and one baseload per hour of week.
pub const N_PARAMS: usize = 170;
/// Hours in a week; the baseload vector has this many entries.
pub const HOURS_PER_WEEK: usize = 168;

const SETPOINT_BOUNDS_DEGF: (f64, f64) = (30.0, 100.0);
const SHORT_TRAINING_HOURS: i64 = 168;
const LONG_TRAINING_HOURS: i64 = 6 * 168;

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error(
        "invalid setpoints: heating {heating} degF, cooling {cooling} degF \
         (need {lo} <= heating < cooling <= {hi})",
        lo = SETPOINT_BOUNDS_DEGF.0,
        hi = SETPOINT_BOUNDS_DEGF.1
    )]
    InvalidSetpoints { heating: f64, cooling: f64 },
    #[error("expected a {expected} series, got {found}")]
    WrongVariable { expected: Variable, found: Variable },
    #[error("temperature and demand series do not overlap")]
    NoOverlap,
    #[error("underdetermined fit: {rows} rows for {cols} parameters")]
    Underdetermined { rows: usize, cols: usize },
    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("base window covers {found} day(s); need at least {needed}")]
    InsufficientBaseWindow { needed: usize, found: usize },
    #[error("base-window mean must be positive, got {0}")]
    InvalidBaseMean(f64),
    #[error("sigma_daily must be a positive finite fraction, got {0}")]
    InvalidSigma(f64),
    #[error("invalid setpoint grid: {0}")]
    InvalidGrid(String),
    #[error("setpoint grids admit no pair with heating < cooling")]
    NoAdmissiblePair,
    #[error("every setpoint pair failed to fit")]
    NoViableFit,
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

/// Non-fatal observations made while building or fitting a model.
#[derive(Debug, Clone, PartialEq)]
pub enum WeatherWarning {
    /// Training data spans less than one full week.
    ShortTrainingWindow { span_hours: i64 },
    /// Training data spans more than about six weeks; the constant-baseload
    /// assumption weakens as the window grows.
    LongTrainingWindow { span_hours: i64 },
    /// A parameter came out negative; physically odd but not forbidden.
    NegativeParameter { name: String, value: f64 },
}

impl std::fmt::Display for WeatherWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeatherWarning::ShortTrainingWindow { span_hours } => write!(
                f,
                "training data spans {span_hours} h, less than one full week (168 h)"
            ),
            WeatherWarning::LongTrainingWindow { span_hours } => write!(
                f,
                "training data spans {span_hours} h, more than six weeks; \
                 weekly baseload may drift over so long a window"
            ),
            WeatherWarning::NegativeParameter { name, value } => {
                write!(f, "estimated {name} = {value} is negative")
            }
        }
    }
}

/// The temperatures where heating demand stops and cooling demand starts.
/// Always ordered `heating < cooling`, both within plausible °F bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDegreeParams")]
pub struct DegreeParams {
    heating_setpoint: f64,
    cooling_setpoint: f64,
}

#[derive(Deserialize)]
struct RawDegreeParams {
    heating_setpoint: f64,
    cooling_setpoint: f64,
}

impl TryFrom<RawDegreeParams> for DegreeParams {
    type Error = WeatherError;

    fn try_from(raw: RawDegreeParams) -> Result<Self, WeatherError> {
        DegreeParams::new(raw.heating_setpoint, raw.cooling_setpoint)
    }
}

impl DegreeParams {
    pub fn new(heating_setpoint: f64, cooling_setpoint: f64) -> Result<Self, WeatherError> {
        let (lo, hi) = SETPOINT_BOUNDS_DEGF;
        let ordered = heating_setpoint < cooling_setpoint;
        let bounded = heating_setpoint >= lo
            && cooling_setpoint <= hi
            && heating_setpoint.is_finite()
            && cooling_setpoint.is_finite();
        if !(ordered && bounded) {
            return Err(WeatherError::InvalidSetpoints {
                heating: heating_setpoint,
                cooling: cooling_setpoint,
            });
        }
        Ok(DegreeParams { heating_setpoint, cooling_setpoint })
    }

    pub fn heating_setpoint(&self) -> f64 {
        self.heating_setpoint
    }

    pub fn cooling_setpoint(&self) -> f64 {
        self.cooling_setpoint
    }

    /// Width of the deadband between the setpoints, °F.
    pub fn span(&self) -> f64 {
        self.cooling_setpoint - self.heating_setpoint
    }
}

/// Heating and cooling degrees of one temperature reading. At most one side
/// is positive; inside the deadband both are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreePair {
    pub heating_degree: f64,
    pub cooling_degree: f64,
}

impl DegreePair {
    /// The squared terms the regression consumes. Both the design builder
    /// and the predictor square through this one method, so fitted values
    /// and counterfactual predictions agree bit for bit.
    pub fn squared_terms(&self) -> (f64, f64) {
        (
            self.heating_degree * self.heating_degree,
            self.cooling_degree * self.cooling_degree,
        )
    }
}

/// Split a temperature into heating and cooling degrees:
/// `T^H = max(heating_setpoint − T, 0)`, `T^C = max(T − cooling_setpoint, 0)`.
pub fn degrees(temp_degf: f64, params: DegreeParams) -> DegreePair {
    DegreePair {
        heating_degree: (params.heating_setpoint - temp_degf).max(0.0),
        cooling_degree: (temp_degf - params.cooling_setpoint).max(0.0),
    }
}

/// Per-hour degree pairs for a temperature series, with the classic
/// aggregates: degree-hours (sums over present hours) and degree-days
/// (degree-hours over 24).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHours {
    /// One entry per series hour; `None` where the temperature was missing.
    pub pairs: Vec<Option<DegreePair>>,
    /// Cooling degree hours, Σ T^C over present hours.
    pub cdh: f64,
    /// Cooling degree days, CDH / 24.
    pub cdd: f64,
    /// Heating degree hours.
    pub hdh: f64,
    /// Heating degree days, HDH / 24.
    pub hdd: f64,
    /// Hours excluded because the temperature was missing.
    pub missing_hours: usize,
}

/// Degree transform of every hour of a temperature series plus aggregates.
pub fn degree_hours(
    temps: &HourlySeries,
    params: DegreeParams,
) -> Result<DegreeHours, WeatherError> {
    require_variable(temps, Variable::Temperature)?;
    let mut pairs = Vec::with_capacity(temps.len());
    let mut cdh = 0.0;
    let mut hdh = 0.0;
    let mut missing_hours = 0usize;
    for value in temps.values() {
        match value {
            Some(t) => {
                let pair = degrees(*t, params);
                cdh += pair.cooling_degree;
                hdh += pair.heating_degree;
                pairs.push(Some(pair));
            }
            None => {
                missing_hours += 1;
                pairs.push(None);
            }
        }
    }
    Ok(DegreeHours { pairs, cdh, cdd: cdh / 24.0, hdh, hdd: hdh / 24.0, missing_hours })
}

/// One regression row: squared degrees plus the hour-of-week the row's
/// baseload indicator points at. The dense 170-column form is materialized
/// only inside the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRow {
    pub heating_sq: f64,
    pub cooling_sq: f64,
    /// 1..=168, Monday hour-ending 01:00 first.
    pub hour_of_week: u32,
}

/// Training inputs for one model: rows, responses, and per-row timestamps,
/// all the same length, restricted to hours where demand and temperature are
/// both present.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub region_id: String,
    pub degree_params: DegreeParams,
    pub rows: Vec<DesignRow>,
    pub response: Vec<f64>,
    pub timestamps: Vec<NaiveDateTime>,
    pub warnings: Vec<WeatherWarning>,
}

/// Pair temperatures with demand over their overlap and build regression
/// rows. Hours missing either side are dropped. Warns when the span of rows
/// is shorter than a week or longer than about six.
pub fn build_design(
    temps: &HourlySeries,
    demand: &HourlySeries,
    params: DegreeParams,
) -> Result<Design, WeatherError> {
    require_variable(temps, Variable::Temperature)?;
    require_variable(demand, Variable::Demand)?;

    let (Some(t_end), Some(d_end)) = (temps.end(), demand.end()) else {
        return Err(WeatherError::NoOverlap);
    };
    let start = temps.start().max(demand.start());
    let end = t_end.min(d_end);
    if start > end {
        return Err(WeatherError::NoOverlap);
    }

    let mut rows = Vec::new();
    let mut response = Vec::new();
    let mut timestamps = Vec::new();
    let hours = (end - start).num_hours() as usize + 1;
    for i in 0..hours {
        let ts = start + chrono::Duration::hours(i as i64);
        let (Some(temp), Some(d)) = (temps.value_at(ts), demand.value_at(ts)) else {
            continue;
        };
        let (heating_sq, cooling_sq) = degrees(temp, params).squared_terms();
        let w = hour_of_week(ts).expect("series timestamps are hour-aligned");
        rows.push(DesignRow { heating_sq, cooling_sq, hour_of_week: w });
        response.push(d);
        timestamps.push(ts);
    }
    if rows.is_empty() {
        return Err(WeatherError::NoOverlap);
    }

    let span_hours = (timestamps[timestamps.len() - 1] - timestamps[0]).num_hours() + 1;
    let mut warnings = Vec::new();
    if span_hours < SHORT_TRAINING_HOURS {
        warnings.push(WeatherWarning::ShortTrainingWindow { span_hours });
    } else if span_hours > LONG_TRAINING_HOURS {
        warnings.push(WeatherWarning::LongTrainingWindow { span_hours });
    }

    Ok(Design {
        region_id: demand.region_id().to_string(),
        degree_params: params,
        rows,
        response,
        timestamps,
        warnings,
    })
}

/// A fitted hour-of-week degree-day model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    /// MWh per squared heating degree.
    pub alpha_h: f64,
    /// MWh per squared cooling degree.
    pub alpha_c: f64,
    /// MWh baseload per hour of week; index w−1 holds hour w.
    pub baseload: Vec<f64>,
    pub degree_params: DegreeParams,
    pub training_window: DateRange,
    pub n_train: usize,
    /// Ratio of the design's largest to smallest singular value.
    pub condition_estimate: f64,
}

impl DemandModel {
    /// Check the structural invariants every fitted or deserialized model
    /// must satisfy.
    pub fn validate(&self) -> Result<(), WeatherError> {
        if self.baseload.len() != HOURS_PER_WEEK {
            return Err(WeatherError::InvalidModel(format!(
                "baseload has {} entries, expected {HOURS_PER_WEEK}",
                self.baseload.len()
            )));
        }
        let all = self
            .baseload
            .iter()
            .chain([&self.alpha_h, &self.alpha_c, &self.condition_estimate]);
        for (i, v) in all.enumerate() {
            if !v.is_finite() {
                return Err(WeatherError::InvalidModel(format!(
                    "parameter {i} is not finite ({v})"
                )));
            }
        }
        Ok(())
    }
}

/// In-sample quality of a fit. Relative errors are `(d_k − d̂_k)/d_k`,
/// skipping rows with zero observed demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
    pub r_squared: f64,
    /// `d − d̂` in MWh, one entry per design row.
    pub residuals: Vec<f64>,
}

/// A fitted model with its diagnostics and any fit-stage warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub model: DemandModel,
    pub diagnostics: FitDiagnostics,
    pub warnings: Vec<WeatherWarning>,
}

/// The model evaluated at one row's regressors. Every fitted value and every
/// counterfactual prediction flows through this function, so the two are
/// identical where their inputs are.
fn predict_row(alpha_h: f64, alpha_c: f64, heating_sq: f64, cooling_sq: f64, baseload: f64) -> f64 {
    alpha_h * heating_sq + alpha_c * cooling_sq + baseload
}

/// Least-squares fit of the 170-parameter model.
///
/// Requires at least 170 rows, every hour of week observed at least once,
/// and at least one nonzero entry in each degree column; anything less
/// leaves parameters unidentified. The system is solved through an SVD of
/// the design; the solution satisfies the normal equations of the classic
/// estimator `(ΦᵀΦ)θ = Φᵀd` but never forms `ΦᵀΦ` explicitly.
pub fn fit_ols(design: &Design) -> Result<FitOutput, WeatherError> {
    let rows = &design.rows;
    if rows.len() < N_PARAMS {
        return Err(WeatherError::Underdetermined { rows: rows.len(), cols: N_PARAMS });
    }

    let mut seen = [false; HOURS_PER_WEEK];
    for row in rows {
        seen[(row.hour_of_week - 1) as usize] = true;
    }
    let absent: Vec<String> = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if !absent.is_empty() {
        let shown = absent.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
        let suffix = if absent.len() > 10 { ", ..." } else { "" };
        return Err(WeatherError::RankDeficient(format!(
            "{} hour(s) of week never observed: {shown}{suffix}",
            absent.len()
        )));
    }
    if rows.iter().all(|r| r.heating_sq == 0.0) {
        return Err(WeatherError::RankDeficient(
            "heating degree column is identically zero; no training hour fell below the \
             heating setpoint"
                .into(),
        ));
    }
    if rows.iter().all(|r| r.cooling_sq == 0.0) {
        return Err(WeatherError::RankDeficient(
            "cooling degree column is identically zero; no training hour rose above the \
             cooling setpoint"
                .into(),
        ));
    }

    let phi = DMatrix::from_fn(rows.len(), N_PARAMS, |r, c| {
        let row = &rows[r];
        match c {
            0 => row.heating_sq,
            1 => row.cooling_sq,
            _ => {
                if c == 1 + row.hour_of_week as usize {
                    1.0
                } else {
                    0.0
                }
            }
        }
    });
    let d = DVector::from_column_slice(&design.response);

    let svd = phi.svd(true, true);
    let sv = &svd.singular_values;
    let (mut sv_max, mut sv_min) = (0.0f64, f64::INFINITY);
    for &s in sv.iter() {
        sv_max = sv_max.max(s);
        sv_min = sv_min.min(s);
    }
    let tol = sv_max * rows.len().max(N_PARAMS) as f64 * f64::EPSILON;
    // Negated so a NaN singular value also lands on the error path.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sv_min > tol) {
        return Err(WeatherError::RankDeficient(format!(
            "smallest singular value {sv_min:.3e} is below the rank tolerance {tol:.3e}"
        )));
    }
    let condition_estimate = sv_max / sv_min;

    let theta = svd
        .solve(&d, 0.0)
        .map_err(|e| WeatherError::NumericalFailure(e.to_string()))?;

    let alpha_h = theta[0];
    let alpha_c = theta[1];
    let baseload: Vec<f64> = (0..HOURS_PER_WEEK).map(|w| theta[2 + w]).collect();

    let model = DemandModel {
        alpha_h,
        alpha_c,
        baseload,
        degree_params: design.degree_params,
        training_window: DateRange::new(
            hour_ending_day(design.timestamps[0]),
            hour_ending_day(design.timestamps[design.timestamps.len() - 1]),
        )?,
        n_train: rows.len(),
        condition_estimate,
    };
    model.validate()?;

    let mut residuals = Vec::with_capacity(rows.len());
    let mut rel_errors = Vec::with_capacity(rows.len());
    for (row, &observed) in rows.iter().zip(&design.response) {
        let fitted = predict_row(
            model.alpha_h,
            model.alpha_c,
            row.heating_sq,
            row.cooling_sq,
            model.baseload[(row.hour_of_week - 1) as usize],
        );
        let residual = observed - fitted;
        residuals.push(residual);
        if observed != 0.0 {
            rel_errors.push(residual / observed);
        }
    }
    let d_mean = mean(&design.response);
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let sst: f64 = design.response.iter().map(|d| (d - d_mean) * (d - d_mean)).sum();
    let r_squared = if sst == 0.0 { 0.0 } else { (1.0 - ssr / sst).clamp(0.0, 1.0) };

    let diagnostics = FitDiagnostics {
        mean_rel_error: mean(&rel_errors),
        std_rel_error: sample_std(&rel_errors),
        r_squared,
        residuals,
    };

    let mut warnings = Vec::new();
    let mut flag_negative = |name: String, value: f64| {
        if value < 0.0 {
            warnings.push(WeatherWarning::NegativeParameter { name, value });
        }
    };
    flag_negative("alpha_h".into(), model.alpha_h);
    flag_negative("alpha_c".into(), model.alpha_c);
    for (i, b) in model.baseload.iter().enumerate() {
        flag_negative(format!("b_{}", i + 1), *b);
    }

    Ok(FitOutput { model, diagnostics, warnings })
}

/// Predict demand for new temperatures with a fitted model: the model's own
/// setpoints transform the temperatures, the matching hour-of-week baseload
/// is added. Missing temperatures predict as missing. Applied to the
/// training temperatures this reproduces the in-sample fitted values
/// exactly.
pub fn predict_counterfactual(
    model: &DemandModel,
    temps: &HourlySeries,
) -> Result<HourlySeries, WeatherError> {
    require_variable(temps, Variable::Temperature)?;
    model.validate()?;

    let values: Vec<Option<f64>> = temps
        .iter()
        .map(|(ts, temp)| {
            temp.map(|t| {
                let (heating_sq, cooling_sq) = degrees(t, model.degree_params).squared_terms();
                let w = hour_of_week(ts).expect("series timestamps are hour-aligned");
                predict_row(
                    model.alpha_h,
                    model.alpha_c,
                    heating_sq,
                    cooling_sq,
                    model.baseload[(w - 1) as usize],
                )
            })
        })
        .collect();
    Ok(HourlySeries::new(temps.region_id(), Variable::Demand, temps.start(), values)?)
}

/// One day of observed-vs-counterfactual comparison. Change and bands are
/// percentages of the base-window mean daily demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangePoint {
    pub date: NaiveDate,
    pub observed_mwh: f64,
    pub counterfactual_mwh: f64,
    pub change_pct: f64,
    pub ci95: (f64, f64),
    pub ci99: (f64, f64),
}

/// Daily demand change relative to the counterfactual.
///
/// `change = 100·(observed − counterfactual)/base_mean`, where `base_mean`
/// is mean observed daily demand over `base_window`. `sigma_daily` is the
/// day-level prediction error as a fraction of that same base mean; the 95%
/// band is ±2σ and the 99% band ±3σ around the change, treating the model
/// as unbiased. Days missing either input are omitted.
pub fn change_series(
    observed_daily: &DailySeries,
    counterfactual_daily: &DailySeries,
    base_window: &DateRange,
    sigma_daily: f64,
) -> Result<Vec<ChangePoint>, WeatherError> {
    if !(sigma_daily.is_finite() && sigma_daily > 0.0) {
        return Err(WeatherError::InvalidSigma(sigma_daily));
    }
    let base_values = observed_daily.present_in(base_window);
    if base_values.len() < 7 {
        return Err(WeatherError::InsufficientBaseWindow { needed: 7, found: base_values.len() });
    }
    let base_mean = mean(&base_values);
    if base_mean <= 0.0 {
        return Err(WeatherError::InvalidBaseMean(base_mean));
    }

    let sigma_pct = 100.0 * sigma_daily;
    let mut points = Vec::new();
    for (date, counterfactual, _) in counterfactual_daily.iter() {
        let (Some(counterfactual), Some(observed)) =
            (counterfactual, observed_daily.value_on(date))
        else {
            continue;
        };
        let change_pct = 100.0 * (observed - counterfactual) / base_mean;
        points.push(ChangePoint {
            date,
            observed_mwh: observed,
            counterfactual_mwh: counterfactual,
            change_pct,
            ci95: (change_pct - 2.0 * sigma_pct, change_pct + 2.0 * sigma_pct),
            ci99: (change_pct - 3.0 * sigma_pct, change_pct + 3.0 * sigma_pct),
        });
    }
    Ok(points)
}

/// What the setpoint search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitCriterion {
    /// In-sample standard deviation of the relative fitting error.
    #[default]
    StdRelError,
    /// Sum of squared residuals.
    Ssr,
}

impl std::str::FromStr for FitCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "std_rel_error" => Ok(FitCriterion::StdRelError),
            "ssr" => Ok(FitCriterion::Ssr),
            other => Err(format!("unknown criterion {other:?}; use std_rel_error or ssr")),
        }
    }
}

/// One evaluated setpoint pair. `score` is `None` when that pair's fit
/// failed (for example a degree column vanished at an extreme setpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetpointScore {
    pub heating: f64,
    pub cooling: f64,
    pub score: Option<f64>,
}

/// Result of an exhaustive setpoint search: the winning pair and the full
/// score table in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointSearch {
    pub best: DegreeParams,
    pub best_score: f64,
    pub table: Vec<SetpointScore>,
}

/// Exhaustively fit every grid pair with `heating < cooling` and keep the
/// pair minimizing the criterion. Ties prefer the narrower deadband, then
/// the lower cooling setpoint. Pairs are fitted in parallel; the table is
/// always in grid order (heating-major), so results are deterministic.
pub fn search_setpoints(
    temps: &HourlySeries,
    demand: &HourlySeries,
    heating_grid: &[f64],
    cooling_grid: &[f64],
    criterion: FitCriterion,
) -> Result<SetpointSearch, WeatherError> {
    validate_grid("heating", heating_grid)?;
    validate_grid("cooling", cooling_grid)?;

    let pairs: Vec<(f64, f64)> = heating_grid
        .iter()
        .flat_map(|&h| cooling_grid.iter().filter(move |&&c| h < c).map(move |&c| (h, c)))
        .collect();
    if pairs.is_empty() {
        return Err(WeatherError::NoAdmissiblePair);
    }

    let table: Vec<SetpointScore> = pairs
        .par_iter()
        .map(|&(heating, cooling)| {
            let params = DegreeParams::new(heating, cooling).expect("grids are validated");
            let score = build_design(temps, demand, params)
                .and_then(|design| fit_ols(&design))
                .ok()
                .map(|fit| match criterion {
                    FitCriterion::StdRelError => fit.diagnostics.std_rel_error,
                    FitCriterion::Ssr => {
                        fit.diagnostics.residuals.iter().map(|r| r * r).sum()
                    }
                })
                .filter(|s| s.is_finite());
            SetpointScore { heating, cooling, score }
        })
        .collect();

    let mut best: Option<&SetpointScore> = None;
    for entry in &table {
        if entry.score.is_none() {
            continue;
        }
        best = match best {
            None => Some(entry),
            Some(incumbent) if prefer(entry, incumbent) => Some(entry),
            Some(incumbent) => Some(incumbent),
        };
    }
    let Some(winner) = best else {
        return Err(WeatherError::NoViableFit);
    };

    Ok(SetpointSearch {
        best: DegreeParams::new(winner.heating, winner.cooling).expect("validated"),
        best_score: winner.score.expect("winner has a score"),
        table,
    })
}

/// Whether `candidate` beats `incumbent`: lower score, then narrower
/// deadband, then lower cooling setpoint.
fn prefer(candidate: &SetpointScore, incumbent: &SetpointScore) -> bool {
    let (a, b) = (candidate.score.unwrap(), incumbent.score.unwrap());
    if a != b {
        return a < b;
    }
    let span_a = candidate.cooling - candidate.heating;
    let span_b = incumbent.cooling - incumbent.heating;
    if span_a != span_b {
        return span_a < span_b;
    }
    candidate.cooling < incumbent.cooling
}

fn validate_grid(name: &str, grid: &[f64]) -> Result<(), WeatherError> {
    if grid.is_empty() {
        return Err(WeatherError::InvalidGrid(format!("{name} grid is empty")));
    }
    let (lo, hi) = SETPOINT_BOUNDS_DEGF;
    for value in grid {
        if !value.is_finite() || *value < lo || *value > hi {
            return Err(WeatherError::InvalidGrid(format!(
                "{name} grid value {value} is outside [{lo}, {hi}] degF"
            )));
        }
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(WeatherError::InvalidGrid(format!(
                "{name} grid is not strictly ascending at {} -> {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Serialized form of a fitted model and its diagnostics. JSON round trips
/// are value-exact: floats are written with enough digits to parse back to
/// the identical bit pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model: DemandModel,
    pub diagnostics: FitDiagnostics,
}

impl ModelRecord {
    pub fn to_json(&self) -> Result<String, WeatherError> {
        serde_json::to_string_pretty(self)
            .map_err(|e| WeatherError::InvalidModel(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, WeatherError> {
        let record: ModelRecord = serde_json::from_str(text)
            .map_err(|e| WeatherError::InvalidModel(e.to_string()))?;
        record.model.validate()?;
        Ok(record)
    }
}

fn require_variable(series: &HourlySeries, expected: Variable) -> Result<(), WeatherError> {
    if series.variable() != expected {
        return Err(WeatherError::WrongVariable { expected, found: series.variable() });
    }
    Ok(())
}
