//! Analytics for hourly balancing-authority electricity data.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`timeseries`] — calendar-aware hourly containers with explicit missing
//!   markers, hour-of-week indexing, cross-year alignment and daily rollups.
//! - [`ingest`] — delimited-text parsers for grid exports and weather-station
//!   observations, with gap filling and coverage reporting.
//! - [`indicators`] — grid-stress indicators: daily peak/trough, ramp rate,
//!   day-ahead forecast error, interchange means, and linear trend fits.
//! - [`density`] — Gaussian-kernel density estimation of indicator samples
//!   and two-period distribution comparison.
//! - [`weather`] — degree transforms, the 170-parameter hour-of-week demand
//!   model, counterfactual prediction, change series with confidence bands,
//!   and exhaustive setpoint search.
//! - [`stats`] — shared numerics (quantiles, Student-t tail probability via
//!   the regularized incomplete beta function).

pub mod density;
pub mod indicators;
pub mod ingest;
pub mod stats;
pub mod timeseries;
pub mod weather;
