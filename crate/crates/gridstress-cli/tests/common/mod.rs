//! Shared synthetic fixtures for the binary's integration tests.
//!
//! The generator plants a known model: quadratic degree-day response around
//! setpoints (64, 72) °F, an hour-of-week baseload between 1500 and 2500
//! MWh, and a temperature path whose within-hour-of-week variation is rich
//! enough to identify the response coefficients. Demand inside the event
//! window is scaled by a chosen factor so the change table has a known
//! target.

#![allow(dead_code)]

use chrono::{NaiveDate, NaiveDateTime};
use gridstress_core::timeseries::hour_of_week;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const ALPHA_H: f64 = 5.0;
pub const ALPHA_C: f64 = 8.0;
pub const HEATING: f64 = 64.0;
pub const COOLING: f64 = 72.0;

/// A Monday midnight well before the data, so hour indices are stable.
pub fn epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2019, 1, 7).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

pub fn hours_since_epoch(ts: NaiveDateTime) -> f64 {
    (ts - epoch()).num_hours() as f64
}

/// Smooth temperature path, °F. The 24 h component is the daily cycle; the
/// 100 h and 0.7 rad/h components are incommensurate with the week, so the
/// same hour of week sees different temperatures on different weeks.
pub fn temperature_at(ts: NaiveDateTime) -> f64 {
    let k = hours_since_epoch(ts);
    67.0 + 14.0 * (TAU * k / 24.0).sin()
        + 4.0 * (TAU * k / 100.0).sin()
        + 2.0 * (0.7 * k).sin()
}

/// Planted weekly baseload, MWh: 1500 to 2500 over the week.
pub fn planted_baseload(hour_of_week: u32) -> f64 {
    2000.0 + 500.0 * (TAU * (hour_of_week - 1) as f64 / 168.0).sin()
}

/// Noise-free demand under the planted model.
pub fn planted_demand(ts: NaiveDateTime) -> f64 {
    let t = temperature_at(ts);
    let th = (HEATING - t).max(0.0);
    let tc = (t - COOLING).max(0.0);
    let w = hour_of_week(ts).expect("fixture timestamps are hour-aligned");
    ALPHA_H * th * th + ALPHA_C * tc * tc + planted_baseload(w)
}

/// Deterministic Gaussian noise via Box-Muller.
pub struct Noise {
    rng: ChaCha8Rng,
}

impl Noise {
    pub fn new(seed: u64) -> Self {
        Noise { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn gaussian(&mut self, sigma: f64) -> f64 {
        let u1: f64 = self.rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.rng.gen_range(0.0..1.0);
        sigma * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

/// Hour endings of every day in `[start, end]`, in order.
pub fn hour_endings(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDateTime> {
    let mut out = Vec::new();
    let mut day = start;
    while day <= end {
        for hour in 1..=24u32 {
            out.push(
                day.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::hours(hour as i64),
            );
        }
        day += chrono::Duration::days(1);
    }
    out
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A synthetic region on disk: grid CSV, weather CSV, and a config that
/// points at them.
pub struct Fixture {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub grid_csv: PathBuf,
    pub weather_csv: PathBuf,
}

/// The two segments the fixture covers: the training year and the event
/// year (with its base period).
pub const TRAIN_SEGMENT: (i32, u32, u32, i32, u32, u32) = (2019, 3, 1, 2019, 4, 7);
pub const EVENT_SEGMENT: (i32, u32, u32, i32, u32, u32) = (2020, 2, 1, 2020, 4, 5);

/// Demand is scaled by `event_scale` from this date on (the behavioral
/// change the backcast should expose). The base window ends before it.
pub fn event_scale_start() -> NaiveDate {
    date(2020, 3, 2)
}

pub fn default_windows_toml() -> &'static str {
    r#"
[windows]
train = { start = "2019-03-04", end = "2019-03-31" }
event = { start = "2020-03-02", end = "2020-03-29" }
base = { start = "2020-02-03", end = "2020-02-16" }
pre = { start = "2019-03-04", end = "2019-03-17" }
post = { start = "2020-03-02", end = "2020-03-15" }
empty = { start = "2021-06-01", end = "2021-06-07" }
"#
}

/// Write the fixture files under `CARGO_TARGET_TMPDIR`.
///
/// `noise_mwh` perturbs demand (seed fixed per tag); `event_scale`
/// multiplies demand from `event_scale_start()` on; `model_toml` is the
/// config's `[model]` (and optionally more) sections, verbatim.
pub fn write_fixture(tag: &str, noise_mwh: f64, event_scale: f64, model_toml: &str) -> Fixture {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("fixture-{tag}"));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("fresh fixture dir");
    }
    std::fs::create_dir_all(&dir).expect("create fixture dir");

    let mut noise = Noise::new(0xF1C5);
    let mut grid = String::from("ts,demand_mwh,forecast_mwh,interchange_mwh\n");
    let mut weather = String::from("timestamp,temperature_degF\n");

    for segment in [TRAIN_SEGMENT, EVENT_SEGMENT] {
        let (y0, m0, d0, y1, m1, d1) = segment;
        for ts in hour_endings(date(y0, m0, d0), date(y1, m1, d1)) {
            let k = hours_since_epoch(ts);
            let scale = if gridstress_core::timeseries::hour_ending_day(ts) >= event_scale_start()
            {
                event_scale
            } else {
                1.0
            };
            let demand = scale * planted_demand(ts) + noise.gaussian(noise_mwh);
            // The forecast misses by a smooth daily-cycle error.
            let forecast = demand + 30.0 * (TAU * k / 24.0 + 1.0).sin();
            let interchange = 200.0 * (TAU * k / 24.0).sin() + 80.0 * (TAU * k / 500.0).sin();
            writeln!(
                grid,
                "{},{demand:.3},{forecast:.3},{interchange:.3}",
                ts.format("%Y-%m-%d %H:%M")
            )
            .unwrap();
            writeln!(
                weather,
                "{},{:.3}",
                ts.format("%Y-%m-%d %H:%M"),
                temperature_at(ts)
            )
            .unwrap();
        }
    }

    let grid_csv = dir.join("syn_grid.csv");
    let weather_csv = dir.join("syn_weather.csv");
    std::fs::write(&grid_csv, grid).expect("write grid csv");
    std::fs::write(&weather_csv, weather).expect("write weather csv");

    let out_dir = dir.join("out");
    let config = dir.join("config.toml");
    let config_text = format!(
        r#"out_dir = "{out}"
format = "csv"

[[regions]]
id = "SYN"
grid_csv = "{grid}"
weather_csv = "{weather}"

[regions.schema]
timestamp_column = "ts"

[regions.schema.columns]
demand = "demand_mwh"
forecast = "forecast_mwh"
interchange = "interchange_mwh"
{windows}
{model_toml}
"#,
        out = out_dir.display(),
        grid = grid_csv.display(),
        weather = weather_csv.display(),
        windows = default_windows_toml(),
    );
    std::fs::write(&config, config_text).expect("write config");

    Fixture { dir, config, out_dir, grid_csv, weather_csv }
}

/// Invoke the compiled binary.
pub fn gridstress() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_gridstress"))
}

/// Run the binary with args, returning (exit code, stdout, stderr).
pub fn run_gridstress(args: &[&str]) -> (i32, String, String) {
    let output = gridstress().args(args).output().expect("binary runs");
    (
        output.status.code().expect("binary exits normally"),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

/// First line of a file, for pinning table headers.
pub fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    text.lines().next().unwrap_or_default().to_string()
}

/// Every file under a directory, relative path -> bytes, deterministic order.
pub fn snapshot_dir(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = match std::fs::read_dir(&current) {
            Ok(entries) => entries,
            Err(_) => continue,
        };
        for entry in entries {
            let entry = entry.expect("read dir entry");
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .expect("entry under snapshot root")
                    .to_string_lossy()
                    .into_owned();
                files.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    files
}
