//! Output rendering: fixed-precision CSV text and pretty JSON, written
//! deterministically so identical runs produce identical bytes.

use crate::config::OutputFormat;
use crate::error::CliError;
use chrono::{NaiveDate, NaiveDateTime};
use gridstress_core::ingest::DEFAULT_TIMESTAMP_FORMAT;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Render a value with exactly six significant digits, in plain decimal
/// notation. Analysis CSVs use this everywhere; model JSON keeps full
/// precision instead.
pub fn sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    // Round in scientific form, then place the decimal point by hand so no
    // second rounding can creep in.
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = 1 + exp;
    let magnitude = if point <= 0 {
        format!("0.{}{}", "0".repeat(-point as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    };
    if negative {
        format!("-{magnitude}")
    } else {
        magnitude
    }
}

/// `sig6` for a possibly missing value; missing renders as an empty field.
pub fn sig6_opt(value: Option<f64>) -> String {
    value.map(sig6).unwrap_or_default()
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(DEFAULT_TIMESTAMP_FORMAT).to_string()
}

pub fn format_date(date: NaiveDate) -> String {
    date.format("%Y-%m-%d").to_string()
}

/// A table destined for one output file: a fixed header plus rows of
/// preformatted cells, with a serializable twin for JSON output.
pub struct Table<T: Serialize> {
    /// File stem, e.g. "peak_trough".
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub records: Vec<T>,
}

impl<T: Serialize> Table<T> {
    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        match format {
            OutputFormat::Csv => {
                let mut text = self.columns.join(",");
                text.push('\n');
                for row in &self.rows {
                    text.push_str(&row.join(","));
                    text.push('\n');
                }
                Ok(text)
            }
            OutputFormat::Json => {
                let mut text = serde_json::to_string_pretty(&self.records)?;
                text.push('\n');
                Ok(text)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Write a rendered table under `dir`, creating it as needed, and report
/// the file on stdout. Returns the path written.
pub fn write_table<T: Serialize>(
    dir: &Path,
    region_id: &str,
    table: &Table<T>,
    format: OutputFormat,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.{}", table.name, format.extension()));
    write_text(&path, &table.render(format)?)?;
    println!("[{region_id}] wrote {} ({} rows)", path.display(), table.len());
    Ok(path)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::file(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits_across_magnitudes() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(9.8), "9.80000");
        assert_eq!(sig6(-9.8), "-9.80000");
        assert_eq!(sig6(1234.5678), "1234.57");
        assert_eq!(sig6(1_234_567.89), "1234570");
        assert_eq!(sig6(0.00123), "0.00123000");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(-0.000012345678), "-0.0000123457");
    }

    #[test]
    fn rounding_happens_at_the_sixth_digit() {
        assert_eq!(sig6(1.0000004), "1.00000");
        assert_eq!(sig6(1.0000006), "1.00000"); // 1.0000006 rounds to 1.00000
        assert_eq!(sig6(1.000006), "1.00001");
        assert_eq!(sig6(999999.9), "1000000");
    }

    #[test]
    fn missing_values_render_empty() {
        assert_eq!(sig6_opt(None), "");
        assert_eq!(sig6_opt(Some(2.5)), "2.50000");
    }

    #[test]
    fn csv_rendering_is_header_plus_rows() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
        }
        let table = Table {
            name: "demo",
            columns: vec!["x".to_string()],
            rows: vec![vec![sig6(1.0)], vec![sig6(2.0)]],
            records: vec![Row { x: 1.0 }, Row { x: 2.0 }],
        };
        let csv = table.render(OutputFormat::Csv).unwrap();
        assert_eq!(csv, "x\n1.00000\n2.00000\n");
        let json = table.render(OutputFormat::Json).unwrap();
        assert!(json.contains("\"x\": 1.0"), "{json}");
        assert!(json.ends_with('\n'));
    }
}
