//! Shared helpers for the CSV file schemas.

use std::io::Write;

use crate::HOURS;

/// Renders a value with 17 significant digits so it survives a CSV round trip
/// bit-exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// `h00,h01,...,h23` style column names.
pub fn hour_columns(prefix: &str) -> Vec<String> {
    (0..HOURS).map(|h| format!("{prefix}{h:02}")).collect()
}

/// `u0,u1,...` style column names.
pub fn index_columns(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

pub(crate) fn csv_reader<R: std::io::Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

/// Parses a finite float cell, describing the failure for error messages.
pub(crate) fn parse_finite(cell: &str, column: &str) -> Result<f64, String> {
    let v: f64 = cell
        .parse()
        .map_err(|_| format!("cannot parse {column} value {cell:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite {column} value {cell:?}"))
    }
}

/// Checks that a header row matches the expected column names exactly.
pub(crate) fn check_header(found: &csv::StringRecord, expected: &[String]) -> Result<(), String> {
    let found: Vec<&str> = found.iter().collect();
    if found.len() == expected.len() && found.iter().zip(expected).all(|(a, b)| *a == b) {
        Ok(())
    } else {
        Err(format!(
            "unexpected header {:?}, expected {:?}",
            found.join(","),
            expected.join(",")
        ))
    }
}
