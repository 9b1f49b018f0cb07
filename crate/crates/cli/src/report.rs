//! Metrics rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const HEADER: [&str; 9] =
    ["trial", "round", "method", "observed_count", "sampling_ratio", "k_test", "ser_db", "psnr_db", "wall_ms"];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub trial: usize,
    pub round: usize,
    pub method: String,
    pub observed_count: usize,
    pub sampling_ratio: f64,
    /// NaN in all three metrics marks a round whose solve diverged.
    pub k_test: f64,
    pub ser_db: f64,
    pub psnr_db: f64,
    pub wall_ms: u64,
}

impl MetricsRow {
    pub fn diverged(&self) -> bool {
        self.k_test.is_nan()
    }
}

/// 17 significant digits, `inf`/`-inf`/`nan` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn record(row: &MetricsRow) -> [String; 9] {
    [
        row.trial.to_string(),
        row.round.to_string(),
        row.method.clone(),
        row.observed_count.to_string(),
        format_float(row.sampling_ratio),
        format_float(row.k_test),
        format_float(row.ser_db),
        format_float(row.psnr_db),
        row.wall_ms.to_string(),
    ]
}

/// Streams rows to CSV. The header is written on construction.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(HEADER)?;
        Ok(Self { writer })
    }

    pub fn write_rows(&mut self, rows: &[MetricsRow]) -> Result<()> {
        for row in rows {
            self.writer.write_record(record(row))?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

pub fn emit_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    CsvSink::new(file)?.write_rows(rows)
}

pub fn parse_csv(input: impl Read) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        bail!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).with_context(|| format!("row {}: missing {}", i + 1, HEADER[k]));
        let num = |k: usize| -> Result<f64> {
            field(k)?.parse().with_context(|| format!("row {}: bad {}", i + 1, HEADER[k]))
        };
        let int = |k: usize| -> Result<u64> {
            field(k)?.parse().with_context(|| format!("row {}: bad {}", i + 1, HEADER[k]))
        };
        rows.push(MetricsRow {
            trial: int(0)? as usize,
            round: int(1)? as usize,
            method: field(2)?.to_string(),
            observed_count: int(3)? as usize,
            sampling_ratio: num(4)?,
            k_test: num(5)?,
            ser_db: num(6)?,
            psnr_db: num(7)?,
            wall_ms: int(8)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> MetricsRow {
        MetricsRow {
            trial: 1,
            round: 2,
            method: "var+lev".into(),
            observed_count: 96,
            sampling_ratio: 96.0 / 3456.0,
            k_test: 0.1 + 0.2,
            ser_db: f64::INFINITY,
            psnr_db: 31.234567890123456,
            wall_ms: 12,
        }
    }

    fn emit(rows: &[MetricsRow]) -> String {
        let mut buf = Vec::new();
        CsvSink::new(&mut buf).unwrap().write_rows(rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only_and_one_row() {
        assert_eq!(emit(&[]), format!("{}\n", HEADER.join(",")));
        let text = emit(&[row()]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains(",inf,"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn parse_back_is_exact() {
        let mut diverged = row();
        diverged.k_test = f64::NAN;
        let rows = parse_csv(emit(&[row(), diverged]).as_bytes()).unwrap();
        assert_eq!(rows[0], row());
        assert!(rows[1].diverged());
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
