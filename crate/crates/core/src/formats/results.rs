//! Results CSV. Column order is fixed; infinite values are written as `inf`
//! and undefined ones as `nan`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::metrics::TrialResult;

pub const COLUMNS: [&str; 12] = [
    "image_id",
    "scheme",
    "eta",
    "snr_db",
    "seed",
    "payload_symbols",
    "side_symbol_equiv",
    "cbr",
    "psnr_db",
    "tc_psnr_db",
    "tc_pixel_count",
    "note",
];

/// A result row plus a free-text note (warnings, or the error of a failed
/// trial).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub result: TrialResult,
    pub note: String,
}

pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn csv_err(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<results>", e),
        other => Error::Json(format!("csv: {other:?}")),
    }
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for row in rows {
        let r = &row.result;
        w.write_record([
            r.image_id.clone(),
            r.scheme.clone(),
            format_real(r.eta),
            format_real(r.snr_db),
            r.seed.to_string(),
            r.payload_symbols.to_string(),
            r.side_symbol_equiv.to_string(),
            format_real(r.cbr),
            format_real(r.psnr_db),
            format_real(r.tc_psnr_db),
            r.tc_pixel_count.to_string(),
            row.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results(&mut buf, rows).expect("in-memory write");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Reads rows written by [`write_results`].
pub fn read_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |col: &str| Error::Json(format!("results row {}: bad {col}", line + 1));
        let real = |i: usize| parse_real(&rec[i]).ok_or_else(|| bad(COLUMNS[i]));
        let count = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(COLUMNS[i]));
        if rec.len() != COLUMNS.len() {
            return Err(bad("column count"));
        }
        rows.push(ResultRow {
            result: TrialResult {
                image_id: rec[0].to_string(),
                scheme: rec[1].to_string(),
                eta: real(2)?,
                snr_db: real(3)?,
                seed: rec[4].parse().map_err(|_| bad("seed"))?,
                payload_symbols: count(5)?,
                side_symbol_equiv: count(6)?,
                cbr: real(7)?,
                psnr_db: real(8)?,
                tc_psnr_db: real(9)?,
                tc_pixel_count: count(10)?,
            },
            note: rec[11].to_string(),
        });
    }
    Ok(rows)
}
