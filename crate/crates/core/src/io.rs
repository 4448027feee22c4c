//! CSV interchange for paths, draw logs and matrices.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! write/read cycle unchanged.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lift::DrawRecord;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a path with header `{prefix}1,...,{prefix}d`.
pub fn write_path_csv<W: Write>(w: W, prefix: &str, d: usize, path: &[Vec<f64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((1..=d).map(|k| format!("{prefix}{k}")))?;
    for (n, row) in path.iter().enumerate() {
        if row.len() != d {
            return Err(Error::InvalidArgument(format!(
                "row {n} has {} columns, expected {d}",
                row.len()
            )));
        }
        wtr.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a path CSV with a header row. Returns the column count and rows.
pub fn read_path_csv<R: Read>(r: R) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let d = rdr.headers()?.len();
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, field)| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("row {n}, column {k}: cannot parse {field:?}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((d, rows))
}

pub fn read_path_file(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    read_path_csv(File::open(path)?)
}

/// Writes draw records as `n,k,u`.
pub fn write_draw_log_csv<W: Write>(w: W, log: &[DrawRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["n", "k", "u"])?;
    for d in log {
        wtr.write_record([d.step.to_string(), d.coord.to_string(), fmt_f64(d.u)])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_path_is_header_only() {
        let mut buf = Vec::new();
        write_path_csv(&mut buf, "x", 2, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2\n");
    }

    #[test]
    fn parse_errors_name_the_row() {
        let text = "x1\n1.0\nabc\n";
        let err = read_path_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    proptest! {
        #[test]
        fn floats_survive_roundtrip(rows in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 3), 0..20)) {
            let mut buf = Vec::new();
            write_path_csv(&mut buf, "u", 3, &rows).unwrap();
            let (d, back) = read_path_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(d, 3);
            prop_assert_eq!(back, rows);
        }
    }
}
