//! Field snapshot files: a flat little-endian `f64` array behind a
//! one-line text header, plus a CSV alternative with cell-center
//! coordinates. Both formats round-trip through the readers below.
//!
//! Binary layout:
//!
//! ```text
//! nlch-snapshot dim=2 cells=8x8 time=0.25\n
//! <n_cells f64 values, little endian>
//! ```
//!
//! CSV layout: the same header as a `#` comment, a column header, one
//! row per cell.

use crate::domain::{Domain, Field};
use crate::error::{Error, Result};
use crate::scalar::Real;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &str = "nlch-snapshot";

fn header<S: Real>(field: &Field<S>, time: S) -> String {
    let dom = field.domain();
    let cells: Vec<String> = (0..dom.dim()).map(|a| dom.cells(a).to_string()).collect();
    format!(
        "{MAGIC} dim={} cells={} time={}\n",
        dom.dim(),
        cells.join("x"),
        time.as_f64()
    )
}

/// Parsed header: dimensions, cells per axis, snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub time: f64,
}

fn parse_header(line: &str) -> Result<SnapshotMeta> {
    let bad = |msg: &str| Error::SnapshotFormat(format!("{msg}: {line:?}"));
    let mut parts = line.trim_end().split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(bad("missing magic"));
    }
    let mut dim = None;
    let mut cells = None;
    let mut time = None;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad("malformed key=value"))?;
        match key {
            "dim" => dim = Some(value.parse().map_err(|_| bad("bad dim"))?),
            "cells" => {
                cells = Some(
                    value
                        .split('x')
                        .map(|c| c.parse().map_err(|_| bad("bad cells")))
                        .collect::<Result<Vec<usize>>>()?,
                )
            }
            "time" => time = Some(value.parse().map_err(|_| bad("bad time"))?),
            _ => return Err(bad("unknown header key")),
        }
    }
    match (dim, cells, time) {
        (Some(dim), Some(cells), Some(time)) if cells.len() == dim => {
            Ok(SnapshotMeta { dim, cells, time })
        }
        _ => Err(bad("incomplete header")),
    }
}

pub fn write_field_binary<S: Real>(path: &Path, field: &Field<S>, time: S) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(header(field, time).as_bytes())?;
    for &v in field.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a binary snapshot back; the grid's time parameters are not part
/// of the file, so the caller supplies placeholders for them.
pub fn read_field_binary<S: Real>(path: &Path) -> Result<(SnapshotMeta, Vec<f64>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let meta = parse_header(&line)?;
    let n: usize = meta.cells.iter().product();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(Error::SnapshotFormat(format!(
            "expected {} payload bytes, found {}",
            n * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((meta, values))
}

pub fn write_field_csv<S: Real>(path: &Path, field: &Field<S>, time: S) -> Result<()> {
    let dom = field.domain();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "# {}", header(field, time))?;
    let coords: Vec<String> = (0..dom.dim()).map(|a| format!("x{a}")).collect();
    writeln!(w, "{},value", coords.join(","))?;
    for i in 0..dom.n_cells() {
        let x = dom.cell_center(i);
        for a in 0..dom.dim() {
            write!(w, "{},", x[a].as_f64())?;
        }
        writeln!(w, "{}", field.values()[i].as_f64())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<(SnapshotMeta, Vec<f64>)> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::SnapshotFormat("empty file".into()))??;
    let meta = parse_header(
        first
            .strip_prefix("# ")
            .ok_or_else(|| Error::SnapshotFormat("missing header comment".into()))?,
    )?;
    let n: usize = meta.cells.iter().product();
    // skip the column header
    lines
        .next()
        .ok_or_else(|| Error::SnapshotFormat("missing column header".into()))??;
    let mut values = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let last = line
            .rsplit(',')
            .next()
            .ok_or_else(|| Error::SnapshotFormat("row without value".into()))?;
        values.push(
            last.parse::<f64>()
                .map_err(|_| Error::SnapshotFormat(format!("bad value {last:?}")))?,
        );
    }
    if values.len() != n {
        return Err(Error::SnapshotFormat(format!(
            "expected {n} rows, found {}",
            values.len()
        )));
    }
    Ok((meta, values))
}

/// Rebuild a field from parsed snapshot data on a freshly constructed
/// domain (time grid supplied by the caller).
pub fn field_from_values<S: Real>(
    meta: &SnapshotMeta,
    values: &[f64],
    extent: &[S],
    final_time: S,
    num_steps: usize,
) -> Result<(Arc<Domain<S>>, Field<S>)> {
    let domain = Domain::new(meta.dim, &meta.cells, extent, final_time, num_steps)?;
    let field = Field::new(domain.clone(), values.iter().map(|&v| S::of(v)).collect())?;
    Ok((domain, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(values: Vec<f64>, binary: bool) -> Vec<f64> {
        let d = Domain::new(1, &[values.len()], &[1.0], 1.0, 2).unwrap();
        let f = Field::new(d, values).unwrap();
        let dir =
            std::env::temp_dir().join(format!("nlch-snap-test-{}-{}", std::process::id(), binary));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        let (meta, got) = if binary {
            write_field_binary(&path, &f, 0.25).unwrap();
            read_field_binary::<f64>(&path).unwrap()
        } else {
            write_field_csv(&path, &f, 0.25).unwrap();
            read_field_csv(&path).unwrap()
        };
        assert_eq!(meta.dim, 1);
        assert_eq!(meta.time, 0.25);
        std::fs::remove_dir_all(&dir).ok();
        got
    }

    #[test]
    fn header_round_trip() {
        let d = Domain::<f64>::new(2, &[8, 4], &[1.0, 2.0], 1.0, 3).unwrap();
        let f = Field::constant(d, 1.0);
        let h = header(&f, 0.5);
        let meta = parse_header(&h).unwrap();
        assert_eq!(meta.dim, 2);
        assert_eq!(meta.cells, vec![8, 4]);
        assert_eq!(meta.time, 0.5);
    }

    #[test]
    fn malformed_headers_rejected() {
        assert!(parse_header("bogus dim=1 cells=4 time=0").is_err());
        assert!(parse_header("nlch-snapshot dim=2 cells=4 time=0").is_err());
        assert!(parse_header("nlch-snapshot dim=1 cells=4").is_err());
        assert!(parse_header("nlch-snapshot dim=1 cells=4 time=0 junk").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip_exact(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let got = roundtrip(values.clone(), true);
            prop_assert_eq!(got, values);
        }

        #[test]
        fn csv_round_trip_exact(values in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            // shortest round-trip float formatting parses back bit-exactly
            let got = roundtrip(values.clone(), false);
            prop_assert_eq!(got, values);
        }
    }
}
