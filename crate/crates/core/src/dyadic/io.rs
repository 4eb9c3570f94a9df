//! NDJSON field format: a header line {format, version, d, k_min, k_max, n}, then one record per cell.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::OperatorField;
use super::grid::DyadicGrid;
use crate::algebra::{matrix_literal, CMatrix};
use crate::error::{io_err, NcczError, Result};

pub const FIELD_FORMAT: &str = "nccz-field";
pub const FIELD_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct FieldHeader {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_version")]
    pub version: u32,
    pub d: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub n: usize,
}

fn default_format() -> String {
    FIELD_FORMAT.to_string()
}

fn default_version() -> u32 {
    FIELD_VERSION
}

#[derive(Debug, Serialize, Deserialize)]
struct CellRecord {
    cell: usize,
    #[serde(with = "matrix_literal")]
    value: CMatrix,
}

pub fn write_field<W: Write>(f: &OperatorField, mut w: W) -> Result<()> {
    let g = f.grid();
    let header = FieldHeader {
        format: FIELD_FORMAT.into(),
        version: FIELD_VERSION,
        d: g.d,
        k_min: g.k_min,
        k_max: g.k_max,
        n: f.dim(),
    };
    let map = |e: std::io::Error| NcczError::Io { context: "<field stream>".into(), source: e };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(map)?;
    for (cell, v) in f.values().iter().enumerate() {
        let rec = CellRecord { cell, value: v.clone() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(map)?;
    }
    w.flush().map_err(map)
}

pub fn read_field<R: Read>(r: R) -> Result<OperatorField> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let map = |e: std::io::Error| NcczError::Io { context: "<field stream>".into(), source: e };
    let (_, first) = lines.next().ok_or_else(|| NcczError::Parse("empty field stream".into()))?;
    let header: FieldHeader = serde_json::from_str(&first.map_err(map)?)?;
    if header.format != FIELD_FORMAT {
        return Err(NcczError::Parse(format!("unknown field format '{}'", header.format)));
    }
    if header.version != FIELD_VERSION {
        return Err(NcczError::Parse(format!("unsupported field version {}", header.version)));
    }
    let grid = DyadicGrid::new(header.d, header.k_min, header.k_max)?;
    let mut values: Vec<Option<CMatrix>> = vec![None; grid.cell_count()];
    for (lineno, line) in lines {
        let rec: CellRecord = serde_json::from_str(&line.map_err(map)?)
            .map_err(|e| NcczError::Parse(format!("line {}: {e}", lineno + 1)))?;
        if rec.cell >= values.len() {
            return Err(NcczError::Parse(format!("line {}: cell {} out of range", lineno + 1, rec.cell)));
        }
        if rec.value.dim() != header.n {
            return Err(NcczError::Parse(format!("line {}: matrix of dim {} in an n={} field", lineno + 1, rec.value.dim(), header.n)));
        }
        values[rec.cell] = Some(rec.value);
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(NcczError::Parse(format!("{missing} cells missing from field stream")));
    }
    OperatorField::new(grid, header.n, values.into_iter().map(Option::unwrap).collect())
}

pub fn save_field(f: &OperatorField, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_field(f, BufWriter::new(file))
}

pub fn load_field(path: &Path) -> Result<OperatorField> {
    let file = File::open(path).map_err(io_err(path))?;
    read_field(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::C64;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = DyadicGrid::new(2, -1, 2).unwrap();
        let f = OperatorField::from_fn(g, 2, |x| {
            CMatrix::from_vec(2, vec![
                C64::new(x[0].sin(), 0.0),
                C64::new(0.1 * x[1], 1.0 / 3.0),
                C64::new(0.1 * x[1], -1.0 / 3.0),
                C64::new(std::f64::consts::PI * x[0] * x[1], 0.0),
            ])
        });
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_bad_streams() {
        assert!(read_field(&b""[..]).is_err());
        let hdr = br#"{"d":1,"k_min":0,"k_max":1,"n":1}
{"cell":0,"value":[[[1.0,0.0]]]}
"#;
        assert!(read_field(&hdr[..]).is_err());
    }
}
