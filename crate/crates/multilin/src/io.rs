//! Binary field files, CSV emission and the flat `key = value` configuration format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};
use crate::sharpness::ExperimentRecord;

/// Magic bytes opening a field file.
pub const MAGIC: &[u8; 4] = b"MLF1";
/// Length of the field-file header in bytes.
pub const HEADER_LEN: usize = 32;

/// Sample precision of a field file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Complex64,
    Complex128,
}

impl Precision {
    fn width(self) -> u32 {
        match self {
            Precision::Complex64 => 8,
            Precision::Complex128 => 16,
        }
    }
}

/// Encodes a field as a 32-byte header followed by little-endian `(re, im)` pairs.
pub fn encode_field(f: &Field, precision: Precision) -> Result<Vec<u8>> {
    if f.has_carrier() {
        return Err(Error::Format("fields with a carrier cannot be serialized".into()));
    }
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + g.len() * precision.width() as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.dims() as u32).to_le_bytes());
    out.extend_from_slice(&(g.points() as u64).to_le_bytes());
    out.extend_from_slice(&g.box_length().to_le_bytes());
    out.extend_from_slice(&precision.width().to_le_bytes());
    let tag: u32 = match f.space() {
        Space::Physical => 0,
        Space::Spectral => 1,
    };
    out.extend_from_slice(&tag.to_le_bytes());
    for v in f.values() {
        match precision {
            Precision::Complex64 => {
                out.extend_from_slice(&(v.re as f32).to_le_bytes());
                out.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            Precision::Complex128 => {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn take<const K: usize>(bytes: &[u8], at: usize) -> [u8; K] {
    bytes[at..at + K].try_into().expect("slice length checked by caller")
}

/// Decodes the output of [`encode_field`].
pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing MLF1 header".into()));
    }
    let dims = u32::from_le_bytes(take(bytes, 4)) as usize;
    let points = u64::from_le_bytes(take(bytes, 8)) as usize;
    let box_length = f64::from_le_bytes(take(bytes, 16));
    let width = u32::from_le_bytes(take(bytes, 24));
    let space = match u32::from_le_bytes(take(bytes, 28)) {
        0 => Space::Physical,
        1 => Space::Spectral,
        t => return Err(Error::Format(format!("unknown space tag {t}"))),
    };
    let grid = Grid::new(dims, points, box_length)?;
    let body = &bytes[HEADER_LEN..];
    if width != 8 && width != 16 {
        return Err(Error::Format(format!("unsupported sample width {width}")));
    }
    let w = width as usize;
    if body.len() != grid.len() * w {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", grid.len() * w, body.len())));
    }
    let values = body
        .chunks_exact(w)
        .map(|c| {
            if w == 8 {
                Complex64::new(f32::from_le_bytes(take(c, 0)) as f64, f32::from_le_bytes(take(c, 4)) as f64)
            } else {
                Complex64::new(f64::from_le_bytes(take(c, 0)), f64::from_le_bytes(take(c, 8)))
            }
        })
        .collect();
    Field::from_values(grid, space, values)
}

pub fn write_field(path: &Path, f: &Field, precision: Precision) -> Result<()> {
    Ok(std::fs::write(path, encode_field(f, precision)?)?)
}

pub fn read_field(path: &Path) -> Result<Field> {
    decode_field(&std::fs::read(path)?)
}

/// CSV export of a field: one row per sample with index coordinates, `re` and `im`.
pub fn field_csv(f: &Field) -> String {
    let g = f.grid();
    let d = g.dims();
    let mut s = String::new();
    let cols: Vec<String> = (0..d).map(|k| format!("i{k}")).collect();
    let _ = writeln!(s, "{},re,im", cols.join(","));
    let mut idx = vec![0usize; d];
    for (k, v) in f.values().iter().enumerate() {
        g.unflatten(k, &mut idx);
        let coords: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{},{:.17e},{:.17e}", coords.join(","), v.re, v.im);
    }
    s
}

/// Formats a float for CSV output; infinities print as `inf`.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.12e}")
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";")
}

/// Column names of the sweep CSV.
pub const RECORD_HEADER: &str =
    "run_id,construction,N_or_L,eps,r,delta_or_tau,s_vec,p_vec,L_functional,hardy_norms,output_lp,ratio,wall_ms";

/// One CSV row for a sweep record.
pub fn record_row(r: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.run_id,
        r.construction.tag(),
        fmt_num(r.n_or_l),
        r.eps.map(fmt_num).unwrap_or_default(),
        fmt_num(r.r),
        join(&r.delta_or_tau),
        join(&r.s),
        join(&r.p),
        fmt_num(r.l_functional),
        join(&r.hardy_norms),
        fmt_num(r.output_lp),
        fmt_num(r.ratio),
        r.wall_ms
    )
}

/// Trailing metadata comment line.
pub fn metadata_line(seed: u64, grid: &str) -> String {
    format!("#version={} #seed={seed} #grid={grid}", env!("CARGO_PKG_VERSION"))
}

/// Full sweep CSV: header, rows, summary comment lines, then the metadata line.
pub fn records_csv(records: &[ExperimentRecord], summary: &[String], seed: u64, grid: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{RECORD_HEADER}");
    for r in records {
        let _ = writeln!(s, "{}", record_row(r));
    }
    for line in summary {
        let _ = writeln!(s, "#summary {line}");
    }
    let _ = writeln!(s, "{}", metadata_line(seed, grid));
    s
}

fn growth_summary(records: &[ExperimentRecord]) -> String {
    let first = records.iter().map(|r| r.n_or_l).fold(f64::INFINITY, f64::min);
    let last = records.iter().map(|r| r.n_or_l).fold(f64::NEG_INFINITY, f64::max);
    let ratio_at = |x: f64| records.iter().find(|r| r.n_or_l == x).map(|r| r.ratio).unwrap_or(f64::NAN);
    format!("ratio_growth={}", fmt_num(ratio_at(last) / ratio_at(first)))
}

/// Sweep CSV with the summary lines derived from the records: the ratio growth from the
/// smallest to the largest `N_or_L` and, for `ce1`, the driver `I(N)` at each radius.
pub fn sweep_csv(records: &[ExperimentRecord], seed: u64, grid: &str) -> String {
    let mut summary = Vec::new();
    if !records.is_empty() {
        let mut drivers: Vec<(f64, f64)> = records.iter().filter_map(|r| r.driver.map(|d| (r.n_or_l, d))).collect();
        drivers.dedup_by(|a, b| a.0 == b.0);
        if !drivers.is_empty() {
            let list: Vec<String> = drivers.iter().map(|(n, i)| format!("{}:{}", fmt_num(*n), fmt_num(*i))).collect();
            summary.push(format!("driver_I={}", list.join(";")));
        }
        summary.push(growth_summary(records));
    }
    records_csv(records, &summary, seed, grid)
}

/// A parsed CSV table: header names and string cells, comment lines skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<String> = match lines.next() {
            Some(h) => h.split(',').map(|c| c.trim().to_string()).collect(),
            None => return Err(Error::Format("empty CSV".into())),
        };
        let mut rows = Vec::new();
        for (k, l) in lines.enumerate() {
            let row: Vec<String> = l.split(',').map(|c| c.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Format(format!("row {} has {} cells, header has {}", k + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column {name}")))
    }
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key = value", k + 1)))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::Format(format!("line {}: empty key", k + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Format(format!("line {}: duplicate key {key}", k + 1)));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    fn field() -> Field {
        let g = Grid::new(2, 8, 4.0).unwrap();
        sample(g, |x| Complex64::new(x[0] - 0.3 * x[1], x[0] * x[1])).unwrap()
    }

    #[test]
    fn roundtrip_complex128_is_exact() {
        let f = field();
        let bytes = encode_field(&f, Precision::Complex128).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 16);
        assert_eq!(&bytes[..4], b"MLF1");
        assert_eq!(decode_field(&bytes).unwrap(), f);
    }

    #[test]
    fn roundtrip_complex64_rounds() {
        let f = field();
        let g = decode_field(&encode_field(&f, Precision::Complex64).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode_field(&field(), Precision::Complex128).unwrap();
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_field(b"NOPE").is_err());
    }

    #[test]
    fn carrier_fields_are_rejected() {
        let f = field().with_carrier(&[1.0, 0.0]).unwrap();
        assert!(encode_field(&f, Precision::Complex128).is_err());
    }

    #[test]
    fn field_csv_has_one_row_per_sample() {
        let csv = field_csv(&field());
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.starts_with("i0,i1,re,im\n"));
    }

    #[test]
    fn config_rejects_malformed_lines() {
        let m = parse_config("a = 1\n# note\nb=2 # trailing\n").unwrap();
        assert_eq!(m["a"], "1");
        assert_eq!(m["b"], "2");
        assert!(parse_config("a 1").is_err());
        assert!(parse_config("a=1\na=2").is_err());
    }

    #[test]
    fn table_checks_widths() {
        let t = Table::parse("x,y\n1,2\n#c\n3,4\n").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.column("y").unwrap(), 1);
        assert!(t.column("z").is_err());
        assert!(Table::parse("x,y\n1\n").is_err());
        assert!(Table::parse("").is_err());
    }

    #[test]
    fn infinity_prints_as_inf() {
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(0.5), "5.000000000000e-1");
    }
}
