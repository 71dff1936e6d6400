//! File formats: grid fields as flat little-endian f64 arrays with a shape
//! header, and sampled norm fields as columnar CSV.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{KummerError, Result};
use crate::grid::GridField;

const MAGIC: &[u8; 4] = b"GRD4";
const VERSION: u32 = 1;

/// Write a grid field: magic, version, N, components, then N^4 x comps f64
/// little-endian values in site-major order.
pub fn write_grid_field(path: &Path, field: &GridField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&(field.n as u32).to_le_bytes())?;
    f.write_all(&(field.comps as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.data.len() * 8);
    for v in &field.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_grid_field(path: &Path) -> Result<GridField> {
    let mut f = std::fs::File::open(path)?;
    let mut head = [0u8; 16];
    f.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(KummerError::config("not a grid field file (bad magic)"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(KummerError::config(format!("unsupported grid field version {version}")));
    }
    let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let comps = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
    let count = n * n * n * n * comps;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.len() != count * 8 {
        return Err(KummerError::config(format!(
            "grid field payload has {} bytes, expected {}",
            buf.len(),
            count * 8
        )));
    }
    let mut data = Vec::with_capacity(count);
    for chunk in buf.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok(GridField { n, comps, data })
}

/// One row of a columnar sampled-field file: point coordinates, weight, then
/// the value columns (tensor coefficients and derivative coefficients,
/// flattened in jet order).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub point: [f64; 4],
    pub weight: f64,
    pub values: Vec<f64>,
}

pub fn write_sample_rows(path: &Path, rows: &[SampleRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(KummerError::config("no sample rows to write"));
    }
    let mut w = csv::Writer::from_path(path)?;
    let ncols = rows[0].values.len();
    let mut header = vec!["x1".to_string(), "x2".into(), "x3".into(), "x4".into(), "weight".into()];
    for i in 0..ncols {
        header.push(format!("v{i}"));
    }
    w.write_record(&header)?;
    for r in rows {
        if r.values.len() != ncols {
            return Err(KummerError::config("ragged sample rows"));
        }
        let mut rec: Vec<String> = r.point.iter().map(|v| format!("{v:.17e}")).collect();
        rec.push(format!("{:.17e}", r.weight));
        for v in &r.values {
            rec.push(format!("{v:.17e}"));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample_rows(path: &Path) -> Result<Vec<SampleRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 5 {
            return Err(KummerError::config("sample row needs at least 5 columns"));
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| KummerError::config(format!("bad float in column {i}: {e}")))
        };
        let point = [parse(0)?, parse(1)?, parse(2)?, parse(3)?];
        let weight = parse(4)?;
        let mut values = Vec::new();
        for i in 5..rec.len() {
            values.push(parse(i)?);
        }
        out.push(SampleRow { point, weight, values });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.grd");
        let mut f = GridField::zeros(8, 3);
        f.fill_with(|x| vec![x[0] + 2.0 * x[1], x[2] * x[3], -1.5]);
        write_grid_field(&path, &f).unwrap();
        let back = read_grid_field(&path).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn corrupt_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.grd");
        std::fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(read_grid_field(&path).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sample_rows_round_trip(rows in proptest::collection::vec(
            (proptest::array::uniform4(-10.0f64..10.0), 0.001f64..1.0,
             proptest::collection::vec(-100.0f64..100.0, 1..6)),
            1..8,
        )) {
            let rows: Vec<SampleRow> = {
                let ncols = rows[0].2.len();
                rows.into_iter()
                    .map(|(point, weight, mut values)| {
                        values.resize(ncols, 0.0);
                        SampleRow { point, weight, values }
                    })
                    .collect()
            };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("samples.csv");
            write_sample_rows(&path, &rows).unwrap();
            let back = read_sample_rows(&path).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(rows.iter()) {
                for (x, y) in a.point.iter().zip(b.point.iter()) {
                    prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
                }
                prop_assert!((a.weight - b.weight).abs() < 1e-12);
                prop_assert_eq!(a.values.len(), b.values.len());
                for (x, y) in a.values.iter().zip(b.values.iter()) {
                    prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
                }
            }
        }
    }
}
