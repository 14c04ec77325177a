//! `id,value` CSV tables keyed by external point ids.
//!
//! Reals are written with the shortest decimal that round-trips, so a
//! reload reproduces every value bit for bit.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::space::{PointId, Space};

fn reader<R: Read>(r: R, column: &str) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != column {
        return Err(Error::Input(format!(
            "expected CSV header \"id,{column}\", got \"{}\"",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr)
}

/// Rows `(point, value)` in file order; unknown or repeated ids are rejected.
pub fn read_point_rows<R: Read>(space: &Space, r: R, column: &str) -> Result<Vec<(PointId, f64)>> {
    let mut rdr = reader(r, column)?;
    let mut seen = vec![false; space.len()];
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let label: i64 = rec[0].parse().map_err(|_| Error::Input(format!("row {row}: invalid id {:?}", &rec[0])))?;
        let value: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Input(format!("row {row} (id {label}): invalid {column} {:?}", &rec[1])))?;
        let x = space.lookup(label).ok_or_else(|| Error::Input(format!("row {row}: unknown point id {label}")))?;
        if std::mem::replace(&mut seen[x], true) {
            return Err(Error::Input(format!("row {row}: duplicate point id {label}")));
        }
        out.push((x, value));
    }
    Ok(out)
}

/// One value per point of `space`, every point present exactly once.
pub fn read_point_values<R: Read>(space: &Space, r: R, column: &str) -> Result<Vec<f64>> {
    let rows = read_point_rows(space, r, column)?;
    let mut values = vec![f64::NAN; space.len()];
    let mut present = vec![false; space.len()];
    for (x, v) in rows {
        values[x] = v;
        present[x] = true;
    }
    if let Some(x) = present.iter().position(|p| !p) {
        return Err(Error::Input(format!("missing {column} for point id {}", space.label(x))));
    }
    Ok(values)
}

pub fn write_point_values<W: Write>(space: &Space, values: &[f64], w: W, column: &str) -> Result<()> {
    write_point_rows(space, values.iter().copied().enumerate(), w, column)
}

pub fn write_point_rows<W: Write>(
    space: &Space,
    rows: impl IntoIterator<Item = (PointId, f64)>,
    w: W,
    column: &str,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["id", column])?;
    for (x, v) in rows {
        wtr.write_record([space.label(x).to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::interval_grid;

    #[test]
    fn round_trip_is_bit_exact() {
        let s = interval_grid(9);
        let values: Vec<f64> = (0..9).map(|k| (k as f64 * 0.1).sin() / 3.0 + 1e-300).collect();
        let mut buf = Vec::new();
        write_point_values(&s, &values, &mut buf, "value").unwrap();
        let back = read_point_values(&s, buf.as_slice(), "value").unwrap();
        assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn diagnostics() {
        let s = interval_grid(3);
        let e = read_point_values(&s, "id,value\n0,1\n1,2\n".as_bytes(), "value").unwrap_err();
        assert!(e.to_string().contains("missing value for point id 2"));
        let e = read_point_values(&s, "id,value\n0,1\n0,2\n".as_bytes(), "value").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
        let e = read_point_values(&s, "id,rho\n".as_bytes(), "value").unwrap_err();
        assert!(e.to_string().contains("header"));
        let e = read_point_values(&s, "id,value\n9,1\n".as_bytes(), "value").unwrap_err();
        assert!(e.to_string().contains("unknown point id 9"));
    }
}
