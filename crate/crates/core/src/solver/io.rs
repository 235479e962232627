//! Field and forcing serialization.
//!
//! Field CSV: header `m,n,x0,...,xd`, rows in row-major `(m, n)` order.
//! Field binary: magic `CWAV1`, little-endian `u32` `(d, M, N)`, then
//! `(M+1)(N+1)(d+1)` little-endian `f64` values in row-major order.
//! Forcing CSV: header `m,n,x0,...,xd` over `0 ≤ m < M`, `0 ≤ n < N`.

use std::io::{BufRead, Read, Write};

use super::{DiscreteField, ForcingGrid};
use crate::error::{Error, Result};
use crate::sampling::IMPORT_NORM_TOL;

pub const FIELD_MAGIC: &[u8; 5] = b"CWAV1";

fn write_header<W: Write>(w: &mut W, width: usize) -> Result<()> {
    write!(w, "m,n")?;
    for c in 0..width {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, i: usize, j: usize, x: &[f64]) -> Result<()> {
    write!(w, "{i},{j}")?;
    for c in x {
        write!(w, ",{c:?}")?;
    }
    writeln!(w)?;
    Ok(())
}

pub fn write_field_csv<W: Write>(field: &DiscreteField, mut w: W) -> Result<()> {
    write_header(&mut w, field.width())?;
    for i in 0..=field.m() {
        for j in 0..=field.n() {
            write_row(&mut w, i, j, field.get(i, j))?;
        }
    }
    Ok(())
}

pub fn write_field_binary<W: Write>(field: &DiscreteField, mut w: W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    for v in [field.dim(), field.m(), field.n()] {
        let v = u32::try_from(v).map_err(|_| Error::invalid("field too large for the binary format"))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for x in field.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn check_norms(field: &DiscreteField) -> Result<()> {
    let drift = field.max_norm_drift();
    if !(drift <= IMPORT_NORM_TOL) {
        return Err(Error::Validation(format!(
            "field norm deviates from 1 by {drift:e} (tolerance {IMPORT_NORM_TOL:e})"
        )));
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<DiscreteField> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated field header".into()))?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Format("not a CWAV1 field file".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| Error::Format("truncated field header".into()))?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let [d, m, n] = dims;
    let count = (m + 1)
        .checked_mul(n + 1)
        .and_then(|c| c.checked_mul(d + 1))
        .ok_or_else(|| Error::Format("field dimensions overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes of values, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let field = DiscreteField::from_parts(m, n, d + 1, data)?;
    check_norms(&field)?;
    Ok(field)
}

/// Column count and rows of an `m,n,x0,...` table.
fn read_table<R: BufRead>(r: R, what: &str) -> Result<(usize, Vec<(usize, usize, Vec<f64>)>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("empty {what} file")))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4 || cols[0] != "m" || cols[1] != "n" {
        return Err(Error::Format(format!("unexpected {what} header `{header}`")));
    }
    let width = cols.len() - 2;
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let no = k + 2;
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != width + 2 {
            return Err(Error::Format(format!("line {no}: expected {} columns", width + 2)));
        }
        let idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("line {no}: {e}")))
        };
        let x = f[2..]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {no}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((idx(f[0])?, idx(f[1])?, x));
    }
    Ok((width, rows))
}

/// Places every row of a complete `rows × cols` table; `None` if empty.
fn assemble(
    rows: Vec<(usize, usize, Vec<f64>)>,
    width: usize,
    what: &str,
) -> Result<Option<(usize, usize, Vec<f64>)>> {
    if rows.is_empty() {
        return Ok(None);
    }
    let r = rows.iter().map(|x| x.0).max().unwrap_or(0) + 1;
    let c = rows.iter().map(|x| x.1).max().unwrap_or(0) + 1;
    if rows.len() != r * c {
        return Err(Error::Format(format!(
            "{what} has {} rows, expected a complete {r}x{c} grid",
            rows.len()
        )));
    }
    let mut data = vec![f64::NAN; r * c * width];
    let mut seen = vec![false; r * c];
    for (i, j, x) in rows {
        let k = i * c + j;
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Format(format!("{what} lists ({i}, {j}) twice")));
        }
        data[k * width..(k + 1) * width].copy_from_slice(&x);
    }
    Ok(Some((r, c, data)))
}

pub fn read_field_csv<R: BufRead>(r: R) -> Result<DiscreteField> {
    let (width, rows) = read_table(r, "field")?;
    let (r, c, data) =
        assemble(rows, width, "field")?.ok_or_else(|| Error::Format("field file has no rows".into()))?;
    let field = DiscreteField::from_parts(r - 1, c - 1, width, data)?;
    check_norms(&field)?;
    Ok(field)
}

pub fn write_forcing_csv<W: Write>(forcing: &ForcingGrid, mut w: W) -> Result<()> {
    write_header(&mut w, forcing.dim() + 1)?;
    for i in 0..forcing.m() {
        for j in 0..forcing.n() {
            write_row(&mut w, i, j, forcing.get(i, j))?;
        }
    }
    Ok(())
}

/// Reads a forcing table. The grid size is taken from the largest indices;
/// every cell must be listed.
pub fn read_forcing_csv<R: BufRead>(r: R) -> Result<ForcingGrid> {
    let (width, rows) = read_table(r, "forcing")?;
    let Some((m, n, data)) = assemble(rows, width, "forcing")? else {
        return Err(Error::Format("forcing file has no rows".into()));
    };
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("forcing has non-finite entries".into()));
    }
    Ok(ForcingGrid { m, n, width, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_brownian_boundary, RngStream};
    use crate::solver::solve;

    fn field() -> DiscreteField {
        let mut rng = RngStream::new(12, 1);
        let b = sample_brownian_boundary(3, 0, 2, &mut rng).unwrap();
        solve(&b, None, false).unwrap()
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let f = field();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        assert!(buf.starts_with(b"m,n,x0,x1,x2\n0,0,"));
        let g = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let f = field();
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        assert_eq!(&buf[..5], FIELD_MAGIC);
        assert_eq!(buf.len(), 5 + 12 + 9 * 9 * 3 * 8);
        let g = read_field_binary(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn off_sphere_import_is_rejected() {
        let text = "m,n,x0,x1\n0,0,1.0,0.0\n0,1,1.1,0.0\n";
        assert!(matches!(read_field_csv(text.as_bytes()), Err(Error::Validation(_))));
        let mut buf = Vec::new();
        let f = DiscreteField::from_parts(0, 0, 2, vec![0.5, 0.0]).unwrap();
        write_field_binary(&f, &mut buf).unwrap();
        assert!(matches!(read_field_binary(buf.as_slice()), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_field_binary(&b"CWAV2"[..]), Err(Error::Format(_))));
        assert!(matches!(
            read_field_csv("m,n,x0,x1\n0,0,1.0,0.0\n1,1,1.0,0.0\n".as_bytes()),
            Err(Error::Format(_))
        ));
        assert!(matches!(read_forcing_csv("a,b\n".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn forcing_round_trip() {
        let f = ForcingGrid::from_fn(3, 2, 1, |i, j| vec![i as f64 * 0.1, -(j as f64) / 3.0]).unwrap();
        let mut buf = Vec::new();
        write_forcing_csv(&f, &mut buf).unwrap();
        assert_eq!(read_forcing_csv(buf.as_slice()).unwrap(), f);
    }
}
