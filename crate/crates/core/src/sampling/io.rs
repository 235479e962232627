//! Boundary CSV: header `side,index,x0,...,xd`; rows for `minus` with
//! descending index, then rows for `plus` with ascending index. Both sides
//! list their index 0 row, which must coincide.

use std::io::{BufRead, Write};

use super::BoundaryPair;
use crate::error::{Error, Result};
use crate::geometry::{norm, SpherePoint, UNIT_NORM_TOL};

/// Imported points may deviate from unit norm by at most this much.
pub const IMPORT_NORM_TOL: f64 = 1e-6;

pub fn write_boundary_csv<W: Write>(pair: &BoundaryPair, mut w: W) -> Result<()> {
    let len = pair.dim() + 1;
    write!(w, "side,index")?;
    for i in 0..len {
        write!(w, ",x{i}")?;
    }
    writeln!(w)?;
    for (i, p) in pair.y_minus().iter().enumerate().rev() {
        write_row(&mut w, "minus", i, p)?;
    }
    for (i, p) in pair.y_plus().iter().enumerate() {
        write_row(&mut w, "plus", i, p)?;
    }
    Ok(())
}

fn write_row<W: Write>(w: &mut W, side: &str, index: usize, p: &SpherePoint) -> Result<()> {
    write!(w, "{side},{index}")?;
    for c in p.coords() {
        write!(w, ",{c:?}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// Parses one coordinate row into a sphere point, renormalizing only when
/// the stored norm is off by more than rounding.
pub(crate) fn parse_point(fields: &[&str], line_no: usize) -> Result<SpherePoint> {
    let coords = fields
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("line {line_no}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = norm(&coords);
    if !n.is_finite() || (n - 1.0).abs() > IMPORT_NORM_TOL {
        return Err(Error::Validation(format!(
            "line {line_no}: norm {n} is not within {IMPORT_NORM_TOL:e} of 1"
        )));
    }
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        SpherePoint::normalized(coords)
    } else {
        SpherePoint::new(coords)
    }
}

pub fn read_boundary_csv<R: BufRead>(r: R) -> Result<BoundaryPair> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty boundary file".into()))?;
    let header = header?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4 || cols[0] != "side" || cols[1] != "index" {
        return Err(Error::Format(format!("unexpected boundary header `{header}`")));
    }
    let width = cols.len() - 2;
    let mut plus: Vec<(usize, SpherePoint)> = Vec::new();
    let mut minus: Vec<(usize, SpherePoint)> = Vec::new();
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != width + 2 {
            return Err(Error::Format(format!("line {}: expected {} columns", no + 1, width + 2)));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", no + 1)))?;
        let p = parse_point(&fields[2..], no + 1)?;
        match fields[0] {
            "plus" => plus.push((index, p)),
            "minus" => minus.push((index, p)),
            other => return Err(Error::Format(format!("line {}: unknown side `{other}`", no + 1))),
        }
    }
    let y_plus = ordered(plus, "plus")?;
    let mut y_minus = ordered(minus, "minus")?;
    if y_plus.is_empty() || y_minus.is_empty() {
        return Err(Error::Format("both boundary sides need an index 0 row".into()));
    }
    let gap = crate::geometry::chordal(y_plus[0].coords(), y_minus[0].coords());
    if gap > IMPORT_NORM_TOL {
        return Err(Error::Validation(format!("boundary origins differ by {gap:e}")));
    }
    y_minus[0] = y_plus[0].clone();
    BoundaryPair::new(y_plus, y_minus)
}

fn ordered(mut rows: Vec<(usize, SpherePoint)>, side: &str) -> Result<Vec<SpherePoint>> {
    rows.sort_by_key(|(i, _)| *i);
    for (expect, (i, _)) in rows.iter().enumerate() {
        if *i != expect {
            return Err(Error::Format(format!("{side} side is missing index {expect}")));
        }
    }
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}
