//! Field dump formats.
//!
//! * CSV: header `x,re,im`, one row per node, 17 significant digits.
//! * Binary: magic `SPF1`, `u64` LE node count, `f64` LE half length, then
//!   `n` pairs of `f64` LE `(re, im)`.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{Grid1D, SpectralField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPF1";

pub fn write_csv<W: Write>(field: &SpectralField, mut out: W) -> Result<()> {
    writeln!(out, "x,re,im")?;
    for (x, v) in field.grid().nodes().iter().zip(field.values()) {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", x, v.re, v.im)?;
    }
    Ok(())
}

/// Read a CSV dump; the grid is recovered from the node column.
pub fn read_csv<R: BufRead>(input: R) -> Result<SpectralField> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
    if header.trim() != "x,re,im" {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!("row {}: expected 3 columns", i + 2)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", i + 2)))
        };
        xs.push(parse(cols[0])?);
        vals.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Format("CSV holds fewer than two rows".into()));
    }
    let half_length = -xs[0];
    let grid = Grid1D::new(n, half_length)?;
    let dx = grid.dx();
    if xs
        .iter()
        .zip(grid.nodes())
        .any(|(a, b)| (a - b).abs() > 1e-9 * dx.max(1.0))
    {
        return Err(Error::Format("node column is not a uniform grid on [-L, L)".into()));
    }
    SpectralField::new(&grid, vals)
}

pub fn write_binary<W: Write>(field: &SpectralField, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(field.grid().n() as u64).to_le_bytes())?;
    out.write_all(&field.grid().half_length().to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let half_length = f64::from_le_bytes(b8);
    let grid = Grid1D::new(n, half_length)?;
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        vals.push(Complex64::new(re, im));
    }
    SpectralField::new(&grid, vals)
}

/// Read either format, deciding by the leading bytes.
pub fn read_any(bytes: &[u8]) -> Result<SpectralField> {
    if bytes.starts_with(MAGIC) {
        read_binary(bytes)
    } else {
        read_csv(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, FieldKind};
    use proptest::prelude::*;

    #[test]
    fn csv_header_and_rows() {
        let g = Grid1D::new(16, 1.0).unwrap();
        let f = random_field(&g, 4, FieldKind::Complex, false, 0);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,re,im"));
        assert_eq!(lines.count(), 16);
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = b"SPF2\0\0\0\0\0\0\0\0".to_vec();
        assert!(matches!(read_binary(&bytes[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn both_formats_round_trip_exactly(seed in 0u64..1000, log_n in 4u32..8, l in 0.5f64..50.0) {
            let g = Grid1D::new(1 << log_n, l).unwrap();
            let f = random_field(&g, (1 << log_n) / 4, FieldKind::Complex, false, seed);
            let mut bin = Vec::new();
            write_binary(&f, &mut bin).unwrap();
            let back = read_any(&bin).unwrap();
            prop_assert_eq!(back.values(), f.values());
            let mut csv = Vec::new();
            write_csv(&f, &mut csv).unwrap();
            let back = read_any(&csv).unwrap();
            prop_assert_eq!(back.grid().n(), f.grid().n());
            prop_assert_eq!(back.values(), f.values());
        }
    }
}
