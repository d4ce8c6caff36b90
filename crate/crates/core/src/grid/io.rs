//! Signal files.
//!
//! CSV: one sample per row, `x,re,im` in one dimension and `x,y,re,im` in
//! two (row-major, first coordinate slowest). A header row is optional. The
//! grid is recovered from the row count and the sample spacing, and the first
//! sample must sit at `-L/2`.
//!
//! AMOD1 binary: the 5-byte magic `AMOD1`, then `dim: u32`, `N: u32`,
//! `L: f64`, followed by `N^dim` pairs `(re: f64, im: f64)`, all
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Grid, GridSignal};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"AMOD1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Amod,
}

impl SignalFormat {
    /// Chooses by extension: `.csv` is CSV, anything else is AMOD1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SignalFormat::Csv,
            _ => SignalFormat::Amod,
        }
    }
}

pub fn read_signal(path: &Path) -> Result<GridSignal> {
    match SignalFormat::from_path(path) {
        SignalFormat::Csv => read_csv(File::open(path)?),
        SignalFormat::Amod => read_amod(BufReader::new(File::open(path)?)),
    }
}

pub fn write_signal(path: &Path, f: &GridSignal) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match SignalFormat::from_path(path) {
        SignalFormat::Csv => write_csv(file, f),
        SignalFormat::Amod => write_amod(file, f),
    }
}

pub fn write_amod<W: Write>(mut w: W, f: &GridSignal) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.length().to_le_bytes())?;
    for z in f.samples() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_amod<R: Read>(mut r: R) -> Result<GridSignal> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("missing AMOD1 magic".into()));
    }
    let mut u = [0u8; 4];
    r.read_exact(&mut u)?;
    let dim = u32::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let n = u32::from_le_bytes(u) as usize;
    let mut d = [0u8; 8];
    r.read_exact(&mut d)?;
    let length = f64::from_le_bytes(d);
    let grid = Grid::new(dim, n, length)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut pair = [0u8; 16];
    for _ in 0..grid.len() {
        r.read_exact(&mut pair)?;
        let re = f64::from_le_bytes(pair[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(pair[8..].try_into().expect("8 bytes"));
        samples.push(Complex64::new(re, im));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Parse("trailing bytes after AMOD1 payload".into()));
    }
    GridSignal::new(grid, samples)
}

pub fn write_csv<W: Write>(w: W, f: &GridSignal) -> Result<()> {
    let g = f.grid();
    let mut out = csv::Writer::from_writer(w);
    if g.dim() == 1 {
        out.write_record(["x", "re", "im"])?;
    } else {
        out.write_record(["x", "y", "re", "im"])?;
    }
    for (i, z) in f.samples().iter().enumerate() {
        let p = g.point(i);
        if g.dim() == 1 {
            out.serialize((p[0], z.re, z.im))?;
        } else {
            out.serialize((p[0], p[1], z.re, z.im))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<GridSignal> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", line + 1))),
        }
    }
    let width = rows.first().map(Vec::len).unwrap_or(0);
    let dim = match width {
        3 => 1,
        4 => 2,
        _ => return Err(Error::Parse(format!("expected 3 or 4 columns, found {width}"))),
    };
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("ragged rows".into()));
    }
    let total = rows.len();
    let n = if dim == 1 {
        total
    } else {
        let n = (total as f64).sqrt().round() as usize;
        if n * n != total {
            return Err(Error::Parse(format!("{total} rows do not form a square grid")));
        }
        n
    };
    if n < 2 {
        return Err(Error::Parse("need at least two samples per axis".into()));
    }
    let step_row = if dim == 1 { 1 } else { n };
    let dx = rows[step_row][0] - rows[0][0];
    let grid = Grid::new(dim, n, dx * n as f64)?;
    let tol = 1e-9 * grid.length();
    for (i, row) in rows.iter().enumerate() {
        let p = grid.point(i);
        if (row[0] - p[0]).abs() > tol || (dim == 2 && (row[1] - p[1]).abs() > tol) {
            return Err(Error::GridMismatch(format!(
                "row {} is not on the centered grid (expected x = {:?})",
                i + 1,
                &p[..dim]
            )));
        }
    }
    let samples = rows
        .iter()
        .map(|r| Complex64::new(r[width - 2], r[width - 1]))
        .collect();
    GridSignal::new(grid, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize) -> GridSignal {
        let g = Grid::new(dim, 8, 3.0).unwrap();
        GridSignal::from_fn(g, |x| Complex64::new(x[0].sin() + 0.1, x[1] - 0.25)).unwrap()
    }

    #[test]
    fn amod_round_trip_is_exact() {
        for dim in [1, 2] {
            let f = sample(dim);
            let mut buf = Vec::new();
            write_amod(&mut buf, &f).unwrap();
            assert_eq!(buf.len(), 5 + 4 + 4 + 8 + 16 * f.grid().len());
            assert_eq!(read_amod(&buf[..]).unwrap(), f);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        for dim in [1, 2] {
            let f = sample(dim);
            let mut buf = Vec::new();
            write_csv(&mut buf, &f).unwrap();
            assert_eq!(read_csv(&buf[..]).unwrap(), f);
        }
    }

    #[test]
    fn csv_without_header() {
        let text = "-1,1,0\n-0.5,2,0\n0,3,0\n0.5,4,0\n";
        let f = read_csv(text.as_bytes()).unwrap();
        assert_eq!(f.grid().n(), 4);
        assert!((f.grid().length() - 2.0).abs() < 1e-15);
        assert_eq!(f.samples()[2], Complex64::new(3.0, 0.0));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(read_amod(&b"AMOD2"[..]).is_err());
        assert!(read_csv("0,1,0\n1,1,0\n2,1,0\n".as_bytes()).is_err());
        assert!(read_csv("0,1,0\n0.5,1,0\n1,1,0\n1.5,1,0\n".as_bytes()).is_err());
    }
}
