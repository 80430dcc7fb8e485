//! On-disk formats: the `BFGRID01` binary grid format, CSV for clouds and
//! root sets, and 8-bit PGM quick looks.
//!
//! A grid file is a 32-byte header (`b"BFGRID01"`, `nx`, `ny`, kind, all
//! `u64` little-endian; kind 0 is a field, 1 a measure), the rectangle as four
//! `f64` (`re_min, re_max, im_min, im_max`), then `nx * ny` `f64` values in
//! row-major order with row 0 at `im_min`.
//!
//! CSV floats use the shortest representation that parses back to the same
//! bits, so a written cloud reads back exactly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::cloud::{PairCloud, PairPoint, PlaneCloud, Weighted};
use crate::grid::{GridField, GridMeasure, GridSpec, Rect};
use crate::measures::MeasureError;
use crate::roots::{LineParams, RootSet};
use crate::Complex;

pub const GRID_MAGIC: &[u8; 8] = b"BFGRID01";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a BFGRID01 file")]
    BadMagic,
    #[error("unknown grid kind {0}")]
    BadKind(u64),
    #[error(transparent)]
    Grid(#[from] MeasureError),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Field = 0,
    Measure = 1,
}

/// Contents of a grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub kind: GridKind,
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridFile {
    pub fn into_field(self) -> Result<GridField, IoError> {
        Ok(GridField::new(self.spec, self.values)?)
    }
}

pub fn write_grid<W: Write>(mut w: W, kind: GridKind, spec: &GridSpec, values: &[f64]) -> Result<(), IoError> {
    if values.len() != spec.len() {
        return Err(MeasureError::ShapeMismatch.into());
    }
    w.write_all(GRID_MAGIC)?;
    w.write_all(&(spec.nx as u64).to_le_bytes())?;
    w.write_all(&(spec.ny as u64).to_le_bytes())?;
    w.write_all(&(kind as u64).to_le_bytes())?;
    for x in [spec.rect.re_min, spec.rect.re_max, spec.rect.im_min, spec.rect.im_max] {
        w.write_all(&x.to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_file(path: &Path, field: &GridField) -> Result<(), IoError> {
    write_grid(BufWriter::new(File::create(path)?), GridKind::Field, &field.spec, &field.values)
}

pub fn write_measure_file(path: &Path, measure: &GridMeasure) -> Result<(), IoError> {
    write_grid(
        BufWriter::new(File::create(path)?),
        GridKind::Measure,
        &measure.spec,
        &measure.cell_mass,
    )
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_grid<R: Read>(mut r: R) -> Result<GridFile, IoError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(IoError::BadMagic);
    }
    let nx = read_u64(&mut r)? as usize;
    let ny = read_u64(&mut r)? as usize;
    let kind = match read_u64(&mut r)? {
        0 => GridKind::Field,
        1 => GridKind::Measure,
        k => return Err(IoError::BadKind(k)),
    };
    let mut rect = [0.0; 4];
    for x in rect.iter_mut() {
        *x = read_f64(&mut r)?;
    }
    let spec = GridSpec::new(Rect::new(rect[0], rect[1], rect[2], rect[3]), nx, ny)?;
    let len = nx.checked_mul(ny).ok_or(MeasureError::InvalidGrid { nx, ny })?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(MeasureError::ShapeMismatch.into());
    }
    let values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    Ok(GridFile { kind, spec, values })
}

pub fn read_grid_file(path: &Path) -> Result<GridFile, IoError> {
    read_grid(BufReader::new(File::open(path)?))
}

pub const PAIR_CLOUD_HEADER: &str = "c_re,c_im,z_re,z_im,j,weight";
pub const PLANE_CLOUD_HEADER: &str = "re,im,weight";
pub const ROOTS_HEADER: &str = "re,im,residual";

pub fn write_pair_cloud_csv<W: Write>(mut w: W, cloud: &PairCloud) -> io::Result<()> {
    writeln!(w, "{PAIR_CLOUD_HEADER}")?;
    for a in cloud.atoms() {
        let p = &a.point;
        writeln!(w, "{:?},{:?},{:?},{:?},{},{:?}", p.c.re, p.c.im, p.z.re, p.z.im, p.depth, a.weight)?;
    }
    w.flush()
}

pub fn write_plane_cloud_csv<W: Write>(mut w: W, cloud: &PlaneCloud) -> io::Result<()> {
    writeln!(w, "{PLANE_CLOUD_HEADER}")?;
    for a in cloud.atoms() {
        writeln!(w, "{:?},{:?},{:?}", a.point.re, a.point.im, a.weight)?;
    }
    w.flush()
}

pub fn write_roots_csv<W: Write>(mut w: W, set: &RootSet, line: &LineParams) -> io::Result<()> {
    writeln!(w, "{ROOTS_HEADER}")?;
    for (c, r) in set.roots.iter().zip(set.residuals(line)) {
        writeln!(w, "{:?},{:?},{:?}", c.re, c.im, r)?;
    }
    w.flush()
}

fn parse_rows<R: BufRead>(r: R, header: &str, width: usize) -> Result<Vec<Vec<String>>, IoError> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != header {
                return Err(IoError::Csv {
                    line: 1,
                    message: format!("expected header {header}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != width {
            return Err(IoError::Csv {
                line: i + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, IoError> {
    s.parse().map_err(|_| IoError::Csv {
        line,
        message: format!("cannot parse {s:?}"),
    })
}

/// Reads a cloud written by [`write_pair_cloud_csv`]; the result is marked certified.
pub fn read_pair_cloud_csv<R: BufRead>(r: R) -> Result<PairCloud, IoError> {
    let rows = parse_rows(r, PAIR_CLOUD_HEADER, 6)?;
    let mut atoms = Vec::with_capacity(rows.len());
    for (i, f) in rows.iter().enumerate() {
        let l = i + 2;
        atoms.push(Weighted {
            point: PairPoint {
                c: Complex::new(num(&f[0], l)?, num(&f[1], l)?),
                z: Complex::new(num(&f[2], l)?, num(&f[3], l)?),
                depth: num(&f[4], l)?,
            },
            weight: num(&f[5], l)?,
        });
    }
    PairCloud::new(atoms, true).map_err(|e| IoError::Csv {
        line: 0,
        message: e.to_string(),
    })
}

pub fn read_plane_cloud_csv<R: BufRead>(r: R) -> Result<PlaneCloud, IoError> {
    let rows = parse_rows(r, PLANE_CLOUD_HEADER, 3)?;
    let mut atoms = Vec::with_capacity(rows.len());
    for (i, f) in rows.iter().enumerate() {
        let l = i + 2;
        atoms.push(Weighted {
            point: Complex::new(num(&f[0], l)?, num(&f[1], l)?),
            weight: num(&f[2], l)?,
        });
    }
    PlaneCloud::new(atoms, true).map_err(|e| IoError::Csv {
        line: 0,
        message: e.to_string(),
    })
}

pub const DEFAULT_GAMMA: f64 = 0.5;

/// 8-bit binary PGM of a non-negative grid, top row at `im_max`.
///
/// Pixel value is `round(255 * t^gamma)` with
/// `t = ln(1 + 1000 v / v_max) / ln(1001)`; negative values map to 0. The
/// mapping is recorded in a header comment.
pub fn write_pgm<W: Write>(mut w: W, spec: &GridSpec, values: &[f64], gamma: f64) -> Result<(), IoError> {
    if values.len() != spec.len() {
        return Err(MeasureError::ShapeMismatch.into());
    }
    let vmax = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    write!(
        w,
        "P5\n# log-scaled: t = ln(1 + 1000 v / vmax) / ln(1001), pixel = 255 t^gamma, gamma = {gamma}, vmax = {vmax:e}\n{} {}\n255\n",
        spec.nx, spec.ny
    )?;
    let denom = 1001f64.ln();
    let mut row = vec![0u8; spec.nx];
    for iy in (0..spec.ny).rev() {
        for (ix, px) in row.iter_mut().enumerate() {
            let v = values[iy * spec.nx + ix];
            let t = if vmax > 0.0 && v > 0.0 {
                ((1.0 + 1000.0 * v / vmax).ln() / denom).min(1.0)
            } else {
                0.0
            };
            *px = (255.0 * t.powf(gamma)).round() as u8;
        }
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pgm_file(path: &Path, spec: &GridSpec, values: &[f64], gamma: f64) -> Result<(), IoError> {
    write_pgm(BufWriter::new(File::create(path)?), spec, values, gamma)
}
