//! Binary field snapshots and trajectory checkpoints.
//!
//! Snapshot layout (little-endian):
//! magic `RQHD`, version u32, dim u32, points u32[dim], extent f64[dim],
//! kind u8 (0 real, 1 complex, 2 vector), then row-major f64 samples
//! (complex as re,im pairs; vector component-major).
//!
//! Trajectory checkpoints prepend an index header `{nsteps u64, dt f64}`
//! and concatenate one snapshot group per stored state.

use super::field::{ComplexField, RealField, VectorField};
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const MAGIC: &[u8; 4] = b"RQHD";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Real = 0,
    Complex = 1,
    Vector = 2,
}

#[derive(Clone, Debug)]
pub enum Snapshot {
    Real(RealField),
    Complex(ComplexField),
    Vector(VectorField),
}

impl Snapshot {
    pub fn kind(&self) -> FieldKind {
        match self {
            Snapshot::Real(_) => FieldKind::Real,
            Snapshot::Complex(_) => FieldKind::Complex,
            Snapshot::Vector(_) => FieldKind::Vector,
        }
    }

    fn grid(&self) -> &Arc<SpectralGrid> {
        match self {
            Snapshot::Real(f) => f.grid(),
            Snapshot::Complex(f) => f.grid(),
            Snapshot::Vector(f) => f.grid(),
        }
    }
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    Ok(u32::from_le_bytes(read_exact::<4>(r)?))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<8>(r)?))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<8>(r)?))
}

pub fn write_snapshot(w: &mut impl Write, snap: &Snapshot) -> std::io::Result<()> {
    let grid = snap.grid();
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    write_u32(w, grid.dim() as u32)?;
    for &n in grid.shape() {
        write_u32(w, n as u32)?;
    }
    for &l in grid.extent() {
        write_f64(w, l)?;
    }
    w.write_all(&[snap.kind() as u8])?;
    match snap {
        Snapshot::Real(f) => {
            for &v in f.data() {
                write_f64(w, v)?;
            }
        }
        Snapshot::Complex(f) => {
            for c in f.data() {
                write_f64(w, c.re)?;
                write_f64(w, c.im)?;
            }
        }
        Snapshot::Vector(f) => {
            for comp in f.components() {
                for &v in comp.data() {
                    write_f64(w, v)?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read, path: &str) -> Result<Snapshot> {
    let bad = |details: &str| Error::Format { path: path.to_string(), details: details.to_string() };
    let magic = read_exact::<4>(r).map_err(|e| Error::io(format!("reading {path}"), e))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let io = |e: std::io::Error| Error::io(format!("reading {path}"), e);
    let version = read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let dim = read_u32(r).map_err(io)? as usize;
    if dim == 0 || dim > 3 {
        return Err(bad(&format!("bad dimension {dim}")));
    }
    let mut shape = Vec::with_capacity(dim);
    for _ in 0..dim {
        shape.push(read_u32(r).map_err(io)? as usize);
    }
    let mut extent = Vec::with_capacity(dim);
    for _ in 0..dim {
        extent.push(read_f64(r).map_err(io)?);
    }
    let grid = SpectralGrid::new(&shape, &extent)?;
    let kind = read_exact::<1>(r).map_err(io)?[0];
    let len = grid.len();
    match kind {
        0 => {
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                data.push(read_f64(r).map_err(io)?);
            }
            Ok(Snapshot::Real(RealField::from_samples(&grid, data)?))
        }
        1 => {
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let re = read_f64(r).map_err(io)?;
                let im = read_f64(r).map_err(io)?;
                data.push(Complex64::new(re, im));
            }
            Ok(Snapshot::Complex(ComplexField::from_samples(&grid, data)?))
        }
        2 => {
            let mut comps = Vec::with_capacity(dim);
            for _ in 0..dim {
                let mut data = Vec::with_capacity(len);
                for _ in 0..len {
                    data.push(read_f64(r).map_err(io)?);
                }
                comps.push(RealField::from_samples(&grid, data)?);
            }
            Ok(Snapshot::Vector(VectorField::from_components(comps)?))
        }
        other => Err(bad(&format!("unknown field kind {other}"))),
    }
}

pub fn save_snapshot(path: impl AsRef<Path>, snap: &Snapshot) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut buf = std::io::BufWriter::new(&mut f);
    write_snapshot(&mut buf, snap).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut buf = std::io::BufReader::new(f);
    read_snapshot(&mut buf, &path.display().to_string())
}

/// Checkpoint of a uniformly sampled sequence of states; each state is a
/// fixed-size group of snapshots.
pub fn write_checkpoint(
    path: impl AsRef<Path>,
    dt: f64,
    states: &[Vec<Snapshot>],
) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e: std::io::Error| Error::io(format!("writing {}", path.display()), e);
    write_u64(&mut w, states.len().saturating_sub(1) as u64).map_err(io)?;
    write_f64(&mut w, dt).map_err(io)?;
    for group in states {
        for snap in group {
            write_snapshot(&mut w, snap).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(
    path: impl AsRef<Path>,
    snaps_per_state: usize,
) -> Result<(f64, Vec<Vec<Snapshot>>)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut r = std::io::BufReader::new(f);
    let io = |e: std::io::Error| Error::io(format!("reading {}", path.display()), e);
    let nsteps = read_u64(&mut r).map_err(io)? as usize;
    let dt = read_f64(&mut r).map_err(io)?;
    let mut states = Vec::with_capacity(nsteps + 1);
    for _ in 0..=nsteps {
        let mut group = Vec::with_capacity(snaps_per_state);
        for _ in 0..snaps_per_state {
            group.push(read_snapshot(&mut r, &path.display().to_string())?);
        }
        states.push(group);
    }
    Ok((dt, states))
}
