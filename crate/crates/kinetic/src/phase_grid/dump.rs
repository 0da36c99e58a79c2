//! Binary grid dump: `VLGRID1\0`, u32 nx, u32 nv, f64 v_cut, f64 time (all
//! little-endian), then `nx * nv` f64 values in x-major order.

use super::{build_grid, PhaseField};
use crate::error::{KineticError, Result};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const DUMP_MAGIC: &[u8; 8] = b"VLGRID1\0";

pub fn write_dump_to(w: &mut impl Write, f: &PhaseField) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(f.grid.nx as u32).to_le_bytes())?;
    w.write_all(&(f.grid.nv as u32).to_le_bytes())?;
    w.write_all(&f.grid.v_cut.to_le_bytes())?;
    w.write_all(&f.time.to_le_bytes())?;
    for v in f.values.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_dump(path: impl AsRef<Path>, f: &PhaseField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dump_to(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn read_dump_from(r: &mut impl Read) -> Result<PhaseField> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..8] != DUMP_MAGIC {
        return Err(KineticError::Io("bad magic: not a grid dump".into()));
    }
    let nx = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let nv = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let v_cut = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let time = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = build_grid(nx, nv, v_cut)?;
    let mut bytes = vec![0u8; nx * nv * 8];
    r.read_exact(&mut bytes)?;
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values =
        Array2::from_shape_vec((nx, nv), data).map_err(|e| KineticError::Io(e.to_string()))?;
    PhaseField::from_values(grid, values, time)
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<PhaseField> {
    let mut r = BufReader::new(File::open(path)?);
    read_dump_from(&mut r)
}
