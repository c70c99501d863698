//! Binary dump of the full-part temperature field.
//!
//! Layout (little endian): 8-byte magic, `u32` version, `u32` nx, ny, nz,
//! `f64` dx, dy, dz in m, `u32` layer index, then `nx*ny*nz` `f32` values with
//! `i` fastest, then `j`, then `k`. Powder and unbuilt voxels are NaN.

use std::io::{Read, Write};

use super::PartField;
use crate::scanpath::VoxelGrid;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LPBFTEMP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub layer: u32,
    pub values: Vec<f32>,
}

impl Snapshot {
    /// Part voxels up to and including `layer`.
    pub fn from_part(part: &PartField, grid: &VoxelGrid, layer: usize) -> Self {
        let mut values = Vec::with_capacity(part.values.len());
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let t = if k <= layer && grid.is_part(i, j, k) {
                        part.get(i, j, k) as f32
                    } else {
                        f32::NAN
                    };
                    values.push(t);
                }
            }
        }
        Self {
            nx: grid.nx as u32,
            ny: grid.ny as u32,
            nz: grid.nz as u32,
            dx: grid.dx,
            dy: grid.dy,
            dz: grid.dz,
            layer: layer as u32,
            values,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.nx, self.ny, self.nz] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.dx, self.dy, self.dz] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.layer.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::invalid("not a temperature snapshot"));
        }
        let mut u = || -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let version = u()?;
        if version != VERSION {
            return Err(Error::invalid(format!("unsupported snapshot version {version}")));
        }
        let (nx, ny, nz) = (u()?, u()?, u()?);
        let mut f = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let (dx, dy, dz) = (f()?, f()?, f()?);
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        let layer = u32::from_le_bytes(b);
        let n = nx as usize * ny as usize * nz as usize;
        let mut raw = vec![0u8; 4 * n];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            layer,
            values,
        })
    }

    /// Min, max and mean over the finite values.
    pub fn summary(&self) -> (f64, f64, f64) {
        let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for &v in self.values.iter().filter(|v| v.is_finite()) {
            let v = v as f64;
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
            n += 1;
        }
        (lo, hi, if n > 0 { sum / n as f64 } else { f64::NAN })
    }
}

/// Header line of the per-layer summary CSV.
pub const SUMMARY_HEADER: &str = "layer,min_K,max_K,mean_K";

pub fn summary_row(s: &Snapshot) -> String {
    let (lo, hi, mean) = s.summary();
    format!("{},{lo:.3},{hi:.3},{mean:.3}", s.layer)
}
