use serde::{Deserialize, Serialize};

use super::{map_vector_to_elements, LayerScan, Point3};
use crate::{Error, Result};

/// Explicit in-plane extent of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridExtent {
    pub origin_x: f64,
    pub origin_y: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// In-plane voxel size; equals the hatch spacing.
    pub hatch_spacing: f64,
    pub layer_thickness: f64,
    /// Simulation time step.
    pub dt: f64,
    /// Laser-off time used for `jump` records without a duration.
    pub skywrite_time: f64,
    /// Fully solid layers below the first scanned layer (plate stock).
    pub substrate_layers: usize,
    /// Fixed extent; fitted to the scan path when absent.
    pub extent: Option<GridExtent>,
    /// Empty cells added around a fitted extent.
    pub margin_cells: usize,
    /// Fragments shorter than this fraction of the hatch spacing are merged.
    pub merge_fraction: f64,
    /// Power used for `mark` records that omit one.
    pub default_power: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            hatch_spacing: 90e-6,
            layer_thickness: 40e-6,
            dt: 1e-5,
            skywrite_time: 1.8e-3,
            substrate_layers: 0,
            extent: None,
            margin_cells: 4,
            merge_fraction: 0.25,
            default_power: 220.0,
        }
    }
}

/// Voxel discretisation of the build. Layer `k` spans `z in [k dz, (k+1) dz]`
/// above the build plate.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub origin: Point3,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    /// Empty grid (all powder).
    pub fn new(dx: f64, dy: f64, dz: f64, origin: Point3, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
            return Err(Error::invalid("voxel sizes must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        Ok(Self {
            dx,
            dy,
            dz,
            origin,
            nx,
            ny,
            nz,
            occupancy: vec![false; nx * ny * nz],
        })
    }

    /// Fits (or takes) the extent and marks every voxel traversed by a mark
    /// vector as part, plus the full footprint of the substrate layers.
    pub fn from_layers(layers: &[LayerScan], cfg: &GridConfig) -> Result<Self> {
        let h = cfg.hatch_spacing;
        let extent = match cfg.extent {
            Some(e) => e,
            None => fit_extent(layers, h, cfg.margin_cells),
        };
        let nz = layers
            .iter()
            .map(|l| l.index + 1)
            .max()
            .unwrap_or(0)
            .max(cfg.substrate_layers);
        let mut grid = Self::new(
            h,
            h,
            cfg.layer_thickness,
            Point3::new(extent.origin_x, extent.origin_y, 0.0),
            extent.nx,
            extent.ny,
            nz,
        )?;
        for k in 0..cfg.substrate_layers {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    grid.set_part(i, j, k, true);
                }
            }
        }
        for layer in layers {
            for v in layer.marks() {
                grid.check_inside(v.id, v.start)?;
                grid.check_inside(v.id, v.end)?;
                for (i, j, k) in map_vector_to_elements(v, &grid) {
                    grid.set_part(i, j, k, true);
                }
            }
        }
        Ok(grid)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    pub fn layer_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_part(&self, i: usize, j: usize, k: usize) -> bool {
        k < self.nz && self.occupancy[self.index(i, j, k)]
    }

    pub fn set_part(&mut self, i: usize, j: usize, k: usize, part: bool) {
        let idx = self.index(i, j, k);
        self.occupancy[idx] = part;
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    /// Adds empty layers on top so that layer `k` exists.
    pub fn ensure_layers(&mut self, nz: usize) {
        if nz > self.nz {
            self.occupancy.resize(self.nx * self.ny * nz, false);
            self.nz = nz;
        }
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        let (u, v) = self.to_cell_coords(x, y);
        let tol = 1e-9;
        u >= -tol && v >= -tol && u <= self.nx as f64 + tol && v <= self.ny as f64 + tol
    }

    fn check_inside(&self, id: usize, p: Point3) -> Result<()> {
        if self.contains_xy(p.x, p.y) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { id, x: p.x, y: p.y })
        }
    }

    /// Continuous cell coordinates (cell `i` spans `[i, i+1)`).
    pub fn to_cell_coords(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.origin.x) / self.dx, (y - self.origin.y) / self.dy)
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !self.contains_xy(x, y) {
            return None;
        }
        let (u, v) = self.to_cell_coords(x, y);
        let i = (u.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (v.floor().max(0.0) as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Point3 {
        Point3::new(
            self.origin.x + (i as f64 + 0.5) * self.dx,
            self.origin.y + (j as f64 + 0.5) * self.dy,
            self.origin.z + (k as f64 + 0.5) * self.dz,
        )
    }

    /// Height of the top surface of layer `k`.
    pub fn layer_top(&self, k: usize) -> f64 {
        self.origin.z + (k + 1) as f64 * self.dz
    }

    pub fn layer_of_z(&self, z: f64) -> usize {
        (((z - self.origin.z) / self.dz).round() as i64 - 1).max(0) as usize
    }

    pub fn part_count(&self, k: usize) -> usize {
        if k >= self.nz {
            return 0;
        }
        let n = self.layer_cells();
        self.occupancy[k * n..(k + 1) * n].iter().filter(|&&p| p).count()
    }
}

fn fit_extent(layers: &[LayerScan], h: f64, margin: usize) -> GridExtent {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in layers.iter().flat_map(|l| l.marks()) {
        for p in [v.start, v.end] {
            lo = (lo.0.min(p.x), lo.1.min(p.y));
            hi = (hi.0.max(p.x), hi.1.max(p.y));
        }
    }
    if !lo.0.is_finite() {
        return GridExtent {
            origin_x: 0.0,
            origin_y: 0.0,
            nx: 1,
            ny: 1,
        };
    }
    let m = margin as f64;
    let ox = ((lo.0 / h).floor() - m) * h;
    let oy = ((lo.1 / h).floor() - m) * h;
    let nx = (((hi.0 - ox) / h).floor() + 1.0 + m) as usize;
    let ny = (((hi.1 - oy) / h).floor() + 1.0 + m) as usize;
    GridExtent {
        origin_x: ox,
        origin_y: oy,
        nx,
        ny,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_uses_floor_and_clamps_upper_edge() {
        let g = VoxelGrid::new(1.0, 1.0, 1.0, Point3::default(), 3, 2, 1).unwrap();
        assert_eq!(g.cell_of(0.0, 0.0), Some((0, 0)));
        assert_eq!(g.cell_of(1.0, 1.5), Some((1, 1)));
        assert_eq!(g.cell_of(3.0, 2.0), Some((2, 1)));
        assert_eq!(g.cell_of(3.5, 0.0), None);
    }

    #[test]
    fn layer_geometry() {
        let g = VoxelGrid::new(90e-6, 90e-6, 40e-6, Point3::default(), 2, 2, 30).unwrap();
        assert!((g.layer_top(29) - 1.2e-3).abs() < 1e-15);
        assert_eq!(g.layer_of_z(1.2e-3), 29);
        assert!((g.center(0, 0, 0).z - 20e-6).abs() < 1e-18);
    }
}
