//! The explicitly simulated window of layers and the full-part record it is
//! cut from.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MaterialProps;
use crate::scanpath::VoxelGrid;
use crate::{Error, Result};

/// How "half the temperature" of a reference is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfRule {
    /// Midway between the reference and ambient.
    #[default]
    AboveAmbient,
    /// Half the absolute temperature.
    Absolute,
}

impl HalfRule {
    pub fn apply(self, reference: f64, ambient: f64) -> f64 {
        match self {
            HalfRule::AboveAmbient => ambient + 0.5 * (reference - ambient),
            HalfRule::Absolute => 0.5 * reference,
        }
    }
}

const NO_ROW: u32 = u32::MAX;

/// Part voxels of layers `k_lo..=k_top`, numbered row by row
/// (`i` fastest, then `j`, then `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct WindowLayout {
    pub nx: usize,
    pub ny: usize,
    pub k_lo: usize,
    pub k_top: usize,
    row_of: Vec<u32>,
    cells: Vec<[u32; 3]>,
}

impl WindowLayout {
    pub fn new(grid: &VoxelGrid, k_lo: usize, k_top: usize) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let layers = k_top + 1 - k_lo;
        let mut row_of = vec![NO_ROW; nx * ny * layers];
        let mut cells = Vec::new();
        for k in k_lo..=k_top {
            for j in 0..ny {
                for i in 0..nx {
                    if grid.is_part(i, j, k) {
                        row_of[((k - k_lo) * ny + j) * nx + i] = cells.len() as u32;
                        cells.push([i as u32, j as u32, k as u32]);
                    }
                }
            }
        }
        Self {
            nx,
            ny,
            k_lo,
            k_top,
            row_of,
            cells,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn n_layers(&self) -> usize {
        self.k_top + 1 - self.k_lo
    }

    pub fn row(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        if k < self.k_lo || k > self.k_top || i >= self.nx || j >= self.ny {
            return None;
        }
        let r = self.row_of[((k - self.k_lo) * self.ny + j) * self.nx + i];
        (r != NO_ROW).then_some(r as usize)
    }

    pub fn cell(&self, row: usize) -> (usize, usize, usize) {
        let [i, j, k] = self.cells[row];
        (i as usize, j as usize, k as usize)
    }
}

/// Condition under the window's lowest layer.
#[derive(Clone, Debug, PartialEq)]
pub enum BottomBoundary {
    Insulated,
    /// Build plate at a fixed temperature, half a cell below layer 0's centre.
    Plate(f64),
    /// Frozen layer below the window, one value per `(i, j)`; NaN where powder.
    Frozen(Vec<f64>),
}

/// Temperatures of the window's part voxels.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureField {
    pub layout: Arc<WindowLayout>,
    pub values: Vec<f64>,
    pub bottom: BottomBoundary,
}

impl TemperatureField {
    pub fn uniform(layout: Arc<WindowLayout>, t: f64, bottom: BottomBoundary) -> Self {
        let values = vec![t; layout.len()];
        Self { layout, values, bottom }
    }

    /// Temperature of voxel `(i, j, k)` if it is in the window or in the
    /// frozen layer below it.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        if let Some(r) = self.layout.row(i, j, k) {
            return Some(self.values[r]);
        }
        if k + 1 == self.layout.k_lo && i < self.layout.nx && j < self.layout.ny {
            if let BottomBoundary::Frozen(v) = &self.bottom {
                let t = v[j * self.layout.nx + i];
                return t.is_finite().then_some(t);
            }
        }
        None
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Temperatures of every voxel of the build; entries of powder voxels are
/// not meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct PartField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub values: Vec<f64>,
}

impl PartField {
    pub fn new(grid: &VoxelGrid, t: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            nz: grid.nz,
            values: vec![t; grid.nx * grid.ny * grid.nz],
        }
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let n = self.nx * self.ny;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn layer_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.nx * self.ny;
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(k * self.ny + j) * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, t: f64) {
        self.values[(k * self.ny + j) * self.nx + i] = t;
    }

    /// Copies the window's voxels into the record.
    pub fn store_window(&mut self, field: &TemperatureField) {
        for (r, &t) in field.values.iter().enumerate() {
            let (i, j, k) = field.layout.cell(r);
            self.set(i, j, k, t);
        }
    }
}

/// Builds the window for scanning layer `new_k` from the (post-dwell) part
/// record.
///
/// The window holds at most `window_layers` layers ending at `new_k`; the
/// layer just below it is frozen into the bottom boundary, or the build plate
/// takes that role while the window still reaches layer 0. Part voxels of the
/// fresh layer start at the half rule applied to `underlying`, the image of
/// layer `new_k - 1` (ignored for `new_k == 0`, where the plate is underneath).
pub fn advance_window(
    part: &mut PartField,
    grid: &VoxelGrid,
    new_k: usize,
    window_layers: usize,
    underlying: Option<&[f64]>,
    rule: HalfRule,
    mat: &MaterialProps,
) -> Result<TemperatureField> {
    if window_layers == 0 {
        return Err(Error::invalid("window must hold at least one layer"));
    }
    if new_k >= grid.nz {
        return Err(Error::MissingOccupancy(new_k));
    }
    let n = grid.layer_cells();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_part(i, j, new_k) {
                let reference = match underlying {
                    Some(img) if new_k > 0 => img[j * grid.nx + i],
                    _ => mat.baseplate_temp,
                };
                part.set(i, j, new_k, rule.apply(reference, mat.ambient_temp));
            }
        }
    }
    let k_lo = (new_k + 1).saturating_sub(window_layers);
    let bottom = if k_lo == 0 {
        BottomBoundary::Plate(mat.baseplate_temp)
    } else {
        let below = k_lo - 1;
        let mut frozen = vec![f64::NAN; n];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.is_part(i, j, below) {
                    frozen[j * grid.nx + i] = part.get(i, j, below);
                }
            }
        }
        BottomBoundary::Frozen(frozen)
    };
    let layout = Arc::new(WindowLayout::new(grid, k_lo, new_k));
    let values = (0..layout.len())
        .map(|r| {
            let (i, j, k) = layout.cell(r);
            part.get(i, j, k)
        })
        .collect();
    Ok(TemperatureField {
        layout,
        values,
        bottom,
    })
}
