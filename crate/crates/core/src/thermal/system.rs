//! Explicit conduction stencil over the window, stored as bands.

use std::sync::Arc;

use rayon::prelude::*;

use super::source::SparseSource;
use super::window::{BottomBoundary, TemperatureField, WindowLayout};
use super::MaterialProps;
use crate::scanpath::VoxelGrid;
use crate::{Error, Result};

/// Condition on the top face of the window's highest layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TopBoundary {
    /// Convection to ambient in series with half a cell of conduction.
    Convection,
    Insulated,
    /// Fixed temperature half a cell above the top centres.
    Fixed(f64),
}

/// Forward-Euler stability limit of the 7-point stencil.
pub fn stability_bound(dx: f64, dy: f64, dz: f64, alpha: f64) -> f64 {
    1.0 / (2.0 * alpha * (1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz)))
}

/// Half the stability limit.
pub fn default_time_step(grid: &VoxelGrid, mat: &MaterialProps) -> f64 {
    0.5 * stability_bound(grid.dx, grid.dy, grid.dz, mat.diffusivity())
}

/// `T(l+1) = A T(l) + disturbance + source` for the window's voxels.
#[derive(Clone, Debug)]
pub struct StateSystem {
    pub layout: Arc<WindowLayout>,
    pub dt: f64,
    /// Face neighbours `-x, +x, -y, +y, -z, +z`; a missing neighbour points
    /// back at the row itself so its difference vanishes.
    nbr: Vec<[u32; 6]>,
    /// `alpha dt G` for the six slots.
    slot_coef: [f64; 6],
    /// Fixed-temperature contacts `(alpha dt G, T)` of row `r` are
    /// `fixed[fixed_start[r]..fixed_start[r + 1]]`.
    fixed_start: Vec<u32>,
    fixed: Vec<(f64, f64)>,
    /// Constant input from the fixed-temperature boundaries.
    pub disturbance: Vec<f64>,
}

const CHUNK: usize = 4096;

pub fn build_state_system(
    layout: Arc<WindowLayout>,
    grid: &VoxelGrid,
    mat: &MaterialProps,
    dt: f64,
    bottom: &BottomBoundary,
    top: TopBoundary,
) -> Result<StateSystem> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let alpha = mat.diffusivity();
    let gx = 1.0 / (grid.dx * grid.dx);
    let gy = 1.0 / (grid.dy * grid.dy);
    let gz = 1.0 / (grid.dz * grid.dz);
    let u = 1.0 / (0.5 * grid.dz / mat.conductivity + 1.0 / mat.convection_coeff);
    let g_conv = u / (mat.conductivity * grid.dz);

    let n = layout.len();
    let mut fixed_start = Vec::with_capacity(n + 1);
    let mut fixed_list = Vec::new();
    let mut nbr = Vec::with_capacity(n);
    let mut disturbance = Vec::with_capacity(n);
    let mut max_sum = 0.0f64;

    for r in 0..n {
        let (i, j, k) = layout.cell(r);
        let mut ids = [r as u32; 6];
        let mut sum = 0.0;
        let mut fixed = [(0.0, 0.0); 2];
        let lateral = [
            (i.wrapping_sub(1), j, gx),
            (i + 1, j, gx),
            (i, j.wrapping_sub(1), gy),
            (i, j + 1, gy),
        ];
        for (slot, &(ii, jj, g)) in lateral.iter().enumerate() {
            if let Some(q) = layout.row(ii, jj, k) {
                ids[slot] = q as u32;
                sum += g;
            }
        }
        if let Some(q) = k.checked_sub(1).and_then(|kb| layout.row(i, j, kb)) {
            ids[4] = q as u32;
            sum += gz;
        } else if k == layout.k_lo {
            match bottom {
                BottomBoundary::Plate(t) if k == 0 => {
                    sum += 2.0 * gz;
                    fixed[0] = (alpha * dt * 2.0 * gz, *t);
                }
                BottomBoundary::Frozen(v) => {
                    let t = v[j * layout.nx + i];
                    if t.is_finite() {
                        sum += gz;
                        fixed[0] = (alpha * dt * gz, t);
                    }
                }
                _ => {}
            }
        }
        if let Some(q) = layout.row(i, j, k + 1) {
            ids[5] = q as u32;
            sum += gz;
        } else if k == layout.k_top {
            match top {
                TopBoundary::Convection => {
                    sum += g_conv;
                    fixed[1] = (alpha * dt * g_conv, mat.ambient_temp);
                }
                TopBoundary::Fixed(t) => {
                    sum += 2.0 * gz;
                    fixed[1] = (alpha * dt * 2.0 * gz, t);
                }
                TopBoundary::Insulated => {}
            }
        }
        max_sum = max_sum.max(sum);
        nbr.push(ids);
        disturbance.push(fixed[0].0 * fixed[0].1 + fixed[1].0 * fixed[1].1);
        fixed_start.push(fixed_list.len() as u32);
        fixed_list.extend(fixed.into_iter().filter(|f| f.0 != 0.0));
    }
    fixed_start.push(fixed_list.len() as u32);

    if max_sum > 0.0 {
        let bound = 1.0 / (alpha * max_sum);
        if dt > bound {
            return Err(Error::UnstableTimeStep { dt, bound });
        }
    }
    Ok(StateSystem {
        layout,
        dt,
        nbr,
        slot_coef: [gx, gx, gy, gy, gz, gz].map(|g| alpha * dt * g),
        fixed_start,
        fixed: fixed_list,
        disturbance,
    })
}

impl StateSystem {
    pub fn len(&self) -> usize {
        self.nbr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbr.is_empty()
    }

    #[inline(always)]
    fn row_update(&self, r: usize, ids: &[u32; 6], current: &[f64]) -> f64 {
        let c = &self.slot_coef;
        let t0 = current[r];
        let d = |s: usize| current[ids[s] as usize] - t0;
        let mut acc = c[0] * d(0) + c[1] * d(1) + c[2] * d(2) + c[3] * d(3) + c[4] * d(4) + c[5] * d(5);
        let (f0, f1) = (self.fixed_start[r] as usize, self.fixed_start[r + 1] as usize);
        if f1 > f0 {
            for &(a, tf) in &self.fixed[f0..f1] {
                acc += a * (tf - t0);
            }
        }
        t0 + acc
    }

    /// One forward-Euler step from `current` into `next`. Each row is
    /// evaluated as the current value plus differences, so a uniform field at
    /// the boundary temperatures is reproduced exactly. Returns false if any
    /// updated value is not finite.
    pub fn step_into(&self, current: &[f64], source: &SparseSource, next: &mut [f64]) -> bool {
        let finite = next
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, out)| {
                let base = c * CHUNK;
                let mut ok = true;
                let ids = &self.nbr[base..base + out.len()];
                for (o, (t, ids)) in out.iter_mut().zip(ids).enumerate() {
                    *t = self.row_update(base + o, ids, current);
                    ok &= t.is_finite();
                }
                ok
            })
            .reduce(|| true, |a, b| a && b);
        let mut ok = finite;
        for &(r, dtemp) in &source.entries {
            let t = &mut next[r as usize];
            *t += dtemp;
            ok &= t.is_finite();
        }
        ok
    }

    /// `A * x`, the update without the disturbance or source.
    pub fn apply(&self, current: &[f64]) -> Vec<f64> {
        (0..current.len())
            .map(|r| {
                let t0 = current[r];
                let mut acc = 0.0;
                for s in 0..6 {
                    acc += self.slot_coef[s] * (current[self.nbr[r][s] as usize] - t0);
                }
                for &(a, _) in &self.fixed[self.fixed_start[r] as usize..self.fixed_start[r + 1] as usize] {
                    acc -= a * t0;
                }
                t0 + acc
            })
            .collect()
    }

    /// Advances `field` in place by one step; false if the result has a
    /// non-finite value.
    pub fn step(&self, field: &mut TemperatureField, source: &SparseSource, scratch: &mut Vec<f64>) -> bool {
        scratch.resize(field.values.len(), 0.0);
        let ok = self.step_into(&field.values, source, scratch);
        std::mem::swap(&mut field.values, scratch);
        ok
    }
}
