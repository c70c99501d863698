//! Interlayer dwell: analytical 1-D conduction along every Z-line of the
//! part, then a per-layer Gaussian blur for lateral spreading.

mod blur;
mod series;

pub use blur::{gaussian_blur, gaussian_kernel, EdgeMode};
pub use series::{
    eigen_residual, eigenvalue, modes_needed, project_profile, solve_eigenvalues, solve_line, DwellCase,
    PiecewiseLinearProfile, SeriesSolution, MAX_MODES,
};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scanpath::VoxelGrid;
use crate::thermal::{HalfRule, MaterialProps, PartField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DwellConfig {
    /// Time between the end of one layer and the start of the next, in s.
    pub dwell_time: f64,
    /// Convection coefficient for the top of a line; the material's when unset.
    pub convection_coeff: Option<f64>,
    pub edge: EdgeMode,
    pub half_rule: HalfRule,
}

impl Default for DwellConfig {
    fn default() -> Self {
        Self {
            dwell_time: 10.0,
            convection_coeff: None,
            edge: EdgeMode::Replicate,
            half_rule: HalfRule::AboveAmbient,
        }
    }
}

/// Blur width in pixels for diffusivity `alpha` over `dt` on pixels of size
/// `hs`.
pub fn blur_sigma(alpha: f64, dt: f64, hs: f64) -> f64 {
    (2.0 * alpha * dt).sqrt() / hs
}

/// Column `(i, j)` and its part segments.
type Line = (usize, usize, Vec<(usize, usize)>);

/// Contiguous runs `[k_a, k_b]` of part voxels in the column `(i, j)` up to
/// layer `top`.
fn segments(grid: &VoxelGrid, i: usize, j: usize, top: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for k in 0..=top {
        match (grid.is_part(i, j, k), start) {
            (true, None) => start = Some(k),
            (false, Some(a)) => {
                out.push((a, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push((a, top));
    }
    out
}

fn case_for(seg: (usize, usize), top: usize, mat: &MaterialProps, h: f64) -> DwellCase {
    let at_top = seg.1 == top;
    let on_plate = seg.0 == 0;
    match (at_top, on_plate) {
        (true, true) => DwellCase::ConvectionToConstant {
            t0: mat.baseplate_temp,
            t_inf: mat.ambient_temp,
            h,
            k: mat.conductivity,
        },
        (true, false) => DwellCase::ConvectionToInsulated {
            t_inf: mat.ambient_temp,
            h,
            k: mat.conductivity,
        },
        (false, false) => DwellCase::InsulatedToInsulated,
        (false, true) => DwellCase::InsulatedToConstant { t0: mat.baseplate_temp },
    }
}

/// Propagates the dwell through layers `0..=top` of `part`.
///
/// Returns the blurred image of layer `top`, powder pixels included, which
/// is the reference for the next fresh layer.
pub fn apply_interlayer_dwell(
    part: &mut PartField,
    grid: &VoxelGrid,
    top: usize,
    mat: &MaterialProps,
    cfg: &DwellConfig,
) -> Result<Vec<f64>> {
    if part.nx != grid.nx || part.ny != grid.ny || part.nz != grid.nz {
        return Err(Error::invalid("part field and occupancy grid differ in shape"));
    }
    if top >= grid.nz {
        return Err(Error::MissingOccupancy(top));
    }
    if !(cfg.dwell_time >= 0.0) {
        return Err(Error::invalid("dwell time must be non-negative"));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let alpha = mat.diffusivity();
    let t = cfg.dwell_time;
    let h = cfg.convection_coeff.unwrap_or(mat.convection_coeff);

    if t > 0.0 {
        // Step 1: Z-lines. Eigenvalues depend only on the case and the
        // segment height, so they are shared.
        let lines: Vec<Line> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| (i, j, segments(grid, i, j, top)))
            .filter(|(_, _, s)| !s.is_empty())
            .collect();
        let mut eigen: HashMap<(u8, usize), Vec<f64>> = HashMap::new();
        for (_, _, segs) in &lines {
            for &seg in segs {
                let case = case_for(seg, top, mat, h);
                let n = seg.1 + 1 - seg.0;
                eigen.entry((case.id(), n)).or_insert_with(|| {
                    let l = n as f64 * grid.dz;
                    let m = modes_needed(&case, l, alpha, t);
                    (1..=m).map(|q| eigenvalue(&case, l, q)).collect()
                });
            }
        }
        let updated: Vec<Vec<(usize, usize, usize, f64)>> = lines
            .par_iter()
            .map(|(i, j, segs)| -> Result<Vec<(usize, usize, usize, f64)>> {
                let mut out = Vec::new();
                for &seg in segs {
                    let case = case_for(seg, top, mat, h);
                    let n = seg.1 + 1 - seg.0;
                    let values: Vec<f64> = (seg.0..=seg.1).map(|k| part.get(*i, *j, k)).collect();
                    let profile = PiecewiseLinearProfile::for_case(&values, grid.dz, &case);
                    let sol = solve_line(&profile, case, alpha, t, eigen.get(&(case.id(), n)).map(Vec::as_slice))?;
                    for (q, k) in (seg.0..=seg.1).enumerate() {
                        let z = (q as f64 + 0.5) * grid.dz;
                        out.push((*i, *j, k, sol.evaluate(alpha, t, z)));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for line in updated {
            for (i, j, k, v) in line {
                part.set(i, j, k, v);
            }
        }
    }

    // Step 2: per-layer blur with powder pixels at the half rule of the
    // layer's mean part temperature.
    let sigma = blur_sigma(alpha, t, grid.dx);
    let mut top_image = Vec::new();
    for k in 0..=top {
        let count = grid.part_count(k);
        let mut img = part.layer(k).to_vec();
        if count > 0 {
            let mean = (0..nx * ny)
                .filter(|&c| grid.is_part(c % nx, c / nx, k))
                .map(|c| img[c])
                .sum::<f64>()
                / count as f64;
            let powder = cfg.half_rule.apply(mean, mat.ambient_temp);
            for (c, v) in img.iter_mut().enumerate() {
                if !grid.is_part(c % nx, c / nx, k) {
                    *v = powder;
                }
            }
        } else {
            img.iter_mut().for_each(|v| *v = mat.ambient_temp);
        }
        let blurred = gaussian_blur(&img, nx, ny, sigma, cfg.edge);
        let layer = part.layer_mut(k);
        for (c, v) in layer.iter_mut().enumerate() {
            if grid.is_part(c % nx, c / nx, k) {
                *v = blurred[c];
            }
        }
        if k == top {
            top_image = blurred;
        }
    }
    Ok(top_image)
}
