//! Temperature underneath a vector just before it is scanned.

use serde::{Deserialize, Serialize};

use super::window::{BottomBoundary, TemperatureField};
use super::MaterialProps;
use crate::scanpath::{map_vector_to_elements, RegionTag, ScanVector, VoxelGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsurfaceMode {
    SolidBelow,
    PowderBelow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsurfaceResult {
    pub t_b: f64,
    pub n_elements: usize,
    pub mode: SubsurfaceMode,
}

/// Number of terms kept in the powder-conduction series.
pub const OVERHANG_TERMS: usize = 51;

/// One term of the powder series, without the `4 (T_base - T_node) / pi`
/// prefactor.
pub fn overhang_term(m: usize, alpha_powder: f64, dz: f64, dtau: f64) -> f64 {
    let n = (2 * m + 1) as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let decay = (-(std::f64::consts::PI * n / (4.0 * dz)).powi(2) * alpha_powder * dtau).exp();
    sign / n * decay * (std::f64::consts::FRAC_PI_4 * n).cos()
}

/// Midpoint temperature one layer below a freshly scanned single-layer
/// region, from 1-D conduction through two powder layers resting on the plate.
pub fn overhang_subsurface(t_node: f64, t_base: f64, alpha_powder: f64, dz: f64, dtau: f64) -> f64 {
    let sum: f64 = (0..OVERHANG_TERMS)
        .map(|m| overhang_term(m, alpha_powder, dz, dtau))
        .sum();
    t_node + 4.0 * (t_base - t_node) / std::f64::consts::PI * sum
}

/// Subsurface temperature for `v` from the field `state`.
///
/// Vectors tagged as overhang, or with no solid voxel underneath, use the
/// powder series with `dtau` as the elapsed time. Layer 0 sits on the plate.
pub fn subsurface_temperature(
    state: &TemperatureField,
    v: &ScanVector,
    grid: &VoxelGrid,
    mat: &MaterialProps,
    dtau: f64,
) -> Result<SubsurfaceResult> {
    let cells = map_vector_to_elements(v, grid);
    let k = v.layer;
    if v.region != RegionTag::Overhang {
        if k == 0 {
            let t_b = match state.bottom {
                BottomBoundary::Plate(t) => t,
                _ => mat.baseplate_temp,
            };
            return Ok(SubsurfaceResult {
                t_b,
                n_elements: cells.len(),
                mode: SubsurfaceMode::SolidBelow,
            });
        }
        let below: Vec<f64> = cells
            .iter()
            .filter(|&&(i, j, _)| grid.is_part(i, j, k - 1))
            .filter_map(|&(i, j, _)| state.get(i, j, k - 1))
            .collect();
        if !below.is_empty() {
            return Ok(SubsurfaceResult {
                t_b: below.iter().sum::<f64>() / below.len() as f64,
                n_elements: below.len(),
                mode: SubsurfaceMode::SolidBelow,
            });
        }
    }
    let nodes: Vec<f64> = cells
        .iter()
        .filter_map(|&(i, j, k)| state.get(i, j, k))
        .collect();
    if nodes.is_empty() {
        return Err(Error::invalid(format!(
            "vector {} in layer {k} covers no part voxel",
            v.id
        )));
    }
    let t_node = nodes.iter().sum::<f64>() / nodes.len() as f64;
    Ok(SubsurfaceResult {
        t_b: overhang_subsurface(t_node, mat.baseplate_temp, mat.powder_diffusivity(), grid.dz, dtau.max(0.0)),
        n_elements: nodes.len(),
        mode: SubsurfaceMode::PowderBelow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_tail_is_negligible_after_a_millisecond() {
        let mat = MaterialProps::in718();
        let a = mat.powder_diffusivity();
        let sum: f64 = (0..OVERHANG_TERMS).map(|m| overhang_term(m, a, 4e-5, 1e-3)).sum();
        assert!(overhang_term(50, a, 4e-5, 1e-3).abs() < 1e-12 * sum.abs());
    }

    #[test]
    fn long_wait_reaches_node_temperature() {
        let t = overhang_subsurface(1200.0, 293.0, 6.9e-7, 4e-5, 10.0);
        assert!((t - 1200.0).abs() < 1e-9);
    }
}
