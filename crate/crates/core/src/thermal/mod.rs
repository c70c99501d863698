//! Conduction-only finite-difference model of the part.

mod material;
pub mod snapshot;
mod source;
mod subsurface;
mod system;
mod window;

pub use material::{BeamParams, MaterialProps};
pub use source::{erf_factor, erf_factor_z, integrated_goldak, SparseSource};
pub use subsurface::{
    overhang_subsurface, overhang_term, subsurface_temperature, SubsurfaceMode, SubsurfaceResult,
    OVERHANG_TERMS,
};
pub use system::{build_state_system, default_time_step, stability_bound, StateSystem, TopBoundary};
pub use window::{advance_window, BottomBoundary, HalfRule, PartField, TemperatureField, WindowLayout};

use crate::scanpath::{ScanVector, VoxelGrid};
use crate::{Error, Result};

/// Scans `v` at power `power`: `v.n_steps` forward-Euler steps with the
/// source sampled at the beam position of each step. Jumps and skywrites
/// (non-mark vectors) only cool.
#[allow(clippy::too_many_arguments)]
pub fn step_vector(
    field: &mut TemperatureField,
    sys: &StateSystem,
    v: &ScanVector,
    power: f64,
    grid: &VoxelGrid,
    beam: &BeamParams,
    mat: &MaterialProps,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    for m in 0..v.n_steps {
        let src = if v.is_mark && power > 0.0 {
            integrated_goldak(v.position_at_step(m, sys.dt), power, &field.layout, grid, beam, mat, sys.dt)
        } else {
            SparseSource::default()
        };
        if !sys.step(field, &src, scratch) {
            let bad = field.values.iter().position(|t| !t.is_finite()).unwrap_or(0);
            return Err(Error::Numerical {
                step: v.start_step + m,
                msg: format!("non-finite temperature at window row {bad} while scanning vector {}", v.id),
            });
        }
    }
    Ok(())
}
