use std::sync::Arc;

use super::{solve_power, ControlConfig, PowerSchedule, ScheduleEntry};
use crate::dwell::{apply_interlayer_dwell, DwellConfig};
use crate::meltpool::{area, MeltPoolCoefficients, POLE_GUARD};
use crate::scanpath::{subdivide_vectors, GridConfig, LayerScan, ScanVector, VoxelGrid};
use crate::thermal::{
    advance_window, build_state_system, step_vector, subsurface_temperature, BeamParams, MaterialProps,
    PartField, SubsurfaceResult, TopBoundary,
};
use crate::{Error, Result};

/// Everything the thermal model needs besides the scan path.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalContext {
    pub grid: VoxelGrid,
    pub material: MaterialProps,
    pub beam: BeamParams,
    /// Must be the step the scan path was discretised with.
    pub dt: f64,
    /// Layers simulated explicitly; older layers are frozen.
    pub window_layers: usize,
    pub dwell: DwellConfig,
}

impl ThermalContext {
    pub fn new(grid: VoxelGrid, material: MaterialProps, beam: BeamParams, dt: f64) -> Self {
        Self {
            grid,
            material,
            beam,
            dt,
            window_layers: 30,
            dwell: DwellConfig::default(),
        }
    }

    /// Builds the occupancy grid for `layers` and splits their vectors at
    /// solid/powder transitions.
    pub fn prepare(
        layers: &[LayerScan],
        cfg: &GridConfig,
        material: MaterialProps,
        beam: BeamParams,
    ) -> Result<(Self, Vec<LayerScan>)> {
        let grid = VoxelGrid::from_layers(layers, cfg)?;
        let layers = subdivide_vectors(layers, &grid, cfg.merge_fraction)?;
        Ok((Self::new(grid, material, beam, cfg.dt), layers))
    }

    pub fn with_f(&self, f: f64) -> Self {
        Self {
            beam: self.beam.with_f(f),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.beam.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        if self.window_layers == 0 {
            return Err(Error::invalid("window must hold at least one layer"));
        }
        Ok(())
    }
}

/// Power committed for one mark vector and the area predicted with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub power: f64,
    pub area: f64,
    pub clamped: bool,
}

/// Where to stop a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RunLimit {
    #[default]
    All,
    /// Stop right after the vector with this id has been scanned.
    ThroughVector(usize),
}

/// Called with the full part field after each layer has been scanned.
pub type LayerObserver<'a> = &'a mut dyn FnMut(usize, &PartField) -> Result<()>;

/// Scans `layers` in order, asking `policy` for the power of every mark
/// vector given the subsurface temperature just before it.
///
/// Between layers the dwell solver cools the whole part and the explicit
/// window moves up by one layer. Errors are tagged with the layer and vector.
pub fn run_with(
    layers: &[LayerScan],
    ctx: &ThermalContext,
    mut policy: impl FnMut(&ScanVector, &SubsurfaceResult) -> Result<Decision>,
    mut observer: Option<LayerObserver<'_>>,
    limit: RunLimit,
) -> Result<PowerSchedule> {
    ctx.validate()?;
    for w in layers.windows(2) {
        if w[1].index != w[0].index + 1 {
            return Err(Error::LayerOrder(format!(
                "layer {} follows layer {}; layers must be consecutive",
                w[1].index, w[0].index
            )));
        }
    }
    let grid = &ctx.grid;
    let mat = &ctx.material;
    let mut part = PartField::new(grid, mat.baseplate_temp);
    let mut schedule = PowerSchedule::default();
    let mut scratch = Vec::new();
    let mut prev: Option<usize> = None;

    for layer in layers {
        let k = layer.index;
        let image = match prev {
            Some(top) => Some(apply_interlayer_dwell(&mut part, grid, top, mat, &ctx.dwell)?),
            None if k > 0 => Some(part.layer(k - 1).to_vec()),
            None => None,
        };
        let mut field = advance_window(
            &mut part,
            grid,
            k,
            ctx.window_layers,
            image.as_deref(),
            ctx.dwell.half_rule,
            mat,
        )?;
        let sys = build_state_system(
            Arc::clone(&field.layout),
            grid,
            mat,
            ctx.dt,
            &field.bottom,
            TopBoundary::Convection,
        )?;

        for v in &layer.vectors {
            let tag = |e: Error| e.at_vector(k, v.id);
            let power = if v.is_mark {
                let sub = subsurface_temperature(&field, v, grid, mat, v.start_step as f64 * ctx.dt).map_err(tag)?;
                let d = policy(v, &sub).map_err(tag)?;
                schedule.entries.push(ScheduleEntry {
                    layer: k,
                    vector_id: v.id,
                    source_id: v.source_id,
                    start: v.start,
                    end: v.end,
                    speed: v.speed,
                    power: d.power,
                    t_b: sub.t_b,
                    area: d.area,
                    clamped: d.clamped,
                    region: v.region,
                    mode: sub.mode,
                });
                d.power
            } else {
                0.0
            };
            step_vector(&mut field, &sys, v, power, grid, &ctx.beam, mat, &mut scratch).map_err(tag)?;
            if limit == RunLimit::ThroughVector(v.id) {
                part.store_window(&field);
                return Ok(schedule);
            }
        }
        part.store_window(&field);
        if let Some(obs) = observer.as_mut() {
            obs(k, &part)?;
        }
        prev = Some(k);
    }
    Ok(schedule)
}

/// The feedforward controller: every mark vector gets the power that puts
/// its predicted melt-pool area on the target.
pub fn run_feedforward(
    layers: &[LayerScan],
    ctx: &ThermalContext,
    cfg: &ControlConfig,
    c: &MeltPoolCoefficients,
    observer: Option<LayerObserver<'_>>,
    limit: RunLimit,
) -> Result<PowerSchedule> {
    cfg.validate()?;
    let mat = &ctx.material;
    run_with(
        layers,
        ctx,
        |v, sub| {
            let s = solve_power(sub.t_b, v.speed, cfg.area_target.for_region(v.region), cfg, c, mat)?;
            Ok(Decision {
                power: s.power,
                area: s.area,
                clamped: s.clamped,
            })
        },
        observer,
        limit,
    )
}

/// Open-loop run with the power of each mark vector given by `power_of`.
/// Logs the area the melt-pool model predicts at that power, NaN where the
/// subsurface is too hot for the model.
pub fn simulate_fixed(
    layers: &[LayerScan],
    ctx: &ThermalContext,
    power_of: impl Fn(&ScanVector) -> f64,
    c: &MeltPoolCoefficients,
    observer: Option<LayerObserver<'_>>,
) -> Result<PowerSchedule> {
    let mat = &ctx.material;
    run_with(
        layers,
        ctx,
        |v, sub| {
            let power = power_of(v);
            if !(power >= 0.0 && power.is_finite()) {
                return Err(Error::invalid(format!("power {power} W must be non-negative")));
            }
            let a = if mat.melting_temp - sub.t_b >= POLE_GUARD {
                area(power, v.speed, sub.t_b, c, mat)?
            } else {
                f64::NAN
            };
            Ok(Decision {
                power,
                area: a,
                clamped: false,
            })
        },
        observer,
        RunLimit::All,
    )
}
