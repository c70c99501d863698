//! Calibration of the heat-input tuning factor `f` and the area target.
//!
//! For each candidate `f` the area target is tuned until the controller
//! holds the nominal power in a bulk region of the stepped pyramid, the full
//! schedule is computed, and the areas measured on the printed (or
//! simulated) part are scored by their normalized spread. The best `f` gives
//! the most uniform melt pools.

use std::cell::Cell;
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{run_feedforward, run_with, ControlConfig, Decision, PowerSchedule, RunLimit, ThermalContext};
use crate::meltpool::{area, MeltPoolCoefficients, POLE_GUARD};
use crate::scanpath::{LayerScan, ScanVector};
use crate::units::MM2;
use crate::{Error, Result};

pub const MEASURED_AREA_HEADER: &str = "vector_id,area_mm2";
pub const TUNING_REPORT_HEADER: &str = "f,Ac_target_mm2,epsilon";

/// `||A - mean(A)||_2 / mean(A)`.
pub fn normalized_error(areas: &[f64]) -> Result<f64> {
    if areas.is_empty() {
        return Err(Error::invalid("normalized error of an empty area list"));
    }
    if let Some(a) = areas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::invalid(format!("areas must be positive, got {a}")));
    }
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    let ss: f64 = areas.iter().map(|a| (a - mean).powi(2)).sum();
    Ok(ss.sqrt() / mean)
}

/// Mark vectors whose midpoint lies in `x_min < x < x_max` (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkWindow {
    pub x_min: f64,
    pub x_max: f64,
}

impl BulkWindow {
    pub fn new(x_min: f64, x_max: f64) -> Self {
        Self { x_min, x_max }
    }

    pub fn contains(&self, v: &ScanVector) -> bool {
        let x = v.midpoint().x;
        v.is_mark && x > self.x_min && x < self.x_max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetTuning {
    /// m^2
    pub area_target: f64,
    /// Mean committed power over the bulk window at that target, W.
    pub mean_power: f64,
    /// Feedforward runs spent.
    pub runs: usize,
}

/// Relative tolerance on the bulk mean power when tuning the target.
pub const TARGET_TOLERANCE: f64 = 1e-4;
const MAX_TUNING_RUNS: usize = 60;

/// Area target at which the controller's mean power over the bulk window
/// equals `p_nominal`.
///
/// The mean power grows monotonically with the target. Starting from the
/// target that gives exactly `p_nominal` on a cold plate, secant steps in log
/// space bracket the root and the Illinois variant of regula falsi refines
/// it. Runs stop after the last bulk vector since later vectors
/// cannot influence it.
pub fn tune_target(
    layers: &[LayerScan],
    ctx: &ThermalContext,
    cfg: &ControlConfig,
    c: &MeltPoolCoefficients,
    p_nominal: f64,
    window: &BulkWindow,
) -> Result<TargetTuning> {
    if !(p_nominal > cfg.p_min && p_nominal < cfg.p_max) {
        return Err(Error::invalid(format!(
            "nominal power {p_nominal} W must lie strictly inside [{}, {}] W",
            cfg.p_min, cfg.p_max
        )));
    }
    let bulk: Vec<&ScanVector> = layers.iter().flat_map(|l| l.vectors.iter()).filter(|v| window.contains(v)).collect();
    let last = bulk
        .last()
        .ok_or_else(|| Error::invalid("no mark vector lies in the bulk window"))?
        .id;
    let ids: HashSet<usize> = bulk.iter().map(|v| v.id).collect();
    let speed = bulk.iter().map(|v| v.speed).sum::<f64>() / bulk.len() as f64;

    let runs = Cell::new(0usize);
    let eval = |target: f64| -> Result<f64> {
        runs.set(runs.get() + 1);
        let s = run_feedforward(layers, ctx, &cfg.with_target(target), c, None, RunLimit::ThroughVector(last))?;
        Ok(s.mean_power_where(|e| ids.contains(&e.vector_id)))
    };
    let done = |p: f64| (p - p_nominal).abs() <= TARGET_TOLERANCE * p_nominal;

    let finish = |target: f64, p: f64| TargetTuning {
        area_target: target,
        mean_power: p,
        runs: runs.get(),
    };

    // Secant steps on (ln A, ln P) until the root is bracketed. The first
    // slope is that of A ~ P^1.4, between the two power laws of the area.
    let a0 = area(p_nominal, speed, ctx.material.baseplate_temp, c, &ctx.material)?;
    let mut x0 = a0.ln();
    let mut p0 = eval(a0)?;
    if done(p0) {
        return Ok(finish(a0, p0));
    }
    let y = |p: f64| p.ln() - p_nominal.ln();
    let mut slope = 1.0 / 1.4;
    let (mut x1, mut p1);
    loop {
        let step = (-y(p0) / slope).clamp(-2.0, 2.0);
        x1 = x0 + step;
        p1 = eval(x1.exp())?;
        if done(p1) {
            return Ok(finish(x1.exp(), p1));
        }
        if y(p1).signum() != y(p0).signum() {
            break;
        }
        let s = (y(p1) - y(p0)) / (x1 - x0);
        if !(s > 1e-3) || runs.get() >= MAX_TUNING_RUNS {
            return Err(Error::invalid(format!(
                "nominal power {p_nominal} W is not reachable within [{}, {}] W",
                cfg.p_min, cfg.p_max
            )));
        }
        slope = s;
        x0 = x1;
        p0 = p1;
    }

    // Illinois iterations inside the bracket.
    let (mut xa, mut ga, mut xb, mut gb) = (x0, y(p0), x1, y(p1));
    let mut side = 0i8;
    while runs.get() < MAX_TUNING_RUNS {
        let x = (xa * gb - xb * ga) / (gb - ga);
        let p = eval(x.exp())?;
        if done(p) {
            return Ok(finish(x.exp(), p));
        }
        let g = y(p);
        if g.signum() == gb.signum() {
            xb = x;
            gb = g;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            xa = x;
            ga = g;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Numerical {
        step: 0,
        msg: format!("area target tuning did not converge in {MAX_TUNING_RUNS} runs"),
    })
}

/// Ground truth for the tuning loop: a copy of the model with its own
/// tuning factor that "prints" a schedule and reports the melt-pool areas.
///
/// A real print always leaves a melt pool, so where the subsurface is at or
/// above the melting point the area is taken at the hottest temperature the
/// melt-pool model accepts.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualMachine {
    pub f_true: f64,
    pub coefficients: MeltPoolCoefficients,
}

impl VirtualMachine {
    pub fn measure(&self, layers: &[LayerScan], ctx: &ThermalContext, schedule: &PowerSchedule) -> Result<Vec<f64>> {
        let powers: BTreeMap<usize, f64> = schedule.entries.iter().map(|e| (e.vector_id, e.power)).collect();
        let mat = &ctx.material;
        let hottest = mat.melting_temp - POLE_GUARD;
        let printed = run_with(
            layers,
            &ctx.with_f(self.f_true),
            |v, sub| {
                let power = powers.get(&v.id).copied().unwrap_or(v.power_nominal);
                Ok(Decision {
                    power,
                    area: area(power, v.speed, sub.t_b.min(hottest), &self.coefficients, mat)?,
                    clamped: false,
                })
            },
            None,
            RunLimit::All,
        )?;
        Ok(printed.areas())
    }
}

/// Where measured melt-pool areas come from.
#[derive(Clone, Debug, PartialEq)]
pub enum AreaSource {
    /// Areas in m^2 keyed by vector id.
    Measured(BTreeMap<usize, f64>),
    Virtual(VirtualMachine),
    /// The controller's own predictions.
    Predicted,
}

impl AreaSource {
    fn areas(&self, layers: &[LayerScan], ctx: &ThermalContext, schedule: &PowerSchedule) -> Result<Vec<f64>> {
        match self {
            AreaSource::Measured(m) => {
                if m.len() != schedule.len() {
                    return Err(Error::invalid(format!(
                        "{} measured areas for {} scheduled vectors",
                        m.len(),
                        schedule.len()
                    )));
                }
                schedule
                    .entries
                    .iter()
                    .map(|e| {
                        m.get(&e.vector_id)
                            .copied()
                            .ok_or_else(|| Error::invalid(format!("no measured area for vector {}", e.vector_id)))
                    })
                    .collect()
            }
            AreaSource::Virtual(vm) => vm.measure(layers, ctx, schedule),
            AreaSource::Predicted => Ok(schedule.areas()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningRun {
    pub f: f64,
    /// m^2
    pub area_target: f64,
    /// Measured areas in schedule order, m^2.
    pub areas: Vec<f64>,
    pub epsilon: f64,
    pub schedule: PowerSchedule,
}

/// Tunes the target at `f`, computes the full schedule and scores the
/// measured areas.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_f(
    f: f64,
    layers: &[LayerScan],
    ctx: &ThermalContext,
    cfg: &ControlConfig,
    c: &MeltPoolCoefficients,
    p_nominal: f64,
    window: &BulkWindow,
    source: &AreaSource,
) -> Result<TuningRun> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid(format!("tuning factor {f} must be positive")));
    }
    let ctx = ctx.with_f(f);
    let tuned = tune_target(layers, &ctx, cfg, c, p_nominal, window)?;
    let schedule = run_feedforward(layers, &ctx, &cfg.with_target(tuned.area_target), c, None, RunLimit::All)?;
    let areas = source.areas(layers, &ctx, &schedule)?;
    let epsilon = normalized_error(&areas)?;
    Ok(TuningRun {
        f,
        area_target: tuned.area_target,
        areas,
        epsilon,
        schedule,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    /// One run per candidate, in the order given.
    pub runs: Vec<TuningRun>,
    /// Index of the smallest epsilon; the first one on ties.
    pub best: usize,
}

impl Sweep {
    pub fn best_run(&self) -> &TuningRun {
        &self.runs[self.best]
    }

    pub fn write_report<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# lpbf tuning report v1")?;
        writeln!(w, "{TUNING_REPORT_HEADER}")?;
        for r in &self.runs {
            writeln!(w, "{:.6},{:.10},{:.10}", r.f, r.area_target / MM2, r.epsilon)?;
        }
        Ok(())
    }
}

/// Evaluates every candidate (in parallel) and picks the one with the
/// smallest normalized error.
#[allow(clippy::too_many_arguments)]
pub fn sweep_f(
    f_values: &[f64],
    layers: &[LayerScan],
    ctx: &ThermalContext,
    cfg: &ControlConfig,
    c: &MeltPoolCoefficients,
    p_nominal: f64,
    window: &BulkWindow,
    source: &AreaSource,
) -> Result<Sweep> {
    if f_values.is_empty() {
        return Err(Error::invalid("no tuning factor candidates"));
    }
    let runs = f_values
        .par_iter()
        .map(|&f| evaluate_f(f, layers, ctx, cfg, c, p_nominal, window, source))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.epsilon.total_cmp(&b.1.epsilon))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(Sweep { runs, best })
}

/// Reads `vector_id,area_mm2` rows into areas in m^2.
pub fn read_measured_areas<R: Read>(reader: R) -> Result<BTreeMap<usize, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (id_col, a_col) = (col("vector_id")?, col("area_mm2")?);
    let mut out = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        let id: usize = rec.get(id_col).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
            line,
            msg: "bad vector_id".into(),
        })?;
        let a: f64 = rec.get(a_col).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
            line,
            msg: "bad area_mm2".into(),
        })?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("area {a} mm^2 must be positive"),
            });
        }
        if out.insert(id, a * MM2).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("vector {id} listed twice"),
            });
        }
    }
    Ok(out)
}

pub fn write_measured_areas<W: Write>(mut w: W, schedule: &PowerSchedule, areas: &[f64]) -> Result<()> {
    if areas.len() != schedule.len() {
        return Err(Error::invalid("one area per scheduled vector expected"));
    }
    writeln!(w, "# lpbf measured areas v1")?;
    writeln!(w, "{MEASURED_AREA_HEADER}")?;
    for (e, a) in schedule.entries.iter().zip(areas) {
        writeln!(w, "{},{:.10}", e.vector_id, a / MM2)?;
    }
    Ok(())
}
