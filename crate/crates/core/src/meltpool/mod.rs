//! Analytical melt-pool geometry from the subsurface temperature, and
//! calibration of its two constants from single-track data.

mod fit;
mod io;
mod sweep;

pub use fit::{fit_coefficients, synthesize_tracks, FitResult, SingleTrackRecord, TrackSource};
pub use io::{read_tracks, read_tracks_from, write_tracks, TRACK_COLUMNS};
pub use sweep::{generate_sweep_design, calibration_sweep, SweepAxis};

use serde::{Deserialize, Serialize};

use crate::thermal::MaterialProps;
use crate::{Error, Result};

/// Smallest admissible `T_m - T_b`, in K.
pub const POLE_GUARD: f64 = 1.0;

/// Units the constants were fitted in. Power is always in W and temperature
/// in K; speeds are `speed_to_si` m/s per unit and lengths `length_to_si` m
/// per unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitConvention {
    pub label: String,
    pub speed_to_si: f64,
    pub length_to_si: f64,
}

impl UnitConvention {
    pub fn si() -> Self {
        Self {
            label: "W, m/s, K -> m".into(),
            speed_to_si: 1.0,
            length_to_si: 1.0,
        }
    }

    /// Speed in m/s, widths and lengths in um.
    pub fn micrometre() -> Self {
        Self {
            label: "W, m/s, K -> um".into(),
            speed_to_si: 1.0,
            length_to_si: 1e-6,
        }
    }
}

/// Width and length constants, stored for SI inputs and outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeltPoolCoefficients {
    pub c1: f64,
    pub c2: f64,
    /// Convention of the values as originally supplied.
    pub units: UnitConvention,
}

impl MeltPoolCoefficients {
    pub fn si(c1: f64, c2: f64) -> Result<Self> {
        Self::from_convention(c1, c2, UnitConvention::si())
    }

    /// Converts constants fitted in `units` to SI.
    pub fn from_convention(c1: f64, c2: f64, units: UnitConvention) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::invalid("melt-pool constants must be positive"));
        }
        Ok(Self {
            c1: c1 * units.length_to_si * units.speed_to_si.sqrt(),
            c2: c2 * units.length_to_si,
            units,
        })
    }

    /// Values of the constants in `units`.
    pub fn in_convention(&self, units: &UnitConvention) -> (f64, f64) {
        (
            self.c1 / (units.length_to_si * units.speed_to_si.sqrt()),
            self.c2 / units.length_to_si,
        )
    }

    pub fn in718() -> Self {
        Self::from_convention(261.0, 499.0, UnitConvention::micrometre()).unwrap()
    }

    pub fn ss316l() -> Self {
        Self::from_convention(256.0, 529.0, UnitConvention::micrometre()).unwrap()
    }

    /// Constants for a named material preset.
    pub fn for_material(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "IN718" => Some(Self::in718()),
            "316LSS" | "316L" | "SS316L" => Some(Self::ss316l()),
            _ => None,
        }
    }
}

fn superheat(t_b: f64, mat: &MaterialProps) -> Result<f64> {
    let dt = mat.melting_temp - t_b;
    if !(dt >= POLE_GUARD) {
        return Err(Error::MeltPoolDomain {
            t_b,
            t_m: mat.melting_temp,
        });
    }
    Ok(dt)
}

fn check_inputs(p: f64, v: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::invalid(format!("power {p} W must be non-negative")));
    }
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("speed {v} m/s must be positive")));
    }
    Ok(())
}

/// Melt-pool width in m for power `p` (W), speed `v` (m/s) and subsurface
/// temperature `t_b` (K).
pub fn width(p: f64, v: f64, t_b: f64, c: &MeltPoolCoefficients, mat: &MaterialProps) -> Result<f64> {
    check_inputs(p, v)?;
    let dt = superheat(t_b, mat)?;
    Ok(c.c1 * (p / (dt * v)).sqrt())
}

/// Melt-pool length in m.
pub fn length(p: f64, t_b: f64, c: &MeltPoolCoefficients, mat: &MaterialProps) -> Result<f64> {
    check_inputs(p, 1.0)?;
    let dt = superheat(t_b, mat)?;
    Ok(c.c2 * p / dt)
}

/// Top-surface area in m^2: a half disc of diameter `W` in front of a
/// triangle of base `W` and height `L`.
pub fn area(p: f64, v: f64, t_b: f64, c: &MeltPoolCoefficients, mat: &MaterialProps) -> Result<f64> {
    let w = width(p, v, t_b, c, mat)?;
    let l = length(p, t_b, c, mat)?;
    Ok(0.5 * w * l + std::f64::consts::PI / 8.0 * w * w)
}

/// `(a, b)` such that `area = a P^1.5 + b P` at fixed speed and `T_b`.
pub fn area_coefficients(v: f64, t_b: f64, c: &MeltPoolCoefficients, mat: &MaterialProps) -> Result<(f64, f64)> {
    check_inputs(0.0, v)?;
    let dt = superheat(t_b, mat)?;
    let a = 0.5 * c.c1 * c.c2 / (dt * dt * dt * v).sqrt();
    let b = std::f64::consts::PI * c.c1 * c.c1 / (8.0 * dt * v);
    Ok((a, b))
}
