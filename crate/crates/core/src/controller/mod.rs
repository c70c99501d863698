//! Vector-level feedforward power control.
//!
//! For every mark vector, in scan order: read the subsurface temperature from
//! the thermal field, pick the power whose predicted melt-pool area matches
//! the target, and scan the vector at that power before moving on.

mod schedule;
mod simulate;

pub use schedule::{read_power_table, PowerSchedule, ScheduleEntry, LAYER_POWER_HEADER, SCHEDULE_HEADER};
pub use simulate::{run_feedforward, run_with, simulate_fixed, Decision, LayerObserver, RunLimit, ThermalContext};

use serde::{Deserialize, Serialize};

use crate::meltpool::{area_coefficients, MeltPoolCoefficients, POLE_GUARD};
use crate::scanpath::RegionTag;
use crate::thermal::MaterialProps;
use crate::{Error, Result};

/// Target melt-pool area in m^2, either one value for the whole print or one
/// per region class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AreaTarget {
    Constant(f64),
    PerRegion { bulk: f64, overhang: f64, turnaround: f64 },
}

impl AreaTarget {
    pub fn for_region(&self, region: RegionTag) -> f64 {
        match *self {
            AreaTarget::Constant(a) => a,
            AreaTarget::PerRegion { bulk, overhang, turnaround } => match region {
                RegionTag::Bulk => bulk,
                RegionTag::Overhang => overhang,
                RegionTag::SubdividedTurnaround => turnaround,
            },
        }
    }

    /// The same target scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            AreaTarget::Constant(a) => AreaTarget::Constant(a * s),
            AreaTarget::PerRegion { bulk, overhang, turnaround } => AreaTarget::PerRegion {
                bulk: bulk * s,
                overhang: overhang * s,
                turnaround: turnaround * s,
            },
        }
    }

    fn values(&self) -> Vec<f64> {
        match *self {
            AreaTarget::Constant(a) => vec![a],
            AreaTarget::PerRegion { bulk, overhang, turnaround } => vec![bulk, overhang, turnaround],
        }
    }
}

/// What to do when the subsurface is already at the melting point, where the
/// melt-pool model has no finite answer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverheatPolicy {
    /// Scan at `p_min` and flag the vector as clamped.
    #[default]
    ClampToMin,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    /// m^2
    pub area_target: AreaTarget,
    pub p_min: f64,
    pub p_max: f64,
    pub p_nominal: f64,
    /// Relative tolerance on the area residual.
    pub tolerance: f64,
    pub max_iter: usize,
    pub overheat: OverheatPolicy,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            area_target: AreaTarget::Constant(0.0164e-6),
            p_min: 20.0,
            p_max: 500.0,
            p_nominal: 220.0,
            tolerance: 1e-10,
            max_iter: 100,
            overheat: OverheatPolicy::ClampToMin,
        }
    }
}

impl ControlConfig {
    pub fn with_target(&self, area: f64) -> Self {
        Self {
            area_target: AreaTarget::Constant(area),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min >= 0.0 && self.p_min < self.p_max && self.p_max.is_finite()) {
            return Err(Error::invalid(format!(
                "power bounds must satisfy 0 <= p_min < p_max, got [{}, {}]",
                self.p_min, self.p_max
            )));
        }
        if self.area_target.values().iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid("area target must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::invalid("solver tolerance must lie in (0, 1)"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSolution {
    /// W
    pub power: f64,
    /// Predicted area at `power`, m^2. NaN when the subsurface was too hot
    /// for the melt-pool model.
    pub area: f64,
    pub clamped: bool,
    pub iterations: usize,
}

/// Power in `[p_min, p_max]` whose predicted area is closest to `target`.
///
/// The area is `a P^1.5 + b P` with `a, b > 0`, so it is strictly increasing
/// and the optimum is either the root of `A(P) = target` or a bound. The root
/// is found by Newton's method on `u = sqrt(P)`, falling back to bisection
/// whenever a step leaves the current bracket.
pub fn solve_power(
    t_b: f64,
    v: f64,
    target: f64,
    cfg: &ControlConfig,
    c: &MeltPoolCoefficients,
    mat: &MaterialProps,
) -> Result<PowerSolution> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::invalid(format!("area target {target} must be positive")));
    }
    if t_b.is_finite() && !(mat.melting_temp - t_b >= POLE_GUARD) && cfg.overheat == OverheatPolicy::ClampToMin {
        return Ok(PowerSolution {
            power: cfg.p_min,
            area: f64::NAN,
            clamped: true,
            iterations: 0,
        });
    }
    let (a, b) = area_coefficients(v, t_b, c, mat)?;
    let g = |u: f64| (a * u + b) * u * u - target;

    let mut lo = cfg.p_min.sqrt();
    let mut hi = cfg.p_max.sqrt();
    let g_lo = g(lo);
    if g_lo >= 0.0 {
        return Ok(PowerSolution {
            power: cfg.p_min,
            area: g_lo + target,
            clamped: true,
            iterations: 0,
        });
    }
    let g_hi = g(hi);
    if g_hi <= 0.0 {
        return Ok(PowerSolution {
            power: cfg.p_max,
            area: g_hi + target,
            clamped: true,
            iterations: 0,
        });
    }

    let tol = cfg.tolerance * target;
    let mut u = cfg.p_nominal.clamp(cfg.p_min, cfg.p_max).sqrt();
    for it in 1..=cfg.max_iter {
        let r = g(u);
        if r.abs() <= tol {
            return Ok(PowerSolution {
                power: u * u,
                area: r + target,
                clamped: false,
                iterations: it,
            });
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = (3.0 * a * u + 2.0 * b) * u;
        let newton = u - r / slope;
        u = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let r = g(u);
    if r.abs() <= tol.max(4.0 * f64::EPSILON * target) {
        return Ok(PowerSolution {
            power: u * u,
            area: r + target,
            clamped: false,
            iterations: cfg.max_iter,
        });
    }
    Err(Error::Numerical {
        step: 0,
        msg: format!("power solve did not converge: residual {r:.3e} m^2 at P = {:.6} W", u * u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meltpool::area;

    #[test]
    fn nominal_round_trip() {
        let mat = MaterialProps::in718();
        let c = MeltPoolCoefficients::in718();
        let cfg = ControlConfig::default();
        let target = area(180.0, 1.0, 600.0, &c, &mat).unwrap();
        let s = solve_power(600.0, 1.0, target, &cfg, &c, &mat).unwrap();
        assert!(!s.clamped);
        assert!((s.power - 180.0).abs() < 1e-9 * 180.0);
        assert!(s.iterations < 10);
    }

    #[test]
    fn overheat_policies() {
        let mat = MaterialProps::in718();
        let c = MeltPoolCoefficients::in718();
        let mut cfg = ControlConfig::default();
        let s = solve_power(mat.melting_temp, 1.0, 1e-8, &cfg, &c, &mat).unwrap();
        assert!(s.clamped && s.power == cfg.p_min && s.area.is_nan());
        cfg.overheat = OverheatPolicy::Abort;
        assert!(matches!(
            solve_power(mat.melting_temp, 1.0, 1e-8, &cfg, &c, &mat),
            Err(Error::MeltPoolDomain { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ControlConfig::default();
        cfg.validate().unwrap();
        cfg.p_min = cfg.p_max;
        assert!(cfg.validate().is_err());
        let cfg = ControlConfig::default().with_target(-1.0);
        assert!(cfg.validate().is_err());
    }
}
