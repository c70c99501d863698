use serde::{Deserialize, Serialize};

use crate::units::{celsius_to_kelvin, MM};
use crate::{Error, Result};

/// Values taken by one sweep parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// `start:step:end`, inclusive of `end` when it is hit.
    Range { start: f64, step: f64, end: f64 },
    Values(Vec<f64>),
}

impl SweepAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            SweepAxis::Values(v) if v.is_empty() => Err(Error::invalid("empty sweep axis")),
            SweepAxis::Values(v) => Ok(v.clone()),
            &SweepAxis::Range { start, step, end } => {
                if end < start {
                    return Err(Error::invalid(format!("empty sweep range {start}:{step}:{end}")));
                }
                if start == end {
                    return Ok(vec![start]);
                }
                if !(step > 0.0) {
                    return Err(Error::invalid("sweep step must be positive"));
                }
                let n = ((end - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// Full Cartesian product of power, speed and subsurface temperature, in the
/// axes' own units, ordered with power slowest.
pub fn generate_sweep_design(p: &SweepAxis, v: &SweepAxis, t_b: &SweepAxis) -> Result<Vec<(f64, f64, f64)>> {
    let (ps, vs, ts) = (p.values()?, v.values()?, t_b.values()?);
    let mut out = Vec::with_capacity(ps.len() * vs.len() * ts.len());
    for &p in &ps {
        for &v in &vs {
            for &t in &ts {
                out.push((p, v, t));
            }
        }
    }
    Ok(out)
}

/// The single-track calibration sweep in SI units (W, m/s, K):
/// 100:40:420 W, 500:150:1850 mm/s, plate at 50, 200, 300 and 433 C.
pub fn calibration_sweep() -> Vec<(f64, f64, f64)> {
    generate_sweep_design(
        &SweepAxis::Range { start: 100.0, step: 40.0, end: 420.0 },
        &SweepAxis::Range { start: 500.0, step: 150.0, end: 1850.0 },
        &SweepAxis::Values(vec![50.0, 200.0, 300.0, 433.0]),
    )
    .expect("static sweep is valid")
    .into_iter()
    .map(|(p, v, t)| (p, v * MM, celsius_to_kelvin(t)))
    .collect()
}
