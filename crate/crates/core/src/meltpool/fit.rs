use serde::{Deserialize, Serialize};

use super::{superheat, MeltPoolCoefficients, UnitConvention};
use crate::thermal::MaterialProps;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackSource {
    Camera,
    Microscope,
    Synthetic,
}

impl TrackSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackSource::Camera => "camera",
            TrackSource::Microscope => "microscope",
            TrackSource::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "camera" => Some(TrackSource::Camera),
            "microscope" => Some(TrackSource::Microscope),
            "synthetic" => Some(TrackSource::Synthetic),
            _ => None,
        }
    }
}

/// One measured single track, in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleTrackRecord {
    pub power: f64,
    pub speed: f64,
    pub t_b: f64,
    pub width: f64,
    pub length: f64,
    pub source: TrackSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub coefficients: MeltPoolCoefficients,
    pub r2_width: f64,
    pub r2_length: f64,
    pub n_records: usize,
    /// Relative residuals `(measured - fitted) / fitted`.
    pub width_residuals: Vec<f64>,
    pub length_residuals: Vec<f64>,
}

fn through_origin(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all regressors are zero"));
    }
    let c = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    if y.len() < 2 {
        return Ok((c, 1.0));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((c, r2))
}

/// Least-squares fit of both constants through the origin. `only` restricts
/// the fit to one measurement source.
pub fn fit_coefficients(
    records: &[SingleTrackRecord],
    mat: &MaterialProps,
    only: Option<TrackSource>,
) -> Result<FitResult> {
    let used: Vec<&SingleTrackRecord> = records
        .iter()
        .filter(|r| only.is_none_or(|s| r.source == s))
        .collect();
    if used.is_empty() {
        return Err(Error::invalid("no single-track records to fit"));
    }
    let mut xw = Vec::with_capacity(used.len());
    let mut xl = Vec::with_capacity(used.len());
    for r in &used {
        if !(r.width > 0.0 && r.length > 0.0 && r.speed > 0.0 && r.power >= 0.0) {
            return Err(Error::invalid(format!(
                "track at P = {} W, v = {} m/s has non-positive data",
                r.power, r.speed
            )));
        }
        let dt = superheat(r.t_b, mat)?;
        xw.push((r.power / (dt * r.speed)).sqrt());
        xl.push(r.power / dt);
    }
    let w: Vec<f64> = used.iter().map(|r| r.width).collect();
    let l: Vec<f64> = used.iter().map(|r| r.length).collect();
    let (c1, r2_width) = through_origin(&xw, &w)?;
    let (c2, r2_length) = through_origin(&xl, &l)?;
    let rel = |x: &[f64], y: &[f64], c: f64| -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| (b - c * a) / (c * a)).collect()
    };
    Ok(FitResult {
        coefficients: MeltPoolCoefficients::si(c1, c2)?,
        r2_width,
        r2_length,
        n_records: used.len(),
        width_residuals: rel(&xw, &w, c1),
        length_residuals: rel(&xl, &l, c2),
    })
}

fn percentile(abs_sorted: &[f64], q: f64) -> f64 {
    if abs_sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * abs_sorted.len() as f64).ceil() as usize).clamp(1, abs_sorted.len());
    abs_sorted[rank - 1]
}

impl FitResult {
    fn residual_stats(res: &[f64]) -> [f64; 3] {
        let mut a: Vec<f64> = res.iter().map(|r| r.abs()).collect();
        a.sort_by(f64::total_cmp);
        [percentile(&a, 0.5), percentile(&a, 0.9), percentile(&a, 1.0)]
    }

    /// Fit report as CSV; constants in the micrometre convention.
    pub fn report_csv(&self) -> String {
        let (c1, c2) = self.coefficients.in_convention(&UnitConvention::micrometre());
        let mut out = String::from("# lpbf meltpool fit v1\nconstant,value,r2,n,abs_rel_resid_p50,abs_rel_resid_p90,abs_rel_resid_max\n");
        for (name, value, r2, res) in [
            ("c1", c1, self.r2_width, &self.width_residuals),
            ("c2", c2, self.r2_length, &self.length_residuals),
        ] {
            let [p50, p90, max] = Self::residual_stats(res);
            out.push_str(&format!(
                "{name},{value:.6},{r2:.6},{},{p50:.6},{p90:.6},{max:.6}\n",
                self.n_records
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let (c1, c2) = self.coefficients.in_convention(&UnitConvention::micrometre());
        let [w50, w90, _] = Self::residual_stats(&self.width_residuals);
        let [l50, l90, _] = Self::residual_stats(&self.length_residuals);
        format!(
            "fitted {n} tracks (P in W, v in m/s, T in K, outputs in um)\n\
             c1 = {c1:.3}  R^2 = {:.3}  |residual| p50 {:.1}%  p90 {:.1}%\n\
             c2 = {c2:.3}  R^2 = {:.3}  |residual| p50 {:.1}%  p90 {:.1}%\n",
            self.r2_width,
            100.0 * w50,
            100.0 * w90,
            self.r2_length,
            100.0 * l50,
            100.0 * l90,
            n = self.n_records,
        )
    }
}

/// Tracks predicted by the model at each design point, `repeats` times,
/// with each width and length scaled by `1 + noise()`.
pub fn synthesize_tracks(
    design: &[(f64, f64, f64)],
    c: &MeltPoolCoefficients,
    mat: &MaterialProps,
    repeats: usize,
    mut noise: impl FnMut() -> f64,
) -> Result<Vec<SingleTrackRecord>> {
    let mut out = Vec::with_capacity(design.len() * repeats);
    for _ in 0..repeats {
        for &(p, v, t_b) in design {
            let w = super::width(p, v, t_b, c, mat)?;
            let l = super::length(p, t_b, c, mat)?;
            out.push(SingleTrackRecord {
                power: p,
                speed: v,
                t_b,
                width: w * (1.0 + noise()),
                length: l * (1.0 + noise()),
                source: TrackSource::Synthetic,
            });
        }
    }
    Ok(out)
}
