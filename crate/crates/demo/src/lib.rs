//! Three small operations exposed to the browser page in `www/`.
//!
//! Build with `wasm-pack build crates/demo --target web --out-dir www/pkg`.
//! Each export wraps a plain function so the logic also runs natively.

use lpbf_feedforward::controller::{run_feedforward, solve_power, ControlConfig, RunLimit, ThermalContext};
use lpbf_feedforward::dwell::{solve_line, DwellCase, PiecewiseLinearProfile};
use lpbf_feedforward::meltpool::MeltPoolCoefficients;
use lpbf_feedforward::scanpath::{parse_scanpath, GridConfig, OverhangSlab, RegionTag};
use lpbf_feedforward::thermal::{stability_bound, BeamParams, MaterialProps};
use lpbf_feedforward::units::{MM, MM2};
use lpbf_feedforward::{Error, Result};
use wasm_bindgen::prelude::*;

fn material(name: &str) -> Result<(MaterialProps, MeltPoolCoefficients)> {
    let mat = MaterialProps::preset(name).ok_or_else(|| Error::Invalid(format!("unknown material `{name}`")))?;
    let c = MeltPoolCoefficients::for_material(&mat.name).expect("presets have constants");
    Ok((mat, c))
}

/// `[power_W, area_mm2, clamped]` for one vector.
pub fn power_for(material_name: &str, t_b: f64, speed_mm_s: f64, target_mm2: f64) -> Result<[f64; 3]> {
    let (mat, c) = material(material_name)?;
    let s = solve_power(t_b, speed_mm_s * MM, target_mm2 * MM2, &ControlConfig::default(), &c, &mat)?;
    Ok([s.power, s.area / MM2, s.clamped as u8 as f64])
}

/// Temperatures at the centres of `cells` after `dwell_s` seconds of
/// cooling: convective top, plate at `plate_k` below.
pub fn dwell_line(material_name: &str, cells: &[f64], dz_um: f64, dwell_s: f64, plate_k: f64) -> Result<Vec<f64>> {
    let (mat, _) = material(material_name)?;
    let dz = dz_um * 1e-6;
    let case = DwellCase::ConvectionToConstant {
        t0: plate_k,
        t_inf: mat.ambient_temp,
        h: mat.convection_coeff,
        k: mat.conductivity,
    };
    let profile = PiecewiseLinearProfile::for_case(cells, dz, &case);
    let alpha = mat.diffusivity();
    let sol = solve_line(&profile, case, alpha, dwell_s, None)?;
    Ok((0..cells.len())
        .map(|k| sol.evaluate(alpha, dwell_s, (k as f64 + 0.5) * dz))
        .collect())
}

/// Feedforward powers on the small overhang slab, in scan order, followed by
/// one flag per vector: 1 over powder, 0 over solid.
pub fn overhang_schedule(material_name: &str, target_mm2: f64) -> Result<Vec<f64>> {
    let (mat, c) = material(material_name)?;
    let slab = OverhangSlab::small();
    let mut cfg = slab.grid_config(&GridConfig::default());
    cfg.dt = 0.5 * stability_bound(cfg.hatch_spacing, cfg.hatch_spacing, cfg.layer_thickness, mat.diffusivity());
    let layers = parse_scanpath(&slab.to_scanpath_text(), &cfg)?;
    let (ctx, layers) = ThermalContext::prepare(&layers, &cfg, mat, BeamParams::default())?;
    let ctl = ControlConfig::default().with_target(target_mm2 * MM2);
    let s = run_feedforward(&layers, &ctx, &ctl, &c, None, RunLimit::All)?;
    let mut out = s.powers();
    out.extend(s.entries.iter().map(|e| (e.region == RegionTag::Overhang) as u8 as f64));
    Ok(out)
}

fn js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen(js_name = powerFor)]
pub fn power_for_js(material: &str, t_b: f64, speed_mm_s: f64, target_mm2: f64) -> Result<Vec<f64>, JsValue> {
    power_for(material, t_b, speed_mm_s, target_mm2).map(|r| r.to_vec()).map_err(js)
}

#[wasm_bindgen(js_name = dwellLine)]
pub fn dwell_line_js(material: &str, cells: Vec<f64>, dz_um: f64, dwell_s: f64, plate_k: f64) -> Result<Vec<f64>, JsValue> {
    dwell_line(material, &cells, dz_um, dwell_s, plate_k).map_err(js)
}

#[wasm_bindgen(js_name = overhangSchedule)]
pub fn overhang_schedule_js(material: &str, target_mm2: f64) -> Result<Vec<f64>, JsValue> {
    overhang_schedule(material, target_mm2).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hotter_subsurface_needs_less_power() {
        let cold = power_for("IN718", 293.0, 1000.0, 0.0164).unwrap();
        let warm = power_for("IN718", 800.0, 1000.0, 0.0164).unwrap();
        assert!(warm[0] < cold[0]);
        assert!((cold[1] - 0.0164).abs() < 1e-9);
        assert!(power_for("steel", 293.0, 1000.0, 0.0164).is_err());
    }

    #[test]
    fn dwell_cools_a_hot_top() {
        let mut cells = vec![293.0; 20];
        cells[19] = 1200.0;
        let after = dwell_line("316LSS", &cells, 40.0, 1.0, 293.0).unwrap();
        assert_eq!(after.len(), 20);
        assert!(after[19] < 400.0);
        assert!(after.iter().all(|&t| t >= 293.0 - 1e-6));
    }

    #[test]
    fn overhang_vectors_get_less_power() {
        let out = overhang_schedule("IN718", 0.0164).unwrap();
        let n = out.len() / 2;
        let (p, flag) = out.split_at(n);
        let mean = |over: bool| {
            let v: Vec<f64> = p.iter().zip(flag).filter(|(_, &f)| (f == 1.0) == over).map(|(p, _)| *p).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) < mean(false));
    }
}
