//! TOML run configuration. Every field has a default; material-dependent
//! defaults are filled in by [`RunConfig::resolve`], whose output is echoed
//! next to the results of each run.

use std::fs;
use std::path::{Path, PathBuf};

use lpbf_feedforward::controller::{AreaTarget, ControlConfig, OverheatPolicy};
use lpbf_feedforward::dwell::DwellConfig;
use lpbf_feedforward::meltpool::{MeltPoolCoefficients, UnitConvention};
use lpbf_feedforward::scanpath::GridConfig;
use lpbf_feedforward::thermal::{stability_bound, BeamParams, MaterialProps};
use lpbf_feedforward::units::{MM, MM2, UM};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub material: MaterialSection,
    pub grid: GridSection,
    pub beam: BeamSection,
    pub meltpool: MeltPoolSection,
    pub control: ControlSection,
    pub dwell: DwellConfig,
    pub tune: TuneSection,
    pub tracks: TrackSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    /// `IN718` or `316LSS`.
    pub preset: String,
    /// TOML file with a full property set; overrides the preset.
    pub file: Option<PathBuf>,
    /// Inline property set; overrides both.
    pub props: Option<MaterialProps>,
}

impl Default for MaterialSection {
    fn default() -> Self {
        Self {
            preset: "IN718".into(),
            file: None,
            props: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub hatch_um: f64,
    pub layer_thickness_um: f64,
    /// Half the explicit stability limit when unset.
    pub dt_s: Option<f64>,
    pub skywrite_ms: f64,
    pub substrate_layers: usize,
    pub margin_cells: usize,
    pub merge_fraction: f64,
    pub window_layers: usize,
    pub default_power_w: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            hatch_um: 90.0,
            layer_thickness_um: 40.0,
            dt_s: None,
            skywrite_ms: 1.8,
            substrate_layers: 0,
            margin_cells: 4,
            merge_fraction: 0.25,
            window_layers: 30,
            default_power_w: 220.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub spot_um: f64,
    /// Heat-input tuning factor; 2.5 for 316LSS and 4 otherwise when unset.
    pub f: Option<f64>,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self { spot_um: 78.0, f: None }
    }
}

/// Melt-pool constants with v in m/s and outputs in um.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeltPoolSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub area_target_mm2: f64,
    /// Per-region targets; any that is unset falls back to `area_target_mm2`.
    pub overhang_target_mm2: Option<f64>,
    pub turnaround_target_mm2: Option<f64>,
    pub p_min_w: f64,
    pub p_max_w: f64,
    /// 290 W for 316LSS and 220 W otherwise when unset.
    pub p_nominal_w: Option<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub overheat: OverheatPolicy,
}

impl Default for ControlSection {
    fn default() -> Self {
        let c = ControlConfig::default();
        Self {
            area_target_mm2: 0.0164,
            overhang_target_mm2: None,
            turnaround_target_mm2: None,
            p_min_w: c.p_min,
            p_max_w: c.p_max,
            p_nominal_w: None,
            tolerance: c.tolerance,
            max_iter: c.max_iter,
            overheat: c.overheat,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub f_values: Vec<f64>,
    /// Tuning factor of the virtual machine used as ground truth.
    pub f_true: Option<f64>,
    /// `vector_id,area_mm2` file; takes precedence over `f_true`.
    pub measured_areas: Option<PathBuf>,
    /// Built-in stepped pyramid size when no scan path is given:
    /// `full`, `reduced` or `small`.
    pub pyramid: String,
    /// Bulk window in mm; the pyramid's when unset.
    pub bulk_window_mm: Option<[f64; 2]>,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self {
            f_values: (0..9).map(|i| 1.0 + 0.5 * i as f64).collect(),
            f_true: None,
            measured_areas: None,
            pyramid: "small".into(),
            bulk_window_mm: None,
        }
    }
}

/// Synthetic single-track generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackSection {
    /// Standard deviation of the relative noise on widths and lengths.
    pub noise: f64,
    pub repeats: usize,
}

impl Default for TrackSection {
    fn default() -> Self {
        Self { noise: 0.05, repeats: 1 }
    }
}

/// Inputs to the core crate built from a resolved config.
#[derive(Clone, Debug)]
pub struct Setup {
    pub material: MaterialProps,
    pub grid: GridConfig,
    pub beam: BeamParams,
    pub coefficients: MeltPoolCoefficients,
    pub control: ControlConfig,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    /// Applies a `--material` override: a preset name or a property file.
    pub fn set_material(&mut self, m: &str) {
        if Path::new(m).is_file() {
            self.material.file = Some(m.into());
            self.material.props = None;
        } else {
            self.material = MaterialSection {
                preset: m.into(),
                ..MaterialSection::default()
            };
        }
    }

    /// Fills in every material-dependent default and loads the material
    /// file, so the result is self-contained.
    pub fn resolve(mut self) -> Result<(Self, Setup), CliError> {
        let material = match (&self.material.props, &self.material.file) {
            (Some(p), _) => p.clone(),
            (None, Some(f)) => {
                let text = fs::read_to_string(f).map_err(|e| config_err(format!("{}: {e}", f.display())))?;
                toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", f.display())))?
            }
            (None, None) => MaterialProps::preset(&self.material.preset)
                .ok_or_else(|| config_err(format!("unknown material preset `{}`", self.material.preset)))?,
        };
        material.validate()?;
        self.material.preset = material.name.clone();
        self.material.props = Some(material.clone());
        self.material.file = None;
        let is_316 = MaterialProps::preset(&material.name).is_some_and(|p| p.name == MaterialProps::ss316l().name);

        let g = &mut self.grid;
        for (name, v) in [("hatch_um", g.hatch_um), ("layer_thickness_um", g.layer_thickness_um)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("grid.{name} must be positive")));
            }
        }
        let (h, dz) = (g.hatch_um * UM, g.layer_thickness_um * UM);
        let dt = *g
            .dt_s
            .get_or_insert(0.5 * stability_bound(h, h, dz, material.diffusivity()));
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config_err("grid.dt_s must be positive"));
        }
        if g.window_layers == 0 {
            return Err(config_err("grid.window_layers must be at least 1"));
        }
        let grid = GridConfig {
            hatch_spacing: h,
            layer_thickness: dz,
            dt,
            skywrite_time: g.skywrite_ms * 1e-3,
            substrate_layers: g.substrate_layers,
            extent: None,
            margin_cells: g.margin_cells,
            merge_fraction: g.merge_fraction,
            default_power: g.default_power_w,
        };

        let f = *self.beam.f.get_or_insert(if is_316 { 2.5 } else { 4.0 });
        let beam = BeamParams::from_spot(self.beam.spot_um * UM, f);
        beam.validate()?;

        let preset = MeltPoolCoefficients::for_material(&material.name)
            .map(|c| c.in_convention(&UnitConvention::micrometre()));
        let mp = &mut self.meltpool;
        let (c1, c2) = match (mp.c1.or(preset.map(|p| p.0)), mp.c2.or(preset.map(|p| p.1))) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(config_err(format!("no melt-pool constants for material `{}`; set meltpool.c1 and meltpool.c2", material.name))),
        };
        mp.c1 = Some(c1);
        mp.c2 = Some(c2);
        let coefficients = MeltPoolCoefficients::from_convention(c1, c2, UnitConvention::micrometre())?;

        let ctl = &mut self.control;
        let p_nominal = *ctl.p_nominal_w.get_or_insert(if is_316 { 290.0 } else { 220.0 });
        let bulk = ctl.area_target_mm2 * MM2;
        let area_target = match (ctl.overhang_target_mm2, ctl.turnaround_target_mm2) {
            (None, None) => AreaTarget::Constant(bulk),
            (o, t) => AreaTarget::PerRegion {
                bulk,
                overhang: o.map_or(bulk, |a| a * MM2),
                turnaround: t.map_or(bulk, |a| a * MM2),
            },
        };
        let control = ControlConfig {
            area_target,
            p_min: ctl.p_min_w,
            p_max: ctl.p_max_w,
            p_nominal,
            tolerance: ctl.tolerance,
            max_iter: ctl.max_iter,
            overheat: ctl.overheat,
        };
        control.validate()?;
        if self.dwell.convection_coeff.is_none() {
            self.dwell.convection_coeff = Some(material.convection_coeff);
        }
        if !(self.dwell.dwell_time >= 0.0 && self.dwell.dwell_time.is_finite()) {
            return Err(config_err("dwell.dwell_time must be non-negative"));
        }
        if let Some([a, b]) = self.tune.bulk_window_mm {
            if !(a < b) {
                return Err(config_err("tune.bulk_window_mm must be increasing"));
            }
        }
        if !(self.tracks.noise >= 0.0 && self.tracks.noise.is_finite()) {
            return Err(config_err("tracks.noise must be non-negative"));
        }

        Ok((
            self,
            Setup {
                material,
                grid,
                beam,
                coefficients,
                control,
            },
        ))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Grid settings of a fixture, in this file's units.
    pub fn with_fixture_grid(mut self, g: &GridConfig) -> Self {
        self.grid.hatch_um = g.hatch_spacing / UM;
        self.grid.layer_thickness_um = g.layer_thickness / UM;
        self.grid.substrate_layers = g.substrate_layers;
        self.grid.skywrite_ms = g.skywrite_time * 1e3;
        self.grid.default_power_w = g.default_power;
        self
    }
}

/// Bulk window in m from a `[min, max]` pair in mm.
pub fn window_m(w: [f64; 2]) -> (f64, f64) {
    (w[0] * MM, w[1] * MM)
}
