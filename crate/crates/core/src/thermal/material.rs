use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Thermophysical constants for the conduction model and melt-pool model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    pub name: String,
    /// kg/m^3
    pub density: f64,
    /// J/(kg K)
    pub heat_capacity: f64,
    /// W/(m K)
    pub conductivity: f64,
    /// W/(m^2 K)
    pub convection_coeff: f64,
    pub melting_temp: f64,
    pub ambient_temp: f64,
    pub baseplate_temp: f64,
    pub absorptivity: f64,
    /// Powder density as a fraction of the solid density.
    pub powder_density_factor: f64,
    /// Powder conductivity as a fraction of the solid conductivity.
    pub powder_conductivity_factor: f64,
}

impl MaterialProps {
    pub fn in718() -> Self {
        Self {
            name: "IN718".into(),
            density: 8260.0,
            heat_capacity: 543.0,
            conductivity: 14.90,
            convection_coeff: 20.0,
            melting_temp: 1610.0,
            ambient_temp: 293.0,
            baseplate_temp: 293.0,
            absorptivity: 0.33,
            powder_density_factor: 0.48,
            powder_conductivity_factor: 0.10,
        }
    }

    pub fn ss316l() -> Self {
        Self {
            name: "316LSS".into(),
            density: 7900.0,
            heat_capacity: 434.0,
            conductivity: 13.96,
            melting_temp: 1710.0,
            ..Self::in718()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().replace(['-', '_', ' '], "").as_str() {
            "IN718" | "INCONEL718" => Some(Self::in718()),
            "316LSS" | "316L" | "SS316L" => Some(Self::ss316l()),
            _ => None,
        }
    }

    /// m^2/s
    pub fn diffusivity(&self) -> f64 {
        self.conductivity / (self.density * self.heat_capacity)
    }

    /// Volumetric heat capacity, J/(m^3 K).
    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.heat_capacity
    }

    /// Powder diffusivity with the solid's specific heat.
    pub fn powder_diffusivity(&self) -> f64 {
        self.powder_conductivity_factor * self.conductivity
            / (self.powder_density_factor * self.density * self.heat_capacity)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("density", self.density),
            ("heat_capacity", self.heat_capacity),
            ("conductivity", self.conductivity),
            ("convection_coeff", self.convection_coeff),
            ("melting_temp", self.melting_temp),
            ("ambient_temp", self.ambient_temp),
            ("baseplate_temp", self.baseplate_temp),
            ("absorptivity", self.absorptivity),
            ("powder_density_factor", self.powder_density_factor),
            ("powder_conductivity_factor", self.powder_conductivity_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("material {name} must be positive, got {v}")));
            }
        }
        if self.absorptivity > 1.0 {
            return Err(Error::invalid("absorptivity must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Goldak source shape and heat-input tuning factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
    /// Heat-input tuning factor.
    pub f: f64,
    pub spot_size: f64,
}

impl BeamParams {
    /// Equal radii of half the spot size.
    pub fn from_spot(spot_size: f64, f: f64) -> Self {
        let r = 0.5 * spot_size;
        Self {
            rx: r,
            ry: r,
            rz: r,
            f,
            spot_size,
        }
    }

    pub fn max_radius(&self) -> f64 {
        self.rx.max(self.ry).max(self.rz)
    }

    pub fn with_f(&self, f: f64) -> Self {
        Self { f, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rx > 0.0 && self.ry > 0.0 && self.rz > 0.0) {
            return Err(Error::invalid("beam radii must be positive"));
        }
        if !(self.f > 0.0) {
            return Err(Error::invalid("tuning factor f must be positive"));
        }
        Ok(())
    }
}

impl Default for BeamParams {
    /// 78 um D4-sigma spot, f = 4.
    fn default() -> Self {
        Self::from_spot(78e-6, 4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let m = MaterialProps::in718();
        assert!((m.diffusivity() - 14.9 / (8260.0 * 543.0)).abs() < 1e-20);
        assert!((m.powder_diffusivity() - 0.1 * 14.9 / (0.48 * 8260.0 * 543.0)).abs() < 1e-20);
        let s = MaterialProps::preset("316lss").unwrap();
        assert_eq!(s.melting_temp, 1710.0);
        assert_eq!(s.density, 7900.0);
        assert!(MaterialProps::preset("Ti64").is_none());
        m.validate().unwrap();
    }

    #[test]
    fn beam_radius_is_half_spot() {
        let b = BeamParams::default();
        assert!((b.rx - 39e-6).abs() < 1e-18);
    }
}
