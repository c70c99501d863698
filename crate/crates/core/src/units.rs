//! Unit conversions used at file boundaries.

pub const MM: f64 = 1e-3;
pub const UM: f64 = 1e-6;
pub const MS: f64 = 1e-3;
pub const MM2: f64 = 1e-6;

pub fn mm(v: f64) -> f64 {
    v * MM
}

pub fn to_mm(v: f64) -> f64 {
    v / MM
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + 273.15
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - 273.15
}
