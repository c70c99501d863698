//! Scan path ingestion and mapping onto the voxel grid.
//!
//! A scan path is a list of layers, each an ordered list of [`ScanVector`]s on a
//! layer-local timeline of `dt`-sized steps. Laser-off time (jumps and
//! skywriting) is kept as zero-power vectors so the thermal model keeps cooling
//! between marks.

mod fixtures;
mod grid;
mod parse;
mod subdivide;
mod traversal;

pub use fixtures::{OverhangSlab, SingleTracks, SteppedPyramid};
pub use grid::{GridConfig, GridExtent, VoxelGrid};
pub use parse::{load_scanpath, parse_scanpath, write_scanpath};
pub use subdivide::subdivide_vectors;
pub use traversal::{map_vector_to_elements, traverse, CellCrossing};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn lerp(self, other: Point3, t: f64) -> Point3 {
        Point3 {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            z: self.z + (other.z - self.z) * t,
        }
    }

    pub fn distance(self, other: Point3) -> f64 {
        ((other.x - self.x).powi(2) + (other.y - self.y).powi(2) + (other.z - self.z).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionTag {
    /// Solid material underneath.
    Bulk,
    /// Powder underneath.
    Overhang,
    /// Solid underneath, but part of a line that was split at a solid/powder transition.
    SubdividedTurnaround,
}

impl RegionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::Bulk => "bulk",
            RegionTag::Overhang => "overhang",
            RegionTag::SubdividedTurnaround => "subdivided-turnaround",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanVector {
    pub id: usize,
    /// Id of the scan path segment this vector was cut from.
    pub source_id: usize,
    pub layer: usize,
    pub start: Point3,
    pub end: Point3,
    /// Marking speed in m/s; zero for laser-off vectors.
    pub speed: f64,
    pub power_nominal: f64,
    pub is_mark: bool,
    pub n_steps: usize,
    /// First step, counted from the start of the layer.
    pub start_step: usize,
    pub region: RegionTag,
}

impl ScanVector {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn midpoint(&self) -> Point3 {
        self.start.lerp(self.end, 0.5)
    }

    pub fn end_step(&self) -> usize {
        self.start_step + self.n_steps
    }

    /// Beam position during local step `m`, sampled at the middle of the step.
    pub fn position_at_step(&self, m: usize, dt: f64) -> Point3 {
        let len = self.length();
        if len == 0.0 || self.speed <= 0.0 {
            return self.start;
        }
        let s = (self.speed * (m as f64 + 0.5) * dt).min(len);
        self.start.lerp(self.end, s / len)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerScan {
    pub index: usize,
    /// Height of the layer's top surface above the build plate, in m.
    pub z: f64,
    pub vectors: Vec<ScanVector>,
    pub hatch_angle: f64,
}

impl LayerScan {
    pub fn marks(&self) -> impl Iterator<Item = &ScanVector> {
        self.vectors.iter().filter(|v| v.is_mark)
    }

    pub fn total_steps(&self) -> usize {
        self.vectors.last().map_or(0, |v| v.end_step())
    }

    pub fn marked_length(&self) -> f64 {
        self.marks().map(ScanVector::length).sum()
    }
}

/// Number of `dt` steps needed to cover `duration`, at least one.
pub fn steps_for(duration: f64, dt: f64) -> usize {
    let n = duration / dt;
    ((n - 1e-9).ceil().max(1.0)) as usize
}
