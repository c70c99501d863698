//! Built-in scan path fixtures used for calibration and behavioural checks.

use std::fmt::Write as _;

use super::GridConfig;

/// Three-width snake hatch on a thick plate. Vectors run along y and the hatch
/// advances along x, widest step first.
#[derive(Clone, Debug, PartialEq)]
pub struct SteppedPyramid {
    /// Vector lengths of the three steps, widest first (mm).
    pub widths_mm: [f64; 3],
    pub vectors_per_step: usize,
    pub hatch_mm: f64,
    pub speed_mm_s: f64,
    pub power_w: f64,
    pub skywrite_ms: f64,
    pub layer_thickness_mm: f64,
    /// Solid plate layers under the scanned layer.
    pub substrate_layers: usize,
}

impl Default for SteppedPyramid {
    /// Full-size geometry: 333 vectors, 111 per width. The widths are
    /// approximate.
    fn default() -> Self {
        Self {
            widths_mm: [20.0, 13.4, 6.7],
            vectors_per_step: 111,
            hatch_mm: 0.09,
            speed_mm_s: 1000.0,
            power_w: 220.0,
            skywrite_ms: 1.8,
            layer_thickness_mm: 0.04,
            substrate_layers: 29,
        }
    }
}

impl SteppedPyramid {
    /// A third of the full size in every in-plane direction, on a thinner
    /// plate. Used where the full fixture is too slow.
    pub fn reduced() -> Self {
        Self {
            widths_mm: [20.0 / 3.0, 13.4 / 3.0, 6.7 / 3.0],
            vectors_per_step: 37,
            substrate_layers: 10,
            ..Self::default()
        }
    }

    /// Reduced widths with 25 vectors per step on a four-layer plate: the
    /// size used for repeated calibration runs.
    pub fn small() -> Self {
        Self {
            vectors_per_step: 25,
            substrate_layers: 4,
            ..Self::reduced()
        }
    }

    pub fn n_vectors(&self) -> usize {
        3 * self.vectors_per_step
    }

    fn x_of(&self, idx: usize) -> f64 {
        let half = (self.n_vectors() / 2) as f64;
        (idx as f64 - half + 0.5) * self.hatch_mm
    }

    /// Step (0 = widest) a vector at hatch position `x` (m) belongs to.
    pub fn step_of(&self, x: f64) -> usize {
        let half = (self.n_vectors() / 2) as f64;
        let idx = (x * 1e3 / self.hatch_mm + half - 0.5).round().max(0.0) as usize;
        (idx / self.vectors_per_step).min(2)
    }

    /// X range (m) of the second half of the widest step, past the start-up
    /// transient. For the default geometry this is about (-10, -5) mm.
    pub fn bulk_window(&self) -> (f64, f64) {
        let h = self.hatch_mm;
        let start = self.x_of(0) - 0.5 * h;
        let end = self.x_of(self.vectors_per_step - 1) + 0.5 * h;
        (0.5 * (start + end) * 1e-3, end * 1e-3)
    }

    pub fn layer_index(&self) -> usize {
        self.substrate_layers
    }

    pub fn grid_config(&self, base: &GridConfig) -> GridConfig {
        GridConfig {
            hatch_spacing: self.hatch_mm * 1e-3,
            layer_thickness: self.layer_thickness_mm * 1e-3,
            substrate_layers: self.substrate_layers,
            default_power: self.power_w,
            ..base.clone()
        }
    }

    pub fn to_scanpath_text(&self) -> String {
        let mut out = String::new();
        let k = self.layer_index();
        let _ = writeln!(out, "# stepped pyramid: widths {:?} mm, {} vectors per step", self.widths_mm, self.vectors_per_step);
        let _ = writeln!(out, "layer {k} z {}", fmt((k + 1) as f64 * self.layer_thickness_mm));
        for idx in 0..self.n_vectors() {
            let w = self.widths_mm[idx / self.vectors_per_step];
            let x = self.x_of(idx);
            let (y0, y1) = if idx % 2 == 0 { (-0.5 * w, 0.5 * w) } else { (0.5 * w, -0.5 * w) };
            if idx > 0 {
                let _ = writeln!(out, "jump {}", fmt(self.skywrite_ms));
            }
            let _ = writeln!(
                out,
                "mark {} {} {} {} {} {}",
                fmt(x),
                fmt(y0),
                fmt(x),
                fmt(y1),
                fmt(self.speed_mm_s),
                fmt(self.power_w)
            );
        }
        out
    }
}

/// Support block under part of the footprint with a wider slab on top; the
/// slab's first layer overhangs powder beyond the block.
#[derive(Clone, Debug, PartialEq)]
pub struct OverhangSlab {
    pub support_layers: usize,
    pub slab_layers: usize,
    /// Slab extent along the scan direction x (mm).
    pub width_mm: f64,
    /// Support extent along x (mm), measured from the same edge.
    pub support_width_mm: f64,
    /// Extent along the hatch direction y (mm).
    pub depth_mm: f64,
    pub hatch_mm: f64,
    pub speed_mm_s: f64,
    pub power_w: f64,
    pub skywrite_ms: f64,
    pub layer_thickness_mm: f64,
}

impl Default for OverhangSlab {
    fn default() -> Self {
        Self {
            support_layers: 3,
            slab_layers: 1,
            width_mm: 2.0,
            support_width_mm: 1.0,
            depth_mm: 1.8,
            hatch_mm: 0.09,
            speed_mm_s: 1000.0,
            power_w: 220.0,
            skywrite_ms: 1.8,
            layer_thickness_mm: 0.04,
        }
    }
}

impl OverhangSlab {
    pub fn small() -> Self {
        Self {
            support_layers: 2,
            width_mm: 1.0,
            support_width_mm: 0.5,
            depth_mm: 0.45,
            ..Self::default()
        }
    }

    pub fn slab_layer(&self) -> usize {
        self.support_layers
    }

    pub fn grid_config(&self, base: &GridConfig) -> GridConfig {
        GridConfig {
            hatch_spacing: self.hatch_mm * 1e-3,
            layer_thickness: self.layer_thickness_mm * 1e-3,
            substrate_layers: 0,
            default_power: self.power_w,
            ..base.clone()
        }
    }

    pub fn to_scanpath_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# overhang slab: {} support layers x {} mm, {} slab layers x {} mm",
            self.support_layers, self.support_width_mm, self.slab_layers, self.width_mm
        );
        let rows = (self.depth_mm / self.hatch_mm).round().max(1.0) as usize;
        for k in 0..self.support_layers + self.slab_layers {
            let w = if k < self.support_layers { self.support_width_mm } else { self.width_mm };
            let _ = writeln!(out, "layer {k} z {}", fmt((k + 1) as f64 * self.layer_thickness_mm));
            for r in 0..rows {
                let y = (r as f64 + 0.5) * self.hatch_mm;
                let (x0, x1) = if r % 2 == 0 { (0.0, w) } else { (w, 0.0) };
                if r > 0 {
                    let _ = writeln!(out, "jump {}", fmt(self.skywrite_ms));
                }
                let _ = writeln!(
                    out,
                    "mark {} {} {} {} {} {}",
                    fmt(x0),
                    fmt(y),
                    fmt(x1),
                    fmt(y),
                    fmt(self.speed_mm_s),
                    fmt(self.power_w)
                );
            }
        }
        out
    }
}

/// Widely spaced single tracks with a long pause between them, as in the
/// melt-pool calibration sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleTracks {
    pub count: usize,
    pub length_mm: f64,
    pub spacing_mm: f64,
    pub delay_ms: f64,
    pub speed_mm_s: f64,
    pub power_w: f64,
    pub layer_thickness_mm: f64,
    pub substrate_layers: usize,
}

impl Default for SingleTracks {
    fn default() -> Self {
        Self {
            count: 4,
            length_mm: 5.0,
            spacing_mm: 2.0,
            delay_ms: 500.0,
            speed_mm_s: 1000.0,
            power_w: 220.0,
            layer_thickness_mm: 0.04,
            substrate_layers: 10,
        }
    }
}

impl SingleTracks {
    pub fn grid_config(&self, base: &GridConfig) -> GridConfig {
        GridConfig {
            layer_thickness: self.layer_thickness_mm * 1e-3,
            substrate_layers: self.substrate_layers,
            default_power: self.power_w,
            ..base.clone()
        }
    }

    pub fn to_scanpath_text(&self) -> String {
        let mut out = String::new();
        let k = self.substrate_layers;
        let _ = writeln!(out, "# {} single tracks", self.count);
        let _ = writeln!(out, "layer {k} z {}", fmt((k + 1) as f64 * self.layer_thickness_mm));
        for n in 0..self.count {
            if n > 0 {
                let _ = writeln!(out, "jump {}", fmt(self.delay_ms));
            }
            let y = n as f64 * self.spacing_mm + 0.045;
            let _ = writeln!(
                out,
                "mark 0.045 {} {} {} {} {}",
                fmt(y),
                fmt(0.045 + self.length_mm),
                fmt(y),
                fmt(self.speed_mm_s),
                fmt(self.power_w)
            );
        }
        out
    }
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.9}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanpath::parse_scanpath;

    #[test]
    fn full_pyramid_has_333_marks_and_bulk_window() {
        let p = SteppedPyramid::default();
        let cfg = p.grid_config(&GridConfig { dt: 8e-5, ..GridConfig::default() });
        let layers = parse_scanpath(&p.to_scanpath_text(), &cfg).unwrap();
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].marks().count(), 333);
        assert_eq!(layers[0].index, 29);
        let (a, b) = p.bulk_window();
        assert!((a * 1e3 + 10.0).abs() < 0.1 && (b * 1e3 + 5.0).abs() < 0.1, "{a} {b}");
        let steps: Vec<usize> = layers[0].marks().map(|v| p.step_of(v.start.x)).collect();
        for s in 0..3 {
            assert_eq!(steps.iter().filter(|&&x| x == s).count(), 111);
        }
    }

    #[test]
    fn overhang_slab_layers() {
        let s = OverhangSlab::default();
        let cfg = s.grid_config(&GridConfig::default());
        let layers = parse_scanpath(&s.to_scanpath_text(), &cfg).unwrap();
        assert_eq!(layers.len(), 4);
        assert_eq!(layers[3].marks().count(), 20);
    }
}
