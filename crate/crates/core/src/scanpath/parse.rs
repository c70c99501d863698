//! Line-oriented scan path format, version 1.
//!
//! ```text
//! # comment
//! layer <k> z <mm>
//! mark <x0> <y0> <x1> <y1> <speed mm/s> [power W]
//! jump [duration ms]
//! ```
//!
//! `z` is the height of the layer's top surface and must equal
//! `(k + 1) * layer_thickness`. A `jump` without a duration lasts the configured
//! skywrite time. Layers must appear in order with consecutive indices.

use std::fmt::Write as _;
use std::path::Path;

use super::{steps_for, GridConfig, LayerScan, Point3, RegionTag, ScanVector, VoxelGrid};
use crate::units::{mm, to_mm, MS};
use crate::{Error, Result};

pub fn load_scanpath(path: impl AsRef<Path>, cfg: &GridConfig) -> Result<Vec<LayerScan>> {
    let text = std::fs::read_to_string(path)?;
    parse_scanpath(&text, cfg)
}

pub fn parse_scanpath(text: &str, cfg: &GridConfig) -> Result<Vec<LayerScan>> {
    let mut layers: Vec<LayerScan> = Vec::new();
    let mut next_id = 0usize;
    let mut cursor = 0usize;
    let mut last_pos: Option<Point3> = None;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split_whitespace().collect();
        let keyword = fields.remove(0);
        if keyword == "layer" {
            if fields.len() != 3 || fields[1] != "z" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected `layer <k> z <mm>`".into(),
                });
            }
            fields.remove(1);
        }
        let nums: Vec<f64> = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<_>>()?;
        let perr = |msg: String| Error::Parse { line: line_no, msg };

        match keyword {
            "layer" => {
                let k = nums[0];
                if k < 0.0 || k.fract() != 0.0 {
                    return Err(perr(format!("layer index {k} is not a non-negative integer")));
                }
                let k = k as usize;
                let z = mm(nums[1]);
                let expected = (k + 1) as f64 * cfg.layer_thickness;
                if (z - expected).abs() > 1e-9 {
                    return Err(perr(format!(
                        "layer {k} at z = {} mm, expected {} mm",
                        nums[1],
                        to_mm(expected)
                    )));
                }
                if let Some(prev) = layers.last() {
                    if k != prev.index + 1 {
                        return Err(Error::LayerOrder(format!(
                            "line {line_no}: layer {k} follows layer {}",
                            prev.index
                        )));
                    }
                } else if k < cfg.substrate_layers {
                    return Err(Error::LayerOrder(format!(
                        "line {line_no}: layer {k} lies inside the {} substrate layers",
                        cfg.substrate_layers
                    )));
                }
                layers.push(LayerScan {
                    index: k,
                    z,
                    vectors: Vec::new(),
                    hatch_angle: 0.0,
                });
                cursor = 0;
                last_pos = None;
            }
            "mark" => {
                let layer = layers
                    .last_mut()
                    .ok_or_else(|| perr("`mark` before any `layer` header".into()))?;
                if nums.len() != 5 && nums.len() != 6 {
                    return Err(perr("expected `mark x0 y0 x1 y1 speed_mm_s [power_W]`".into()));
                }
                let speed = mm(nums[4]);
                if speed <= 0.0 {
                    return Err(perr("mark speed must be positive".into()));
                }
                let power = nums.get(5).copied().unwrap_or(cfg.default_power);
                if power < 0.0 {
                    return Err(perr("power must be non-negative".into()));
                }
                let start = Point3::new(mm(nums[0]), mm(nums[1]), layer.z);
                let end = Point3::new(mm(nums[2]), mm(nums[3]), layer.z);
                let n_steps = steps_for(start.distance(end) / speed, cfg.dt);
                layer.vectors.push(ScanVector {
                    id: next_id,
                    source_id: next_id,
                    layer: layer.index,
                    start,
                    end,
                    speed,
                    power_nominal: power,
                    is_mark: true,
                    n_steps,
                    start_step: cursor,
                    region: RegionTag::Bulk,
                });
                next_id += 1;
                cursor += n_steps;
                last_pos = Some(end);
            }
            "jump" => {
                let layer = layers
                    .last_mut()
                    .ok_or_else(|| perr("`jump` before any `layer` header".into()))?;
                let duration = match nums.as_slice() {
                    [] => cfg.skywrite_time,
                    [ms] if *ms > 0.0 => ms * MS,
                    [_] => return Err(perr("jump duration must be positive".into())),
                    _ => return Err(perr("expected `jump [duration_ms]`".into())),
                };
                let pos = last_pos.unwrap_or(Point3::new(0.0, 0.0, layer.z));
                let n_steps = steps_for(duration, cfg.dt);
                layer.vectors.push(ScanVector {
                    id: next_id,
                    source_id: next_id,
                    layer: layer.index,
                    start: pos,
                    end: pos,
                    speed: 0.0,
                    power_nominal: 0.0,
                    is_mark: false,
                    n_steps,
                    start_step: cursor,
                    region: RegionTag::Bulk,
                });
                next_id += 1;
                cursor += n_steps;
            }
            other => return Err(perr(format!("unknown record `{other}`"))),
        }
    }

    if let Some(extent) = cfg.extent {
        let probe = VoxelGrid::new(
            cfg.hatch_spacing,
            cfg.hatch_spacing,
            cfg.layer_thickness,
            Point3::new(extent.origin_x, extent.origin_y, 0.0),
            extent.nx,
            extent.ny,
            0,
        )?;
        for v in layers.iter().flat_map(|l| l.marks()) {
            for p in [v.start, v.end] {
                if !probe.contains_xy(p.x, p.y) {
                    return Err(Error::OutOfBounds { id: v.id, x: p.x, y: p.y });
                }
            }
        }
    }
    Ok(layers)
}

/// Writes layers back in the text format. Laser-off vectors become explicit
/// `jump` records.
pub fn write_scanpath(layers: &[LayerScan], dt: f64) -> String {
    let mut out = String::from("# scanpath format-version 1\n");
    for layer in layers {
        let _ = writeln!(out, "layer {} z {}", layer.index, fmt_num(to_mm(layer.z)));
        for v in &layer.vectors {
            if v.is_mark {
                let _ = writeln!(
                    out,
                    "mark {} {} {} {} {} {}",
                    fmt_num(to_mm(v.start.x)),
                    fmt_num(to_mm(v.start.y)),
                    fmt_num(to_mm(v.end.x)),
                    fmt_num(to_mm(v.end.y)),
                    fmt_num(to_mm(v.speed)),
                    fmt_num(v.power_nominal)
                );
            } else {
                let _ = writeln!(out, "jump {}", fmt_num(v.n_steps as f64 * dt / MS));
            }
        }
    }
    out
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}
