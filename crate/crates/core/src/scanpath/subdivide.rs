//! Splitting of scan vectors where the material underneath changes between
//! solid and powder.

use super::{traverse, LayerScan, RegionTag, ScanVector, VoxelGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
struct Fragment {
    t0: f64,
    t1: f64,
    solid_below: bool,
}

/// Splits every mark vector into fragments with uniform solid/powder
/// underneath. Fragments shorter than `merge_fraction * dx`, or that would
/// last zero time steps, are folded into their neighbour. Ids are renumbered
/// in scan order; `source_id` keeps the original segment.
pub fn subdivide_vectors(
    layers: &[LayerScan],
    grid: &VoxelGrid,
    merge_fraction: f64,
) -> Result<Vec<LayerScan>> {
    let mut next_id = 0usize;
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers {
        if layer.index >= grid.nz {
            return Err(Error::MissingOccupancy(layer.index));
        }
        let mut vectors = Vec::with_capacity(layer.vectors.len());
        for v in &layer.vectors {
            if !v.is_mark {
                let mut v = v.clone();
                v.id = next_id;
                next_id += 1;
                vectors.push(v);
                continue;
            }
            let fragments = split_vector(v, grid, merge_fraction);
            let split = fragments.len() > 1;
            let last = fragments.len() - 1;
            for (n, f) in fragments.iter().enumerate() {
                let s0 = step_at(f.t0, v.n_steps);
                let s1 = step_at(f.t1, v.n_steps);
                let region = if !f.solid_below {
                    RegionTag::Overhang
                } else if split || v.region == RegionTag::SubdividedTurnaround {
                    RegionTag::SubdividedTurnaround
                } else {
                    RegionTag::Bulk
                };
                vectors.push(ScanVector {
                    id: next_id,
                    start: if n == 0 { v.start } else { v.start.lerp(v.end, f.t0) },
                    end: if n == last { v.end } else { v.start.lerp(v.end, f.t1) },
                    n_steps: s1 - s0,
                    start_step: v.start_step + s0,
                    region,
                    ..v.clone()
                });
                next_id += 1;
            }
        }
        out.push(LayerScan {
            vectors,
            ..layer.clone()
        });
    }
    Ok(out)
}

fn step_at(t: f64, n_steps: usize) -> usize {
    ((t * n_steps as f64).round() as usize).min(n_steps)
}

fn split_vector(v: &ScanVector, grid: &VoxelGrid, merge_fraction: f64) -> Vec<Fragment> {
    let k = v.layer;
    let mut frags: Vec<Fragment> = Vec::new();
    for c in traverse(grid, v.start, v.end) {
        let solid_below = k == 0 || grid.is_part(c.i, c.j, k - 1);
        match frags.last_mut() {
            Some(f) if f.solid_below == solid_below => f.t1 = c.t_exit,
            _ => frags.push(Fragment {
                t0: c.t_enter,
                t1: c.t_exit,
                solid_below,
            }),
        }
    }
    let len = v.length();
    let min_t = if len > 0.0 {
        merge_fraction * grid.dx / len
    } else {
        f64::INFINITY
    };
    let too_short = |f: &Fragment| {
        f.t1 - f.t0 < min_t || step_at(f.t1, v.n_steps) == step_at(f.t0, v.n_steps)
    };

    // Fold short fragments into a neighbour, shortest first, then coalesce
    // neighbours of the same class.
    while frags.len() > 1 {
        let shortest = frags
            .iter()
            .enumerate()
            .filter(|(_, f)| too_short(f))
            .min_by(|a, b| (a.1.t1 - a.1.t0).total_cmp(&(b.1.t1 - b.1.t0)))
            .map(|(n, _)| n);
        let Some(n) = shortest else { break };
        let f = frags.remove(n);
        if n > 0 {
            frags[n - 1].t1 = f.t1;
        } else {
            frags[0].t0 = f.t0;
        }
        frags.dedup_by(|b, a| {
            if a.solid_below == b.solid_below {
                a.t1 = b.t1;
                true
            } else {
                false
            }
        });
    }
    frags
}
