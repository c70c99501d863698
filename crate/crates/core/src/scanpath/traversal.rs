//! Digital-line traversal of a vector across the in-plane voxel lattice.
//!
//! A cell is reported when a positive-length piece of the segment lies in it,
//! with points on cell faces assigned by the floor rule (cell `i` owns
//! `[i, i+1)`). Nothing a segment passes through is skipped; a segment that
//! passes exactly through a lattice corner steps diagonally.

use super::{ScanVector, VoxelGrid};
use super::Point3;

/// One cell visited by a segment, with the segment parameter range inside it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellCrossing {
    pub i: usize,
    pub j: usize,
    pub t_enter: f64,
    pub t_exit: f64,
}

const T_EPS: f64 = 1e-12;

/// Ordered cells crossed by the segment `start -> end`, clipped to the grid.
pub fn traverse(grid: &VoxelGrid, start: Point3, end: Point3) -> Vec<CellCrossing> {
    let (u0, v0) = grid.to_cell_coords(start.x, start.y);
    let (u1, v1) = grid.to_cell_coords(end.x, end.y);
    let (du, dv) = (u1 - u0, v1 - v0);
    let clamp_i = |u: f64| (u.floor().max(0.0) as i64).min(grid.nx as i64 - 1);
    let clamp_j = |v: f64| (v.floor().max(0.0) as i64).min(grid.ny as i64 - 1);

    let mut i = clamp_i(u0);
    let mut j = clamp_j(v0);
    if du == 0.0 && dv == 0.0 {
        return vec![CellCrossing {
            i: i as usize,
            j: j as usize,
            t_enter: 0.0,
            t_exit: 1.0,
        }];
    }

    let step_i: i64 = if du > 0.0 { 1 } else { -1 };
    let step_j: i64 = if dv > 0.0 { 1 } else { -1 };
    let boundary_t = |cell: i64, origin: f64, d: f64| -> f64 {
        if d > 0.0 {
            ((cell + 1) as f64 - origin) / d
        } else if d < 0.0 {
            (cell as f64 - origin) / d
        } else {
            f64::INFINITY
        }
    };
    let mut t_max_i = boundary_t(i, u0, du);
    let mut t_max_j = boundary_t(j, v0, dv);
    let dt_i = if du != 0.0 { 1.0 / du.abs() } else { f64::INFINITY };
    let dt_j = if dv != 0.0 { 1.0 / dv.abs() } else { f64::INFINITY };

    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let t_next = t_max_i.min(t_max_j).min(1.0);
        if t_next - t > T_EPS {
            out.push(CellCrossing {
                i: i as usize,
                j: j as usize,
                t_enter: t,
                t_exit: t_next,
            });
        }
        if t_next >= 1.0 - T_EPS {
            if let Some(last) = out.last_mut() {
                last.t_exit = 1.0;
            }
            break;
        }
        let cross_i = t_max_i <= t_next + T_EPS;
        let cross_j = t_max_j <= t_next + T_EPS;
        if cross_i {
            i += step_i;
            t_max_i += dt_i;
        }
        if cross_j {
            j += step_j;
            t_max_j += dt_j;
        }
        t = t_next;
        if i < 0 || j < 0 || i >= grid.nx as i64 || j >= grid.ny as i64 {
            if let Some(last) = out.last_mut() {
                last.t_exit = 1.0;
            }
            break;
        }
    }
    if out.is_empty() {
        out.push(CellCrossing {
            i: clamp_i(u0) as usize,
            j: clamp_j(v0) as usize,
            t_enter: 0.0,
            t_exit: 1.0,
        });
    }
    out
}

/// Ordered distinct voxels `(i, j, k)` under a vector, in its own layer.
pub fn map_vector_to_elements(v: &ScanVector, grid: &VoxelGrid) -> Vec<(usize, usize, usize)> {
    traverse(grid, v.start, v.end)
        .into_iter()
        .map(|c| (c.i, c.j, v.layer))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanpath::{RegionTag, ScanVector};
    use proptest::prelude::*;

    fn grid(n: usize) -> VoxelGrid {
        VoxelGrid::new(1.0, 1.0, 1.0, Point3::default(), n, n, 1).unwrap()
    }

    fn vector(a: (f64, f64), b: (f64, f64)) -> ScanVector {
        ScanVector {
            id: 0,
            source_id: 0,
            layer: 0,
            start: Point3::new(a.0, a.1, 1.0),
            end: Point3::new(b.0, b.1, 1.0),
            speed: 1.0,
            power_nominal: 100.0,
            is_mark: true,
            n_steps: 1,
            start_step: 0,
            region: RegionTag::Bulk,
        }
    }

    /// Independent oracle: a cell is hit when the set of segment parameters
    /// whose point falls in `[i, i+1) x [j, j+1)` has positive length.
    fn brute_force(g: &VoxelGrid, a: (f64, f64), b: (f64, f64)) -> Vec<(usize, usize)> {
        let axis = |lo: f64, p0: f64, d: f64| -> (f64, f64) {
            if d == 0.0 {
                if p0 >= lo && p0 < lo + 1.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (1.0, 0.0)
                }
            } else {
                let ta = (lo - p0) / d;
                let tb = (lo + 1.0 - p0) / d;
                (ta.min(tb), ta.max(tb))
            }
        };
        let mut hits = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (a0, a1) = axis(i as f64, a.0, b.0 - a.0);
                let (b0, b1) = axis(j as f64, a.1, b.1 - a.1);
                let lo = a0.max(b0).max(0.0);
                let hi = a1.min(b1).min(1.0);
                if hi - lo > 1e-9 {
                    hits.push((i, j));
                }
            }
        }
        hits.sort();
        hits
    }

    #[test]
    fn axis_aligned_ten_cells_from_centre_gives_eleven() {
        let g = grid(20);
        let v = vector((0.5, 3.5), (10.5, 3.5));
        let cells = map_vector_to_elements(&v, &g);
        assert_eq!(cells.len(), 11);
        assert_eq!(cells.first(), Some(&(0, 3, 0)));
        assert_eq!(cells.last(), Some(&(10, 3, 0)));
    }

    #[test]
    fn zero_length_is_one_cell() {
        let g = grid(5);
        let v = vector((2.3, 1.7), (2.3, 1.7));
        assert_eq!(map_vector_to_elements(&v, &g), vec![(2, 1, 0)]);
    }

    #[test]
    fn diagonal_through_corners_matches_oracle() {
        let g = grid(5);
        let a = (0.5, 0.5);
        let b = (2.5, 2.5);
        let mut cells: Vec<_> = traverse(&g, Point3::new(a.0, a.1, 0.0), Point3::new(b.0, b.1, 0.0))
            .iter()
            .map(|c| (c.i, c.j))
            .collect();
        assert_eq!(cells, vec![(0, 0), (1, 1), (2, 2)]);
        cells.sort();
        assert_eq!(cells, brute_force(&g, a, b));
    }

    #[test]
    fn shallow_diagonal_visits_every_crossed_cell() {
        let g = grid(8);
        let a = (0.2, 0.3);
        let b = (7.7, 2.9);
        let mut cells: Vec<_> = traverse(&g, Point3::new(a.0, a.1, 0.0), Point3::new(b.0, b.1, 0.0))
            .iter()
            .map(|c| (c.i, c.j))
            .collect();
        cells.sort();
        assert_eq!(cells, brute_force(&g, a, b));
    }

    proptest! {
        #[test]
        fn traversal_matches_brute_force(
            x0 in 0.0f64..12.0, y0 in 0.0f64..12.0, x1 in 0.0f64..12.0, y1 in 0.0f64..12.0,
        ) {
            let g = grid(12);
            let crossings = traverse(&g, Point3::new(x0, y0, 0.0), Point3::new(x1, y1, 0.0));
            let mut cells: Vec<_> = crossings.iter().map(|c| (c.i, c.j)).collect();
            let n = cells.len();
            cells.sort();
            cells.dedup();
            prop_assert_eq!(cells.len(), n, "cells repeated");
            if (x1 - x0).abs() + (y1 - y0).abs() > 1e-6 {
                prop_assert_eq!(cells, brute_force(&g, (x0, y0), (x1, y1)));
            }
            // Parameter ranges tile [0, 1] in order.
            prop_assert!(crossings[0].t_enter == 0.0);
            prop_assert!(crossings[n - 1].t_exit == 1.0);
            for w in crossings.windows(2) {
                prop_assert!((w[0].t_exit - w[1].t_enter).abs() < 1e-9);
            }
        }

        #[test]
        fn every_cell_lies_within_half_a_cell_of_the_segment(
            x0 in 0.0f64..10.0, y0 in 0.0f64..10.0, x1 in 0.0f64..10.0, y1 in 0.0f64..10.0,
        ) {
            let g = grid(10);
            let a = Point3::new(x0, y0, 0.0);
            let b = Point3::new(x1, y1, 0.0);
            for c in traverse(&g, a, b) {
                // Distance from the cell centre to the segment is at most the
                // half-diagonal, i.e. the cell touches the swept band of width h.
                let (cx, cy) = (c.i as f64 + 0.5, c.j as f64 + 0.5);
                let (dx, dy) = (x1 - x0, y1 - y0);
                let l2 = dx * dx + dy * dy;
                let t = if l2 == 0.0 { 0.0 } else { (((cx - x0) * dx + (cy - y0) * dy) / l2).clamp(0.0, 1.0) };
                let d = ((x0 + t * dx - cx).powi(2) + (y0 + t * dy - cy).powi(2)).sqrt();
                prop_assert!(d <= 0.5f64.sqrt() + 1e-9);
            }
        }
    }
}
