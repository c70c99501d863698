//! Volume-integrated Goldak heat source.

use super::window::WindowLayout;
use super::{BeamParams, MaterialProps};
use crate::scanpath::{Point3, VoxelGrid};

/// Per-step temperature increments, keyed by window row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSource {
    pub entries: Vec<(u32, f64)>,
}

impl SparseSource {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Energy deposited by one application, in J.
    pub fn energy(&self, mat: &MaterialProps, cell_volume: f64) -> f64 {
        let sum: f64 = self.entries.iter().map(|e| e.1).sum();
        sum * mat.volumetric_heat_capacity() * cell_volume
    }
}

/// Integral of the normalised Gaussian along one axis over a cell of
/// half-width `half` centred at `c`, up to a factor of 2.
pub fn erf_factor(c: f64, half: f64, center: f64, r: f64) -> f64 {
    let s = 3f64.sqrt() / r;
    libm::erf(s * (c + half - center)) - libm::erf(s * (c - half - center))
}

/// z factor of a layer whose centroid sits at `zc`, with the beam on the
/// surface at `z_max`.
pub fn erf_factor_z(zc: f64, dz: f64, z_max: f64, rz: f64) -> f64 {
    let s = 3f64.sqrt() / rz;
    libm::erf(s * (zc + 0.5 * dz - z_max)) - libm::erf(s * (zc - 0.5 * dz - z_max))
}

/// Temperature increments from one time step of the beam at `pos` with power
/// `power`; the beam sits on the top surface of the window's highest layer.
pub fn integrated_goldak(
    pos: Point3,
    power: f64,
    layout: &WindowLayout,
    grid: &VoxelGrid,
    beam: &BeamParams,
    mat: &MaterialProps,
    dt: f64,
) -> SparseSource {
    if power <= 0.0 || layout.is_empty() {
        return SparseSource::default();
    }
    let reach = 4.0 * beam.max_radius();
    let z_max = grid.layer_top(layout.k_top);
    let amp = beam.f * mat.absorptivity * power / (4.0 * grid.dx * grid.dy * grid.dz) * dt
        / mat.volumetric_heat_capacity();

    let span = |lo: f64, hi: f64, origin: f64, d: f64, n: usize| {
        let a = ((lo - origin) / d).floor().max(0.0) as usize;
        let b = ((hi - origin) / d).floor();
        if b < 0.0 {
            return (1, 0);
        }
        (a, (b as usize).min(n - 1))
    };
    let (i0, i1) = span(pos.x - reach, pos.x + reach, grid.origin.x, grid.dx, grid.nx);
    let (j0, j1) = span(pos.y - reach, pos.y + reach, grid.origin.y, grid.dy, grid.ny);
    let k0 = grid.layer_of_z((z_max - reach).max(0.0)).max(layout.k_lo);

    let ex: Vec<f64> = (i0..=i1)
        .map(|i| erf_factor(grid.origin.x + (i as f64 + 0.5) * grid.dx, 0.5 * grid.dx, pos.x, beam.rx))
        .collect();
    let ey: Vec<f64> = (j0..=j1)
        .map(|j| erf_factor(grid.origin.y + (j as f64 + 0.5) * grid.dy, 0.5 * grid.dy, pos.y, beam.ry))
        .collect();

    let mut entries = Vec::new();
    for k in k0..=layout.k_top {
        let zc = (k as f64 + 0.5) * grid.dz;
        let ez = erf_factor_z(zc, grid.dz, z_max, beam.rz);
        for (jj, &fy) in ey.iter().enumerate() {
            for (ii, &fx) in ex.iter().enumerate() {
                if let Some(r) = layout.row(i0 + ii, j0 + jj, k) {
                    let v = amp * fx * fy * ez;
                    if v != 0.0 {
                        entries.push((r as u32, v));
                    }
                }
            }
        }
    }
    SparseSource { entries }
}
