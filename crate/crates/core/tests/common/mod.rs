//! Oracles shared by the integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use lpbf_feedforward::dwell::{DwellCase, PiecewiseLinearProfile};
use lpbf_feedforward::meltpool::{area, MeltPoolCoefficients};
use lpbf_feedforward::scanpath::GridConfig;
use lpbf_feedforward::thermal::{stability_bound, MaterialProps};
use rand::Rng;

/// Explicit 1-D finite differences on `refine` cells per profile cell,
/// advanced to each time in `times` (ascending). Returns the temperature at
/// `probe` heights for every time.
pub fn fdm_line(
    profile: &PiecewiseLinearProfile,
    case: DwellCase,
    alpha: f64,
    n_cells: usize,
    refine: usize,
    times: &[f64],
    probe: &[f64],
) -> Vec<Vec<f64>> {
    let nf = n_cells * refine;
    let l = profile.length;
    let dz = l / nf as f64;
    let mut t: Vec<f64> = (0..nf).map(|m| profile.eval((m as f64 + 0.5) * dz)).collect();
    let mut next = t.clone();
    let (bottom, top) = match case {
        DwellCase::ConvectionToConstant { t0, t_inf, h, k } => (Some(t0), Some((t_inf, h, k))),
        DwellCase::ConvectionToInsulated { t_inf, h, k } => (None, Some((t_inf, h, k))),
        DwellCase::InsulatedToInsulated => (None, None),
        DwellCase::InsulatedToConstant { t0 } => (Some(t0), None),
    };
    let r = alpha / (dz * dz);
    let top_g = top.map(|(_, h, k)| {
        let u = 1.0 / (0.5 * dz / k + 1.0 / h);
        alpha * u / (k * dz)
    });
    let max_rate = 2.0 * r + r.max(top_g.unwrap_or(0.0));
    let mut now = 0.0;
    let mut out = Vec::new();
    for &target in times {
        let span = target - now;
        if span > 0.0 {
            let steps = (span * max_rate / 0.9).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                for m in 1..nf - 1 {
                    let c = t[m];
                    next[m] = c + dt * r * ((t[m - 1] - c) + (t[m + 1] - c));
                }
                let c = t[0];
                let mut d = r * (t[1] - c);
                if let Some(t0) = bottom {
                    d += 2.0 * r * (t0 - c);
                }
                next[0] = c + dt * d;
                let c = t[nf - 1];
                let mut d = r * (t[nf - 2] - c);
                if let (Some((t_inf, ..)), Some(g)) = (top, top_g) {
                    d += g * (t_inf - c);
                }
                next[nf - 1] = c + dt * d;
                std::mem::swap(&mut t, &mut next);
            }
            now = target;
        }
        out.push(
            probe
                .iter()
                .map(|&z| {
                    let x = (z / dz - 0.5).clamp(0.0, (nf - 1) as f64);
                    let m = (x.floor() as usize).min(nf - 2);
                    let w = x - m as f64;
                    t[m] * (1.0 - w) + t[m + 1] * w
                })
                .collect(),
        );
    }
    out
}

/// Random cell values between 300 K and 1500 K.
pub fn random_cells<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(300.0..1500.0)).collect()
}

pub fn all_cases(k: f64, h: f64, t0: f64, t_inf: f64) -> [DwellCase; 4] {
    [
        DwellCase::ConvectionToConstant { t0, t_inf, h, k },
        DwellCase::ConvectionToInsulated { t_inf, h, k },
        DwellCase::InsulatedToInsulated,
        DwellCase::InsulatedToConstant { t0 },
    ]
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// `cfg` with the time step set to half the forward-Euler limit for `mat`.
pub fn stable_grid_config(cfg: GridConfig, mat: &MaterialProps) -> GridConfig {
    let dt = 0.5 * stability_bound(cfg.hatch_spacing, cfg.hatch_spacing, cfg.layer_thickness, mat.diffusivity());
    GridConfig { dt, ..cfg }
}

/// Power whose area matches `target`, by plain bisection on the forward
/// model over `[lo, hi]`.
pub fn invert_area(
    target: f64,
    v: f64,
    t_b: f64,
    c: &MeltPoolCoefficients,
    mat: &MaterialProps,
    lo: f64,
    hi: f64,
) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area(mid, v, t_b, c, mat).unwrap() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
