//! One-dimensional transient conduction on `[0, L]` by eigenfunction series.
//! `z = 0` is the bottom of a line, `z = L` its top.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary conditions of a Z-line: top condition first, then bottom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DwellCase {
    /// Convection at the top, fixed temperature `t0` at the bottom.
    ConvectionToConstant { t0: f64, t_inf: f64, h: f64, k: f64 },
    /// Convection at the top, insulated bottom.
    ConvectionToInsulated { t_inf: f64, h: f64, k: f64 },
    InsulatedToInsulated,
    /// Insulated top, fixed temperature `t0` at the bottom.
    InsulatedToConstant { t0: f64 },
}

impl DwellCase {
    pub fn id(&self) -> u8 {
        match self {
            DwellCase::ConvectionToConstant { .. } => 1,
            DwellCase::ConvectionToInsulated { .. } => 2,
            DwellCase::InsulatedToInsulated => 3,
            DwellCase::InsulatedToConstant { .. } => 4,
        }
    }

    fn biot(&self, length: f64) -> f64 {
        match *self {
            DwellCase::ConvectionToConstant { h, k, .. } | DwellCase::ConvectionToInsulated { h, k, .. } => {
                h * length / k
            }
            _ => 0.0,
        }
    }

    /// Temperature held at `z = 0`, if any.
    pub fn fixed_bottom(&self) -> Option<f64> {
        match *self {
            DwellCase::ConvectionToConstant { t0, .. } | DwellCase::InsulatedToConstant { t0 } => Some(t0),
            _ => None,
        }
    }

    fn uses_sine(&self) -> bool {
        matches!(self, DwellCase::ConvectionToConstant { .. } | DwellCase::InsulatedToConstant { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DwellCase::ConvectionToConstant { h, k, .. } | DwellCase::ConvectionToInsulated { h, k, .. }
                if !(h > 0.0 && k > 0.0) =>
            {
                Err(Error::invalid("convective dwell case needs h > 0 and k > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// Piecewise-linear temperature profile over `[0, length]`, constant
/// outside its first and last node.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearProfile {
    pub z: Vec<f64>,
    pub t: Vec<f64>,
    pub length: f64,
}

impl PiecewiseLinearProfile {
    pub fn new(z: Vec<f64>, t: Vec<f64>, length: f64) -> Result<Self> {
        if z.len() != t.len() || z.len() < 2 {
            return Err(Error::invalid("profile needs at least two nodes with matching temperatures"));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("profile nodes must be strictly increasing"));
        }
        if z[0] < 0.0 || *z.last().unwrap() > length {
            return Err(Error::invalid("profile nodes must lie within the domain"));
        }
        Ok(Self { z, t, length })
    }

    /// Nodes at the centres of `values.len()` cells of height `dz`, extended
    /// to both ends of the line.
    pub fn from_cells(values: &[f64], dz: f64) -> Self {
        let n = values.len();
        let length = n as f64 * dz;
        let mut z = Vec::with_capacity(n + 2);
        let mut t = Vec::with_capacity(n + 2);
        z.push(0.0);
        t.push(values[0]);
        for (k, &v) in values.iter().enumerate() {
            z.push((k as f64 + 0.5) * dz);
            t.push(v);
        }
        z.push(length);
        t.push(values[n - 1]);
        Self { z, t, length }
    }

    /// Like [`Self::from_cells`], but the node at `z = 0` takes the fixed
    /// bottom temperature of `case` when it has one, so the profile meets the
    /// boundary continuously.
    pub fn for_case(values: &[f64], dz: f64, case: &DwellCase) -> Self {
        let mut p = Self::from_cells(values, dz);
        if let Some(t0) = case.fixed_bottom() {
            p.t[0] = t0;
        }
        p
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z <= self.z[0] {
            return self.t[0];
        }
        if z >= self.z[n - 1] {
            return self.t[n - 1];
        }
        let e = self.z.partition_point(|&zn| zn <= z) - 1;
        let (z1, z2) = (self.z[e], self.z[e + 1]);
        self.t[e] + (self.t[e + 1] - self.t[e]) * (z - z1) / (z2 - z1)
    }

    pub fn range(&self) -> f64 {
        let lo = self.t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Linear pieces `(z1, z2, a, b)` with `T = a + b z`, covering `[0, length]`.
    fn pieces(&self) -> Vec<(f64, f64, f64, f64)> {
        let n = self.z.len();
        let mut out = Vec::with_capacity(n + 1);
        if self.z[0] > 0.0 {
            out.push((0.0, self.z[0], self.t[0], 0.0));
        }
        for e in 0..n - 1 {
            let (z1, z2) = (self.z[e], self.z[e + 1]);
            let b = (self.t[e + 1] - self.t[e]) / (z2 - z1);
            out.push((z1, z2, self.t[e] - b * z1, b));
        }
        if self.z[n - 1] < self.length {
            out.push((self.z[n - 1], self.length, self.t[n - 1], 0.0));
        }
        out
    }
}

fn root_fn(case_id: u8, beta: f64, bi: f64) -> (f64, f64) {
    let (s, c) = beta.sin_cos();
    if case_id == 1 {
        (beta * c + bi * s, c - beta * s + bi * c)
    } else {
        (beta * s - bi * c, s + beta * c + bi * s)
    }
}

/// Residual of the eigenvalue rule at `lambda`, scaled by `|lambda L| + Bi`.
pub fn eigen_residual(case: &DwellCase, length: f64, lambda: f64) -> f64 {
    let bi = case.biot(length);
    match case.id() {
        1 | 2 => {
            let beta = lambda * length;
            root_fn(case.id(), beta, bi).0.abs() / (beta.abs() + bi)
        }
        _ => 0.0,
    }
}

/// `n`-th eigenvalue (from 1) of `case` on a line of length `length`.
pub fn eigenvalue(case: &DwellCase, length: f64, n: usize) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let nf = n as f64;
    match case.id() {
        3 => nf * PI / length,
        4 => (2.0 * nf - 1.0) * PI / (2.0 * length),
        id => {
            let bi = case.biot(length);
            let (mut lo, mut hi) = if id == 1 {
                (nf * PI - FRAC_PI_2, nf * PI)
            } else {
                ((nf - 1.0) * PI, nf * PI - FRAC_PI_2)
            };
            let f_lo = root_fn(id, lo, bi).0;
            let f_hi = root_fn(id, hi, bi).0;
            assert!(f_lo * f_hi <= 0.0, "eigenvalue bracket {n} holds no sign change");
            let neg_at_lo = f_lo < 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (root_fn(id, mid, bi).0 < 0.0) == neg_at_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut beta = 0.5 * (lo + hi);
            for _ in 0..3 {
                let (f, df) = root_fn(id, beta, bi);
                if df == 0.0 {
                    break;
                }
                let next = beta - f / df;
                if !(next >= lo && next <= hi) {
                    break;
                }
                beta = next;
            }
            beta / length
        }
    }
}

/// The first `m` eigenvalues.
pub fn solve_eigenvalues(case: &DwellCase, length: f64, m: usize) -> Result<Vec<f64>> {
    case.validate()?;
    if m == 0 {
        return Err(Error::invalid("need at least one eigenvalue"));
    }
    if !(length > 0.0) {
        return Err(Error::invalid("domain length must be positive"));
    }
    Ok((1..=m).map(|n| eigenvalue(case, length, n)).collect())
}

/// Steady part plus damped modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSolution {
    pub case: DwellCase,
    pub length: f64,
    pub lambdas: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// Mean temperature (insulated line only).
    pub c0: f64,
    /// Steady gradient (convection over fixed temperature only).
    pub k_slope: f64,
}

impl SeriesSolution {
    fn new(case: DwellCase, length: f64, profile: &PiecewiseLinearProfile) -> Self {
        let k_slope = match case {
            DwellCase::ConvectionToConstant { t0, t_inf, h, k } => h * (t_inf - t0) / (h * length + k),
            _ => 0.0,
        };
        let c0 = match case {
            DwellCase::InsulatedToInsulated => {
                profile
                    .pieces()
                    .iter()
                    .map(|&(z1, z2, a, b)| a * (z2 - z1) + 0.5 * b * (z2 * z2 - z1 * z1))
                    .sum::<f64>()
                    / length
            }
            _ => 0.0,
        };
        Self {
            case,
            length,
            lambdas: Vec::new(),
            coeffs: Vec::new(),
            c0,
            k_slope,
        }
    }

    /// Time-independent part at height `z`.
    pub fn steady(&self, z: f64) -> f64 {
        match self.case {
            DwellCase::ConvectionToConstant { t0, .. } => t0 + self.k_slope * z,
            DwellCase::ConvectionToInsulated { t_inf, .. } => t_inf,
            DwellCase::InsulatedToInsulated => self.c0,
            DwellCase::InsulatedToConstant { t0 } => t0,
        }
    }

    /// Pieces of `T_ic - steady`, still linear.
    fn deviation_pieces(&self, profile: &PiecewiseLinearProfile) -> Vec<(f64, f64, f64, f64)> {
        let s0 = self.steady(0.0);
        let ds = self.steady(1.0) - s0;
        profile
            .pieces()
            .into_iter()
            .map(|(z1, z2, a, b)| (z1, z2, a - s0, b - ds))
            .collect()
    }

    /// Projection of the deviation pieces on mode `lambda`.
    fn coefficient(&self, pieces: &[(f64, f64, f64, f64)], lambda: f64) -> f64 {
        let l = self.length;
        let sine = self.case.uses_sine();
        let mut integral = 0.0;
        for &(z1, z2, a, b) in pieces {
            let anti = |z: f64| {
                let (s, c) = (lambda * z).sin_cos();
                if sine {
                    -(a + b * z) * c / lambda + b * s / (lambda * lambda)
                } else {
                    (a + b * z) * s / lambda + b * c / (lambda * lambda)
                }
            };
            integral += anti(z2) - anti(z1);
        }
        let norm = match self.case.id() {
            1 => 0.5 * (l - (2.0 * lambda * l).sin() / (2.0 * lambda)),
            2 => 0.5 * (l + (2.0 * lambda * l).sin() / (2.0 * lambda)),
            _ => 0.5 * l,
        };
        integral / norm
    }

    pub fn evaluate(&self, alpha: f64, t: f64, z: f64) -> f64 {
        let sine = self.case.uses_sine();
        let mut acc = self.steady(z);
        for (&lam, &c) in self.lambdas.iter().zip(&self.coeffs) {
            let decay = (-lam * lam * alpha * t).exp();
            let phi = if sine { (lam * z).sin() } else { (lam * z).cos() };
            acc += c * decay * phi;
        }
        acc
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }
}

/// Coefficients of `profile` on the given modes.
pub fn project_profile(profile: &PiecewiseLinearProfile, case: DwellCase, lambdas: &[f64]) -> SeriesSolution {
    let mut sol = SeriesSolution::new(case, profile.length, profile);
    let pieces = sol.deviation_pieces(profile);
    sol.coeffs = lambdas.iter().map(|&l| sol.coefficient(&pieces, l)).collect();
    sol.lambdas = lambdas.to_vec();
    sol
}

/// Upper bound on the number of modes kept.
pub const MAX_MODES: usize = 500;

/// Number of modes whose decay over `t` is still above `1e-15`.
pub fn modes_needed(case: &DwellCase, length: f64, alpha: f64, t: f64) -> usize {
    let mut n = 0;
    while n < MAX_MODES {
        let lam = eigenvalue(case, length, n + 1);
        if (-lam * lam * alpha * t).exp() < 1e-15 {
            break;
        }
        n += 1;
    }
    n
}

/// Projection with adaptive truncation for evaluation at time `t`: modes
/// stop once their decay factor drops below `1e-15`, or once two successive
/// coefficients fall below `1e-9` of the deviation scale. `eigen` supplies
/// precomputed eigenvalues when available.
pub fn solve_line(
    profile: &PiecewiseLinearProfile,
    case: DwellCase,
    alpha: f64,
    t: f64,
    eigen: Option<&[f64]>,
) -> Result<SeriesSolution> {
    case.validate()?;
    let mut sol = SeriesSolution::new(case, profile.length, profile);
    let pieces = sol.deviation_pieces(profile);
    let scale = profile
        .z
        .iter()
        .zip(&profile.t)
        .map(|(&z, &t)| (t - sol.steady(z)).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(sol);
    }
    let mut small = 0;
    for n in 1..=MAX_MODES {
        let lam = match eigen {
            Some(e) if n <= e.len() => e[n - 1],
            _ => eigenvalue(&case, profile.length, n),
        };
        if (-lam * lam * alpha * t).exp() < 1e-15 {
            break;
        }
        let c = sol.coefficient(&pieces, lam);
        sol.lambdas.push(lam);
        sol.coeffs.push(c);
        if c.abs() < 1e-9 * scale {
            small += 1;
            if small == 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(sol)
}
