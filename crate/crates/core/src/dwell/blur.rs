use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Treatment of pixels beyond the image border.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// Repeat the nearest border pixel.
    #[default]
    Replicate,
    /// Wrap around.
    Periodic,
}

/// Normalised discrete Gaussian with standard deviation `sigma` pixels,
/// truncated at `ceil(5 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let radius = (5.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn source_index(i: i64, n: usize, edge: EdgeMode) -> usize {
    let n = n as i64;
    match edge {
        EdgeMode::Replicate => i.clamp(0, n - 1) as usize,
        EdgeMode::Periodic => i.rem_euclid(n) as usize,
    }
}

/// Separable Gaussian blur of an `nx * ny` image stored row-major with `x`
/// fastest.
pub fn gaussian_blur(img: &[f64], nx: usize, ny: usize, sigma: f64, edge: EdgeMode) -> Vec<f64> {
    assert_eq!(img.len(), nx * ny);
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return img.to_vec();
    }
    let r = (kernel.len() / 2) as i64;

    let mut tmp = vec![0.0; img.len()];
    tmp.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let src = &img[j * nx..(j + 1) * nx];
        for (i, out) in row.iter_mut().enumerate() {
            *out = kernel
                .iter()
                .enumerate()
                .map(|(o, w)| w * src[source_index(i as i64 + o as i64 - r, nx, edge)])
                .sum();
        }
    });
    let mut out = vec![0.0; img.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = kernel
                .iter()
                .enumerate()
                .map(|(o, w)| w * tmp[source_index(j as i64 + o as i64 - r, ny, edge) * nx + i])
                .sum();
        }
    });
    out
}
