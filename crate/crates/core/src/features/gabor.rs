use std::f64::consts::PI;

use super::{l2_distance, FeatureParams};
use crate::error::{Error, Result};
use crate::imgcore::{convolve2d, ensure_same_dims, Plane};

/// Real (cosine-phase) Gabor kernel, shifted to zero mean.
///
/// Rows index the vertical offset. `theta` is the orientation of the
/// carrier in radians, `gamma` the spatial aspect ratio.
pub fn gabor_kernel(size: usize, sigma: f64, theta: f64, wavelength: f64, gamma: f64) -> Result<Plane> {
    if size % 2 == 0 {
        return Err(Error::Param(format!("gabor size {size} must be odd")));
    }
    let c = (size / 2) as f64;
    let (sin, cos) = theta.sin_cos();
    let mut k = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let (x, y) = (col as f64 - c, row as f64 - c);
            let xr = x * cos + y * sin;
            let yr = -x * sin + y * cos;
            let envelope = (-(xr * xr + gamma * gamma * yr * yr) / (2.0 * sigma * sigma)).exp();
            k.push(envelope * (2.0 * PI * xr / wavelength).cos());
        }
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    for v in &mut k {
        *v -= mean;
    }
    Plane::new(size, size, k)
}

fn bank(p: &FeatureParams) -> Result<Vec<Plane>> {
    p.gabor_orientations
        .iter()
        .map(|deg| {
            gabor_kernel(
                p.gabor_size,
                p.gabor_sigma,
                deg.to_radians(),
                p.gabor_wavelength,
                p.gabor_gamma,
            )
        })
        .collect()
}

/// Mean absolute response of `x` to each kernel of the bank.
pub fn gabor_responses(x: &Plane, p: &FeatureParams) -> Result<Vec<f64>> {
    if x.width() < p.gabor_size || x.height() < p.gabor_size {
        return Err(Error::Dimension(format!(
            "gabor needs at least {0}x{0}, got {1}x{2}",
            p.gabor_size,
            x.width(),
            x.height()
        )));
    }
    bank(p)?
        .iter()
        .map(|k| {
            let r = convolve2d(x, k)?;
            Ok(r.data().iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64)
        })
        .collect()
}

/// L2 distance between the response vectors of the two planes.
pub fn gabor_feature(blurred: &Plane, deblurred: &Plane, p: &FeatureParams) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    let rb = gabor_responses(blurred, p)?;
    let rd = gabor_responses(deblurred, p)?;
    Ok(l2_distance(&rb, &rd))
}
