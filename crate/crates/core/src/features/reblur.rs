use crate::error::Result;
use crate::imgcore::{convolve_separable, ensure_same_dims, gaussian_kernel_1d, Plane};

/// RMS difference between the Gaussian-reblurred planes,
/// `||G * D - G * B|| / sqrt(W H)`.
pub fn reblur_feature(blurred: &Plane, deblurred: &Plane, size: usize, sigma: f64) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    let k = gaussian_kernel_1d(size, sigma)?;
    let rb = convolve_separable(blurred, &k, &k)?;
    let rd = convolve_separable(deblurred, &k, &k)?;
    Ok(super::l2_distance(rb.data(), rd.data()) / (rb.len() as f64).sqrt())
}
