//! Classical reference metrics, used in reduced-reference mode: computed
//! between the blurred input and the deblurred output, no ground truth.

use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, ensure_same_dims, gaussian_kernel_1d, Plane};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Value reported by [`psnr_capped`] for identical planes.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Metrics computed by an external model and not reproduced here.
pub const EXTERNAL_METRICS: [&str; 3] = ["LPIPS", "ERQA", "CPBD"];

fn mse(a: &Plane, b: &Plane) -> Result<f64> {
    ensure_same_dims(a, b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

/// `10 log10(peak^2 / MSE)`; [`Error::Identical`] when the planes match.
pub fn psnr(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Err(Error::Identical);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// [`psnr`] with identical planes mapped to [`PSNR_CAP_DB`].
pub fn psnr_capped(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    match psnr(a, b, peak) {
        Err(Error::Identical) => Ok(PSNR_CAP_DB),
        other => other.map(|v| v.min(PSNR_CAP_DB)),
    }
}

/// Per-pixel SSIM map with an 11x11 Gaussian window (sigma 1.5) and
/// reflected borders, so the map covers every pixel.
pub fn ssim_map(a: &Plane, b: &Plane) -> Result<Plane> {
    ensure_same_dims(a, b)?;
    let (w, h) = a.dimensions();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Size {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let k = gaussian_kernel_1d(SSIM_WINDOW, SSIM_SIGMA)?;
    let blur = |p: &Plane| convolve_separable(p, &k, &k);

    let mu_a = blur(a)?;
    let mu_b = blur(b)?;
    let e_aa = blur(&a.map(|v| v * v))?;
    let e_bb = blur(&b.map(|v| v * v))?;
    let e_ab = blur(&a.zip_map(b, |x, y| x * y)?)?;

    let n = w * h;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (ma, mb) = (mu_a.data()[i], mu_b.data()[i]);
        let var_a = e_aa.data()[i] - ma * ma;
        let var_b = e_bb.data()[i] - mb * mb;
        let cov = e_ab.data()[i] - ma * mb;
        let num = (2.0 * ma * mb + C1) * (2.0 * cov + C2);
        let den = (ma * ma + mb * mb + C1) * (var_a + var_b + C2);
        out.push(num / den);
    }
    Plane::new(w, h, out)
}

/// Mean of [`ssim_map`].
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    Ok(ssim_map(a, b)?.mean())
}
