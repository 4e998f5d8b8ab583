use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, ensure_same_dims, Plane};

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// Large-aperture Sobel pair `(smoothing, derivative)` of odd length `size`.
///
/// Smoothing is the normalized binomial row `C(size-1, k) / 2^(size-1)`;
/// the derivative is `[1, 0, -1]` convolved with `C(size-3, k)`, oriented so
/// that the positive lobe sits at increasing coordinates.
pub fn sobel_kernels(size: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if size < 3 || size % 2 == 0 {
        return Err(Error::Param(format!("sobel size {size} must be odd and >= 3")));
    }
    let smooth_raw = binomial_row(size - 1);
    let total: f64 = smooth_raw.iter().sum();
    let smooth = smooth_raw.into_iter().map(|v| v / total).collect();

    let inner = binomial_row(size - 3);
    let at = |i: isize| -> f64 {
        if (0..inner.len() as isize).contains(&i) {
            inner[i as usize]
        } else {
            0.0
        }
    };
    let deriv = (0..size as isize).map(|k| at(k - 2) - at(k)).collect();
    Ok((smooth, deriv))
}

/// Gradient magnitude `sqrt(gx^2 + gy^2)` with the `size`-tap Sobel pair.
pub fn sobel_magnitude(x: &Plane, size: usize) -> Result<Plane> {
    let (smooth, deriv) = sobel_kernels(size)?;
    let gx = convolve_separable(x, &deriv, &smooth)?;
    let gy = convolve_separable(x, &smooth, &deriv)?;
    gx.zip_map(&gy, f64::hypot)
}

/// `||G(D) - G(B)|| / sqrt(W H)` over the two gradient-magnitude maps.
pub fn sobel_feature(blurred: &Plane, deblurred: &Plane, size: usize) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    let gb = sobel_magnitude(blurred, size)?;
    let gd = sobel_magnitude(deblurred, size)?;
    Ok(super::l2_distance(gb.data(), gd.data()) / (gb.len() as f64).sqrt())
}
