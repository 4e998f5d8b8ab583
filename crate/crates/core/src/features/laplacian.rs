use crate::error::{Error, Result};
use crate::imgcore::{convolve2d, ensure_same_dims, Plane};

const LAPLACIAN_3X3: [f64; 9] = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];

/// Population variance of the 3x3 Laplacian response.
pub fn laplacian_variance(x: &Plane) -> Result<f64> {
    if x.width() < 3 || x.height() < 3 {
        return Err(Error::Dimension(format!(
            "laplacian needs at least 3x3, got {}x{}",
            x.width(),
            x.height()
        )));
    }
    let kernel = Plane::from_raw(3, 3, LAPLACIAN_3X3.to_vec());
    Ok(convolve2d(x, &kernel)?.variance())
}

/// `Var(L(D)) - Var(L(B))`; positive when the deblurred plane has more
/// second-derivative energy than the blurred input.
pub fn laplacian_feature(blurred: &Plane, deblurred: &Plane) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    Ok(laplacian_variance(deblurred)? - laplacian_variance(blurred)?)
}
