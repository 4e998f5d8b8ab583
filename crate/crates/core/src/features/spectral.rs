use crate::error::{Error, Result};
use crate::imgcore::{ensure_same_dims, fft2, fftshift, ifft2, ifftshift, Plane};

const LOG_FLOOR: f64 = 1e-8;

/// Mean of `20 log10(|x_hp| + 1e-8)` where `x_hp` is the plane with every
/// frequency within Chebyshev distance `cutoff` of DC removed.
pub fn highpass_log_energy(x: &Plane, cutoff: usize) -> Result<f64> {
    let (w, h) = x.dimensions();
    if w.min(h) <= 2 * cutoff {
        return Err(Error::Highpass {
            cutoff,
            width: w,
            height: h,
        });
    }
    let mut spectrum = fftshift(&fft2(x));
    let (cx, cy) = (w / 2, h / 2);
    for y in cy - cutoff..=cy + cutoff {
        let row = y * w;
        spectrum.re_mut()[row + cx - cutoff..=row + cx + cutoff].fill(0.0);
        spectrum.im_mut()[row + cx - cutoff..=row + cx + cutoff].fill(0.0);
    }
    let spatial = ifft2(&ifftshift(&spectrum)).magnitude();
    let total: f64 = spatial
        .data()
        .iter()
        .map(|m| 20.0 * (m + LOG_FLOOR).log10())
        .sum();
    Ok(total / spatial.len() as f64)
}

/// `S(D) - S(B)` with `S` = [`highpass_log_energy`]; positive when the
/// deblurred plane carries more high-frequency energy.
pub fn fft_feature(blurred: &Plane, deblurred: &Plane, cutoff: usize) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    Ok(highpass_log_energy(deblurred, cutoff)? - highpass_log_energy(blurred, cutoff)?)
}
