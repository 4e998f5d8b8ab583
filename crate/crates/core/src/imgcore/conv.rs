use super::Plane;
use crate::error::{Error, Result};

/// Maps a possibly out-of-range coordinate into `0..len` by mirror
/// reflection without repeating the edge sample.
#[inline]
pub fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

fn offset_table(len: usize, radius: usize) -> Vec<usize> {
    (0..len + 2 * radius)
        .map(|i| reflect_index(i as isize - radius as isize, len))
        .collect()
}

fn check_kernel_axis(taps: usize, extent: usize, axis: &str) -> Result<()> {
    if taps % 2 == 0 {
        return Err(Error::Dimension(format!("{axis} kernel length {taps} is not odd")));
    }
    if taps > extent {
        return Err(Error::Dimension(format!(
            "{axis} kernel length {taps} exceeds plane extent {extent}"
        )));
    }
    Ok(())
}

/// Sliding weighted sum of `kernel` over `src`, kernel centred and not flipped.
pub fn convolve2d(src: &Plane, kernel: &Plane) -> Result<Plane> {
    let (w, h) = src.dimensions();
    let (kw, kh) = kernel.dimensions();
    check_kernel_axis(kw, w, "horizontal")?;
    check_kernel_axis(kh, h, "vertical")?;
    let (rw, rh) = (kw / 2, kh / 2);
    let cols = offset_table(w, rw);
    let rows = offset_table(h, rh);
    let s = src.data();
    let k = kernel.data();

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for ky in 0..kh {
            let src_row = &s[rows[y + ky] * w..][..w];
            let k_row = &k[ky * kw..][..kw];
            for (x, acc) in dst.iter_mut().enumerate() {
                let taps = &cols[x..x + kw];
                let mut sum = 0.0;
                for (kv, &c) in k_row.iter().zip(taps) {
                    sum += kv * src_row[c];
                }
                *acc += sum;
            }
        }
    }
    Ok(Plane::from_raw(w, h, out))
}

/// Horizontal pass with `kx` followed by a vertical pass with `ky`.
///
/// Equivalent to [`convolve2d`] with the outer-product kernel
/// `k[r][c] = ky[r] * kx[c]`; reflection acts per axis so the borders agree too.
pub fn convolve_separable(src: &Plane, kx: &[f64], ky: &[f64]) -> Result<Plane> {
    let (w, h) = src.dimensions();
    check_kernel_axis(kx.len(), w, "horizontal")?;
    check_kernel_axis(ky.len(), h, "vertical")?;
    let s = src.data();

    let rx = kx.len() / 2;
    let cols = offset_table(w, rx);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let src_row = &s[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = kx
                .iter()
                .zip(&cols[x..x + kx.len()])
                .map(|(k, &c)| k * src_row[c])
                .sum();
        }
    }

    let ry = ky.len() / 2;
    let rows = offset_table(h, ry);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (kv, &r) in ky.iter().zip(&rows[y..y + ky.len()]) {
            let src_row = &tmp[r * w..(r + 1) * w];
            for (d, v) in dst.iter_mut().zip(src_row) {
                *d += kv * v;
            }
        }
    }
    Ok(Plane::from_raw(w, h, out))
}

/// Sampled Gaussian of odd length `size`, normalized to unit sum.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size % 2 == 0 {
        return Err(Error::Param(format!("gaussian size {size} must be odd")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("gaussian sigma {sigma} must be positive")));
    }
    let c = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - c;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

/// Gaussian blur with a `2 * ceil(3 sigma) + 1` tap kernel, shrunk to fit the
/// plane if necessary. `sigma == 0` returns the input unchanged.
pub fn gaussian_blur(src: &Plane, sigma: f64) -> Result<Plane> {
    if sigma == 0.0 {
        return Ok(src.clone());
    }
    if !(sigma > 0.0) {
        return Err(Error::Param(format!("blur sigma {sigma} must be >= 0")));
    }
    let max_taps = |extent: usize| if extent % 2 == 1 { extent } else { extent - 1 };
    let taps = 2 * (3.0 * sigma).ceil() as usize + 1;
    let kx = gaussian_kernel_1d(taps.min(max_taps(src.width())), sigma)?;
    let ky = gaussian_kernel_1d(taps.min(max_taps(src.height())), sigma)?;
    convolve_separable(src, &kx, &ky)
}
