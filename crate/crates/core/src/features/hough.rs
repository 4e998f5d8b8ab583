use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, ensure_same_dims, Plane};

/// Line-Hough vote table: `theta_bins` rows of `2 * diag + 1` rho cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoughAccumulator {
    pub theta_bins: usize,
    pub diag: usize,
    pub counts: Vec<u32>,
}

impl HoughAccumulator {
    pub fn rho_bins(&self) -> usize {
        2 * self.diag + 1
    }

    pub fn get(&self, theta: usize, rho_index: usize) -> u32 {
        self.counts[theta * self.rho_bins() + rho_index]
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Pixels whose 3x3 Sobel gradient magnitude exceeds mean + 2 std.
pub fn hough_edge_mask(x: &Plane) -> Result<Vec<bool>> {
    if x.width() < 3 || x.height() < 3 {
        return Err(Error::Dimension(format!(
            "hough needs at least 3x3, got {}x{}",
            x.width(),
            x.height()
        )));
    }
    let smooth = [1.0, 2.0, 1.0];
    let diff = [-1.0, 0.0, 1.0];
    let gx = convolve_separable(x, &diff, &smooth)?;
    let gy = convolve_separable(x, &smooth, &diff)?;
    let mag = gx.zip_map(&gy, f64::hypot)?;
    let threshold = mag.mean() + 2.0 * mag.variance().sqrt();
    Ok(mag.data().iter().map(|&m| m > threshold).collect())
}

/// Votes `rho = x cos(theta) + y sin(theta)`, rounded to the nearest pixel,
/// for every edge pixel and every `theta = k * pi / theta_bins`.
pub fn hough_accumulator(width: usize, height: usize, edges: &[bool], theta_bins: usize) -> HoughAccumulator {
    let diag = (width as f64).hypot(height as f64).ceil() as usize;
    let rho_bins = 2 * diag + 1;
    let trig: Vec<(f64, f64)> = (0..theta_bins)
        .map(|k| (k as f64 * PI / theta_bins as f64).sin_cos())
        .collect();
    let mut counts = vec![0u32; theta_bins * rho_bins];
    for (i, _) in edges.iter().enumerate().filter(|(_, &e)| e) {
        let (x, y) = ((i % width) as f64, (i / width) as f64);
        for (k, (sin, cos)) in trig.iter().enumerate() {
            let rho = (x * cos + y * sin).round() as isize + diag as isize;
            counts[k * rho_bins + rho as usize] += 1;
        }
    }
    HoughAccumulator {
        theta_bins,
        diag,
        counts,
    }
}

/// Number of accumulator cells holding at least `peak_frac` of the maximum
/// vote; zero when the plane has no edges.
pub fn hough_peak_count(x: &Plane, theta_bins: usize, peak_frac: f64) -> Result<usize> {
    let edges = hough_edge_mask(x)?;
    let acc = hough_accumulator(x.width(), x.height(), &edges, theta_bins);
    let max = acc.max();
    if max == 0 {
        return Ok(0);
    }
    let floor = peak_frac * f64::from(max);
    Ok(acc.counts.iter().filter(|&&c| f64::from(c) >= floor).count())
}

/// `N(D) - N(B)` with `N` = [`hough_peak_count`].
pub fn hough_feature(blurred: &Plane, deblurred: &Plane, theta_bins: usize, peak_frac: f64) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    let nd = hough_peak_count(deblurred, theta_bins, peak_frac)?;
    let nb = hough_peak_count(blurred, theta_bins, peak_frac)?;
    Ok(nd as f64 - nb as f64)
}
