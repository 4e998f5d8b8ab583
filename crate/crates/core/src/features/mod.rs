//! Reduced-reference features of a (blurred input, deblurred output) pair.
//!
//! Every extractor takes the blurred original first and the deblurred
//! candidate second. Global statistics (Laplacian variance, high-pass
//! log-energy, Hough peak count) are signed differences `f(D) - f(B)`, so a
//! positive value means the candidate is sharper. Descriptors (Gabor
//! responses, HOG, Sobel map, LBP histogram, reblurred image) are compared
//! with an L2 distance.

mod gabor;
mod hog;
mod hough;
mod laplacian;
mod lbp;
mod reblur;
mod sobel;
mod spectral;

pub use gabor::{gabor_feature, gabor_kernel, gabor_responses};
pub use hog::{hog_descriptor, hog_feature};
pub use hough::{hough_accumulator, hough_edge_mask, hough_feature, hough_peak_count, HoughAccumulator};
pub use laplacian::{laplacian_feature, laplacian_variance};
pub use lbp::{lbp_feature, lbp_histogram};
pub use reblur::reblur_feature;
pub use sobel::{sobel_feature, sobel_kernels, sobel_magnitude};
pub use spectral::{fft_feature, highpass_log_energy};

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{Error, Result};
use crate::imgcore::{ensure_same_dims, rgb_to_yuv, to_luma, Plane, RgbImage};

/// Number of features fed to the regressor.
pub const NUM_FEATURES: usize = 9;

/// Feature names in serialization order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "laplacian", "fft", "gabor", "hough", "hog", "ssim_m", "sobel", "lbp", "reblur",
];

/// The nine feature values for one (blurred, deblurred) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub laplacian: f64,
    pub fft: f64,
    pub gabor: f64,
    pub hough: f64,
    pub hog: f64,
    pub ssim_m: f64,
    pub sobel: f64,
    pub lbp: f64,
    pub reblur: f64,
}

impl FeatureVector {
    /// Value of `extract_all(A, A)` for any image `A`.
    pub const IDENTITY: FeatureVector = FeatureVector {
        laplacian: 0.0,
        fft: 0.0,
        gabor: 0.0,
        hough: 0.0,
        hog: 0.0,
        ssim_m: 1.0,
        sobel: 0.0,
        lbp: 0.0,
        reblur: 0.0,
    };

    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.laplacian,
            self.fft,
            self.gabor,
            self.hough,
            self.hog,
            self.ssim_m,
            self.sobel,
            self.lbp,
            self.reblur,
        ]
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        let [laplacian, fft, gabor, hough, hog, ssim_m, sobel, lbp, reblur] = v;
        Self {
            laplacian,
            fft,
            gabor,
            hough,
            hog,
            ssim_m,
            sobel,
            lbp,
            reblur,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Tunables for the extractors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// Half-width of the square low-frequency block removed around DC.
    pub fft_cutoff: usize,
    pub sobel_size: usize,
    pub reblur_size: usize,
    pub reblur_sigma: f64,
    /// Gabor orientations in degrees.
    pub gabor_orientations: Vec<f64>,
    pub gabor_size: usize,
    pub gabor_sigma: f64,
    pub gabor_wavelength: f64,
    pub gabor_gamma: f64,
    pub hog_cell: usize,
    pub hog_bins: usize,
    pub hough_theta_bins: usize,
    pub hough_peak_frac: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            fft_cutoff: 30,
            sobel_size: 13,
            reblur_size: 17,
            // 0.3 * ((17 - 1) / 2 - 1) + 0.8
            reblur_sigma: 2.9,
            gabor_orientations: vec![0.0, 60.0, 120.0],
            gabor_size: 21,
            gabor_sigma: 4.0,
            gabor_wavelength: 10.0,
            gabor_gamma: 0.5,
            hog_cell: 8,
            hog_bins: 9,
            hough_theta_bins: 180,
            hough_peak_frac: 0.5,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        for (name, size) in [
            ("sobel_size", self.sobel_size),
            ("reblur_size", self.reblur_size),
            ("gabor_size", self.gabor_size),
        ] {
            if size % 2 == 0 {
                return Err(Error::Param(format!("{name} = {size} must be odd")));
            }
        }
        if self.sobel_size < 3 {
            return Err(Error::Param("sobel_size must be >= 3".into()));
        }
        for (name, v) in [
            ("reblur_sigma", self.reblur_sigma),
            ("gabor_sigma", self.gabor_sigma),
            ("gabor_wavelength", self.gabor_wavelength),
            ("gabor_gamma", self.gabor_gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} = {v} must be positive")));
            }
        }
        if self.gabor_orientations.is_empty() {
            return Err(Error::Param("gabor_orientations must not be empty".into()));
        }
        if self.hog_cell == 0 || self.hog_bins == 0 || self.hough_theta_bins == 0 {
            return Err(Error::Param("hog_cell, hog_bins and hough_theta_bins must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hough_peak_frac) {
            return Err(Error::Param("hough_peak_frac must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Mean of `6 SSIM(Y) + SSIM(U) + SSIM(V)` over 8, so the result lies in `[-1, 1]`.
pub fn ssim_m(blurred: &RgbImage, deblurred: &RgbImage) -> Result<f64> {
    if blurred.dimensions() != deblurred.dimensions() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            blurred.dimensions(),
            deblurred.dimensions()
        )));
    }
    let b = rgb_to_yuv(blurred);
    let d = rgb_to_yuv(deblurred);
    let y = baselines::ssim(&b.y, &d.y)?;
    let u = baselines::ssim(&b.u, &d.u)?;
    let v = baselines::ssim(&b.v, &d.v)?;
    Ok((6.0 * y + u + v) / 8.0)
}

fn named<T>(feature: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Feature {
        feature,
        source: Box::new(e),
    })
}

/// Runs all nine extractors on one pair. Luma is computed once and shared.
pub fn extract_all(blurred: &RgbImage, deblurred: &RgbImage, params: &FeatureParams) -> Result<FeatureVector> {
    params.validate()?;
    if blurred.dimensions() != deblurred.dimensions() {
        return Err(Error::Dimension(format!(
            "blurred {:?} vs deblurred {:?}",
            blurred.dimensions(),
            deblurred.dimensions()
        )));
    }
    let b = to_luma(blurred);
    let d = to_luma(deblurred);
    extract_luma(&b, &d, blurred, deblurred, params)
}

fn extract_luma(
    b: &Plane,
    d: &Plane,
    b_rgb: &RgbImage,
    d_rgb: &RgbImage,
    p: &FeatureParams,
) -> Result<FeatureVector> {
    ensure_same_dims(b, d)?;
    // The nine extractors are independent; run them as two rayon halves.
    let (first, second) = rayon::join(
        || -> Result<_> {
            Ok((
                named("laplacian", laplacian_feature(b, d))?,
                named("fft", fft_feature(b, d, p.fft_cutoff))?,
                named("gabor", gabor_feature(b, d, p))?,
                named("hough", hough_feature(b, d, p.hough_theta_bins, p.hough_peak_frac))?,
            ))
        },
        || -> Result<_> {
            Ok((
                named("hog", hog_feature(b, d, p.hog_cell, p.hog_bins))?,
                named("ssim_m", ssim_m(b_rgb, d_rgb))?,
                named("sobel", sobel_feature(b, d, p.sobel_size))?,
                named("lbp", lbp_feature(b, d))?,
                named("reblur", reblur_feature(b, d, p.reblur_size, p.reblur_sigma))?,
            ))
        },
    );
    let (laplacian, fft, gabor, hough) = first?;
    let (hog, ssim_m, sobel, lbp, reblur) = second?;
    Ok(FeatureVector {
        laplacian,
        fft,
        gabor,
        hough,
        hog,
        ssim_m,
        sobel,
        lbp,
        reblur,
    })
}

/// Euclidean distance between two equal-length descriptors.
pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
