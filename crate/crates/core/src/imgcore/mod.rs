//! Image containers, color conversion and the numeric kernels shared by
//! every feature extractor.
//!
//! All plane arithmetic is `f64`. Convolutions are correlation-style (the
//! kernel is applied as stored, never flipped) and use mirror reflection
//! without edge duplication at the borders (`dcb|abcd|cba`).

mod color;
mod conv;
mod fft;
mod io;

pub use color::{rgb_to_yuv, to_luma};
pub use conv::{convolve2d, convolve_separable, gaussian_blur, gaussian_kernel_1d, reflect_index};
pub use fft::{fft2, fftshift, ifft2, ifftshift};
pub use io::{load_png, save_png};

use crate::error::{Error, Result};

/// 8-bit interleaved RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Dimension(format!(
                "expected {} samples for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Splits into three float planes (R, G, B).
    pub fn channels(&self) -> [Plane; 3] {
        let n = self.width * self.height;
        let mut out = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for p in self.pixels() {
            for c in 0..3 {
                out[c].push(f64::from(p[c]));
            }
        }
        out.map(|data| Plane {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Reassembles an image from three planes, rounding and clamping to `[0, 255]`.
    pub fn from_channels(planes: &[Plane; 3]) -> Result<Self> {
        let (w, h) = planes[0].dimensions();
        if planes.iter().any(|p| p.dimensions() != (w, h)) {
            return Err(Error::Dimension("channel planes differ in size".into()));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            for p in planes {
                data.push(p.data[i].round().clamp(0.0, 255.0) as u8);
            }
        }
        Self::new(w, h, data)
    }
}

/// Single-channel `f64` raster, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "plane must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "expected {} samples for {width}x{height} plane, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("plane contains non-finite samples".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Internal constructor for results of arithmetic on already valid planes.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two equally sized planes.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        ensure_same_dims(self, other)?;
        Ok(Plane::from_raw(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }

    /// Copies the `width x height` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Plane> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Dimension(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Plane::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }
}

/// Full-resolution YUV triple (no chroma subsampling).
#[derive(Clone, Debug, PartialEq)]
pub struct YuvImage {
    pub y: Plane,
    pub u: Plane,
    pub v: Plane,
}

/// Complex raster stored as separate real and imaginary planes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPlane {
    width: usize,
    height: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexPlane {
    pub fn new(width: usize, height: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != width * height || im.len() != width * height {
            return Err(Error::Dimension(format!(
                "complex plane {width}x{height} needs {} samples per part",
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            re,
            im,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.re[i], self.im[i])
    }

    /// Per-bin magnitude as a real plane.
    pub fn magnitude(&self) -> Plane {
        Plane::from_raw(
            self.width,
            self.height,
            self.re
                .iter()
                .zip(&self.im)
                .map(|(r, i)| r.hypot(*i))
                .collect(),
        )
    }
}

pub(crate) fn ensure_same_dims(a: &Plane, b: &Plane) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}
