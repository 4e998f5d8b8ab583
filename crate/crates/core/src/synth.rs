//! Seeded synthetic images for tests, demos and the blur-ladder benchmark.

use crate::error::Result;
use crate::imgcore::{gaussian_blur, Plane, RgbImage};
use crate::rng::DetRng;

/// Uniform RGB noise.
pub fn noise_rgb(width: usize, height: usize, seed: u64) -> Result<RgbImage> {
    let mut rng = DetRng::new(seed);
    RgbImage::from_fn(width, height, |_, _| {
        let v = rng.next_u64().to_le_bytes();
        [v[0], v[1], v[2]]
    })
}

/// Black and white squares of `cell` pixels, white in the top-left corner.
pub fn checkerboard(width: usize, height: usize, cell: usize) -> Result<RgbImage> {
    let cell = cell.max(1);
    RgbImage::from_fn(width, height, |x, y| {
        let v = if (x / cell + y / cell) % 2 == 0 { 255 } else { 0 };
        [v; 3]
    })
}

enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, r: f64 },
    Line { x0: f64, y0: f64, dx: f64, dy: f64, half_width: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Line {
                x0,
                y0,
                dx,
                dy,
                half_width,
            } => ((x - x0) * dy - (y - y0) * dx).abs() <= half_width,
        }
    }
}

/// A textured scene with sharp edges: a smooth colour gradient, a sinusoidal
/// grating, then rectangles, discs and thin lines painted in random colours.
pub fn scene(width: usize, height: usize, seed: u64) -> Result<RgbImage> {
    let mut rng = DetRng::new(seed);
    let (w, h) = (width as f64, height as f64);
    let base: Vec<[f64; 3]> = (0..2)
        .map(|_| [rng.uniform(40.0, 215.0), rng.uniform(40.0, 215.0), rng.uniform(40.0, 215.0)])
        .collect();
    let freq = rng.uniform(0.15, 0.6);
    let angle = rng.uniform(0.0, std::f64::consts::PI);
    let (fc, fs) = (freq * angle.cos(), freq * angle.sin());

    let n_shapes = 12 + rng.below(10);
    let mut shapes = Vec::with_capacity(n_shapes);
    for _ in 0..n_shapes {
        let colour = [rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0)];
        let shape = match rng.below(3) {
            0 => {
                let (x0, y0) = (rng.uniform(0.0, w), rng.uniform(0.0, h));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.uniform(4.0, w / 3.0),
                    y1: y0 + rng.uniform(4.0, h / 3.0),
                }
            }
            1 => Shape::Disc {
                cx: rng.uniform(0.0, w),
                cy: rng.uniform(0.0, h),
                r: rng.uniform(3.0, w.min(h) / 6.0),
            },
            _ => {
                let t = rng.uniform(0.0, std::f64::consts::PI);
                Shape::Line {
                    x0: rng.uniform(0.0, w),
                    y0: rng.uniform(0.0, h),
                    dx: t.cos(),
                    dy: t.sin(),
                    half_width: rng.uniform(0.5, 2.0),
                }
            }
        };
        shapes.push((shape, colour));
    }

    RgbImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let t = (fx / w + fy / h) / 2.0;
        let grating = 30.0 * (fc * fx + fs * fy).sin();
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = base[0][c] * (1.0 - t) + base[1][c] * t + grating;
        }
        for (shape, colour) in &shapes {
            if shape.contains(fx + 0.5, fy + 0.5) {
                px = *colour;
            }
        }
        px.map(|v| v.round().clamp(0.0, 255.0) as u8)
    })
}

/// Per-channel Gaussian blur with reflect-101 borders, rounded back to 8 bits.
/// `sigma = 0` returns a copy.
pub fn blur_rgb(img: &RgbImage, sigma: f64) -> Result<RgbImage> {
    let [r, g, b] = img.channels();
    let blur = |p: Plane| gaussian_blur(&p, sigma);
    RgbImage::from_channels(&[blur(r)?, blur(g)?, blur(b)?])
}
