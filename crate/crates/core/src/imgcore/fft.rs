use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::{ComplexPlane, Plane};

// Row transforms followed by column transforms; any length is accepted
// (rustfft picks mixed-radix or Bluestein plans as needed). The planner is
// created per call so no scratch state is shared between threads.
fn transform2d(width: usize, height: usize, buf: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft(width, direction);
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }

    let col_fft = planner.plan_fft(height, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = buf[y * width + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            buf[y * width + x] = *c;
        }
    }
}

fn to_complex_plane(width: usize, height: usize, buf: Vec<Complex64>) -> ComplexPlane {
    let (re, im) = buf.into_iter().map(|c| (c.re, c.im)).unzip();
    ComplexPlane {
        width,
        height,
        re,
        im,
    }
}

/// Unnormalized forward 2-D DFT.
pub fn fft2(src: &Plane) -> ComplexPlane {
    let (w, h) = src.dimensions();
    let mut buf: Vec<Complex64> = src.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform2d(w, h, &mut buf, FftDirection::Forward);
    to_complex_plane(w, h, buf)
}

/// Inverse 2-D DFT scaled by `1 / (W * H)`.
pub fn ifft2(src: &ComplexPlane) -> ComplexPlane {
    let (w, h) = (src.width, src.height);
    let mut buf: Vec<Complex64> = src
        .re
        .iter()
        .zip(&src.im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    transform2d(w, h, &mut buf, FftDirection::Inverse);
    let scale = 1.0 / (w * h) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    to_complex_plane(w, h, buf)
}

fn roll(src: &ComplexPlane, shift_x: usize, shift_y: usize) -> ComplexPlane {
    let (w, h) = (src.width, src.height);
    let mut re = vec![0.0; w * h];
    let mut im = vec![0.0; w * h];
    for y in 0..h {
        let ty = (y + shift_y) % h;
        for x in 0..w {
            let tx = (x + shift_x) % w;
            re[ty * w + tx] = src.re[y * w + x];
            im[ty * w + tx] = src.im[y * w + x];
        }
    }
    ComplexPlane {
        width: w,
        height: h,
        re,
        im,
    }
}

/// Moves the DC bin to `(floor(W/2), floor(H/2))`.
pub fn fftshift(src: &ComplexPlane) -> ComplexPlane {
    roll(src, src.width / 2, src.height / 2)
}

/// Inverse of [`fftshift`]; differs from it only for odd dimensions.
pub fn ifftshift(src: &ComplexPlane) -> ComplexPlane {
    roll(src, src.width - src.width / 2, src.height - src.height / 2)
}
