//! Independent reference implementations shared by the integration tests.
//! Written for clarity rather than speed; none of them call into the
//! library's convolution, ranking or accumulator code.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use based_core::imgcore::{save_png, Plane};
use based_core::synth::{blur_rgb, scene};

/// Mirror index without repeating the edge sample (period 2n - 2).
pub fn mirror(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Correlation with a full 2-D kernel, `kernel[row][col]`, mirrored borders.
pub fn direct_conv(src: &Plane, kernel: &[Vec<f64>]) -> Vec<f64> {
    let (w, h) = src.dimensions();
    let (kh, kw) = (kernel.len(), kernel[0].len());
    let (ry, rx) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, row) in kernel.iter().enumerate() {
                let sy = mirror(y as isize + j as isize - ry, h);
                for (i, &k) in row.iter().enumerate() {
                    let sx = mirror(x as isize + i as isize - rx, w);
                    acc += k * src.get(sx, sy);
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

pub fn outer(col: &[f64], row: &[f64]) -> Vec<Vec<f64>> {
    col.iter().map(|&c| row.iter().map(|&r| c * r).collect()).collect()
}

/// Full 1-D polynomial product.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `(1 + z)^n` coefficients by repeated multiplication.
pub fn binomial(n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| poly_mul(&acc, &[1.0, 1.0]))
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn sobel_oracle(b: &Plane, d: &Plane, size: usize) -> f64 {
    let smooth: Vec<f64> = binomial(size - 1)
        .into_iter()
        .map(|v| v / 2f64.powi(size as i32 - 1))
        .collect();
    let deriv = poly_mul(&binomial(size - 3), &[-1.0, 0.0, 1.0]);
    let kx = outer(&smooth, &deriv);
    let ky = outer(&deriv, &smooth);
    let mag = |p: &Plane| -> Vec<f64> {
        let gx = direct_conv(p, &kx);
        let gy = direct_conv(p, &ky);
        gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect()
    };
    rms_diff(&mag(b), &mag(d))
}

pub fn gaussian_2d(size: usize, sigma: f64) -> Vec<Vec<f64>> {
    let r = (size / 2) as f64;
    let mut k: Vec<Vec<f64>> = (0..size)
        .map(|j| {
            (0..size)
                .map(|i| {
                    let (dx, dy) = (i as f64 - r, j as f64 - r);
                    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        })
        .collect();
    let total: f64 = k.iter().flatten().sum();
    k.iter_mut().flatten().for_each(|v| *v /= total);
    k
}

pub fn reblur_oracle(b: &Plane, d: &Plane, size: usize, sigma: f64) -> f64 {
    let k = gaussian_2d(size, sigma);
    rms_diff(&direct_conv(b, &k), &direct_conv(d, &k))
}

/// Direct windowed SSIM mean: every pixel visits its own 11x11 mirrored window.
pub fn ssim_oracle(a: &Plane, b: &Plane) -> f64 {
    let (w, h) = a.dimensions();
    let k = gaussian_2d(11, 1.5);
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let mut win = Vec::with_capacity(121);
            for (j, row) in k.iter().enumerate() {
                for (i, &wt) in row.iter().enumerate() {
                    let sx = mirror(x as isize + i as isize - 5, w);
                    let sy = mirror(y as isize + j as isize - 5, h);
                    win.push((wt, a.get(sx, sy), b.get(sx, sy)));
                }
            }
            let ma: f64 = win.iter().map(|t| t.0 * t.1).sum();
            let mb: f64 = win.iter().map(|t| t.0 * t.2).sum();
            let va: f64 = win.iter().map(|t| t.0 * (t.1 - ma).powi(2)).sum();
            let vb: f64 = win.iter().map(|t| t.0 * (t.2 - mb).powi(2)).sum();
            let cov: f64 = win.iter().map(|t| t.0 * (t.1 - ma) * (t.2 - mb)).sum();
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    total / (w * h) as f64
}

/// Peak count of a line-Hough accumulator, filled cell by cell.
pub fn hough_oracle(p: &Plane, theta_bins: usize, frac: f64) -> usize {
    let (w, h) = p.dimensions();
    let sx = outer(&[1.0, 2.0, 1.0], &[-1.0, 0.0, 1.0]);
    let sy = outer(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 1.0]);
    let gx = direct_conv(p, &sx);
    let gy = direct_conv(p, &sy);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    let n = mag.len() as f64;
    let mean = mag.iter().sum::<f64>() / n;
    let std = (mag.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n).sqrt();
    let edges: Vec<(f64, f64)> = (0..w * h)
        .filter(|&i| mag[i] > mean + 2.0 * std)
        .map(|i| ((i % w) as f64, (i / w) as f64))
        .collect();
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as i64;
    let mut cells = Vec::new();
    for t in 0..theta_bins {
        let theta = t as f64 * PI / theta_bins as f64;
        for rho in -diag..=diag {
            let votes = edges
                .iter()
                .filter(|(x, y)| (x * theta.cos() + y * theta.sin()).round() as i64 == rho)
                .count();
            cells.push(votes);
        }
    }
    let max = cells.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return 0;
    }
    cells.iter().filter(|&&c| c as f64 >= frac * max as f64).count()
}

/// HOG written from the textbook description, pixel by pixel.
pub fn hog_oracle(p: &Plane, cell: usize, bins: usize) -> Vec<f64> {
    let (w, h) = p.dimensions();
    let at = |x: isize, y: isize| p.get(mirror(x, w), mirror(y, h));
    let (cw, ch) = (w / cell, h / cell);
    let mut hist = vec![vec![vec![0.0; bins]; cw]; ch];
    let bw = 180.0 / bins as f64;
    for y in 0..ch * cell {
        for x in 0..cw * cell {
            let (xi, yi) = (x as isize, y as isize);
            let dx = at(xi + 1, yi) - at(xi - 1, yi);
            let dy = at(xi, yi + 1) - at(xi, yi - 1);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut ang = dy.atan2(dx).to_degrees();
            while ang < 0.0 {
                ang += 180.0;
            }
            while ang >= 180.0 {
                ang -= 180.0;
            }
            // bin centres sit at (k + 0.5) * bw
            let c = ang / bw - 0.5;
            let k0 = c.floor();
            let t = c - k0;
            let lo = ((k0 as i64 + bins as i64) % bins as i64) as usize;
            let hi = (lo + 1) % bins;
            hist[y / cell][x / cell][lo] += (1.0 - t) * mag;
            hist[y / cell][x / cell][hi] += t * mag;
        }
    }
    let norm = |v: &mut Vec<f64>| {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.0 {
            for a in v.iter_mut() {
                *a /= n;
            }
        }
    };
    let mut out = Vec::new();
    for by in 0..ch - 1 {
        for bx in 0..cw - 1 {
            let mut v: Vec<f64> = [(0, 0), (0, 1), (1, 0), (1, 1)]
                .iter()
                .flat_map(|(dy, dx)| hist[by + dy][bx + dx].clone())
                .collect();
            norm(&mut v);
            for a in v.iter_mut() {
                if *a > 0.2 {
                    *a = 0.2;
                }
            }
            norm(&mut v);
            out.extend(v);
        }
    }
    out
}

/// Kendall tau-b from an exhaustive pass over all pairs.
pub fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let (ex, ey) = (x[i] == x[j], y[i] == y[j]);
            tx += ex as u64;
            ty += ey as u64;
            if ex || ey {
                continue;
            }
            if (x[i] < x[j]) == (y[i] < y[j]) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    ((conc - disc) as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()).clamp(-1.0, 1.0)
}

/// Average ranks by counting, O(n^2).
pub fn count_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn two_pass_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Residual blur levels of the synthetic methods, sharpest first.
pub const LADDER_SIGMAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];
pub const LADDER_INPUT_SIGMA: f64 = 4.0;

pub fn ladder_method(sigma: f64) -> String {
    format!("residual_{sigma:.1}")
}

/// Writes a blur-ladder dataset of `scenes` scenes and returns the manifest
/// path. Each scene contributes one crop with five "methods"; the subjective
/// score is minus the residual blur.
pub fn write_ladder(dir: &Path, scenes: usize, size: usize, seed_offset: u64) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let mut manifest = String::from("crop_id,scene_id,blurred_path,deblurred_path,method,subjective\n");
    for s in 0..scenes {
        let sharp = scene(size, size, seed_offset + s as u64).unwrap();
        let blurred_name = format!("scene{s:03}_input.png");
        save_png(dir.join(&blurred_name), &blur_rgb(&sharp, LADDER_INPUT_SIGMA).unwrap()).unwrap();
        for &sigma in &LADDER_SIGMAS {
            let name = format!("scene{s:03}_{}.png", ladder_method(sigma));
            save_png(dir.join(&name), &blur_rgb(&sharp, sigma).unwrap()).unwrap();
            manifest.push_str(&format!(
                "crop{s:03},scene{s:03},{blurred_name},{name},{},{}\n",
                ladder_method(sigma),
                -sigma
            ));
        }
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).unwrap();
    path
}
