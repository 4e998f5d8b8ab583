use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, ensure_same_dims, Plane};

const HYS_CLIP: f64 = 0.2;

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// HOG descriptor: unsigned orientations, `cell x cell` cells (partial
/// trailing cells dropped), 2x2-cell blocks at one-cell stride with L2-Hys
/// normalization. Blocks with no gradient energy stay zero.
pub fn hog_descriptor(x: &Plane, cell: usize, bins: usize) -> Result<Vec<f64>> {
    let (w, h) = x.dimensions();
    if cell == 0 || bins == 0 {
        return Err(Error::Param("hog cell size and bin count must be positive".into()));
    }
    if w < 2 * cell || h < 2 * cell {
        return Err(Error::Dimension(format!(
            "hog needs at least {0}x{0}, got {w}x{h}",
            2 * cell
        )));
    }
    let gx = convolve_separable(x, &[-1.0, 0.0, 1.0], &[1.0])?;
    let gy = convolve_separable(x, &[1.0], &[-1.0, 0.0, 1.0])?;

    let (cells_x, cells_y) = (w / cell, h / cell);
    let bin_width = 180.0 / bins as f64;
    let mut hist = vec![0.0; cells_x * cells_y * bins];
    for y in 0..cells_y * cell {
        for x in 0..cells_x * cell {
            let (dx, dy) = (gx.get(x, y), gy.get(x, y));
            let mag = dx.hypot(dy);
            if mag == 0.0 {
                continue;
            }
            let angle = dy.atan2(dx).to_degrees().rem_euclid(180.0);
            let pos = angle / bin_width - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo_bin = (lo as isize).rem_euclid(bins as isize) as usize;
            let hi_bin = (lo_bin + 1) % bins;
            let base = ((y / cell) * cells_x + x / cell) * bins;
            hist[base + lo_bin] += mag * (1.0 - frac);
            hist[base + hi_bin] += mag * frac;
        }
    }

    let mut out = Vec::with_capacity((cells_x - 1) * (cells_y - 1) * 4 * bins);
    let mut block = Vec::with_capacity(4 * bins);
    for by in 0..cells_y - 1 {
        for bx in 0..cells_x - 1 {
            block.clear();
            for (cy, cx) in [(by, bx), (by, bx + 1), (by + 1, bx), (by + 1, bx + 1)] {
                let base = (cy * cells_x + cx) * bins;
                block.extend_from_slice(&hist[base..base + bins]);
            }
            l2_normalize(&mut block);
            block.iter_mut().for_each(|v| *v = v.min(HYS_CLIP));
            l2_normalize(&mut block);
            out.extend_from_slice(&block);
        }
    }
    Ok(out)
}

/// RMS difference of the two descriptors, `||h(B) - h(D)|| / sqrt(len)`.
pub fn hog_feature(blurred: &Plane, deblurred: &Plane, cell: usize, bins: usize) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    let hb = hog_descriptor(blurred, cell, bins)?;
    let hd = hog_descriptor(deblurred, cell, bins)?;
    Ok(super::l2_distance(&hb, &hd) / (hb.len() as f64).sqrt())
}
