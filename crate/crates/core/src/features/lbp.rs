use crate::error::{Error, Result};
use crate::imgcore::{ensure_same_dims, Plane};

// (dx, dy) clockwise from the top-left neighbour; bit k <-> NEIGHBOURS[k].
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// Normalized 256-bin histogram of radius-1 LBP codes over interior pixels.
/// A bit is set when the neighbour is `>=` the centre.
pub fn lbp_histogram(x: &Plane) -> Result<[f64; 256]> {
    let (w, h) = x.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::Dimension(format!("lbp needs at least 3x3, got {w}x{h}")));
    }
    let mut counts = [0u64; 256];
    for y in 1..h - 1 {
        for xx in 1..w - 1 {
            let centre = x.get(xx, y);
            let mut code = 0usize;
            for (k, (dx, dy)) in NEIGHBOURS.iter().enumerate() {
                let n = x.get((xx as isize + dx) as usize, (y as isize + dy) as usize);
                if n >= centre {
                    code |= 1 << k;
                }
            }
            counts[code] += 1;
        }
    }
    let total = ((w - 2) * (h - 2)) as f64;
    Ok(counts.map(|c| c as f64 / total))
}

/// Euclidean distance between the two LBP histograms; lies in `[0, sqrt(2)]`.
pub fn lbp_feature(blurred: &Plane, deblurred: &Plane) -> Result<f64> {
    ensure_same_dims(blurred, deblurred)?;
    Ok(super::l2_distance(&lbp_histogram(blurred)?, &lbp_histogram(deblurred)?))
}
