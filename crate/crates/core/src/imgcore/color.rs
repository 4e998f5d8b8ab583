use super::{Plane, RgbImage, YuvImage};

// BT.601 full range.
const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

// Chroma as scaled colour differences: U = 0.436 (B - Y) / (1 - KB),
// V = 0.615 (R - Y) / (1 - KR). Rows of the equivalent RGB matrix sum to
// zero, so neutral pixels map exactly to the chroma offset.
const U_SCALE: f64 = 0.436 / (1.0 - KB);
const V_SCALE: f64 = 0.615 / (1.0 - KR);

const CHROMA_OFFSET: f64 = 128.0;

#[inline]
fn luma(p: [u8; 3]) -> f64 {
    KR * f64::from(p[0]) + KG * f64::from(p[1]) + KB * f64::from(p[2])
}

/// BT.601 luma, full range, unrounded.
pub fn to_luma(img: &RgbImage) -> Plane {
    Plane::from_raw(img.width(), img.height(), img.pixels().map(luma).collect())
}

/// BT.601 full-range YUV with chroma offset by 128. Values are not clamped.
pub fn rgb_to_yuv(img: &RgbImage) -> YuvImage {
    let n = img.width() * img.height();
    let (mut y, mut u, mut v) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for p in img.pixels() {
        let luma = luma(p);
        y.push(luma);
        u.push(U_SCALE * (f64::from(p[2]) - luma) + CHROMA_OFFSET);
        v.push(V_SCALE * (f64::from(p[0]) - luma) + CHROMA_OFFSET);
    }
    let (w, h) = img.dimensions();
    YuvImage {
        y: Plane::from_raw(w, h, y),
        u: Plane::from_raw(w, h, u),
        v: Plane::from_raw(w, h, v),
    }
}
