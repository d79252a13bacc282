use super::idx::RawImage;
use crate::image::GrayImage;
use crate::{Error, Result};

/// Bilinear resampling with half-pixel centers and clamped borders.
pub fn resize_bilinear(src: &RawImage, side: usize) -> Result<GrayImage> {
    if src.rows == 0 || src.cols == 0 || side == 0 {
        return Err(Error::Image("empty resize".into()));
    }
    let sy = src.rows as f64 / side as f64;
    let sx = src.cols as f64 / side as f64;
    let at = |r: usize, c: usize| src.pixels[r * src.cols + c];
    let coord = |dst: usize, scale: f64, len: usize| {
        let f = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = f.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, f - i0 as f64)
    };
    let mut out = Vec::with_capacity(side * side);
    for y in 0..side {
        let (r0, r1, fy) = coord(y, sy, src.rows);
        for x in 0..side {
            let (c0, c1, fx) = coord(x, sx, src.cols);
            let top = at(r0, c0) * (1.0 - fx) + at(r0, c1) * fx;
            let bot = at(r1, c0) * (1.0 - fx) + at(r1, c1) * fx;
            out.push((top * (1.0 - fy) + bot * fy).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(side, out)
}

/// 28×28 glyph to the 16×16 working resolution.
pub fn to_16x16(raw: &RawImage) -> Result<GrayImage> {
    if raw.rows != 28 || raw.cols != 28 {
        return Err(Error::Image(format!("expected 28x28, got {}x{}", raw.rows, raw.cols)));
    }
    resize_bilinear(raw, 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> RawImage {
        RawImage { rows: 28, cols: 28, pixels: vec![v; 784] }
    }

    #[test]
    fn constants_are_preserved() {
        for v in [0.0, 0.5, 1.0] {
            let img = to_16x16(&constant(v)).unwrap();
            assert!(img.pixels().iter().all(|&p| (p - v).abs() < 1e-15));
        }
    }

    #[test]
    fn rejects_wrong_size() {
        assert!(to_16x16(&RawImage { rows: 16, cols: 16, pixels: vec![0.0; 256] }).is_err());
    }
}
