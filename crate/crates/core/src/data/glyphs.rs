//! Procedural stroke glyphs for the 36 classes, rendered at 28×28.
//!
//! Each class is a set of polylines on a 4×6 design grid (x right, y down).
//! Samples vary by a random affine map, vertex jitter and stroke width.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::rng::Rng;

pub const GLYPH_SIDE: usize = 28;

type Stroke = Vec<(f64, f64)>;

#[derive(Default)]
struct Pen {
    strokes: Vec<Stroke>,
}

impl Pen {
    fn line(mut self, pts: &[(f64, f64)]) -> Self {
        self.strokes.push(pts.to_vec());
        self
    }

    /// Extend the last stroke with more points.
    fn to(mut self, pts: &[(f64, f64)]) -> Self {
        self.strokes.last_mut().expect("open stroke").extend_from_slice(pts);
        self
    }

    fn arc_pts(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64) -> Stroke {
        let steps = ((a1 - a0).abs() / 15.0).ceil().max(2.0) as usize;
        (0..=steps)
            .map(|i| {
                let a = (a0 + (a1 - a0) * i as f64 / steps as f64) * PI / 180.0;
                (cx + rx * a.cos(), cy - ry * a.sin())
            })
            .collect()
    }

    fn arc(self, cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64) -> Self {
        self.line(&Self::arc_pts(cx, cy, rx, ry, a0, a1))
    }

    fn then_arc(self, cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64) -> Self {
        let pts = Self::arc_pts(cx, cy, rx, ry, a0, a1);
        self.to(&pts)
    }
}

fn p_bowl(pen: Pen) -> Pen {
    pen.line(&[(0.0, 6.0), (0.0, 0.0), (2.6, 0.0)]).then_arc(2.6, 1.6, 1.4, 1.6, 90.0, -90.0).to(&[(0.0, 3.2)])
}

/// Stroke skeleton for a private class (0..=9 digits, 10..=35 letters).
fn skeleton(class: usize) -> Vec<Stroke> {
    let p = Pen::default();
    let pen = match class {
        0 => p.arc(2.0, 3.0, 1.5, 3.0, 0.0, 360.0),
        1 => p.line(&[(0.8, 1.2), (2.0, 0.0), (2.0, 6.0)]),
        2 => p.arc(2.0, 1.7, 1.8, 1.7, 150.0, -40.0).to(&[(0.0, 6.0), (4.0, 6.0)]),
        3 => p.arc(2.0, 1.5, 1.8, 1.5, 150.0, -90.0).then_arc(2.0, 4.5, 2.0, 1.5, 90.0, -150.0),
        4 => p.line(&[(3.0, 6.0), (3.0, 0.0), (0.0, 4.2), (4.0, 4.2)]),
        5 => p.line(&[(3.8, 0.0), (0.6, 0.0), (0.3, 2.6)]).then_arc(2.0, 4.2, 2.0, 1.8, 130.0, -150.0),
        6 => p
            .line(&[(3.6, 0.3), (2.2, 0.0), (0.8, 0.8), (0.1, 2.8), (0.0, 4.2)])
            .then_arc(2.0, 4.2, 2.0, 1.8, 180.0, -180.0),
        7 => p.line(&[(0.0, 0.0), (4.0, 0.0), (1.5, 6.0)]),
        8 => p.arc(2.0, 1.5, 1.6, 1.5, 0.0, 360.0).arc(2.0, 4.4, 2.0, 1.6, 0.0, 360.0),
        9 => p.arc(2.0, 1.8, 1.9, 1.8, 0.0, 360.0).line(&[(3.9, 1.8), (3.6, 4.0), (2.2, 6.0)]),
        10 => p.line(&[(0.0, 6.0), (2.0, 0.0), (4.0, 6.0)]).line(&[(0.7, 4.0), (3.3, 4.0)]),
        11 => p
            .line(&[(0.0, 6.0), (0.0, 0.0), (2.6, 0.0)])
            .then_arc(2.6, 1.5, 1.3, 1.5, 90.0, -90.0)
            .to(&[(0.0, 3.0)])
            .line(&[(2.8, 3.0)])
            .then_arc(2.8, 4.5, 1.2, 1.5, 90.0, -90.0)
            .to(&[(0.0, 6.0)]),
        12 => p.arc(2.2, 3.0, 2.2, 3.0, 50.0, 310.0),
        13 => p.line(&[(1.4, 0.0), (0.0, 0.0), (0.0, 6.0), (1.4, 6.0)]).arc(1.4, 3.0, 2.6, 3.0, 90.0, -90.0),
        14 => p.line(&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]).line(&[(0.0, 3.0), (3.0, 3.0)]),
        15 => p.line(&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0)]).line(&[(0.0, 3.0), (3.0, 3.0)]),
        16 => p.arc(2.0, 3.0, 2.0, 3.0, 50.0, 360.0).to(&[(2.2, 3.0)]),
        17 => p.line(&[(0.0, 0.0), (0.0, 6.0)]).line(&[(4.0, 0.0), (4.0, 6.0)]).line(&[(0.0, 3.0), (4.0, 3.0)]),
        18 => p.line(&[(2.0, 0.0), (2.0, 6.0)]).line(&[(1.0, 0.0), (3.0, 0.0)]).line(&[(1.0, 6.0), (3.0, 6.0)]),
        19 => p.line(&[(1.5, 0.0), (4.0, 0.0)]).line(&[(3.2, 0.0), (3.2, 4.5)]).then_arc(1.7, 4.5, 1.5, 1.5, 0.0, -180.0),
        20 => p.line(&[(0.0, 0.0), (0.0, 6.0)]).line(&[(4.0, 0.0), (0.0, 3.6)]).line(&[(1.3, 2.6), (4.0, 6.0)]),
        21 => p.line(&[(0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]),
        22 => p.line(&[(0.0, 6.0), (0.0, 0.0), (2.0, 3.5), (4.0, 0.0), (4.0, 6.0)]),
        23 => p.line(&[(0.0, 6.0), (0.0, 0.0), (4.0, 6.0), (4.0, 0.0)]),
        24 => p.arc(2.0, 3.0, 2.2, 3.0, 0.0, 360.0),
        25 => p_bowl(p),
        26 => p.arc(2.0, 3.0, 2.0, 3.0, 0.0, 360.0).line(&[(2.4, 4.4), (4.2, 6.2)]),
        27 => p_bowl(p).line(&[(1.6, 3.2), (4.0, 6.0)]),
        28 => p.arc(2.0, 1.5, 1.9, 1.5, 30.0, 270.0).then_arc(2.0, 4.5, 2.0, 1.5, 90.0, -160.0),
        29 => p.line(&[(0.0, 0.0), (4.0, 0.0)]).line(&[(2.0, 0.0), (2.0, 6.0)]),
        30 => p.line(&[(0.0, 0.0), (0.0, 4.0)]).then_arc(2.0, 4.0, 2.0, 2.0, 180.0, 360.0).to(&[(4.0, 0.0)]),
        31 => p.line(&[(0.0, 0.0), (2.0, 6.0), (4.0, 0.0)]),
        32 => p.line(&[(0.0, 0.0), (1.0, 6.0), (2.0, 2.0), (3.0, 6.0), (4.0, 0.0)]),
        33 => p.line(&[(0.0, 0.0), (4.0, 6.0)]).line(&[(4.0, 0.0), (0.0, 6.0)]),
        34 => p.line(&[(0.0, 0.0), (2.0, 3.0), (4.0, 0.0)]).line(&[(2.0, 3.0), (2.0, 6.0)]),
        35 => p.line(&[(0.0, 0.0), (4.0, 0.0), (0.0, 6.0), (4.0, 6.0)]),
        _ => panic!("class {class} out of range"),
    };
    pen.strokes
}

fn seg_dist(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
    (qx * qx + qy * qy).sqrt()
}

/// Render one random sample of `class` as 28×28 upright, row-major bytes.
pub fn render(class: usize, rng: &mut Rng) -> Vec<u8> {
    let scale = rng.random_range(2.25..3.15);
    let aspect = rng.random_range(0.8..1.2);
    let rot: f64 = rng.random_range(-0.2..0.2);
    let shear = rng.random_range(-0.25..0.25);
    let cx = 14.0 + rng.random_range(-1.5..1.5);
    let cy = 14.0 + rng.random_range(-1.5..1.5);
    let half_width = rng.random_range(0.5..0.85);
    let peak = rng.random_range(0.85..1.0);
    let jitter = Normal::new(0.0, 0.1).unwrap();
    // Smooth per-sample warp of the design grid, in grid units.
    let warp: [f64; 6] = std::array::from_fn(|i| match i % 3 {
        0 => rng.random_range(-0.35..0.35),
        1 => rng.random_range(0.6..1.4),
        _ => rng.random_range(0.0..2.0 * PI),
    });
    let (s, c) = rot.sin_cos();

    let strokes: Vec<Stroke> = skeleton(class)
        .into_iter()
        .map(|stroke| {
            stroke
                .into_iter()
                .map(|(x, y)| {
                    let wx = warp[0] * (warp[1] * y + warp[2]).sin();
                    let wy = warp[3] * (warp[4] * x + warp[5]).sin();
                    let u = (x + wx - 2.0 + jitter.sample(rng)) * aspect;
                    let v = y + wy - 3.0 + jitter.sample(rng);
                    let u = u + shear * v;
                    (cx + scale * (c * u - s * v), cy + scale * (s * u + c * v))
                })
                .collect()
        })
        .collect();

    let mut out = vec![0u8; GLYPH_SIDE * GLYPH_SIDE];
    for py in 0..GLYPH_SIDE {
        for px in 0..GLYPH_SIDE {
            let (fx, fy) = (px as f64 + 0.5, py as f64 + 0.5);
            let d = strokes
                .iter()
                .flat_map(|st| st.windows(2).map(|w| seg_dist(fx, fy, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            let v = (half_width + 0.5 - d).clamp(0.0, 1.0) * peak;
            out[py * GLYPH_SIDE + px] = (v * 255.0).round() as u8;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn every_class_renders_ink_inside_the_frame() {
        let mut r = rng::rng(5);
        for class in 0..36 {
            let img = render(class, &mut r);
            let ink = img.iter().filter(|&&v| v > 128).count();
            assert!((15..400).contains(&ink), "class {class}: {ink}");
            let border: u32 = (0..28).map(|i| u32::from(img[i]) + u32::from(img[27 * 28 + i])).sum();
            assert_eq!(border, 0, "class {class} touches the frame");
        }
    }

    #[test]
    fn classes_differ() {
        let mut r = rng::rng(6);
        let a = render(17, &mut r);
        let mut r = rng::rng(6);
        let b = render(0, &mut r);
        assert_ne!(a, b);
    }
}
