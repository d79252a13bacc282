//! Image-space degradations used for baselines and classifier pre-training.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::actions::{self, ActionCatalog, ActionSpace};
use crate::frqi;
use crate::image::GrayImage;
use crate::{rng, Error, Result};

pub const BLUR_KERNEL_SIDE: usize = 4;
pub const BLUR_SIGMA: f64 = 1.0;
pub const NOISE_SIGMA: f64 = 0.3;

/// Normalized 1-D taps for pixel offsets `-(side/2) ..= (side-1)/2`. An
/// even-sized kernel is centered half a pixel up/left of the anchor.
pub fn blur_taps(kernel_side: usize, sigma: f64) -> Vec<f64> {
    let center = (kernel_side as f64 - 1.0) / 2.0;
    let t: Vec<f64> = (0..kernel_side)
        .map(|k| {
            let d = k as f64 - center;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = t.iter().sum();
    t.into_iter().map(|w| w / s).collect()
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(img: &GrayImage, kernel_side: usize, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0) || kernel_side == 0 {
        return Err(Error::Config(format!("blur kernel {kernel_side}, sigma {sigma}")));
    }
    let taps = blur_taps(kernel_side, sigma);
    let lo = (kernel_side / 2) as isize;
    let n = img.side() as isize;
    let clamp = |v: isize| v.clamp(0, n - 1) as usize;
    let side = img.side();
    let mut rows = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..n {
            rows[y * side + x as usize] =
                taps.iter().enumerate().map(|(k, w)| w * img.get(clamp(x + k as isize - lo), y)).sum();
        }
    }
    let mut out = vec![0.0; side * side];
    for y in 0..n {
        for x in 0..side {
            out[y as usize * side + x] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * rows[clamp(y + k as isize - lo) * side + x])
                .sum::<f64>()
                .clamp(0.0, 1.0);
        }
    }
    GrayImage::new(side, out)
}

/// Additive N(0, σ²) noise, clamped to [0, 1].
pub fn gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("noise sigma {sigma} must be positive")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut r = rng::rng(seed);
    let px = img.pixels().iter().map(|p| (p + normal.sample(&mut r)).clamp(0.0, 1.0)).collect();
    GrayImage::new(img.side(), px)
}

/// Run the image through a uniformly random action set of `catalog` and
/// return the measured result.
pub fn quantum_random(img: &GrayImage, catalog: &ActionCatalog, default_shots: u64, seed: u64) -> Result<GrayImage> {
    let space = ActionSpace::for_catalog(catalog);
    let mut r = rng::rng(rng::derive(seed, "quantum-random", 0));
    let set = space.decode(r.random_range(0..space.len()))?;
    let plan = actions::compile(&set, catalog, rng::derive(seed, "compile", 0))?;
    plan.render(&frqi::image_to_angles(img)?, default_shots, rng::derive(seed, "measure", 0))
}

/// Plain FRQI capture at `shots`, no privacy actions.
pub fn shot_noise(img: &GrayImage, shots: u64, seed: u64) -> Result<GrayImage> {
    actions::ActionPlan::identity().render(&frqi::image_to_angles(img)?, shots, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::BaseAction;
    use crate::frqi::FrqiLayout;

    fn ramp() -> GrayImage {
        GrayImage::new(16, (0..256).map(|i| ((i * 37) % 256) as f64 / 255.0).collect()).unwrap()
    }

    /// Direct 2-D convolution with the outer-product kernel.
    fn blur_oracle(img: &GrayImage, sigma: f64) -> Vec<f64> {
        let n = img.side() as isize;
        let g = |d: f64| (-d * d / (2.0 * sigma * sigma)).exp();
        let mut k = [[0.0; 4]; 4];
        let mut total = 0.0;
        for (i, row) in k.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                *w = g(i as f64 - 1.5) * g(j as f64 - 1.5);
                total += *w;
            }
        }
        let mut out = Vec::new();
        for y in 0..n {
            for x in 0..n {
                let mut s = 0.0;
                for (i, row) in k.iter().enumerate() {
                    for (j, w) in row.iter().enumerate() {
                        let sy = (y + i as isize - 2).clamp(0, n - 1) as usize;
                        let sx = (x + j as isize - 2).clamp(0, n - 1) as usize;
                        s += w / total * img.get(sx, sy);
                    }
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn blur_matches_direct_convolution() {
        let img = ramp();
        let fast = gaussian_blur(&img, 4, 1.0).unwrap();
        for (a, b) in fast.pixels().iter().zip(blur_oracle(&img, 1.0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_keeps_constants_and_mass() {
        let c = GrayImage::filled(16, 0.3).unwrap();
        assert!(gaussian_blur(&c, 4, 1.0).unwrap().pixels().iter().all(|p| (p - 0.3).abs() < 1e-12));
        let mut px = vec![0.0; 256];
        px[8 * 16 + 8] = 1.0;
        let b = gaussian_blur(&GrayImage::new(16, px).unwrap(), 4, 1.0).unwrap();
        let mass: f64 = b.pixels().iter().sum();
        assert!((mass - 1.0).abs() < 1e-6);
        assert_eq!(b.pixels().iter().filter(|&&p| p > 0.0).count(), 16);
        assert!(gaussian_blur(&c, 4, 0.0).is_err());
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let img = GrayImage::filled(100, 0.5).unwrap();
        let noisy = gaussian_noise(&img, 0.3, 1).unwrap();
        let n = noisy.pixels().len() as f64;
        let var = noisy.pixels().iter().map(|p| (p - 0.5).powi(2)).sum::<f64>() / n;
        assert!((0.25..=0.32).contains(&var.sqrt()), "std {}", var.sqrt());
        assert_eq!(noisy, gaussian_noise(&img, 0.3, 1).unwrap());
        let tiny = gaussian_noise(&ramp(), 1e-9, 2).unwrap();
        assert!(tiny.max_abs_error(&ramp()) < 1e-6);
    }

    #[test]
    fn quantum_random_contract() {
        let layout = FrqiLayout::for_side(16).unwrap();
        let cat = ActionCatalog::default_for(layout).unwrap();
        let a = quantum_random(&ramp(), &cat, 8192, 3).unwrap();
        assert_eq!(a.side(), 16);
        assert_eq!(a, quantum_random(&ramp(), &cat, 8192, 3).unwrap());
    }

    #[test]
    fn diagonal_only_catalog_matches_plain_capture() {
        // A catalog whose only action is a zero-angle rotation changes nothing,
        // so the output equals a plain capture with the same measurement seed.
        let layout = FrqiLayout::for_side(16).unwrap();
        let cat = ActionCatalog::new(
            layout,
            vec![BaseAction::CrxGate { control: 3, control_value: true, angle: 0.0 }],
            1,
        )
        .unwrap();
        let q = quantum_random(&ramp(), &cat, 8192, 4).unwrap();
        let plain = shot_noise(&ramp(), 8192, rng::derive(4, "measure", 0)).unwrap();
        assert_eq!(q, plain);
    }
}
