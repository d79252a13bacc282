//! Flexible Representation of Quantum Images.
//!
//! A 2ⁿ×2ⁿ image lives on 2n+1 qubits: qubit 0 is the color qubit and
//! qubits 1..=2n hold the pixel index i = y·2ⁿ + x (so p₀..p_{n-1} are the
//! bits of x and p_n..p_{2n-1} the bits of y). Basis index b = (i << 1) | c.
//! Each pixel contributes (cos θᵢ|0⟩ + sin θᵢ|1⟩)|i⟩ / 2ⁿ.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::qsim::{Circuit, Gate, MeasurementHistogram, StateVector};
use crate::{Error, Result};

/// Qubit assignment for 2ⁿ×2ⁿ images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrqiLayout {
    n: usize,
}

impl FrqiLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || 2 * n + 1 > crate::qsim::MAX_QUBITS {
            return Err(Error::Layout(format!("n = {n}")));
        }
        Ok(Self { n })
    }

    pub fn for_side(side: usize) -> Result<Self> {
        if side < 2 || !side.is_power_of_two() {
            return Err(Error::Layout(format!("side {side} is not a power of two ≥ 2")));
        }
        Self::new(side.trailing_zeros() as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        1 << self.n
    }

    pub fn num_pixels(&self) -> usize {
        1 << (2 * self.n)
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n + 1
    }

    pub fn num_positional(&self) -> usize {
        2 * self.n
    }

    pub const fn color_qubit(&self) -> usize {
        0
    }

    /// Register index of positional qubit p_k.
    pub fn positional_qubit(&self, k: usize) -> usize {
        debug_assert!(k < 2 * self.n);
        k + 1
    }

    pub fn pixel_index(&self, x: usize, y: usize) -> usize {
        (y << self.n) | x
    }

    pub fn basis_index(&self, pixel: usize, color: bool) -> usize {
        (pixel << 1) | usize::from(color)
    }
}

/// Per-pixel FRQI angles in [0, π/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleImage {
    n: usize,
    thetas: Vec<f64>,
}

impl AngleImage {
    pub fn new(n: usize, thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() != 1 << (2 * n) {
            return Err(Error::Image(format!("{} angles for n = {n}", thetas.len())));
        }
        if let Some(t) = thetas.iter().find(|t| !(0.0..=FRAC_PI_2).contains(*t)) {
            return Err(Error::Image(format!("angle {t} outside [0, π/2]")));
        }
        Ok(Self { n, thetas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn layout(&self) -> FrqiLayout {
        FrqiLayout { n: self.n }
    }

    /// Inverse of [`image_to_angles`].
    pub fn to_image(&self) -> GrayImage {
        let px = self.thetas.iter().map(|t| (t / FRAC_PI_2).clamp(0.0, 1.0)).collect();
        GrayImage::new(1 << self.n, px).expect("angles are in range")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "pixel,theta")?;
        for (i, t) in self.thetas.iter().enumerate() {
            writeln!(w, "{i},{t:.17e}")?;
        }
        Ok(())
    }
}

/// Linear intensity map θ = pixel·π/2.
pub fn image_to_angles(img: &GrayImage) -> Result<AngleImage> {
    let layout = FrqiLayout::for_side(img.side())?;
    AngleImage::new(layout.n(), img.pixels().iter().map(|p| p * FRAC_PI_2).collect())
}

/// Direct amplitude construction of |I(θ)⟩.
pub fn prepare_state(angles: &AngleImage) -> Result<StateVector> {
    let layout = angles.layout();
    let scale = (layout.side() as f64).recip();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << layout.num_qubits()];
    for (i, &t) in angles.thetas().iter().enumerate() {
        let (s, c) = t.sin_cos();
        amps[layout.basis_index(i, false)] = Complex64::new(c * scale, 0.0);
        amps[layout.basis_index(i, true)] = Complex64::new(s * scale, 0.0);
    }
    StateVector::from_amplitudes(amps)
}

/// Gate-level encoder: Hadamards on every positional qubit, then one
/// RY(2θᵢ) on the color qubit per pixel, controlled on all positional
/// qubits matching the bits of i.
pub fn encoder_circuit(angles: &AngleImage) -> Result<Circuit> {
    let layout = angles.layout();
    let mut circuit = Circuit::new(layout.num_qubits());
    for k in 0..layout.num_positional() {
        circuit.push(Gate::h(layout.positional_qubit(k)))?;
    }
    for (i, &t) in angles.thetas().iter().enumerate() {
        let gate = (0..layout.num_positional()).fold(Gate::ry(layout.color_qubit(), 2.0 * t), |g, k| {
            g.controlled(layout.positional_qubit(k), (i >> k) & 1 == 1)
        });
        circuit.push(gate)?;
    }
    Ok(circuit)
}

/// Decode per-basis weights (counts, or exact probabilities) into an image
/// with the conditional estimator θ̂ᵢ = asin √(w₁/(w₀+w₁)). Pixels with no
/// weight decode to 0.
pub fn decode_weights(weights: &[f64], layout: FrqiLayout) -> Result<GrayImage> {
    if weights.len() != 1 << layout.num_qubits() {
        return Err(Error::Shape(format!(
            "{} weights for a {}-qubit layout",
            weights.len(),
            layout.num_qubits()
        )));
    }
    let pixels = (0..layout.num_pixels())
        .map(|i| {
            let w0 = weights[layout.basis_index(i, false)];
            let w1 = weights[layout.basis_index(i, true)];
            let total = w0 + w1;
            if total <= 0.0 {
                return 0.0;
            }
            let theta = (w1 / total).clamp(0.0, 1.0).sqrt().asin();
            (theta / FRAC_PI_2).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage::new(layout.side(), pixels)
}

pub fn decode_histogram(hist: &MeasurementHistogram, layout: FrqiLayout) -> Result<GrayImage> {
    if hist.num_qubits() != layout.num_qubits() {
        // Any index beyond the layout's register is out of range.
        if let Some((index, _)) = hist.iter().find(|(i, _)| i >> layout.num_qubits() != 0) {
            return Err(Error::BasisIndex { index, num_qubits: layout.num_qubits() });
        }
        let mut w = vec![0.0; 1 << layout.num_qubits()];
        hist.iter().for_each(|(i, c)| w[i] = c as f64);
        return decode_weights(&w, layout);
    }
    decode_weights(&hist.to_dense(), layout)
}

/// Sample `shots` measurements and decode them.
pub fn measure_image(state: &StateVector, shots: u64, seed: u64, layout: FrqiLayout) -> Result<GrayImage> {
    decode_histogram(&state.sample(shots, seed)?, layout)
}

/// Set θᵢ = `theta_r` on every listed pixel.
pub fn redact_pixels(angles: &AngleImage, pixels: &BTreeSet<usize>, theta_r: f64) -> Result<AngleImage> {
    if !(0.0..=FRAC_PI_2).contains(&theta_r) {
        return Err(Error::Image(format!("redaction angle {theta_r} outside [0, π/2]")));
    }
    let mut thetas = angles.thetas.clone();
    for &i in pixels {
        *thetas.get_mut(i).ok_or(Error::PixelIndex { index: i, pixels: angles.thetas.len() })? = theta_r;
    }
    Ok(AngleImage { n: angles.n, thetas })
}
