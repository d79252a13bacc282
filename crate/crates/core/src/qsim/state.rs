use num_complex::Complex64;
use rand::Rng as _;

use super::{Circuit, Gate, MeasurementHistogram, MAX_QUBITS};
use crate::{rng, Error, Result};

/// Complex amplitudes over the 2^n computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(Error::QubitCount(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Wraps `amps`, rescaling to exact unit norm. The input must already be
    /// normalized to within 1e-6.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(num_qubits));
        }
        let norm_sqr: f64 = amps.iter().map(Complex64::norm_sqr).sum();
        if norm_sqr == 0.0 {
            return Err(Error::ZeroVector);
        }
        if (norm_sqr - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(norm_sqr));
        }
        let scale = norm_sqr.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Mix every (target=0, target=1) amplitude pair whose controls are
    /// satisfied by the gate's 2×2 unitary. Other amplitudes are untouched.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let m = gate.kind.matrix();
        let (mask, want) = gate.control_mask();
        let bit = 1usize << gate.target;
        let dim = self.amps.len();
        // Walk blocks of 2*bit; inside each, i has the target bit clear.
        let mut base = 0;
        while base < dim {
            for i in base..base + bit {
                if i & mask != want {
                    continue;
                }
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += bit << 1;
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::Shape(format!(
                "circuit on {} qubits applied to {}-qubit state",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        circuit.gates().iter().try_for_each(|g| self.apply_gate(g))
    }

    /// Consuming variant of [`apply_gate`](Self::apply_gate).
    pub fn with_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply_gate(gate)?;
        Ok(self)
    }

    /// Exact measurement distribution |a_b|².
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Draw `shots` i.i.d. computational-basis outcomes by inverse-CDF
    /// sampling. Identical (state, shots, seed) gives identical histograms.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<MeasurementHistogram> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = vec![0u64; self.amps.len()];
        let mut r = rng::rng(seed);
        for _ in 0..shots {
            let u = r.random::<f64>() * total;
            // First index whose cumulative mass exceeds u; zero-probability
            // states can never be selected.
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            counts[idx] += 1;
        }
        MeasurementHistogram::from_dense(self.num_qubits, &counts)
    }
}
