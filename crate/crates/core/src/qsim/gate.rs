use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "theta")]
pub enum GateKind {
    X,
    H,
    Z,
    Rx(f64),
    Ry(f64),
    Rz(f64),
}

impl GateKind {
    pub fn matrix(&self) -> Matrix2 {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
            }
            GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            GateKind::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            GateKind::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            GateKind::Rz(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
            }
        }
    }

    pub fn inverse(&self) -> GateKind {
        match *self {
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            k => k,
        }
    }

    /// Diagonal in the computational basis: never changes measurement statistics.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, GateKind::Z | GateKind::Rz(_))
    }
}

/// A control qubit together with the basis value it requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Control {
    pub qubit: usize,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize) -> Self {
        Self { kind, target, controls: Vec::new() }
    }

    pub fn x(target: usize) -> Self {
        Self::new(GateKind::X, target)
    }

    pub fn h(target: usize) -> Self {
        Self::new(GateKind::H, target)
    }

    pub fn z(target: usize) -> Self {
        Self::new(GateKind::Z, target)
    }

    pub fn rx(target: usize, theta: f64) -> Self {
        Self::new(GateKind::Rx(theta), target)
    }

    pub fn ry(target: usize, theta: f64) -> Self {
        Self::new(GateKind::Ry(theta), target)
    }

    pub fn rz(target: usize, theta: f64) -> Self {
        Self::new(GateKind::Rz(theta), target)
    }

    /// Add a control that must read `value` for the gate to act.
    pub fn controlled(mut self, qubit: usize, value: bool) -> Self {
        self.controls.push(Control { qubit, value });
        self
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::x(target).controlled(control, true)
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self::z(target).controlled(control, true)
    }

    pub fn crx(control: usize, target: usize, theta: f64) -> Self {
        Self::rx(target, theta).controlled(control, true)
    }

    pub fn crz(control: usize, target: usize, theta: f64) -> Self {
        Self::rz(target, theta).controlled(control, true)
    }

    pub fn inverse(&self) -> Self {
        Self { kind: self.kind.inverse(), target: self.target, controls: self.controls.clone() }
    }

    /// Every qubit the gate touches, target first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target).chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= num_qubits {
                return Err(Error::QubitIndex { index: q, num_qubits });
            }
        }
        for (i, c) in self.controls.iter().enumerate() {
            if c.qubit == self.target || self.controls[..i].iter().any(|o| o.qubit == c.qubit) {
                return Err(Error::ControlCollision(c.qubit));
            }
        }
        Ok(())
    }

    /// (mask, value) pair: a basis index satisfies the controls iff `i & mask == value`.
    pub(crate) fn control_mask(&self) -> (usize, usize) {
        self.controls.iter().fold((0, 0), |(m, v), c| {
            (m | 1 << c.qubit, if c.value { v | 1 << c.qubit } else { v })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_unitarity_defect(m: &Matrix2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dot: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn every_kind_is_unitary() {
        for kind in [
            GateKind::X,
            GateKind::H,
            GateKind::Z,
            GateKind::Rx(0.3),
            GateKind::Ry(-1.7),
            GateKind::Rz(PI / 2.0),
        ] {
            assert!(max_unitarity_defect(&kind.matrix()) < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn validation_rejects_bad_indices_and_collisions() {
        assert!(Gate::h(2).validate(2).is_err());
        assert!(Gate::cx(3, 0).validate(3).is_err());
        assert!(matches!(Gate::cx(1, 1).validate(3), Err(Error::ControlCollision(1))));
        assert!(matches!(
            Gate::x(0).controlled(1, true).controlled(1, false).validate(3),
            Err(Error::ControlCollision(1))
        ));
        assert!(Gate::cx(1, 0).validate(2).is_ok());
    }

    #[test]
    fn control_mask_encodes_required_values() {
        let g = Gate::x(0).controlled(1, true).controlled(3, false);
        assert_eq!(g.control_mask(), (0b1010, 0b0010));
    }
}
