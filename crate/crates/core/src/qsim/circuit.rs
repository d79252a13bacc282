use serde::{Deserialize, Serialize};

use super::Gate;
use crate::Result;

/// An ordered gate list on a fixed register width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(num_qubits);
        c.extend(gates)?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates in reverse order, each inverted.
    pub fn inverse(&self) -> Self {
        Self { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    /// ASAP layering over target and control qubits: a gate lands one layer
    /// after the latest layer of any qubit it touches.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let d = g.qubits().map(|q| level[q]).max().unwrap_or(0) + 1;
            g.qubits().for_each(|q| level[q] = d);
            depth = depth.max(d);
        }
        depth
    }
}
