use std::collections::BTreeMap;
use std::io::Write;

use crate::{Error, Result};

/// Outcome counts of a shot-based measurement of every qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementHistogram {
    num_qubits: usize,
    counts: BTreeMap<usize, u64>,
    shots: u64,
}

impl MeasurementHistogram {
    pub fn new(num_qubits: usize, counts: BTreeMap<usize, u64>) -> Result<Self> {
        if let Some((&index, _)) = counts.iter().find(|(&i, _)| i >> num_qubits != 0) {
            return Err(Error::BasisIndex { index, num_qubits });
        }
        let shots = counts.values().sum();
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(Self { num_qubits, counts, shots })
    }

    pub(crate) fn from_dense(num_qubits: usize, dense: &[u64]) -> Result<Self> {
        let counts = dense.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c)).collect();
        Self::new(num_qubits, counts)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn count(&self, basis: usize) -> u64 {
        self.counts.get(&basis).copied().unwrap_or(0)
    }

    /// Non-zero entries in ascending basis order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    /// Counts as a dense vector of length 2^num_qubits.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.num_qubits];
        for (i, c) in self.iter() {
            v[i] = c as f64;
        }
        v
    }

    /// `basis_index,count` rows, zero counts omitted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "basis_index,count")?;
        for (i, c) in self.iter() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_basis() {
        let counts = BTreeMap::from([(4, 1)]);
        assert!(matches!(
            MeasurementHistogram::new(2, counts),
            Err(Error::BasisIndex { index: 4, num_qubits: 2 })
        ));
    }

    #[test]
    fn csv_layout() {
        let h = MeasurementHistogram::new(2, BTreeMap::from([(0, 3), (3, 1)])).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "basis_index,count\n0,3\n3,1\n");
        assert_eq!(h.shots(), 4);
    }
}
