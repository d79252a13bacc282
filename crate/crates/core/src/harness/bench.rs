use std::time::Instant;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::actions::{self, ActionCatalog, ActionSet, BaseAction};
use crate::frqi::{self, AngleImage};
use crate::qsim::StateVector;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub gates: usize,
    pub depth: usize,
    pub num_qubits: usize,
    pub seconds: f64,
}

/// Encoder circuit of a random image plus `k` distinct random gate actions
/// from `catalog`, for each k in `0..=max_gates`; depth and the time to
/// simulate the circuit from |0…0⟩.
pub fn bench_depth(catalog: &ActionCatalog, max_gates: usize, seed: u64) -> Result<Vec<DepthPoint>> {
    let layout = catalog.layout;
    let gates: Vec<usize> =
        (0..catalog.len()).filter(|&i| matches!(catalog.actions[i], BaseAction::CrxGate { .. })).collect();
    if gates.len() < max_gates {
        return Err(Error::Config(format!("catalog has {} gate actions, need {max_gates}", gates.len())));
    }
    let mut r = rng::rng(seed);
    let thetas = (0..layout.num_pixels()).map(|_| r.random_range(0.0..=std::f64::consts::FRAC_PI_2)).collect();
    let encoder = frqi::encoder_circuit(&AngleImage::new(layout.n(), thetas)?)?;
    let picks = index::sample(&mut r, gates.len(), max_gates).into_vec();
    let mut out = Vec::new();
    for k in 0..=max_gates {
        let mut circuit = encoder.clone();
        for &p in &picks[..k] {
            let plan = actions::compile(&ActionSet::new(vec![gates[p]])?, catalog, 0)?;
            circuit.extend(plan.gate_suffix)?;
        }
        let start = Instant::now();
        let mut state = StateVector::zero(circuit.num_qubits())?;
        state.apply_circuit(&circuit)?;
        let seconds = start.elapsed().as_secs_f64();
        std::hint::black_box(state);
        out.push(DepthPoint { gates: k, depth: circuit.depth(), num_qubits: circuit.num_qubits(), seconds });
    }
    Ok(out)
}
