use rand::Rng as _;
use serde::Serialize;

use super::{loss, Network, NetworkSpec};
use crate::{rng, Result};

/// Loss used to reduce the network output to a scalar during a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradCheckHead {
    /// Random fixed linear functional of the outputs.
    Linear,
    /// Softmax cross-entropy against a random label.
    SoftmaxXent,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

const STEP: f64 = 1e-5;

/// Compare analytic parameter and input gradients against central
/// differences on a random instance of `spec`. At most 400 parameters are
/// probed, chosen at random.
pub fn grad_check(spec: &NetworkSpec, head: GradCheckHead, seed: u64) -> Result<GradCheckReport> {
    let mut r = rng::rng(rng::derive(seed, "gradcheck", 0));
    let mut net = Network::init(spec.clone(), seed)?;
    // Non-zero biases so every bias path is exercised.
    for t in net.params_mut() {
        t.data_mut().iter_mut().for_each(|v| *v += r.random_range(-0.1..0.1));
    }
    let input: Vec<f64> = (0..net.input_len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..net.output_len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let label = r.random_range(0..net.output_len());

    let scalar = |out: &[f64]| -> (f64, Vec<f64>) {
        match head {
            GradCheckHead::Linear => (out.iter().zip(&weights).map(|(o, w)| o * w).sum(), weights.clone()),
            GradCheckHead::SoftmaxXent => loss::softmax_cross_entropy(out, label),
        }
    };

    let fwd = net.forward(&input, true)?;
    let (_, out_grad) = scalar(&fwd.output);
    let mut grads = super::Gradients::zeros_like(&net);
    let input_grad = net.backward_into(&fwd, &out_grad, &mut grads)?;

    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    let mut checked = 0;

    let coords: Vec<(usize, usize)> = net
        .params()
        .iter()
        .enumerate()
        .flat_map(|(t, p)| (0..p.len()).map(move |i| (t, i)))
        .collect();
    let picks: Vec<usize> = if coords.len() <= 400 {
        (0..coords.len()).collect()
    } else {
        rand::seq::index::sample(&mut r, coords.len(), 400).into_vec()
    };
    for k in picks {
        let (t, i) = coords[k];
        let orig = net.params()[t].data()[i];
        net.params_mut()[t].data_mut()[i] = orig + STEP;
        let up = scalar(&net.predict(&input)?).0;
        net.params_mut()[t].data_mut()[i] = orig - STEP;
        let down = scalar(&net.predict(&input)?).0;
        net.params_mut()[t].data_mut()[i] = orig;
        worst = worst.max(rel(grads.tensors[t][i], (up - down) / (2.0 * STEP)));
        checked += 1;
    }
    for i in 0..input.len().min(100) {
        let mut x = input.clone();
        x[i] += STEP;
        let up = scalar(&net.predict(&x)?).0;
        x[i] -= 2.0 * STEP;
        let down = scalar(&net.predict(&x)?).0;
        worst = worst.max(rel(input_grad[i], (up - down) / (2.0 * STEP)));
        checked += 1;
    }
    Ok(GradCheckReport { max_rel_error: worst, checked })
}
