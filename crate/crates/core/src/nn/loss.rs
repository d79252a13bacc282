//! Loss heads returning (loss, ∂loss/∂output).

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// −log softmax(logits)[label]; gradient is softmax − onehot.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let mut p = softmax(logits);
    let loss = -p[label].max(f64::MIN_POSITIVE).ln();
    p[label] -= 1.0;
    (loss, p)
}

/// Σ (output − target)².
pub fn squared_error(output: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let grad: Vec<f64> = output.iter().zip(target).map(|(o, t)| 2.0 * (o - t)).collect();
    let loss = output.iter().zip(target).map(|(o, t)| (o - t).powi(2)).sum();
    (loss, grad)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
