use rand::Rng as _;
use sha2::{Digest, Sha256};

use super::{LayerSpec, NetworkSpec, Tensor};
use crate::{rng, Error, Result};

/// A network spec with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    shapes: Vec<Vec<usize>>,
    names: Vec<String>,
    params: Vec<Tensor>,
    /// For each layer, the index of its weight tensor (bias follows).
    slots: Vec<Option<usize>>,
    seed: u64,
}

/// Per-layer inputs captured by a recorded forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pool_argmax: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub output: Vec<f64>,
    pub trace: Option<Trace>,
}

impl Trace {
    /// Output of layer `i` (the input of layer `i + 1`).
    pub fn layer_output(&self, i: usize) -> Option<&[f64]> {
        self.inputs.get(i + 1).map(Vec::as_slice)
    }
}

/// Gradient buffers aligned with a network's parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self { tensors: net.params.iter().map(|t| vec![0.0; t.len()]).collect() }
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn scale(&mut self, s: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= s);
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().flatten().fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn slots_for(spec: &NetworkSpec) -> Vec<Option<usize>> {
    let mut next = 0;
    spec.layers
        .iter()
        .map(|l| match l {
            LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. } => {
                next += 2;
                Some(next - 2)
            }
            _ => None,
        })
        .collect()
}

impl Network {
    /// He-uniform weights (limit √(6/fan_in)), zero biases.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut r = rng::rng(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (name, shape) in spec.param_shapes()? {
            let tensor = if name.ends_with(".weight") {
                let fan_in: usize = shape[1..].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                let n = shape.iter().product();
                Tensor::new(shape, (0..n).map(|_| r.random_range(-limit..limit)).collect())?
            } else {
                Tensor::zeros(shape)
            };
            names.push(name);
            params.push(tensor);
        }
        let slots = slots_for(&spec);
        Ok(Self { spec, shapes, names, params, slots, seed })
    }

    /// Build from explicit tensors (file loads, hand-built stubs).
    pub fn from_params(spec: NetworkSpec, params: Vec<Tensor>, seed: u64) -> Result<Self> {
        let shapes = spec.shapes()?;
        let expected = spec.param_shapes()?;
        if expected.len() != params.len() {
            return Err(Error::Shape(format!("{} tensors for {} parameters", params.len(), expected.len())));
        }
        for ((name, shape), t) in expected.iter().zip(&params) {
            if shape.as_slice() != t.shape() {
                return Err(Error::Shape(format!("{name}: expected {shape:?}, got {:?}", t.shape())));
            }
        }
        let names = expected.into_iter().map(|(n, _)| n).collect();
        let slots = slots_for(&spec);
        Ok(Self { spec, shapes, names, params, slots, seed })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn input_len(&self) -> usize {
        self.spec.input_len()
    }

    pub fn output_len(&self) -> usize {
        self.shapes.last().unwrap().iter().product()
    }

    /// SHA-256 over the little-endian bytes of every parameter.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.params {
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn forward(&self, input: &[f64], record: bool) -> Result<Forward> {
        if input.len() != self.input_len() {
            return Err(Error::Shape(format!("input of {} values, network takes {}", input.len(), self.input_len())));
        }
        let mut inputs = Vec::with_capacity(if record { self.spec.layers.len() + 1 } else { 0 });
        let mut pool_argmax = vec![Vec::new(); if record { self.spec.layers.len() } else { 0 }];
        let mut cur = input.to_vec();
        for (l, layer) in self.spec.layers.iter().enumerate() {
            let shape = &self.shapes[l];
            let next = match *layer {
                LayerSpec::Dense { outputs } => {
                    let w = self.params[self.slots[l].unwrap()].data();
                    let b = self.params[self.slots[l].unwrap() + 1].data();
                    dense_forward(w, b, &cur, outputs)
                }
                LayerSpec::Conv2d { out_channels, kernel } => {
                    let w = self.params[self.slots[l].unwrap()].data();
                    let b = self.params[self.slots[l].unwrap() + 1].data();
                    conv_forward(w, b, &cur, shape, out_channels, kernel)
                }
                LayerSpec::Relu => cur.iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::MaxPool2 => {
                    let (out, arg) = pool_forward(&cur, shape);
                    if record {
                        pool_argmax[l] = arg;
                    }
                    out
                }
            };
            if record {
                inputs.push(std::mem::replace(&mut cur, next));
            } else {
                cur = next;
            }
        }
        let trace = record.then(|| {
            inputs.push(cur.clone());
            Trace { inputs, pool_argmax }
        });
        Ok(Forward { output: cur, trace })
    }

    /// Output only, no trace.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, false)?.output)
    }

    /// Accumulate parameter gradients of a scalar loss into `grads` given
    /// ∂loss/∂output, and return ∂loss/∂input.
    pub fn backward_into(&self, fwd: &Forward, out_grad: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        let trace = fwd.trace.as_ref().ok_or(Error::MissingTrace)?;
        if out_grad.len() != self.output_len() {
            return Err(Error::Shape(format!("output gradient of {} values, network emits {}", out_grad.len(), self.output_len())));
        }
        let mut g = out_grad.to_vec();
        for (l, layer) in self.spec.layers.iter().enumerate().rev() {
            let x = &trace.inputs[l];
            let shape = &self.shapes[l];
            g = match *layer {
                LayerSpec::Dense { outputs } => {
                    let slot = self.slots[l].unwrap();
                    let w = self.params[slot].data();
                    let (gw, gb) = two_mut(&mut grads.tensors, slot);
                    dense_backward(w, x, &g, outputs, gw, gb)
                }
                LayerSpec::Conv2d { out_channels, kernel } => {
                    let slot = self.slots[l].unwrap();
                    let w = self.params[slot].data();
                    let (gw, gb) = two_mut(&mut grads.tensors, slot);
                    conv_backward(w, x, &g, shape, out_channels, kernel, gw, gb)
                }
                LayerSpec::Relu => x.iter().zip(&g).map(|(&xi, &gi)| if xi > 0.0 { gi } else { 0.0 }).collect(),
                LayerSpec::MaxPool2 => {
                    let mut dx = vec![0.0; x.len()];
                    for (o, &src) in trace.pool_argmax[l].iter().enumerate() {
                        dx[src] += g[o];
                    }
                    dx
                }
            };
        }
        Ok(g)
    }

    pub fn backward(&self, fwd: &Forward, out_grad: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(fwd, out_grad, &mut grads)?;
        Ok(grads)
    }

    /// Overwrite parameters with another network's (same spec).
    pub fn copy_from(&mut self, other: &Network) -> Result<()> {
        if other.spec != self.spec {
            return Err(Error::Shape("cannot copy parameters across different specs".into()));
        }
        self.params.clone_from(&other.params);
        Ok(())
    }
}

fn two_mut(v: &mut [Vec<f64>], i: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = v.split_at_mut(i + 1);
    (&mut a[i], &mut b[0])
}

fn dense_forward(w: &[f64], b: &[f64], x: &[f64], outputs: usize) -> Vec<f64> {
    let n = x.len();
    (0..outputs)
        .map(|o| b[o] + w[o * n..(o + 1) * n].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

fn dense_backward(w: &[f64], x: &[f64], g: &[f64], outputs: usize, gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let n = x.len();
    let mut dx = vec![0.0; n];
    for o in 0..outputs {
        let go = g[o];
        if go == 0.0 {
            continue;
        }
        gb[o] += go;
        let row = &w[o * n..(o + 1) * n];
        let grow = &mut gw[o * n..(o + 1) * n];
        for i in 0..n {
            grow[i] += go * x[i];
            dx[i] += go * row[i];
        }
    }
    dx
}

/// Valid output range [lo, hi) for a kernel offset `d` on an axis of length `len`.
fn span(d: isize, len: usize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d.max(0)).max(0) as usize;
    (lo, hi.max(lo))
}

fn conv_forward(w: &[f64], b: &[f64], x: &[f64], shape: &[usize], out_c: usize, k: usize) -> Vec<f64> {
    let (in_c, h, wd) = (shape[0], shape[1], shape[2]);
    let pad = (k / 2) as isize;
    let plane = h * wd;
    let mut out = vec![0.0; out_c * plane];
    for o in 0..out_c {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.iter_mut().for_each(|v| *v = b[o]);
        for c in 0..in_c {
            let src = &x[c * plane..(c + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(dy, h);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(dx, wd);
                    let wv = w[((o * in_c + c) * k + ky) * k + kx];
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s = &src[sy * wd..(sy + 1) * wd];
                        let d = &mut dst[y * wd..(y + 1) * wd];
                        for xx in x0..x1 {
                            d[xx] += wv * s[(xx as isize + dx) as usize];
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    w: &[f64],
    x: &[f64],
    g: &[f64],
    shape: &[usize],
    out_c: usize,
    k: usize,
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let (in_c, h, wd) = (shape[0], shape[1], shape[2]);
    let pad = (k / 2) as isize;
    let plane = h * wd;
    let mut dxv = vec![0.0; x.len()];
    for o in 0..out_c {
        let go = &g[o * plane..(o + 1) * plane];
        gb[o] += go.iter().sum::<f64>();
        for c in 0..in_c {
            let src = &x[c * plane..(c + 1) * plane];
            let dsrc = &mut dxv[c * plane..(c + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = span(dy, h);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = span(dx, wd);
                    let wi = ((o * in_c + c) * k + ky) * k + kx;
                    let wv = w[wi];
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let grow = &go[y * wd..(y + 1) * wd];
                        let s = &src[sy * wd..(sy + 1) * wd];
                        let ds = &mut dsrc[sy * wd..(sy + 1) * wd];
                        for xx in x0..x1 {
                            let sx = (xx as isize + dx) as usize;
                            acc += grow[xx] * s[sx];
                            ds[sx] += wv * grow[xx];
                        }
                    }
                    gw[wi] += acc;
                }
            }
        }
    }
    dxv
}

fn pool_forward(x: &[f64], shape: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = usize::MAX;
                let mut best_v = f64::NEG_INFINITY;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let i = (ch * h + 2 * y + dy) * w + 2 * xx + dx;
                    if x[i] > best_v {
                        best_v = x[i];
                        best = i;
                    }
                }
                out.push(best_v);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_dense(n: usize) -> Network {
        let spec = NetworkSpec::new(vec![n], vec![LayerSpec::Dense { outputs: n }]).unwrap();
        let mut w = vec![0.0; n * n];
        (0..n).for_each(|i| w[i * n + i] = 1.0);
        Network::from_params(spec, vec![Tensor::new(vec![n, n], w).unwrap(), Tensor::zeros(vec![n])], 0).unwrap()
    }

    #[test]
    fn identity_dense_passes_input_through() {
        let net = identity_dense(3);
        assert_eq!(net.predict(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn relu_clamps_negatives() {
        let spec = NetworkSpec::new(vec![2], vec![LayerSpec::Relu]).unwrap();
        let net = Network::init(spec, 0).unwrap();
        assert_eq!(net.predict(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn two_layer_golden_logits() {
        // W1 = [[1, 2], [-1, 1]], b1 = [0, 1], W2 = [[1, -1]], b2 = [0.5]
        // x = [1, 1]: h = relu([3, 1]) = [3, 1]; y = 3 - 1 + 0.5 = 2.5
        // x = [2, -1]: h = relu([0, -2]) = [0, 0]; y = 0.5
        let spec = NetworkSpec::mlp(2, &[2], 1).unwrap();
        let net = Network::from_params(
            spec,
            vec![
                Tensor::new(vec![2, 2], vec![1.0, 2.0, -1.0, 1.0]).unwrap(),
                Tensor::new(vec![2], vec![0.0, 1.0]).unwrap(),
                Tensor::new(vec![1, 2], vec![1.0, -1.0]).unwrap(),
                Tensor::new(vec![1], vec![0.5]).unwrap(),
            ],
            0,
        )
        .unwrap();
        assert_eq!(net.predict(&[1.0, 1.0]).unwrap(), vec![2.5]);
        assert_eq!(net.predict(&[2.0, -1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn linear_squared_loss_closed_form() {
        // loss = |Wx - y|², ∂/∂W = 2 (Wx - y) xᵀ
        let spec = NetworkSpec::new(vec![3], vec![LayerSpec::Dense { outputs: 2 }]).unwrap();
        let net = Network::init(spec, 4).unwrap();
        let x = [0.3, -1.2, 2.0];
        let y = [1.0, -0.5];
        let fwd = net.forward(&x, true).unwrap();
        let resid: Vec<f64> = fwd.output.iter().zip(&y).map(|(o, t)| o - t).collect();
        let g: Vec<f64> = resid.iter().map(|r| 2.0 * r).collect();
        let grads = net.backward(&fwd, &g).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_abs_diff_eq!(grads.tensors()[0][o * 3 + i], 2.0 * resid[o] * x[i], epsilon = 1e-12);
            }
            assert_abs_diff_eq!(grads.tensors()[1][o], 2.0 * resid[o], epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let spec = NetworkSpec::new(
            vec![1, 4, 4],
            vec![
                LayerSpec::Conv2d { out_channels: 2, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Dense { outputs: 3 },
            ],
        )
        .unwrap();
        let net = Network::init(spec, 1).unwrap();
        let fwd = net.forward(&[0.5; 16], true).unwrap();
        assert_eq!(net.backward(&fwd, &[0.0; 3]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn backward_needs_a_trace() {
        let net = identity_dense(2);
        let fwd = net.forward(&[1.0, 2.0], false).unwrap();
        assert!(matches!(net.backward(&fwd, &[1.0, 1.0]), Err(Error::MissingTrace)));
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        assert!(matches!(identity_dense(2).forward(&[1.0], false), Err(Error::Shape(_))));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let spec = NetworkSpec::mlp(5, &[7], 3).unwrap();
        let a = Network::init(spec.clone(), 9).unwrap();
        let b = Network::init(spec.clone(), 9).unwrap();
        let c = Network::init(spec, 10).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn conv_matches_direct_definition() {
        let spec = NetworkSpec::new(vec![2, 5, 4], vec![LayerSpec::Conv2d { out_channels: 3, kernel: 3 }]).unwrap();
        let net = Network::init(spec, 3).unwrap();
        let x: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 / 11.0 - 0.4).collect();
        let out = net.predict(&x).unwrap();
        let (w, b) = (net.params()[0].data(), net.params()[1].data());
        for o in 0..3 {
            for y in 0..5i64 {
                for xx in 0..4i64 {
                    let mut s = b[o];
                    for c in 0..2 {
                        for ky in 0..3i64 {
                            for kx in 0..3i64 {
                                let (sy, sx) = (y + ky - 1, xx + kx - 1);
                                if (0..5).contains(&sy) && (0..4).contains(&sx) {
                                    s += w[((o * 2 + c) * 3 + ky as usize) * 3 + kx as usize]
                                        * x[c * 20 + (sy * 4 + sx) as usize];
                                }
                            }
                        }
                    }
                    assert_abs_diff_eq!(out[o * 20 + (y * 4 + xx) as usize], s, epsilon = 1e-12);
                }
            }
        }
    }
}
