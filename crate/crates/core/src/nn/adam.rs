use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Gradients, Network, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|t| vec![0.0; t.len()]).collect();
        Self { config, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of every parameter.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if grads.tensors.len() != self.m.len()
            || grads.tensors.iter().zip(&self.m).any(|(g, m)| g.len() != m.len())
        {
            return Err(Error::Shape("gradient layout does not match optimizer state".into()));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in net.params_mut().iter_mut().zip(&grads.tensors).zip(&mut self.m).zip(&mut self.v) {
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, net: &Network) -> Result<()> {
        let header = serde_json::json!({
            "kind": "adam",
            "config": self.config,
            "step": self.step,
        });
        let mut tensors = Vec::new();
        for (i, t) in net.params().iter().enumerate() {
            tensors.push((format!("m.{}", net.names()[i]), Tensor::new(t.shape().to_vec(), self.m[i].clone())?));
            tensors.push((format!("v.{}", net.names()[i]), Tensor::new(t.shape().to_vec(), self.v[i].clone())?));
        }
        super::write_tensor_file(path.as_ref(), header, &tensors)
    }

    pub fn load(path: impl AsRef<Path>, net: &Network) -> Result<Self> {
        let path = path.as_ref();
        let (header, tensors) = super::read_tensor_file(path)?;
        let bad = |reason: String| Error::Format { path: path.to_owned(), reason };
        let config: AdamConfig = serde_json::from_value(header["config"].clone())?;
        let step = header["step"].as_u64().ok_or_else(|| bad("missing step".into()))?;
        if tensors.len() != 2 * net.params().len() {
            return Err(bad(format!("{} moment tensors for {} parameters", tensors.len(), net.params().len())));
        }
        let mut m = Vec::new();
        let mut v = Vec::new();
        for (pair, p) in tensors.chunks(2).zip(net.params()) {
            if pair[0].1.shape() != p.shape() || pair[1].1.shape() != p.shape() {
                return Err(bad(format!("moment shape mismatch at {}", pair[0].0)));
            }
            m.push(pair[0].1.data().to_vec());
            v.push(pair[1].1.data().to_vec());
        }
        Ok(Self { config, step, m, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, NetworkSpec};
    use approx::assert_abs_diff_eq;

    fn scalar_net(x0: f64) -> Network {
        // A 1→1 dense layer whose bias plays the role of the variable.
        let spec = NetworkSpec::new(vec![1], vec![LayerSpec::Dense { outputs: 1 }]).unwrap();
        Network::from_params(
            spec,
            vec![Tensor::new(vec![1, 1], vec![0.0]).unwrap(), Tensor::new(vec![1], vec![x0]).unwrap()],
            0,
        )
        .unwrap()
    }

    fn grads(g: f64) -> Gradients {
        Gradients { tensors: vec![vec![0.0], vec![g]] }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(1.5);
        let before = net.clone();
        let mut opt = Adam::new(&net, AdamConfig::default());
        opt.step(&mut net, &grads(0.0)).unwrap();
        assert_eq!(net, before);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε).
        for g in [3.0, -0.02] {
            let mut net = scalar_net(0.0);
            let mut opt = Adam::new(&net, AdamConfig::with_lr(0.01));
            opt.step(&mut net, &grads(g)).unwrap();
            let expect = -0.01 * g / (g.abs() + 1e-8);
            assert_abs_diff_eq!(net.params()[1].data()[0], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn minimizes_a_quadratic() {
        // f(x) = (x − 3)², from x = −2
        let mut net = scalar_net(-2.0);
        let mut opt = Adam::new(&net, AdamConfig::with_lr(0.05));
        for _ in 0..500 {
            let x = net.params()[1].data()[0];
            opt.step(&mut net, &grads(2.0 * (x - 3.0))).unwrap();
        }
        assert!((net.params()[1].data()[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_mismatched_gradients() {
        let mut net = scalar_net(0.0);
        let mut opt = Adam::new(&net, AdamConfig::default());
        assert!(opt.step(&mut net, &Gradients { tensors: vec![vec![0.0]] }).is_err());
    }

    #[test]
    fn state_round_trips_through_a_file() {
        let mut net = scalar_net(0.0);
        let mut opt = Adam::new(&net, AdamConfig::default());
        opt.step(&mut net, &grads(0.7)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adam.bin");
        opt.save(&path, &net).unwrap();
        assert_eq!(Adam::load(&path, &net).unwrap(), opt);
    }
}
