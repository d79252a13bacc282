//! Double deep Q-learning over an enumerated action space.

pub mod chain;
mod replay;

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::nn::{loss, Adam, AdamConfig, Gradients, Network, NetworkSpec};
use crate::{rng, Error, Result};

pub use replay::{ReplayBuffer, Transition};

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.decay_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Hard copy online → target every this many environment steps.
    pub target_sync: u64,
    pub lr: f64,
    pub hidden: Vec<usize>,
    /// Environment steps before the first gradient update.
    pub learning_starts: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.99,
            epsilon: EpsilonSchedule { start: 1.0, end: 0.05, decay_steps: 20_000 },
            batch_size: 64,
            buffer_capacity: 50_000,
            target_sync: 1_000,
            lr: 1e-4,
            hidden: vec![256, 256],
            learning_starts: 64,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilon;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) || e.end > e.start {
            return bad("epsilon needs 0 <= end <= start <= 1");
        }
        if self.target_sync == 0 || self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("need target_sync >= 1 and 1 <= batch_size <= buffer_capacity");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }

    pub fn q_spec(&self, state_len: usize, num_actions: usize) -> Result<NetworkSpec> {
        NetworkSpec::mlp(state_len, &self.hidden, num_actions)
    }
}

/// ε-greedy: uniform with probability ε, else the lowest-index argmax.
pub fn select_action(online: &Network, state: &[f64], epsilon: f64, seed: u64) -> Result<usize> {
    let mut r = rng::rng(seed);
    if epsilon > 0.0 && r.random::<f64>() < epsilon {
        return Ok(r.random_range(0..online.output_len()));
    }
    Ok(loss::argmax(&online.predict(state)?))
}

/// r if done, else r + γ·Q_target(s′, argmax_a Q_online(s′, a)).
pub fn double_q_target(online: &Network, target: &Network, t: &Transition, gamma: f64) -> Result<f64> {
    if t.done {
        return Ok(t.reward);
    }
    let a_star = loss::argmax(&online.predict(&t.next_state)?);
    Ok(t.reward + gamma * target.predict(&t.next_state)?[a_star])
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetworks {
    pub online: Network,
    pub target: Network,
}

impl QNetworks {
    /// The target starts as an exact copy of the online network.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let online = Network::init(spec, seed)?;
        Ok(QNetworks { target: online.clone(), online })
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.online).expect("online and target share a spec");
    }
}

/// Batch statistics from one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub loss: f64,
    /// Mean Q_online(s, a) over the batch.
    pub q_online: f64,
    /// Mean double-Q target y over the batch.
    pub q_target: f64,
}

/// One Adam step on the online network toward double-Q targets for a
/// uniformly sampled batch. The target network is only read.
pub fn train_step(nets: &mut QNetworks, opt: &mut Adam, buffer: &ReplayBuffer, config: &AgentConfig, seed: u64) -> Result<TrainStats> {
    let batch = buffer.sample(config.batch_size, &mut rng::rng(seed))?;
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(&nets.online);
    let mut stats = TrainStats { loss: 0.0, q_online: 0.0, q_target: 0.0 };
    let mut out_grad = vec![0.0; nets.online.output_len()];
    for t in batch {
        if t.action >= out_grad.len() {
            return Err(Error::Action(format!("transition action {} outside {} outputs", t.action, out_grad.len())));
        }
        let y = double_q_target(&nets.online, &nets.target, t, config.gamma)?;
        let fwd = nets.online.forward(&t.state, true)?;
        let q = fwd.output[t.action];
        stats.loss += (q - y).powi(2) / n;
        stats.q_online += q / n;
        stats.q_target += y / n;
        out_grad[t.action] = 2.0 * (q - y) / n;
        nets.online.backward_into(&fwd, &out_grad, &mut grads)?;
        out_grad[t.action] = 0.0;
    }
    opt.step(&mut nets.online, &grads)?;
    Ok(stats)
}

/// Networks, optimizer, replay and counters for one learner.
#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub nets: QNetworks,
    pub optimizer: Adam,
    pub buffer: ReplayBuffer,
    steps: u64,
    updates: u64,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointMeta {
    config: AgentConfig,
    steps: u64,
    updates: u64,
    epsilon: f64,
    seed: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, state_len: usize, num_actions: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let nets = QNetworks::new(config.q_spec(state_len, num_actions)?, rng::derive(seed, "q-init", 0))?;
        let optimizer = Adam::new(&nets.online, AdamConfig::with_lr(config.lr));
        let buffer = ReplayBuffer::new(config.buffer_capacity)?;
        Ok(Agent { config, nets, optimizer, buffer, steps: 0, updates: 0, seed })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.value(self.steps)
    }

    pub fn act(&self, state: &[f64]) -> Result<usize> {
        select_action(&self.nets.online, state, self.epsilon(), rng::derive(self.seed, "act", self.steps))
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        select_action(&self.nets.online, state, 0.0, 0)
    }

    /// Store a transition, advance the step counter, update once the buffer
    /// is warm, and sync the target on schedule.
    pub fn observe(&mut self, t: Transition) -> Result<Option<TrainStats>> {
        self.buffer.push(t);
        self.steps += 1;
        let mut stats = None;
        if self.steps >= self.config.learning_starts && self.buffer.len() >= self.config.batch_size {
            let seed = rng::derive(self.seed, "batch", self.updates);
            stats = Some(train_step(&mut self.nets, &mut self.optimizer, &self.buffer, &self.config, seed)?);
            self.updates += 1;
        }
        if self.steps.is_multiple_of(self.config.target_sync) {
            self.nets.sync_target();
        }
        Ok(stats)
    }

    /// Write both networks, the optimizer state and counters into `dir`.
    pub fn save_checkpoint(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.nets.online.save(dir.join("online.qcam"))?;
        self.nets.target.save(dir.join("target.qcam"))?;
        self.optimizer.save(dir.join("adam.qcam"), &self.nets.online)?;
        let meta = CheckpointMeta {
            config: self.config.clone(),
            steps: self.steps,
            updates: self.updates,
            epsilon: self.epsilon(),
            seed: self.seed,
        };
        std::fs::write(dir.join("agent.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    /// Restore from a checkpoint. The replay buffer starts empty.
    pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: CheckpointMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("agent.json"))?)?;
        meta.config.validate()?;
        let online = Network::load(dir.join("online.qcam"))?;
        let target = Network::load(dir.join("target.qcam"))?;
        if online.spec() != target.spec() {
            return Err(Error::Format { path: dir.to_path_buf(), reason: "online and target specs differ".into() });
        }
        let optimizer = Adam::load(dir.join("adam.qcam"), &online)?;
        Ok(Agent {
            buffer: ReplayBuffer::new(meta.config.buffer_capacity)?,
            config: meta.config,
            nets: QNetworks { online, target },
            optimizer,
            steps: meta.steps,
            updates: meta.updates,
            seed: meta.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    /// Single dense layer with zero weights: Q(s, ·) = `q` for every state.
    pub(super) fn constant_q(state_len: usize, q: &[f64]) -> Network {
        let spec = NetworkSpec::mlp(state_len, &[], q.len()).unwrap();
        let w = Tensor::zeros(vec![q.len(), state_len]);
        let b = Tensor::new(vec![q.len()], q.to_vec()).unwrap();
        Network::from_params(spec, vec![w, b], 0).unwrap()
    }

    fn transition(reward: f64, done: bool) -> Transition {
        Transition { state: vec![0.0; 2], action: 1, reward, next_state: vec![0.0; 2], done }
    }

    #[test]
    fn epsilon_schedule() {
        let e = EpsilonSchedule { start: 1.0, end: 0.05, decay_steps: 100 };
        assert_eq!(e.value(0), 1.0);
        assert!((e.value(50) - 0.525).abs() < 1e-12);
        assert_eq!(e.value(100), 0.05);
        assert_eq!(e.value(10_000), 0.05);
    }

    #[test]
    fn greedy_choice_and_ties() {
        let mut q = vec![0.0; 12];
        q[7] = 3.0;
        assert_eq!(select_action(&constant_q(2, &q), &[0.0, 0.0], 0.0, 1).unwrap(), 7);
        q[7] = 0.0;
        q[3] = 2.0;
        q[9] = 2.0;
        assert_eq!(select_action(&constant_q(2, &q), &[0.0, 0.0], 0.0, 1).unwrap(), 3);
    }

    #[test]
    fn double_q_arithmetic() {
        let online = constant_q(2, &[0.0, 1.0, 9.0, 2.0]);
        let target = constant_q(2, &[100.0, 0.0, 5.0, 0.0]);
        assert_eq!(double_q_target(&online, &target, &transition(1.0, true), 0.99).unwrap(), 1.0);
        let y = double_q_target(&online, &target, &transition(0.0, false), 0.99).unwrap();
        assert!((y - 4.95).abs() < 1e-12);
        // Target argmax (index 0) is never used for the action.
        assert!(y < 0.99 * 100.0);
        let dqn = 0.5 + 0.99 * 9.0;
        assert!((double_q_target(&online, &online, &transition(0.5, false), 0.99).unwrap() - dqn).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::default().validate().is_ok());
        assert!(AgentConfig { gamma: 1.0, ..AgentConfig::default() }.validate().is_err());
        let mut c = AgentConfig::default();
        c.epsilon.end = 1.5;
        assert!(c.validate().is_err());
        assert!(AgentConfig { target_sync: 0, ..AgentConfig::default() }.validate().is_err());
    }

    #[test]
    fn sync_makes_hashes_equal() {
        let spec = NetworkSpec::mlp(3, &[4], 5).unwrap();
        let mut nets = QNetworks::new(spec, 2).unwrap();
        nets.online = Network::init(nets.online.spec().clone(), 9).unwrap();
        assert_ne!(nets.online.content_hash(), nets.target.content_hash());
        nets.sync_target();
        assert_eq!(nets.online.content_hash(), nets.target.content_hash());
        let before = nets.clone();
        nets.sync_target();
        assert_eq!(nets, before);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let cfg = AgentConfig { hidden: vec![8], batch_size: 4, learning_starts: 4, ..AgentConfig::default() };
        let mut agent = Agent::new(cfg, 3, 6, 1).unwrap();
        for i in 0..10 {
            let t = Transition { state: vec![i as f64; 3], action: i % 6, reward: 1.0, next_state: vec![0.0; 3], done: i % 3 == 0 };
            agent.observe(t).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        agent.save_checkpoint(dir.path()).unwrap();
        let back = Agent::load_checkpoint(dir.path()).unwrap();
        assert_eq!(back.nets, agent.nets);
        assert_eq!((back.steps(), back.updates()), (10, 7));
        assert_eq!(back.optimizer.steps(), agent.optimizer.steps());
        assert_eq!(back.epsilon(), agent.epsilon());
    }
}
