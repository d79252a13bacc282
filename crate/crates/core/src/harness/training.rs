use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, Transition};
use crate::classifiers::Classifier;
use crate::data::LabeledImage;
use crate::env::{Env, EnvConfig, STATE_LEN};
use crate::{rng, Error, Result};

pub const SMOOTHING_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub agent: AgentConfig,
    pub env: EnvConfig,
    pub steps: u64,
    /// Environment steps per curve row.
    pub log_every: u64,
    /// Write a checkpoint every this many steps (and at the end).
    pub checkpoint_every: Option<u64>,
    pub seed: u64,
}

/// One row per logging interval that contained at least one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub epsilon: f64,
    /// Mean per-step reward over the interval.
    pub reward: f64,
    /// Mean per-step reward over the last [`SMOOTHING_WINDOW`] steps.
    pub smoothed_reward: f64,
    pub loss: f64,
    pub q_online: f64,
    pub q_target: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub points: Vec<CurvePoint>,
}

/// First-tenth versus last-tenth comparison of the curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub q_gap_first: f64,
    pub q_gap_last: f64,
    pub loss_first: f64,
    pub loss_last: f64,
    pub reward_first: f64,
    pub reward_last: f64,
    pub loss_finite_nonneg: bool,
}

impl Curves {
    pub const CSV_HEADER: &'static str = "step,epsilon,reward,smoothed_reward,loss,q_online,q_target";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.step, p.epsilon, p.reward, p.smoothed_reward, p.loss, p.q_online, p.q_target
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let bad = |reason: String| Error::Format { path: path.to_path_buf(), reason };
        let mut lines = text.lines();
        if lines.next() != Some(Self::CSV_HEADER) {
            return Err(bad("unexpected header".into()));
        }
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<f64> =
                line.split(',').map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| bad(e.to_string()))?;
            if f.len() != 7 {
                return Err(bad(format!("row {line:?}")));
            }
            points.push(CurvePoint {
                step: f[0] as u64,
                epsilon: f[1],
                reward: f[2],
                smoothed_reward: f[3],
                loss: f[4],
                q_online: f[5],
                q_target: f[6],
            });
        }
        Ok(Curves { points })
    }

    /// Compare means over the first and last tenth of the rows.
    pub fn summary(&self) -> Option<CurveSummary> {
        let n = self.points.len();
        if n < 2 {
            return None;
        }
        let k = (n / 10).max(1);
        let mean = |rows: &[CurvePoint], f: fn(&CurvePoint) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
        let (first, last) = (&self.points[..k], &self.points[n - k..]);
        let gap = |p: &CurvePoint| (p.q_online - p.q_target).abs();
        Some(CurveSummary {
            q_gap_first: mean(first, gap),
            q_gap_last: mean(last, gap),
            loss_first: mean(first, |p| p.loss),
            loss_last: mean(last, |p| p.loss),
            reward_first: mean(first, |p| p.smoothed_reward),
            reward_last: mean(last, |p| p.smoothed_reward),
            loss_finite_nonneg: self.points.iter().all(|p| p.loss.is_finite() && p.loss >= 0.0),
        })
    }
}

#[derive(Default)]
struct Interval {
    reward: f64,
    steps: u64,
    loss: f64,
    q_online: f64,
    q_target: f64,
    updates: u64,
}

/// Train a DDQN agent in the camera environment over `data`.
pub fn run_training(
    config: &TrainingConfig,
    data: &[LabeledImage],
    public: &Classifier,
    private: &Classifier,
    checkpoint_dir: Option<&Path>,
) -> Result<(Agent, Curves)> {
    if config.log_every == 0 {
        return Err(Error::Config("log_every must be positive".into()));
    }
    let mut env = Env::new(config.env.clone(), data, public, private)?;
    let mut agent = Agent::new(config.agent.clone(), STATE_LEN, env.action_space().len(), rng::derive(config.seed, "agent", 0))?;
    let mut curves = Curves::default();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(SMOOTHING_WINDOW);
    let mut acc = Interval::default();
    let mut episode = 0;
    let mut state = env.reset(rng::derive(config.seed, "episode", episode))?;
    for step in 1..=config.steps {
        let action = agent.act(&state)?;
        let r = env.step(action)?;
        let stats = agent.observe(Transition {
            state: std::mem::take(&mut state),
            action,
            reward: r.reward,
            next_state: r.next_state.clone(),
            done: r.done,
        })?;
        state = if r.done {
            episode += 1;
            env.reset(rng::derive(config.seed, "episode", episode))?
        } else {
            r.next_state
        };

        if window.len() == SMOOTHING_WINDOW {
            window.pop_front();
        }
        window.push_back(r.reward);
        acc.reward += r.reward;
        acc.steps += 1;
        if let Some(s) = stats {
            acc.loss += s.loss;
            acc.q_online += s.q_online;
            acc.q_target += s.q_target;
            acc.updates += 1;
        }
        if step % config.log_every == 0 || step == config.steps {
            if acc.updates > 0 {
                let u = acc.updates as f64;
                curves.points.push(CurvePoint {
                    step,
                    epsilon: agent.epsilon(),
                    reward: acc.reward / acc.steps as f64,
                    smoothed_reward: window.iter().sum::<f64>() / window.len() as f64,
                    loss: acc.loss / u,
                    q_online: acc.q_online / u,
                    q_target: acc.q_target / u,
                });
            }
            acc = Interval::default();
        }
        if let (Some(dir), Some(every)) = (checkpoint_dir, config.checkpoint_every) {
            if every > 0 && step % every == 0 {
                agent.save_checkpoint(dir.join(format!("step-{step:08}")))?;
            }
        }
        if step % 500 == 0 {
            log::info!("step {step}: epsilon {:.3}, smoothed reward {:.3}", agent.epsilon(), window.iter().sum::<f64>() / window.len() as f64);
        }
    }
    if let Some(dir) = checkpoint_dir {
        agent.save_checkpoint(dir.join("final"))?;
    }
    Ok((agent, curves))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(step: u64, loss: f64, gap: f64, reward: f64) -> CurvePoint {
        CurvePoint { step, epsilon: 0.5, reward, smoothed_reward: reward, loss, q_online: 1.0 + gap, q_target: 1.0 }
    }

    #[test]
    fn summary_uses_first_and_last_tenth() {
        let points = (0..20).map(|i| point(i, 20.0 - i as f64, if i < 2 { 3.0 } else { 1.0 }, i as f64)).collect();
        let s = Curves { points }.summary().unwrap();
        assert_eq!((s.loss_first, s.loss_last), (19.5, 1.5));
        assert_eq!((s.q_gap_first, s.q_gap_last), (3.0, 1.0));
        assert_eq!((s.reward_first, s.reward_last), (0.5, 18.5));
        assert!(s.loss_finite_nonneg);
    }

    #[test]
    fn csv_roundtrip() {
        let c = Curves { points: vec![point(1, 0.25, 0.5, 1.0), point(2, 0.125, 0.25, -1.0)] };
        let dir = tempfile::tempdir().unwrap();
        c.save_csv(dir.path().join("c.csv")).unwrap();
        assert_eq!(Curves::load_csv(dir.path().join("c.csv")).unwrap(), c);
    }
}
