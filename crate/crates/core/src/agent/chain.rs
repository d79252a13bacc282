//! A five-state deterministic chain with known optimal action values, used
//! to check that the learner converges.
//!
//! States are one-hot. Action 0 moves left (clamped at 0), action 1 moves
//! right; moving right from the last state pays 1 and ends the episode.

use super::{Agent, AgentConfig, EpsilonSchedule, Transition};
use crate::Result;

pub const NUM_STATES: usize = 5;
/// Episodes are cut after this many steps; a cut is not a terminal.
pub const EPISODE_CAP: usize = 20;
pub const NUM_ACTIONS: usize = 2;

#[derive(Debug, Clone, Default)]
pub struct Chain {
    pos: usize,
}

impl Chain {
    pub fn reset(&mut self) -> Vec<f64> {
        self.pos = 0;
        one_hot(0)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Returns (next state, reward, done).
    pub fn step(&mut self, action: usize) -> (Vec<f64>, f64, bool) {
        if action == 1 && self.pos == NUM_STATES - 1 {
            return (one_hot(self.pos), 1.0, true);
        }
        self.pos = if action == 1 { self.pos + 1 } else { self.pos.saturating_sub(1) };
        (one_hot(self.pos), 0.0, false)
    }
}

pub fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; NUM_STATES];
    v[s] = 1.0;
    v
}

/// Q*(s, a) for discount `gamma`, indexed `[state][action]`.
pub fn optimal_q(gamma: f64) -> [[f64; NUM_ACTIONS]; NUM_STATES] {
    let v = |s: usize| gamma.powi((NUM_STATES - 1 - s) as i32);
    std::array::from_fn(|s| [gamma * v(s.saturating_sub(1)), v(s)])
}

/// Settings that solve the chain within 10,000 steps.
pub fn default_config() -> AgentConfig {
    AgentConfig {
        gamma: 0.9,
        epsilon: EpsilonSchedule { start: 1.0, end: 0.1, decay_steps: 3_000 },
        batch_size: 32,
        buffer_capacity: 10_000,
        target_sync: 200,
        lr: 1e-3,
        hidden: vec![32],
        learning_starts: 200,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    pub q: [[f64; NUM_ACTIONS]; NUM_STATES],
    pub max_abs_error: f64,
    pub greedy_optimal: bool,
}

/// Learned values of `agent` against Q* for its discount.
pub fn assess(agent: &Agent) -> Result<ChainOutcome> {
    let star = optimal_q(agent.config.gamma);
    let mut q = [[0.0; NUM_ACTIONS]; NUM_STATES];
    let mut err: f64 = 0.0;
    let mut greedy_optimal = true;
    for s in 0..NUM_STATES {
        let v = agent.nets.online.predict(&one_hot(s))?;
        q[s] = [v[0], v[1]];
        err = err.max((v[0] - star[s][0]).abs()).max((v[1] - star[s][1]).abs());
        greedy_optimal &= agent.greedy(&one_hot(s))? == 1;
    }
    Ok(ChainOutcome { q, max_abs_error: err, greedy_optimal })
}

/// Train a fresh agent on the chain for `steps` environment steps.
pub fn train(config: AgentConfig, steps: u64, seed: u64) -> Result<(Agent, ChainOutcome)> {
    let mut agent = Agent::new(config, NUM_STATES, NUM_ACTIONS, seed)?;
    let mut env = Chain::default();
    let mut state = env.reset();
    let mut t = 0;
    for _ in 0..steps {
        let action = agent.act(&state)?;
        let (next, reward, done) = env.step(action);
        agent.observe(Transition { state, action, reward, next_state: next.clone(), done })?;
        t += 1;
        state = if done || t == EPISODE_CAP {
            t = 0;
            env.reset()
        } else {
            next
        };
    }
    let outcome = assess(&agent)?;
    Ok((agent, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_values_satisfy_bellman() {
        let g = 0.9;
        let q = optimal_q(g);
        for s in 0..NUM_STATES {
            for a in 0..NUM_ACTIONS {
                let mut env = Chain { pos: s };
                let (next, r, done) = env.step(a);
                let s2 = next.iter().position(|&x| x == 1.0).unwrap();
                let backup = if done { r } else { r + g * q[s2][0].max(q[s2][1]) };
                assert!((q[s][a] - backup).abs() < 1e-12);
            }
        }
        assert!((q[4][1] - 1.0).abs() < 1e-12);
        assert!((q[0][0] - 0.9f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn learns_the_chain() {
        let (_, out) = train(default_config(), 10_000, 7).unwrap();
        assert!(out.greedy_optimal, "{:?}", out.q);
        assert!(out.max_abs_error < 0.05, "{} {:?}", out.max_abs_error, out.q);
    }
}
