//! The camera environment: each step captures one character through the
//! chosen action set and scores the result with both classifiers.

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::actions::{self, ActionCatalog, ActionSpace};
use crate::classifiers::{Classifier, Task};
use crate::data::LabeledImage;
use crate::frqi;
use crate::image::GrayImage;
use crate::nn::loss;
use crate::{rng, Error, Result};

pub const STATE_LEN: usize = 166;
/// Window for the length-based early stop.
pub const RECENT_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RewardPolicy {
    PublicBased { bonus: f64 },
    PublicPrivate { bonus: f64, penalty: f64 },
    LengthBased { threshold: f64, per_step: f64 },
    AccuracyBased { scale: f64 },
}

impl RewardPolicy {
    pub fn public_based() -> Self {
        RewardPolicy::PublicBased { bonus: 1.0 }
    }

    pub fn public_private() -> Self {
        RewardPolicy::PublicPrivate { bonus: 1.0, penalty: 1.0 }
    }

    pub fn length_based(threshold: f64) -> Self {
        RewardPolicy::LengthBased { threshold, per_step: 1.0 }
    }

    pub fn accuracy_based() -> Self {
        RewardPolicy::AccuracyBased { scale: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardPolicy::PublicBased { .. } => "public-based",
            RewardPolicy::PublicPrivate { .. } => "public-private",
            RewardPolicy::LengthBased { .. } => "length-based",
            RewardPolicy::AccuracyBased { .. } => "accuracy-based",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RewardPolicy::PublicBased { bonus } => bonus > 0.0,
            RewardPolicy::PublicPrivate { bonus, penalty } => bonus > 0.0 && penalty > 0.0,
            RewardPolicy::LengthBased { threshold, per_step } => threshold > 0.0 && threshold < 1.0 && per_step > 0.0,
            RewardPolicy::AccuracyBased { scale } => scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid reward policy {self:?}")))
        }
    }
}

/// Per-episode public-task bookkeeping, updated before the reward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeStats {
    pub steps: usize,
    pub public_correct: usize,
    /// Steps at which the running public accuracy was at or above the
    /// length-based threshold.
    pub steps_above: usize,
    recent: VecDeque<bool>,
}

impl EpisodeStats {
    pub fn record(&mut self, public_correct: bool, threshold: Option<f64>) {
        self.steps += 1;
        self.public_correct += usize::from(public_correct);
        if threshold.is_some_and(|t| self.running_accuracy() >= t) {
            self.steps_above += 1;
        }
        if self.recent.len() == RECENT_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(public_correct);
    }

    /// Fraction of public-correct steps so far this episode.
    pub fn running_accuracy(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.public_correct as f64 / self.steps as f64
        }
    }

    /// Public accuracy over the last [`RECENT_WINDOW`] steps, once full.
    pub fn recent_accuracy(&self) -> Option<f64> {
        (self.recent.len() == RECENT_WINDOW)
            .then(|| self.recent.iter().filter(|&&c| c).count() as f64 / RECENT_WINDOW as f64)
    }
}

pub fn compute_reward(policy: &RewardPolicy, public_correct: bool, private_correct: bool, stats: &EpisodeStats) -> f64 {
    let hit = |c: bool, v: f64| if c { v } else { 0.0 };
    match *policy {
        RewardPolicy::PublicBased { bonus } => hit(public_correct, bonus),
        RewardPolicy::PublicPrivate { bonus, penalty } => hit(public_correct, bonus) - hit(private_correct, penalty),
        RewardPolicy::LengthBased { per_step, .. } => per_step * stats.steps_above as f64,
        RewardPolicy::AccuracyBased { scale } => scale * stats.running_accuracy(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterOrder {
    Random,
    /// Walk the dataset in order, continuing across episodes.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub policy: RewardPolicy,
    pub episode_len: usize,
    pub default_shots: u64,
    pub catalog: ActionCatalog,
    pub order: CharacterOrder,
}

impl EnvConfig {
    pub fn new(catalog: ActionCatalog, policy: RewardPolicy) -> Self {
        EnvConfig { policy, episode_len: 32, default_shots: 8192, catalog, order: CharacterOrder::Random }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.episode_len == 0 || self.default_shots == 0 {
            return Err(Error::Config("episode length and shots must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub damaged_image: GrayImage,
    pub public_label: usize,
    pub private_label: usize,
    pub public_pred: usize,
    pub private_pred: usize,
    pub action: usize,
    pub action_set: Vec<usize>,
}

/// One line of the step trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub action: usize,
    pub action_set: Vec<usize>,
    pub reward: f64,
    pub public_label: usize,
    pub private_label: usize,
    pub public_pred: usize,
    pub private_pred: usize,
    pub done: bool,
}

impl StepResult {
    pub fn record(&self, step: u64) -> StepRecord {
        StepRecord {
            step,
            action: self.action,
            action_set: self.action_set.clone(),
            reward: self.reward,
            public_label: self.public_label,
            private_label: self.private_label,
            public_pred: self.public_pred,
            private_pred: self.private_pred,
            done: self.done,
        }
    }
}

pub struct Env<'a> {
    config: EnvConfig,
    space: ActionSpace,
    data: &'a [LabeledImage],
    public: &'a Classifier,
    private: &'a Classifier,
    episode_seed: u64,
    cursor: usize,
    current: Option<usize>,
    stats: EpisodeStats,
    finished: bool,
}

impl<'a> Env<'a> {
    pub fn new(config: EnvConfig, data: &'a [LabeledImage], public: &'a Classifier, private: &'a Classifier) -> Result<Self> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if public.task() != Task::Public || private.task() != Task::Private {
            return Err(Error::Config("classifier tasks do not match their roles".into()));
        }
        Ok(Env {
            space: ActionSpace::for_catalog(&config.catalog),
            config,
            data,
            public,
            private,
            episode_seed: 0,
            cursor: 0,
            current: None,
            stats: EpisodeStats::default(),
            finished: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn action_space(&self) -> ActionSpace {
        self.space
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    /// Index into the dataset of the character the next step will capture.
    pub fn current_index(&self) -> Option<usize> {
        self.current
    }

    /// Next index for [`CharacterOrder::Sequential`].
    pub fn set_cursor(&mut self, cursor: usize) {
        self.cursor = cursor % self.data.len();
    }

    /// Classifier features of an image, public then private.
    pub fn state_of(&self, img: &GrayImage) -> Result<Vec<f64>> {
        let mut s = self.public.features(img)?;
        s.extend(self.private.features(img)?);
        Ok(s)
    }

    fn draw(&mut self) -> usize {
        match self.config.order {
            CharacterOrder::Random => {
                let draw = rng::derive(self.episode_seed, "draw", self.stats.steps as u64);
                rng::rng(draw).random_range(0..self.data.len())
            }
            CharacterOrder::Sequential => {
                let i = self.cursor;
                self.cursor = (self.cursor + 1) % self.data.len();
                i
            }
        }
    }

    /// Start an episode. The first state comes from a plain capture of the
    /// first character, with no privacy actions.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.episode_seed = seed;
        self.stats = EpisodeStats::default();
        self.finished = false;
        let i = self.draw();
        self.current = Some(i);
        let angles = frqi::image_to_angles(&self.data[i].image)?;
        let plain = actions::ActionPlan::identity().render(&angles, self.config.default_shots, rng::derive(seed, "reset", 0))?;
        self.state_of(&plain)
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.finished {
            return Err(Error::Config("episode finished; call reset".into()));
        }
        let t = self.stats.steps as u64;
        let set = self.space.decode(action)?;
        let item = &self.data[self.current.expect("reset before step")];
        let plan = actions::compile(&set, &self.config.catalog, rng::derive(self.episode_seed, "compile", t))?;
        let angles = frqi::image_to_angles(&item.image)?;
        let damaged = plan.render(&angles, self.config.default_shots, rng::derive(self.episode_seed, "measure", t))?;

        let pub_feat = self.public.features(&damaged)?;
        let priv_feat = self.private.features(&damaged)?;
        let tail = |f: &[f64], task: Task| loss::argmax(&f[f.len() - task.num_classes()..]);
        let public_pred = tail(&pub_feat, Task::Public);
        let private_pred = tail(&priv_feat, Task::Private);
        let (public_label, private_label) = (item.public_label, item.private_label);
        let public_correct = public_pred == public_label;

        let threshold = match self.config.policy {
            RewardPolicy::LengthBased { threshold, .. } => Some(threshold),
            _ => None,
        };
        self.stats.record(public_correct, threshold);
        let reward = compute_reward(&self.config.policy, public_correct, private_pred == private_label, &self.stats);

        let early_stop = matches!((threshold, self.stats.recent_accuracy()), (Some(th), Some(acc)) if acc < th);
        let done = self.stats.steps >= self.config.episode_len || early_stop;
        self.finished = done;
        self.current = if done { None } else { Some(self.draw()) };

        let mut next_state = pub_feat;
        next_state.extend(priv_feat);
        Ok(StepResult {
            next_state,
            reward,
            done,
            damaged_image: damaged,
            public_label,
            private_label,
            public_pred,
            private_pred,
            action,
            action_set: set.indices().to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(history: &[bool], threshold: Option<f64>) -> EpisodeStats {
        let mut s = EpisodeStats::default();
        history.iter().for_each(|&c| s.record(c, threshold));
        s
    }

    #[test]
    fn reward_closed_forms() {
        let s = stats(&[true, false, true, true], Some(0.6));
        assert_eq!(compute_reward(&RewardPolicy::public_based(), false, false, &s), 0.0);
        assert_eq!(compute_reward(&RewardPolicy::PublicBased { bonus: 2.5 }, true, true, &s), 2.5);
        assert_eq!(compute_reward(&RewardPolicy::public_private(), true, true, &s), 0.0);
        assert_eq!(compute_reward(&RewardPolicy::public_private(), true, false, &s), 1.0);
        assert_eq!(compute_reward(&RewardPolicy::public_private(), false, true, &s), -1.0);
        assert_eq!(compute_reward(&RewardPolicy::accuracy_based(), false, false, &s), 0.75);
        // Running accuracy 1, 1/2, 2/3, 3/4 against 0.6: above on steps 1, 3, 4.
        assert_eq!(s.steps_above, 3);
        assert_eq!(compute_reward(&RewardPolicy::LengthBased { threshold: 0.6, per_step: 0.5 }, true, false, &s), 1.5);
    }

    #[test]
    fn recent_window() {
        let s = stats(&[true; 7], None);
        assert_eq!(s.recent_accuracy(), None);
        let s = stats(&[false, false, true, true, true, true, true, true, false, true], None);
        assert_eq!(s.recent_accuracy(), Some(7.0 / 8.0));
    }

    #[test]
    fn policy_validation() {
        assert!(RewardPolicy::length_based(1.0).validate().is_err());
        assert!(RewardPolicy::length_based(0.5).validate().is_ok());
        assert!(RewardPolicy::PublicPrivate { bonus: 1.0, penalty: 0.0 }.validate().is_err());
        let json = serde_json::to_string(&RewardPolicy::public_private()).unwrap();
        assert_eq!(serde_json::from_str::<RewardPolicy>(&json).unwrap(), RewardPolicy::public_private());
    }
}
