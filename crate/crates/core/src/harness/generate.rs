use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::agent::select_action;
use crate::classifiers::{self, Classifier, EvalReport, FinetuneConfig, Predictor};
use crate::data::{idx, LabeledImage, SIDE};
use crate::env::{CharacterOrder, Env, EnvConfig};
use crate::image::GrayImage;
use crate::nn::Network;
use crate::{rng, Error, Result};

/// Damaged images with their ground truth and the action that produced each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratedSet {
    pub items: Vec<LabeledImage>,
    pub actions: Vec<usize>,
}

impl GeneratedSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let bytes: Vec<Vec<u8>> = self.items.iter().map(|it| it.image.to_bytes()).collect();
        std::fs::write(dir.join("images-idx3-ubyte"), idx::encode_images(SIDE, SIDE, &bytes)?)?;
        let labels: Vec<u8> = self.items.iter().map(|it| it.private_label as u8).collect();
        std::fs::write(dir.join("labels-idx1-ubyte"), idx::encode_labels(&labels))?;
        std::fs::write(dir.join("actions.json"), serde_json::to_string(&self.actions)?)?;
        Ok(())
    }

    /// Images are stored at 8 bits, so a loaded set matches the saved one
    /// to within 1/510 per pixel.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let raw = idx::load_idx(dir.join("images-idx3-ubyte"), dir.join("labels-idx1-ubyte"))?;
        let items = raw
            .into_iter()
            .map(|(img, label)| LabeledImage::new(GrayImage::new(img.rows, img.pixels)?, usize::from(label)))
            .collect::<Result<Vec<_>>>()?;
        let actions: Vec<usize> = serde_json::from_str(&std::fs::read_to_string(dir.join("actions.json"))?)?;
        if actions.len() != items.len() {
            return Err(Error::IdxCountMismatch { images: items.len(), labels: actions.len() });
        }
        Ok(GeneratedSet { items, actions })
    }
}

/// Run the greedy policy once over every character of `test`, in order,
/// keeping each damaged capture.
pub fn freeze_and_generate(
    online: &Network,
    env_config: &EnvConfig,
    test: &[LabeledImage],
    public: &Classifier,
    private: &Classifier,
    seed: u64,
) -> Result<GeneratedSet> {
    let mut config = env_config.clone();
    config.order = CharacterOrder::Sequential;
    let mut env = Env::new(config, test, public, private)?;
    let mut out = GeneratedSet::default();
    let mut episode = 0;
    let mut state = env.reset(rng::derive(seed, "generate", episode))?;
    while out.len() < test.len() {
        let action = select_action(online, &state, 0.0, 0)?;
        let r = env.step(action)?;
        out.items.push(LabeledImage::new(r.damaged_image, r.private_label)?);
        out.actions.push(action);
        if out.len() == test.len() {
            break;
        }
        state = if r.done {
            episode += 1;
            env.reset(rng::derive(seed, "generate", episode))?
        } else {
            r.next_state
        };
    }
    Ok(out)
}

pub fn evaluate_policy<P: Predictor + ?Sized, Q: Predictor + ?Sized>(
    items: &[LabeledImage],
    public: &P,
    private: &Q,
) -> Result<(EvalReport, EvalReport)> {
    Ok((classifiers::evaluate(public, items)?, classifiers::evaluate(private, items)?))
}

/// Accuracies on the held-out half before and after finetuning on the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub public_before: f64,
    pub private_before: f64,
    pub public_after: f64,
    pub private_after: f64,
    pub train_len: usize,
    pub test_len: usize,
}

/// Shuffle, split in half, finetune copies of both classifiers on the first
/// half and score them on the second. The given classifiers are not changed.
pub fn finetune_attack(
    items: &[LabeledImage],
    public: &Classifier,
    private: &Classifier,
    config: &FinetuneConfig,
    seed: u64,
) -> Result<AttackOutcome> {
    if items.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng::rng(rng::derive(seed, "attack-split", 0)));
    let half = items.len() / 2;
    let train: Vec<LabeledImage> = order[..half].iter().map(|&i| items[i].clone()).collect();
    let test: Vec<LabeledImage> = order[half..].iter().map(|&i| items[i].clone()).collect();
    let (pub_ft, _) = classifiers::finetune(public, &train, config, rng::derive(seed, "attack-public", 0))?;
    let (priv_ft, _) = classifiers::finetune(private, &train, config, rng::derive(seed, "attack-private", 0))?;
    Ok(AttackOutcome {
        public_before: classifiers::evaluate(public, &test)?.accuracy,
        private_before: classifiers::evaluate(private, &test)?.accuracy,
        public_after: classifiers::evaluate(&pub_ft, &test)?.accuracy,
        private_after: classifiers::evaluate(&priv_ft, &test)?.accuracy,
        train_len: train.len(),
        test_len: test.len(),
    })
}
