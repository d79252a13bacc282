//! The two competing CNNs: public (number vs letter) and private (which of
//! the 36 characters).

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionCatalog, BaseAction};
use crate::data::{augment, LabeledImage, NUM_PRIVATE, NUM_PUBLIC, SIDE};
use crate::image::GrayImage;
use crate::nn::{loss, Adam, AdamConfig, Gradients, LayerSpec, Network, NetworkSpec};
use crate::{rng, Error, Result};

pub const HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Public,
    Private,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Public => NUM_PUBLIC,
            Task::Private => NUM_PRIVATE,
        }
    }

    pub fn label(self, item: &LabeledImage) -> usize {
        match self {
            Task::Public => item.public_label,
            Task::Private => item.private_label,
        }
    }

    pub fn feature_len(self) -> usize {
        HIDDEN + self.num_classes()
    }

    fn from_classes(n: usize) -> Result<Self> {
        match n {
            NUM_PUBLIC => Ok(Task::Public),
            NUM_PRIVATE => Ok(Task::Private),
            _ => Err(Error::Shape(format!("no task has {n} classes"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Public => "public",
            Task::Private => "private",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub task: Task,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl ClassifierConfig {
    pub fn new(task: Task) -> Self {
        ClassifierConfig { task, epochs: 10, batch_size: 32, lr: 2e-3 }
    }

    /// conv3(16) relu pool, conv3(32) relu pool, dense 64 relu, dense k.
    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec::new(
            vec![1, SIDE, SIDE],
            vec![
                LayerSpec::Conv2d { out_channels: 16, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Conv2d { out_channels: 32, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Dense { outputs: HIDDEN },
                LayerSpec::Relu,
                LayerSpec::Dense { outputs: self.task.num_classes() },
            ],
        )
        .expect("fixed architecture is valid")
    }
}

/// How training images are perturbed each epoch. Weights are relative
/// frequencies of (clean, random quantum action, plain shot noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecipe {
    pub clean: f64,
    pub quantum: f64,
    pub shot: f64,
    pub default_shots: u64,
    pub catalog: Option<ActionCatalog>,
}

impl AugmentRecipe {
    pub fn clean() -> Self {
        AugmentRecipe { clean: 1.0, quantum: 0.0, shot: 0.0, default_shots: 8192, catalog: None }
    }

    /// Half clean, a quarter random catalog actions, a quarter shot noise.
    pub fn mixed(catalog: ActionCatalog, default_shots: u64) -> Self {
        AugmentRecipe { clean: 0.5, quantum: 0.25, shot: 0.25, default_shots, catalog: Some(catalog) }
    }

    fn validate(&self) -> Result<()> {
        let w = [self.clean, self.quantum, self.shot];
        if w.iter().any(|&x| !(x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("bad augmentation weights {w:?}")));
        }
        if self.quantum > 0.0 && self.catalog.is_none() {
            return Err(Error::Config("quantum augmentation needs a catalog".into()));
        }
        Ok(())
    }

    fn shot_levels(&self) -> Vec<u64> {
        let mut levels = vec![self.default_shots];
        if let Some(cat) = &self.catalog {
            levels.extend(cat.actions.iter().filter_map(|a| match a {
                BaseAction::ShotNoise { shots } => Some(*shots),
                _ => None,
            }));
        }
        levels
    }

    fn apply(&self, img: &GrayImage, levels: &[u64], seed: u64) -> Result<GrayImage> {
        let mut r = rng::rng(seed);
        let u = r.random::<f64>() * (self.clean + self.quantum + self.shot);
        if u < self.clean {
            Ok(img.clone())
        } else if u < self.clean + self.quantum {
            augment::quantum_random(img, self.catalog.as_ref().unwrap(), self.default_shots, r.random())
        } else {
            augment::shot_noise(img, levels[r.random_range(0..levels.len())], r.random())
        }
    }
}

/// A trained network bound to its task.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    task: Task,
    net: Network,
}

impl Classifier {
    pub fn new(net: Network) -> Result<Self> {
        let task = Task::from_classes(net.output_len())?;
        if net.input_len() != SIDE * SIDE {
            return Err(Error::Shape(format!("classifier input of {} values", net.input_len())));
        }
        let n = net.spec().layers.len();
        if n < 2 || net.spec().layers[n - 2] != LayerSpec::Relu || net.spec().shapes()?[n - 1].iter().product::<usize>() != HIDDEN {
            return Err(Error::Shape("classifier needs a relu-activated penultimate layer of 64".into()));
        }
        Ok(Classifier { task, net })
    }

    pub fn init(config: &ClassifierConfig, seed: u64) -> Result<Self> {
        Classifier::new(Network::init(config.spec(), seed)?)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn logits(&self, img: &GrayImage) -> Result<Vec<f64>> {
        self.net.predict(img.pixels())
    }

    /// Penultimate activations followed by logits (66 or 100 values).
    pub fn features(&self, img: &GrayImage) -> Result<Vec<f64>> {
        let fwd = self.net.forward(img.pixels(), true)?;
        let trace = fwd.trace.as_ref().expect("recorded");
        let layers = self.net.spec().layers.len();
        let mut out = trace.layer_output(layers - 2).expect("penultimate").to_vec();
        out.extend_from_slice(&fwd.output);
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.net.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Classifier::new(Network::load(path)?)
    }
}

pub trait Predictor {
    fn task(&self) -> Task;
    fn predict(&self, img: &GrayImage) -> Result<usize>;
}

impl Predictor for Classifier {
    fn task(&self) -> Task {
        self.task
    }

    fn predict(&self, img: &GrayImage) -> Result<usize> {
        Ok(loss::argmax(&self.logits(img)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `None` for classes absent from the evaluated set.
    pub per_class: Vec<Option<f64>>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "task,accuracy,correct,total";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.task, self.accuracy, self.correct, self.total)
    }
}

pub fn evaluate<P: Predictor + ?Sized>(p: &P, data: &[LabeledImage]) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let task = p.task();
    let k = task.num_classes();
    let mut hits = vec![0usize; k];
    let mut seen = vec![0usize; k];
    for item in data {
        let label = task.label(item);
        let guess = p.predict(&item.image)?;
        if guess >= k {
            return Err(Error::Shape(format!("prediction {guess} for a {k}-class task")));
        }
        seen[label] += 1;
        hits[label] += usize::from(guess == label);
    }
    let correct: usize = hits.iter().sum();
    Ok(EvalReport {
        task,
        accuracy: correct as f64 / data.len() as f64,
        correct,
        total: data.len(),
        per_class: hits.iter().zip(&seen).map(|(&h, &s)| (s > 0).then(|| h as f64 / s as f64)).collect(),
    })
}

/// Mean training loss per epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

impl TrainLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss")?;
        for (e, l) in self.epoch_loss.iter().enumerate() {
            writeln!(w, "{},{l}", e + 1)?;
        }
        Ok(())
    }
}

fn fit(
    net: &mut Network,
    task: Task,
    data: &[LabeledImage],
    recipe: &AugmentRecipe,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainLog> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch_size == 0 || !(lr > 0.0) {
        return Err(Error::Config(format!("batch size {batch_size}, lr {lr}")));
    }
    recipe.validate()?;
    let levels = recipe.shot_levels();
    let mut adam = Adam::new(net, AdamConfig::with_lr(lr));
    let mut grads = Gradients::zeros_like(net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainLog::default();
    for epoch in 0..epochs as u64 {
        order.shuffle(&mut rng::rng(rng::derive(seed, "epoch", epoch)));
        let mut total = 0.0;
        for batch in order.chunks(batch_size) {
            grads.scale(0.0);
            for &i in batch {
                let s = rng::derive(seed, "augment", epoch * data.len() as u64 + i as u64);
                let img = recipe.apply(&data[i].image, &levels, s)?;
                let fwd = net.forward(img.pixels(), true)?;
                let (l, g) = loss::softmax_cross_entropy(&fwd.output, task.label(&data[i]));
                total += l;
                net.backward_into(&fwd, &g, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(net, &grads)?;
        }
        let mean = total / data.len() as f64;
        log::debug!("{task} epoch {}: loss {mean:.4}", epoch + 1);
        log.epoch_loss.push(mean);
    }
    Ok(log)
}

pub fn train_classifier(
    config: &ClassifierConfig,
    data: &[LabeledImage],
    recipe: &AugmentRecipe,
    seed: u64,
) -> Result<(Classifier, TrainLog)> {
    let mut clf = Classifier::init(config, rng::derive(seed, "init", 0))?;
    let log = fit(&mut clf.net, config.task, data, recipe, config.epochs, config.batch_size, config.lr, seed)?;
    Ok((clf, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Learning rate relative to the base training rate.
    pub lr_scale: f64,
    pub base_lr: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig { epochs: 5, batch_size: 32, lr_scale: 0.1, base_lr: 2e-3 }
    }
}

/// Update every layer of a copy of `clf` on `data`; `clf` is left as is.
pub fn finetune(clf: &Classifier, data: &[LabeledImage], config: &FinetuneConfig, seed: u64) -> Result<(Classifier, TrainLog)> {
    let mut out = clf.clone();
    let lr = config.base_lr * config.lr_scale;
    let log = fit(&mut out.net, out.task, data, &AugmentRecipe::clean(), config.epochs, config.batch_size, lr, seed)?;
    Ok((out, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_widths() {
        for (task, k) in [(Task::Public, 2), (Task::Private, 36)] {
            let clf = Classifier::init(&ClassifierConfig::new(task), 1).unwrap();
            assert_eq!(clf.network().output_len(), k);
            let f = clf.features(&GrayImage::filled(16, 0.5).unwrap()).unwrap();
            assert_eq!(f.len(), task.feature_len());
            assert!(f[..HIDDEN].iter().all(|&v| v >= 0.0));
        }
        assert_eq!(Task::Public.feature_len() + Task::Private.feature_len(), 166);
    }

    #[test]
    fn rejects_non_classifier_networks() {
        let net = Network::init(NetworkSpec::mlp(256, &[64], 5).unwrap(), 0).unwrap();
        assert!(Classifier::new(net).is_err());
        let net = Network::init(NetworkSpec::mlp(256, &[32], 2).unwrap(), 0).unwrap();
        assert!(Classifier::new(net).is_err());
        let net = Network::init(NetworkSpec::mlp(256, &[64], 2).unwrap(), 0).unwrap();
        assert!(Classifier::new(net).is_ok());
    }

    #[test]
    fn recipe_validation() {
        let mut r = AugmentRecipe::clean();
        r.quantum = 1.0;
        assert!(r.validate().is_err());
        r.clean = -1.0;
        assert!(r.validate().is_err());
    }
}
