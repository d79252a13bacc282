//! Data preparation, classifier and agent training, frozen-policy generation.

use std::path::PathBuf;

use anyhow::Context as _;
use qcam_core::agent::{Agent, AgentConfig, EpsilonSchedule};
use qcam_core::classifiers::{self, AugmentRecipe, Classifier, ClassifierConfig, Task};
use qcam_core::data::{self, LabelMap, SplitSizes};
use qcam_core::env::{CharacterOrder, EnvConfig, RewardPolicy};
use qcam_core::harness::{self, TrainingConfig};
use qcam_core::rng;
use serde::{Deserialize, Serialize};

use crate::config::{or_out, settings, usage};
use crate::{load_catalog, Ctx};

settings! {
    PrepDataArgs => PrepData {
        /// `synthetic` renders glyphs; `emnist` reads an IDX pair.
        source: String = "synthetic".into(),
        /// Glyphs per class for the synthetic source.
        per_class: usize = 700,
        /// EMNIST images IDX file.
        images: PathBuf = PathBuf::new(),
        /// EMNIST labels IDX file.
        labels: PathBuf = PathBuf::new(),
        /// EMNIST mapping file; the balanced-split mapping when empty.
        mapping: PathBuf = PathBuf::new(),
        train: usize = 20_000,
        val: usize = 2_000,
        test: usize = 2_000,
    }
}

settings! {
    TrainCnnArgs => TrainCnn {
        /// Prepared split directory (default: OUT/data).
        data: PathBuf = PathBuf::new(),
        /// `public` or `private`.
        task: String = "public".into(),
        epochs: usize = 10,
        batch_size: usize = 32,
        lr: f64 = 2e-3,
        /// `clean` or `mixed` (half clean, quarter random actions, quarter shot noise).
        recipe: String = "mixed".into(),
        /// Catalog for the mixed recipe: `default`, `reduced` or a JSON file.
        catalog: String = "default".into(),
        default_shots: u64 = 8192,
    }
}

settings! {
    TrainAgentArgs => TrainAgent {
        data: PathBuf = PathBuf::new(),
        public: PathBuf = PathBuf::new(),
        private: PathBuf = PathBuf::new(),
        /// public_based, public_private, length_based or accuracy_based.
        policy: String = "public_private".into(),
        /// Accuracy threshold for length_based.
        threshold: f64 = 0.5,
        catalog: String = "default".into(),
        episode_len: usize = 32,
        default_shots: u64 = 8192,
        steps: u64 = 2000,
        log_every: u64 = 20,
        /// Checkpoint period in steps; 0 keeps only the final checkpoint.
        checkpoint_every: u64 = 0,
        gamma: f64 = 0.99,
        lr: f64 = 1e-4,
        batch_size: usize = 64,
        buffer_capacity: usize = 50_000,
        target_sync: u64 = 1000,
        epsilon_start: f64 = 1.0,
        epsilon_end: f64 = 0.05,
        epsilon_decay: u64 = 20_000,
        #[arg(value_delimiter = ',')]
        hidden: Vec<usize> = vec![256, 256],
        learning_starts: u64 = 64,
    }
}

settings! {
    GenArgs => Gen {
        /// Agent checkpoint directory (default: OUT/agent/final).
        checkpoint: PathBuf = PathBuf::new(),
        /// Training config written by train-agent (default: OUT/training.json).
        training: PathBuf = PathBuf::new(),
        data: PathBuf = PathBuf::new(),
        public: PathBuf = PathBuf::new(),
        private: PathBuf = PathBuf::new(),
        /// Row label; the reward policy name when empty.
        label: String = String::new(),
    }
}

/// Provenance stored next to a generated set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenInfo {
    pub label: String,
    pub training_steps: u64,
    pub manifest_hash: String,
}

pub const GEN_INFO: &str = "gen.json";

pub fn parse_task(name: &str) -> anyhow::Result<Task> {
    match name {
        "public" => Ok(Task::Public),
        "private" => Ok(Task::Private),
        _ => Err(usage(format!("unknown task {name:?}; expected public or private"))),
    }
}

fn parse_policy(name: &str, threshold: f64) -> anyhow::Result<RewardPolicy> {
    let p = match name {
        "public_based" => RewardPolicy::public_based(),
        "public_private" => RewardPolicy::public_private(),
        "length_based" => RewardPolicy::length_based(threshold),
        "accuracy_based" => RewardPolicy::accuracy_based(),
        _ => return Err(usage(format!("unknown policy {name:?}"))),
    };
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

pub fn load_classifier(path: &std::path::Path, task: Task) -> anyhow::Result<Classifier> {
    let clf = Classifier::load(path).with_context(|| format!("loading classifier {}", path.display()))?;
    if clf.task() != task {
        return Err(usage(format!("{} holds a {} classifier, expected {task}", path.display(), clf.task())));
    }
    Ok(clf)
}

pub fn prep_data(ctx: &Ctx, s: &PrepData) -> anyhow::Result<()> {
    let dir = ctx.out.join("data");
    let mut m = ctx.manifest(s)?;
    let pool = match s.source.as_str() {
        "synthetic" => {
            let raw = dir.join("raw");
            let files = data::write_synthetic(&raw, s.per_class, rng::derive(ctx.seed, "synthetic", 0))?;
            data::ingest_emnist(&files.images, &files.labels, &LabelMap::load(&files.mapping)?)?
        }
        "emnist" => {
            if s.images.as_os_str().is_empty() || s.labels.as_os_str().is_empty() {
                return Err(usage("the emnist source needs --images and --labels"));
            }
            let map = if s.mapping.as_os_str().is_empty() {
                LabelMap::emnist_balanced()
            } else {
                m.add_input("mapping", &s.mapping)?;
                LabelMap::load(&s.mapping)?
            };
            m.add_input("images", &s.images)?;
            m.add_input("labels", &s.labels)?;
            data::ingest_emnist(&s.images, &s.labels, &map)?
        }
        other => return Err(usage(format!("unknown source {other:?}; expected synthetic or emnist"))),
    };
    let sizes = SplitSizes { train: s.train, val: s.val, test: s.test };
    let (split, manifest) = data::balanced_split(&pool, sizes, rng::derive(ctx.seed, "split", 0))
        .map_err(|e| usage(format!("cannot split {} images: {e}", pool.len())))?;
    data::save_split(&dir, &split, &manifest)?;
    log::info!("{} images -> train {}, val {}, test {}", pool.len(), split.train.len(), split.val.len(), split.test.len());
    let all: Vec<_> = split.train.iter().chain(&split.val).chain(&split.test).cloned().collect();
    m.dataset_hash = Some(harness::dataset_hash(&all));
    m.add_output("split", dir.join("split.json"))?;
    ctx.save_manifest(&m)
}

pub fn train_cnn(ctx: &Ctx, s: &TrainCnn) -> anyhow::Result<()> {
    let task = parse_task(&s.task)?;
    let (split, _) = data::load_split(or_out(&s.data, &ctx.out, "data")).context("loading data split")?;
    let recipe = match s.recipe.as_str() {
        "clean" => AugmentRecipe::clean(),
        "mixed" => AugmentRecipe::mixed(load_catalog(&s.catalog)?, s.default_shots),
        other => return Err(usage(format!("unknown recipe {other:?}; expected clean or mixed"))),
    };
    let config = ClassifierConfig { task, epochs: s.epochs, batch_size: s.batch_size, lr: s.lr };
    let (clf, log) = classifiers::train_classifier(&config, &split.train, &recipe, rng::derive(ctx.seed, &s.task, 0))?;

    let model = ctx.out.join(format!("{}.qcam", s.task));
    let log_path = ctx.out.join(format!("{}-train-log.csv", s.task));
    let eval_path = ctx.out.join(format!("{}-eval.json", s.task));
    clf.save(&model)?;
    let mut buf = Vec::new();
    log.write_csv(&mut buf)?;
    std::fs::write(&log_path, buf)?;
    let held_out = if split.val.is_empty() { &split.test } else { &split.val };
    let report = classifiers::evaluate(&clf, held_out)?;
    log::info!("{task} classifier: {:.3} on {} held-out images", report.accuracy, report.total);
    std::fs::write(&eval_path, serde_json::to_string_pretty(&report)?)?;

    let mut m = ctx.manifest(s)?;
    m.dataset_hash = Some(harness::dataset_hash(&split.train));
    if let Some(c) = &recipe.catalog {
        m.catalog_hash = Some(c.content_hash());
    }
    m.add_output("model", &model)?;
    m.add_output("train_log", &log_path)?;
    m.add_output("eval", &eval_path)?;
    ctx.save_tagged_manifest(&m, &s.task).map(|_| ())
}

pub fn train_agent(ctx: &Ctx, s: &TrainAgent) -> anyhow::Result<()> {
    let (split, _) = data::load_split(or_out(&s.data, &ctx.out, "data")).context("loading data split")?;
    let pub_path = or_out(&s.public, &ctx.out, "public.qcam");
    let priv_path = or_out(&s.private, &ctx.out, "private.qcam");
    let public = load_classifier(&pub_path, Task::Public)?;
    let private = load_classifier(&priv_path, Task::Private)?;
    let catalog = load_catalog(&s.catalog)?;
    let agent = AgentConfig {
        gamma: s.gamma,
        epsilon: EpsilonSchedule { start: s.epsilon_start, end: s.epsilon_end, decay_steps: s.epsilon_decay },
        batch_size: s.batch_size,
        buffer_capacity: s.buffer_capacity,
        target_sync: s.target_sync,
        lr: s.lr,
        hidden: s.hidden.clone(),
        learning_starts: s.learning_starts,
    };
    agent.validate().map_err(|e| usage(e.to_string()))?;
    let env = EnvConfig {
        policy: parse_policy(&s.policy, s.threshold)?,
        episode_len: s.episode_len,
        default_shots: s.default_shots,
        catalog,
        order: CharacterOrder::Random,
    };
    env.validate().map_err(|e| usage(e.to_string()))?;
    let config = TrainingConfig {
        agent,
        env,
        steps: s.steps,
        log_every: s.log_every,
        checkpoint_every: (s.checkpoint_every > 0).then_some(s.checkpoint_every),
        seed: ctx.seed,
    };
    let ckpt_dir = ctx.out.join("agent");
    let (agent, curves) = harness::run_training(&config, &split.train, &public, &private, Some(&ckpt_dir))?;

    let curves_path = ctx.out.join("curves.csv");
    let training_path = ctx.out.join("training.json");
    curves.save_csv(&curves_path)?;
    std::fs::write(&training_path, serde_json::to_string_pretty(&config)?)?;
    if let Some(sum) = curves.summary() {
        log::info!(
            "{} steps: loss {:.4} -> {:.4}, |Q gap| {:.4} -> {:.4}, smoothed reward {:.3} -> {:.3}",
            agent.steps(),
            sum.loss_first,
            sum.loss_last,
            sum.q_gap_first,
            sum.q_gap_last,
            sum.reward_first,
            sum.reward_last
        );
    }

    let mut m = ctx.manifest(s)?;
    m.catalog_hash = Some(config.env.catalog.content_hash());
    m.dataset_hash = Some(harness::dataset_hash(&split.train));
    m.add_input("public", &pub_path)?;
    m.add_input("private", &priv_path)?;
    m.add_output("curves", &curves_path)?;
    m.add_output("training", &training_path)?;
    m.add_output("online", ckpt_dir.join("final/online.qcam"))?;
    ctx.save_manifest(&m)
}

pub fn gen(ctx: &Ctx, s: &Gen) -> anyhow::Result<()> {
    let ckpt = or_out(&s.checkpoint, &ctx.out, "agent/final");
    let training_path = or_out(&s.training, &ctx.out, "training.json");
    let training: TrainingConfig = serde_json::from_str(
        &std::fs::read_to_string(&training_path).with_context(|| format!("reading {}", training_path.display()))?,
    )?;
    let agent = Agent::load_checkpoint(&ckpt).with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
    let (split, _) = data::load_split(or_out(&s.data, &ctx.out, "data")).context("loading data split")?;
    let pub_path = or_out(&s.public, &ctx.out, "public.qcam");
    let priv_path = or_out(&s.private, &ctx.out, "private.qcam");
    let public = load_classifier(&pub_path, Task::Public)?;
    let private = load_classifier(&priv_path, Task::Private)?;

    let set = harness::freeze_and_generate(
        &agent.nets.online,
        &training.env,
        &split.test,
        &public,
        &private,
        rng::derive(ctx.seed, "gen", 0),
    )?;
    let dir = ctx.out.join("generated");
    set.save(&dir)?;
    log::info!("generated {} images from {} test characters", set.len(), split.test.len());

    let mut m = ctx.manifest(s)?;
    m.catalog_hash = Some(training.env.catalog.content_hash());
    m.dataset_hash = Some(harness::dataset_hash(&split.test));
    m.add_input("online", ckpt.join("online.qcam"))?;
    m.add_input("public", &pub_path)?;
    m.add_input("private", &priv_path)?;
    m.add_output("images", dir.join("images-idx3-ubyte"))?;
    m.add_output("actions", dir.join("actions.json"))?;
    let digest = ctx.save_manifest_digest(&m)?;
    let label = if s.label.is_empty() { training.env.policy.name().to_string() } else { s.label.clone() };
    let info = GenInfo { label, training_steps: agent.steps(), manifest_hash: digest };
    std::fs::write(dir.join(GEN_INFO), serde_json::to_string_pretty(&info)?)?;
    Ok(())
}
