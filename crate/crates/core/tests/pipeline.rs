//! End-to-end contracts that need trained classifiers. A small pair is
//! trained once on synthetic glyphs and shared by every test.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;

use qcam_core::actions::{ActionCatalog, ActionSet, BaseAction};
use qcam_core::agent::AgentConfig;
use qcam_core::classifiers::{
    self, evaluate, finetune, train_classifier, AugmentRecipe, Classifier, ClassifierConfig, FinetuneConfig, Predictor, Task,
};
use qcam_core::data::{self, balanced_split, LabeledImage, SplitSizes};
use qcam_core::env::{Env, EnvConfig, RewardPolicy, STATE_LEN};
use qcam_core::frqi::FrqiLayout;
use qcam_core::harness::{self, TrainingConfig};
use qcam_core::image::GrayImage;
use qcam_core::rng;

struct Fixture {
    train: Vec<LabeledImage>,
    test: Vec<LabeledImage>,
    public: Classifier,
    private: Classifier,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let pool = data::synthetic_pool(dir.path(), 20, 1).unwrap();
        let (split, _) = balanced_split(&pool, SplitSizes { train: 576, val: 0, test: 144 }, 2).unwrap();
        let cfg = |task| ClassifierConfig { epochs: 6, ..ClassifierConfig::new(task) };
        let (public, _) = train_classifier(&cfg(Task::Public), &split.train, &AugmentRecipe::clean(), 3).unwrap();
        let (private, _) = train_classifier(&cfg(Task::Private), &split.train, &AugmentRecipe::clean(), 4).unwrap();
        Fixture { train: split.train, test: split.test, public, private }
    })
}

fn catalog() -> ActionCatalog {
    ActionCatalog::reduced(FrqiLayout::for_side(16).unwrap()).unwrap()
}

struct Oracle {
    task: Task,
    truth: HashMap<Vec<u8>, usize>,
}

impl Predictor for Oracle {
    fn task(&self) -> Task {
        self.task
    }
    fn predict(&self, img: &GrayImage) -> qcam_core::Result<usize> {
        Ok(self.truth[&img.to_bytes()])
    }
}

struct Coin {
    task: Task,
    rng: RefCell<rng::Rng>,
}

impl Predictor for Coin {
    fn task(&self) -> Task {
        self.task
    }
    fn predict(&self, _: &GrayImage) -> qcam_core::Result<usize> {
        Ok(self.rng.borrow_mut().random_range(0..self.task.num_classes()))
    }
}

fn within_3_sigma(acc: f64, p: f64, n: usize) -> bool {
    (acc - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn oracle_scores_perfectly() {
    let items = &fixture().test[..10];
    let oracle = Oracle { task: Task::Private, truth: items.iter().map(|i| (i.image.to_bytes(), i.private_label)).collect() };
    assert_eq!(evaluate(&oracle, items).unwrap().accuracy, 1.0);
}

#[test]
fn random_predictor_sits_at_chance() {
    let img = GrayImage::filled(16, 0.5).unwrap();
    let items: Vec<LabeledImage> = (0..20_000).map(|i| LabeledImage::new(img.clone(), i % 36).unwrap()).collect();
    for (task, p) in [(Task::Private, 1.0 / 36.0), (Task::Public, 0.5)] {
        let coin = Coin { task, rng: RefCell::new(rng::rng(9)) };
        let acc = evaluate(&coin, &items).unwrap().accuracy;
        // Public labels are 10/36 digits; a fair coin still scores 1/2.
        assert!(within_3_sigma(acc, p, items.len()), "{task}: {acc}");
    }
}

#[test]
fn single_sample_is_memorized() {
    let one = vec![fixture().train[5].clone()];
    let cfg = ClassifierConfig { epochs: 30, batch_size: 1, ..ClassifierConfig::new(Task::Private) };
    let (clf, _) = train_classifier(&cfg, &one, &AugmentRecipe::clean(), 0).unwrap();
    assert_eq!(evaluate(&clf, &one).unwrap().accuracy, 1.0);
}

#[test]
fn trained_classifiers_beat_chance() {
    let f = fixture();
    let public = evaluate(&f.public, &f.test).unwrap().accuracy;
    let private = evaluate(&f.private, &f.test).unwrap().accuracy;
    assert!(public > 0.8, "public {public}");
    assert!(private > 0.3, "private {private}");
}

#[test]
fn features_are_deterministic_and_sensitive() {
    let f = fixture();
    let item = &f.test[0];
    let a = f.private.features(&item.image).unwrap();
    assert_eq!(a.len(), 100);
    assert_eq!(a, f.private.features(&item.image).unwrap());
    assert_eq!(f.public.features(&item.image).unwrap().len(), 66);

    let redacted = GrayImage::new(16, item.image.pixels().iter().enumerate().map(|(i, &p)| if i % 3 == 0 { 0.0 } else { p }).collect()).unwrap();
    assert_ne!(a, f.private.features(&redacted).unwrap());
}

#[test]
fn finetune_leaves_original_and_stays_stable() {
    let f = fixture();
    let hash = f.public.network().content_hash();
    let before = evaluate(&f.public, &f.test).unwrap().accuracy;
    let (tuned, log) = finetune(&f.public, &f.train, &FinetuneConfig::default(), 5).unwrap();
    assert_eq!(log.epoch_loss.len(), 5);
    assert_eq!(f.public.network().content_hash(), hash);
    assert_ne!(tuned.network().content_hash(), hash);
    let after = evaluate(&tuned, &f.test).unwrap().accuracy;
    assert!(after >= before - 0.02, "{before} -> {after}");
    assert!(finetune(&f.public, &[], &FinetuneConfig::default(), 5).is_err());
}

fn env_config(policy: RewardPolicy) -> EnvConfig {
    EnvConfig::new(catalog(), policy)
}

#[test]
fn reset_is_seeded() {
    let f = fixture();
    let mut env = Env::new(env_config(RewardPolicy::public_based()), &f.test, &f.public, &f.private).unwrap();
    let s = env.reset(17).unwrap();
    let first = env.current_index();
    assert_eq!(s.len(), STATE_LEN);
    assert_eq!(env.reset(17).unwrap(), s);
    assert_eq!(env.current_index(), first);
    let distinct: std::collections::HashSet<_> = (0..10).map(|k| {
        env.reset(100 + k).unwrap();
        env.current_index()
    }).collect();
    assert!(distinct.len() > 1);
}

#[test]
fn steps_honor_the_contract() {
    let f = fixture();
    let cfg = EnvConfig { episode_len: 1, ..env_config(RewardPolicy::public_private()) };
    let mut env = Env::new(cfg, &f.test, &f.public, &f.private).unwrap();
    let n = env.action_space().len();
    for (k, action) in [0, n / 3, n - 1].into_iter().enumerate() {
        env.reset(k as u64).unwrap();
        let r = env.step(action).unwrap();
        assert!(r.done);
        assert_eq!(r.next_state.len(), STATE_LEN);
        assert!(r.damaged_image.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(r.next_state, env.state_of(&r.damaged_image).unwrap());
        assert!(env.step(action).is_err());
    }
    env.reset(0).unwrap();
    assert!(env.step(n).is_err());
}

#[test]
fn shot_noise_on_white_stays_white() {
    let f = fixture();
    let white = vec![LabeledImage::new(GrayImage::filled(16, 1.0).unwrap(), 0).unwrap()];
    let cat = catalog();
    let shot = cat.actions.iter().position(|a| matches!(a, BaseAction::ShotNoise { shots: 4096 })).unwrap();
    let mut env = Env::new(env_config(RewardPolicy::public_based()), &white, &f.public, &f.private).unwrap();
    let action = env.action_space().encode(&ActionSet::new(vec![shot]).unwrap()).unwrap();
    env.reset(3).unwrap();
    let r = env.step(action).unwrap();
    assert!(r.damaged_image.pixels().iter().all(|&p| p > 0.9), "{:?}", r.damaged_image.pixels());
    let clean = f.public.logits(&white[0].image).unwrap();
    let noisy = f.public.logits(&r.damaged_image).unwrap();
    let scale = clean.iter().map(|v| v.abs()).fold(1.0, f64::max);
    assert!(clean.iter().zip(&noisy).all(|(a, b)| (a - b).abs() < 0.25 * scale), "{clean:?} vs {noisy:?}");
}

#[test]
fn frozen_generation_covers_the_test_set() {
    let f = fixture();
    let cfg = env_config(RewardPolicy::public_private());
    let items = &f.test[..40];
    let n = qcam_core::actions::ActionSpace::for_catalog(&cfg.catalog).len();
    let online = qcam_core::nn::Network::init(AgentConfig { hidden: vec![16], ..AgentConfig::default() }.q_spec(STATE_LEN, n).unwrap(), 1).unwrap();
    let a = harness::freeze_and_generate(&online, &cfg, items, &f.public, &f.private, 7).unwrap();
    let b = harness::freeze_and_generate(&online, &cfg, items, &f.public, &f.private, 7).unwrap();
    assert_eq!(a.len(), items.len());
    assert_eq!(a, b);
    for (gen, src) in a.items.iter().zip(items) {
        assert_eq!(gen.private_label, src.private_label);
        assert_ne!(gen.image, src.image);
    }

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    let back = harness::GeneratedSet::load(dir.path()).unwrap();
    assert_eq!(back.actions, a.actions);
    for (x, y) in back.items.iter().zip(&a.items) {
        assert_eq!(x.image.to_bytes(), y.image.to_bytes());
        assert_eq!(x.private_label, y.private_label);
    }
}

#[test]
fn evaluate_policy_matches_stubs() {
    let f = fixture();
    let items = &f.test;
    let public = Oracle { task: Task::Public, truth: items.iter().map(|i| (i.image.to_bytes(), i.public_label)).collect() };
    let private = Oracle { task: Task::Private, truth: items.iter().map(|i| (i.image.to_bytes(), i.private_label)).collect() };
    let (p, q) = harness::evaluate_policy(items, &public, &private).unwrap();
    assert_eq!((p.accuracy, q.accuracy), (1.0, 1.0));

    let mut shuffled = items.clone();
    let mut r = rng::rng(12);
    for item in &mut shuffled {
        item.private_label = r.random_range(0..36);
        item.public_label = r.random_range(0..2);
    }
    let (p, q) = harness::evaluate_policy(&shuffled, &f.public, &f.private).unwrap();
    assert!(within_3_sigma(p.accuracy, 0.5, items.len()), "public {}", p.accuracy);
    assert!(within_3_sigma(q.accuracy, 1.0 / 36.0, items.len()), "private {}", q.accuracy);
}

#[test]
fn attack_does_not_touch_originals() {
    let f = fixture();
    let hashes = (f.public.network().content_hash(), f.private.network().content_hash());
    let out = harness::finetune_attack(&f.test, &f.public, &f.private, &FinetuneConfig { epochs: 1, ..Default::default() }, 3).unwrap();
    assert_eq!(out.train_len + out.test_len, f.test.len());
    assert_eq!(hashes, (f.public.network().content_hash(), f.private.network().content_hash()));
}

#[test]
fn toy_training_run_produces_curves() {
    let f = fixture();
    let agent = AgentConfig {
        hidden: vec![32],
        batch_size: 16,
        buffer_capacity: 500,
        target_sync: 50,
        learning_starts: 16,
        lr: 1e-3,
        ..AgentConfig::default()
    };
    let cfg = TrainingConfig {
        agent,
        env: EnvConfig { episode_len: 8, ..env_config(RewardPolicy::public_based()) },
        steps: 500,
        log_every: 50,
        checkpoint_every: Some(250),
        seed: 1,
    };
    let dir = tempfile::tempdir().unwrap();
    let (agent, curves) = harness::run_training(&cfg, &f.train[..100], &f.public, &f.private, Some(dir.path())).unwrap();
    assert_eq!(agent.steps(), 500);
    assert_eq!(curves.points.len(), 10);
    assert!(curves.points.iter().all(|p| p.loss.is_finite() && p.loss >= 0.0));
    assert!(dir.path().join("step-00000250").is_dir() && dir.path().join("final").is_dir());
    let again = harness::run_training(&cfg, &f.train[..100], &f.public, &f.private, None).unwrap().1;
    assert_eq!(again, curves);

    let path = dir.path().join("curves.csv");
    curves.save_csv(&path).unwrap();
    let back = harness::Curves::load_csv(&path).unwrap();
    assert_eq!(back.points.len(), curves.points.len());
}

#[test]
fn classifier_files_round_trip() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("public.qcam");
    f.public.save(&path).unwrap();
    let back = Classifier::load(&path).unwrap();
    assert_eq!(back.task(), Task::Public);
    assert_eq!(back.logits(&f.test[0].image).unwrap(), f.public.logits(&f.test[0].image).unwrap());
    let _ = classifiers::EvalReport::CSV_HEADER;
}
