use serde::{Deserialize, Serialize};

use super::generate::{evaluate_policy, finetune_attack, AttackOutcome};
use super::table::ResultsRow;
use crate::actions::ActionCatalog;
use crate::classifiers::{Classifier, FinetuneConfig};
use crate::data::{augment, LabeledImage};
use crate::{rng, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub default_shots: u64,
    pub finetune: FinetuneConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            blur_kernel: augment::BLUR_KERNEL_SIDE,
            blur_sigma: augment::BLUR_SIGMA,
            noise_sigma: augment::NOISE_SIGMA,
            default_shots: 8192,
            finetune: FinetuneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    QuantumRandom,
    GaussianBlur,
    GaussianNoise,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::QuantumRandom, Baseline::GaussianBlur, Baseline::GaussianNoise];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::QuantumRandom => "quantum-random",
            Baseline::GaussianBlur => "gaussian-blur",
            Baseline::GaussianNoise => "gaussian-noise",
        }
    }

    /// Degrade every image of `data`.
    pub fn apply(self, data: &[LabeledImage], catalog: &ActionCatalog, config: &BaselineConfig, seed: u64) -> Result<Vec<LabeledImage>> {
        data.iter()
            .enumerate()
            .map(|(i, it)| {
                let s = rng::derive(seed, self.label(), i as u64);
                let img = match self {
                    Baseline::QuantumRandom => augment::quantum_random(&it.image, catalog, config.default_shots, s)?,
                    Baseline::GaussianBlur => augment::gaussian_blur(&it.image, config.blur_kernel, config.blur_sigma)?,
                    Baseline::GaussianNoise => augment::gaussian_noise(&it.image, config.noise_sigma, s)?,
                };
                LabeledImage::new(img, it.private_label)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub baseline: Baseline,
    pub row: ResultsRow,
    pub attack: AttackOutcome,
}

/// Test and finetune-attack one baseline. Test columns cover the whole
/// degraded set; finetuned columns cover the held-out half.
pub fn run_baseline(
    baseline: Baseline,
    data: &[LabeledImage],
    catalog: &ActionCatalog,
    public: &Classifier,
    private: &Classifier,
    config: &BaselineConfig,
    seed: u64,
    manifest_hash: &str,
) -> Result<BaselineResult> {
    let degraded = baseline.apply(data, catalog, config, seed)?;
    let (pub_rep, priv_rep) = evaluate_policy(&degraded, public, private)?;
    let attack = finetune_attack(&degraded, public, private, &config.finetune, rng::derive(seed, "attack", 0))?;
    let row = ResultsRow {
        label: baseline.label().into(),
        public_test: pub_rep.accuracy,
        public_finetuned: Some(attack.public_after),
        private_test: priv_rep.accuracy,
        private_finetuned: Some(attack.private_after),
        training_steps: None,
        manifest_hash: manifest_hash.into(),
    };
    Ok(BaselineResult { baseline, row, attack })
}

/// All three baselines followed by the chance row.
pub fn run_baselines(
    data: &[LabeledImage],
    catalog: &ActionCatalog,
    public: &Classifier,
    private: &Classifier,
    config: &BaselineConfig,
    seed: u64,
    manifest_hash: &str,
) -> Result<(Vec<BaselineResult>, Vec<ResultsRow>)> {
    let mut results = Vec::new();
    for b in Baseline::ALL {
        log::info!("baseline {}", b.label());
        results.push(run_baseline(b, data, catalog, public, private, config, seed, manifest_hash)?);
    }
    let mut rows: Vec<ResultsRow> = results.iter().map(|r| r.row.clone()).collect();
    rows.push(ResultsRow::chance(manifest_hash));
    Ok((results, rows))
}
