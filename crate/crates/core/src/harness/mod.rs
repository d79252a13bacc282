//! End-to-end orchestration: agent training with curves, frozen-policy
//! generation, evaluation, the finetune attack, baselines and the depth
//! benchmark, plus manifests and the results table.

mod baselines;
mod bench;
mod generate;
mod manifest;
mod table;
mod training;

pub use baselines::{run_baseline, run_baselines, Baseline, BaselineConfig, BaselineResult};
pub use bench::{bench_depth, DepthPoint};
pub use generate::{evaluate_policy, finetune_attack, freeze_and_generate, AttackOutcome, GeneratedSet};
pub use manifest::{dataset_hash, file_sha256, sha256_hex, RunManifest};
pub use table::{ResultsRow, ResultsTable};
pub use training::{run_training, CurvePoint, CurveSummary, Curves, TrainingConfig, SMOOTHING_WINDOW};
