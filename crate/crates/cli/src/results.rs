//! Evaluation, the finetune attack, baselines and the results table.

use std::path::{Path, PathBuf};

use anyhow::Context as _;
use qcam_core::classifiers::{FinetuneConfig, Task};
use qcam_core::data;
use qcam_core::harness::{self, BaselineConfig, GeneratedSet, ResultsRow, ResultsTable};
use qcam_core::rng;

use crate::config::{or_out, settings, usage};
use crate::pipeline::{load_classifier, GenInfo, GEN_INFO};
use crate::{load_catalog, Ctx};

settings! {
    EvalArgs => Eval {
        /// Generated set directory (default: OUT/generated).
        generated: PathBuf = PathBuf::new(),
        public: PathBuf = PathBuf::new(),
        private: PathBuf = PathBuf::new(),
        /// Row label; taken from the generated set when empty.
        label: String = String::new(),
    }
}

settings! {
    AttackArgs => Attack {
        generated: PathBuf = PathBuf::new(),
        public: PathBuf = PathBuf::new(),
        private: PathBuf = PathBuf::new(),
        label: String = String::new(),
        epochs: usize = 5,
        batch_size: usize = 32,
        /// Finetune learning rate relative to the base rate.
        lr_scale: f64 = 0.1,
        base_lr: f64 = 2e-3,
    }
}

settings! {
    BaselinesArgs => Baselines {
        data: PathBuf = PathBuf::new(),
        public: PathBuf = PathBuf::new(),
        private: PathBuf = PathBuf::new(),
        catalog: String = "default".into(),
        blur_kernel: usize = 4,
        blur_sigma: f64 = 1.0,
        noise_sigma: f64 = 0.3,
        default_shots: u64 = 8192,
        finetune_epochs: usize = 5,
    }
}

settings! {
    ReportArgs => Report {
        /// Directory of row files (default: OUT/rows).
        rows: PathBuf = PathBuf::new(),
    }
}

fn rows_dir(out: &Path) -> PathBuf {
    out.join("rows")
}

fn row_path(dir: &Path, label: &str) -> PathBuf {
    let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    dir.join(format!("{safe}.json"))
}

fn save_row(out: &Path, row: &ResultsRow) -> anyhow::Result<()> {
    let dir = rows_dir(out);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(row_path(&dir, &row.label), serde_json::to_string_pretty(row)?)?;
    Ok(())
}

fn load_row(out: &Path, label: &str) -> anyhow::Result<Option<ResultsRow>> {
    let p = row_path(&rows_dir(out), label);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&std::fs::read_to_string(p)?)?))
}

fn load_generated(dir: &Path, label: &str) -> anyhow::Result<(GeneratedSet, String, Option<u64>)> {
    let set = GeneratedSet::load(dir).with_context(|| format!("loading generated set {}", dir.display()))?;
    let info: Option<GenInfo> = match std::fs::read_to_string(dir.join(GEN_INFO)) {
        Ok(t) => Some(serde_json::from_str(&t)?),
        Err(_) => None,
    };
    let label = match (label, &info) {
        ("", Some(i)) => i.label.clone(),
        ("", None) => return Err(usage("--label is required for a generated set without gen.json")),
        (l, _) => l.to_string(),
    };
    Ok((set, label, info.map(|i| i.training_steps)))
}

pub fn eval(ctx: &Ctx, s: &Eval) -> anyhow::Result<()> {
    let dir = or_out(&s.generated, &ctx.out, "generated");
    let (set, label, steps) = load_generated(&dir, &s.label)?;
    let pub_path = or_out(&s.public, &ctx.out, "public.qcam");
    let priv_path = or_out(&s.private, &ctx.out, "private.qcam");
    let public = load_classifier(&pub_path, Task::Public)?;
    let private = load_classifier(&priv_path, Task::Private)?;
    let (p, q) = harness::evaluate_policy(&set.items, &public, &private)?;
    log::info!("{label}: public {:.3}, private {:.3} on {} images", p.accuracy, q.accuracy, p.total);

    let mut m = ctx.manifest(s)?;
    m.dataset_hash = Some(harness::dataset_hash(&set.items));
    m.add_input("public", &pub_path)?;
    m.add_input("private", &priv_path)?;
    let eval_path = ctx.out.join(format!("eval-{label}.json"));
    std::fs::write(&eval_path, serde_json::to_string_pretty(&(&p, &q))?)?;
    m.add_output("eval", &eval_path)?;
    let digest = ctx.save_tagged_manifest(&m, &label)?;

    let previous = load_row(&ctx.out, &label)?;
    save_row(
        &ctx.out,
        &ResultsRow {
            label: label.clone(),
            public_test: p.accuracy,
            public_finetuned: previous.as_ref().and_then(|r| r.public_finetuned),
            private_test: q.accuracy,
            private_finetuned: previous.as_ref().and_then(|r| r.private_finetuned),
            training_steps: steps,
            manifest_hash: digest,
        },
    )
}

pub fn attack(ctx: &Ctx, s: &Attack) -> anyhow::Result<()> {
    let dir = or_out(&s.generated, &ctx.out, "generated");
    let (set, label, steps) = load_generated(&dir, &s.label)?;
    let pub_path = or_out(&s.public, &ctx.out, "public.qcam");
    let priv_path = or_out(&s.private, &ctx.out, "private.qcam");
    let public = load_classifier(&pub_path, Task::Public)?;
    let private = load_classifier(&priv_path, Task::Private)?;
    let cfg = FinetuneConfig { epochs: s.epochs, batch_size: s.batch_size, lr_scale: s.lr_scale, base_lr: s.base_lr };
    let out = harness::finetune_attack(&set.items, &public, &private, &cfg, rng::derive(ctx.seed, "attack", 0))?;
    log::info!(
        "{label}: public {:.3} -> {:.3}, private {:.3} -> {:.3} on {} held-out images",
        out.public_before,
        out.public_after,
        out.private_before,
        out.private_after,
        out.test_len
    );

    let mut m = ctx.manifest(s)?;
    m.dataset_hash = Some(harness::dataset_hash(&set.items));
    m.add_input("public", &pub_path)?;
    m.add_input("private", &priv_path)?;
    let attack_path = ctx.out.join(format!("attack-{label}.json"));
    std::fs::write(&attack_path, serde_json::to_string_pretty(&out)?)?;
    m.add_output("attack", &attack_path)?;
    let digest = ctx.save_tagged_manifest(&m, &label)?;

    let row = match load_row(&ctx.out, &label)? {
        Some(mut r) => {
            r.public_finetuned = Some(out.public_after);
            r.private_finetuned = Some(out.private_after);
            r.manifest_hash = digest;
            r
        }
        None => {
            let (p, q) = harness::evaluate_policy(&set.items, &public, &private)?;
            ResultsRow {
                label,
                public_test: p.accuracy,
                public_finetuned: Some(out.public_after),
                private_test: q.accuracy,
                private_finetuned: Some(out.private_after),
                training_steps: steps,
                manifest_hash: digest,
            }
        }
    };
    save_row(&ctx.out, &row)
}

pub fn baselines(ctx: &Ctx, s: &Baselines) -> anyhow::Result<()> {
    let (split, _) = data::load_split(or_out(&s.data, &ctx.out, "data")).context("loading data split")?;
    let pub_path = or_out(&s.public, &ctx.out, "public.qcam");
    let priv_path = or_out(&s.private, &ctx.out, "private.qcam");
    let public = load_classifier(&pub_path, Task::Public)?;
    let private = load_classifier(&priv_path, Task::Private)?;
    let catalog = load_catalog(&s.catalog)?;
    let config = BaselineConfig {
        blur_kernel: s.blur_kernel,
        blur_sigma: s.blur_sigma,
        noise_sigma: s.noise_sigma,
        default_shots: s.default_shots,
        finetune: FinetuneConfig { epochs: s.finetune_epochs, ..FinetuneConfig::default() },
    };

    // Rows carry the digest of the manifest describing their inputs.
    let mut m = ctx.manifest(s)?;
    m.catalog_hash = Some(catalog.content_hash());
    m.dataset_hash = Some(harness::dataset_hash(&split.test));
    m.add_input("public", &pub_path)?;
    m.add_input("private", &priv_path)?;
    let digest = ctx.save_manifest_digest(&m)?;

    let (results, rows) = harness::run_baselines(&split.test, &catalog, &public, &private, &config, ctx.seed, &digest)
        .map_err(|e| match e {
            qcam_core::Error::Config(msg) => usage(msg),
            other => other.into(),
        })?;
    for r in &results {
        log::info!(
            "{}: public {:.3} -> {:.3}, private {:.3} -> {:.3}",
            r.row.label,
            r.row.public_test,
            r.attack.public_after,
            r.row.private_test,
            r.attack.private_after
        );
    }
    for row in &rows {
        save_row(&ctx.out, row)?;
    }
    std::fs::write(ctx.out.join("baselines.json"), serde_json::to_string_pretty(&results)?)?;
    Ok(())
}

pub fn report(ctx: &Ctx, s: &Report) -> anyhow::Result<()> {
    let dir = or_out(&s.rows, &ctx.out, "rows");
    let mut rows: Vec<ResultsRow> = Vec::new();
    if dir.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "json"));
        files.sort();
        for f in files {
            let row: ResultsRow = serde_json::from_str(&std::fs::read_to_string(&f)?)
                .with_context(|| format!("reading row {}", f.display()))?;
            if row.label != "chance" {
                rows.push(row);
            }
        }
    } else {
        log::warn!("no rows under {}; the table holds only the chance row", dir.display());
    }

    let mut m = ctx.manifest(s)?;
    for r in &rows {
        m.inputs.insert(format!("row:{}", r.label), r.manifest_hash.clone());
    }
    rows.push(ResultsRow::chance(&m.digest()));
    let table = ResultsTable { rows };
    let path = ctx.out.join("results_table.csv");
    table.save_csv(&path)?;
    let mut text = Vec::new();
    table.write_csv(&mut text)?;
    print!("{}", String::from_utf8_lossy(&text));
    m.add_output("results_table", &path)?;
    ctx.save_manifest(&m)
}
