//! `qcam`: command-line driver for the quantum privacy camera pipeline.
//!
//! Every subcommand reads an optional flat JSON config (`--config`), lets
//! flags override it, writes its artifacts under `--out` and records a
//! manifest (`manifest-<command>.json`) with the effective settings and
//! content hashes.

mod config;
mod pipeline;
mod quantum;
mod results;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcam_core::actions::ActionCatalog;
use qcam_core::frqi::FrqiLayout;
use qcam_core::harness::RunManifest;
use serde::Serialize;
use serde_json::{Map, Value};

use config::{settings, usage, UsageError};

settings! {
    GlobalArgs => Globals {
        /// Run seed; fixes every artifact.
        #[arg(global = true)]
        seed: u64 = 0,
        /// Declared parallelism. Work currently runs on one thread.
        #[arg(global = true)]
        jobs: usize = 1,
        /// Output directory (QCAM_OUT overrides the default).
        #[arg(global = true)]
        out: PathBuf = PathBuf::from("qcam-out"),
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcam", version, about = "Quantum privacy-preserving camera simulator")]
struct Cli {
    /// Flat JSON config; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a PGM as FRQI, measure it and write the clean/measured pair
    /// and the histogram.
    Encode(quantum::EncodeArgs),
    /// Measure every combination of the given gates applied to an image.
    Explore(quantum::ExploreArgs),
    /// Build a class-balanced train/val/test split from synthetic glyphs or EMNIST.
    PrepData(pipeline::PrepDataArgs),
    /// Train the public or private classifier.
    TrainCnn(pipeline::TrainCnnArgs),
    /// Train the DDQN agent and write curves and checkpoints.
    TrainAgent(pipeline::TrainAgentArgs),
    /// Run the frozen policy over the test split and save the captures.
    Gen(pipeline::GenArgs),
    /// Score a generated set with both classifiers.
    Eval(results::EvalArgs),
    /// Finetune copies of both classifiers on half of a generated set and
    /// score the other half.
    Attack(results::AttackArgs),
    /// Quantum-random, blur and noise baselines on the test split.
    Baselines(results::BaselinesArgs),
    /// Circuit depth and simulation time for 0..k appended privacy gates.
    BenchDepth(quantum::BenchDepthArgs),
    /// Collect rows into results_table.csv with the chance row.
    Report(results::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Encode(_) => "encode",
            Command::Explore(_) => "explore",
            Command::PrepData(_) => "prep-data",
            Command::TrainCnn(_) => "train-cnn",
            Command::TrainAgent(_) => "train-agent",
            Command::Gen(_) => "gen",
            Command::Eval(_) => "eval",
            Command::Attack(_) => "attack",
            Command::Baselines(_) => "baselines",
            Command::BenchDepth(_) => "bench-depth",
            Command::Report(_) => "report",
        }
    }
}

/// Resolved global state shared by every subcommand.
pub struct Ctx {
    pub command: &'static str,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Ctx {
    /// Manifest seeded with the effective settings of this run.
    pub fn manifest<S: Serialize>(&self, settings: &S) -> anyhow::Result<RunManifest> {
        let mut config = serde_json::to_value(settings)?;
        if let Value::Object(m) = &mut config {
            m.insert("jobs".into(), self.jobs.into());
        }
        Ok(RunManifest::new(self.command, self.seed, config))
    }

    pub fn save_manifest(&self, m: &RunManifest) -> anyhow::Result<()> {
        self.save_manifest_digest(m).map(|_| ())
    }

    pub fn save_manifest_digest(&self, m: &RunManifest) -> anyhow::Result<String> {
        self.save_tagged_manifest(m, "")
    }

    /// Like [`Ctx::save_manifest`] for commands run once per task or label;
    /// the tag keeps their manifests apart.
    pub fn save_tagged_manifest(&self, m: &RunManifest, tag: &str) -> anyhow::Result<String> {
        let name = if tag.is_empty() { self.command.to_string() } else { format!("{}-{tag}", self.command) };
        m.save(self.out.join(format!("manifest-{name}.json")))?;
        Ok(m.digest())
    }
}

/// `default`, `reduced`, or a catalog JSON file, for 16×16 images.
pub fn load_catalog(spec: &str) -> anyhow::Result<ActionCatalog> {
    let layout = FrqiLayout::for_side(qcam_core::data::SIDE)?;
    match spec {
        "default" => Ok(ActionCatalog::default_for(layout)?),
        "reduced" => Ok(ActionCatalog::reduced(layout)?),
        path => ActionCatalog::load(path).map_err(|e| usage(format!("catalog {path:?}: {e}"))),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = config::load_file(cli.config.as_deref())?;
    let mut globals_file: Map<String, Value> = file.clone();
    if !globals_file.contains_key("out") {
        if let Ok(dir) = std::env::var("QCAM_OUT") {
            globals_file.insert("out".into(), dir.into());
        }
    }
    let g: Globals = config::resolve(&globals_file, &cli.globals)?;
    if g.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    if g.jobs > 1 {
        log::info!("--jobs {} recorded; running sequentially", g.jobs);
    }
    std::fs::create_dir_all(&g.out).map_err(|e| usage(format!("cannot create {}: {e}", g.out.display())))?;
    let ctx = Ctx { command: cli.command.name(), seed: g.seed, jobs: g.jobs, out: g.out };
    log::info!("{} (seed {}) -> {}", ctx.command, ctx.seed, ctx.out.display());

    let f = &file;
    match &cli.command {
        Command::Encode(a) => quantum::encode(&ctx, &config::resolve(f, a)?),
        Command::Explore(a) => quantum::explore(&ctx, &config::resolve(f, a)?),
        Command::PrepData(a) => pipeline::prep_data(&ctx, &config::resolve(f, a)?),
        Command::TrainCnn(a) => pipeline::train_cnn(&ctx, &config::resolve(f, a)?),
        Command::TrainAgent(a) => pipeline::train_agent(&ctx, &config::resolve(f, a)?),
        Command::Gen(a) => pipeline::gen(&ctx, &config::resolve(f, a)?),
        Command::Eval(a) => results::eval(&ctx, &config::resolve(f, a)?),
        Command::Attack(a) => results::attack(&ctx, &config::resolve(f, a)?),
        Command::Baselines(a) => results::baselines(&ctx, &config::resolve(f, a)?),
        Command::BenchDepth(a) => quantum::bench_depth(&ctx, &config::resolve(f, a)?),
        Command::Report(a) => results::report(&ctx, &config::resolve(f, a)?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let config_error = err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some() || matches!(e.downcast_ref::<qcam_core::Error>(), Some(qcam_core::Error::Config(_)))
    });
    if config_error {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stdout)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
