//! Subcommands. Each one reads the config, derives its seeds from the master
//! seed and writes its outputs below the output directory.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use robustaug_core::augment::{AugmentationSet, OperatorKind};
use robustaug_core::corpus::{generate_corpus, Corpus};
use robustaug_core::metrics::{map_gain, GainReport, MetricsReport};
use robustaug_core::model::{train, Model, TrainHistory};
use robustaug_core::search::{ga_search, greedy_search, AdditiveFitness, Chromosome, Fitness, MapFitness, SearchTrace};
use serde::Serialize;

use crate::checkpoint::{self, CheckpointMeta};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::{self, MetricsRow, Provenance};
use crate::parallel::{evaluate_scenarios, thread_pool, RayonEvaluator};
use crate::pnm;

#[derive(Debug, Parser)]
#[command(name = "robustaug", version, about = "Augmentation search for robust synthetic-image detection")]
pub struct Cli {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `master_seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the corpus as PPM files plus a manifest.
    GenCorpus,
    /// Train one model and write its checkpoint and history.
    Train,
    /// Evaluate a checkpoint under every configured scenario.
    Evaluate {
        /// Defaults to `model.ckpt` in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Reference checkpoint for the mAP gain columns.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Search for the augmentation subset with the best `combined` mAP.
    Search {
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Replace training by an additive fitness with these comma-separated
        /// per-operator weights.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        test_fitness: Option<Vec<f64>>,
    },
    /// Merge every metrics CSV below a run directory into one.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Greedy,
    Ga,
}

impl Strategy {
    fn name(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Ga => "ga",
        }
    }
}

/// Resolved configuration and where to put things.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Context {
    pub fn new(config: ExperimentConfig, out: Option<PathBuf>, jobs: usize) -> Result<Self> {
        config.validate()?;
        let provenance = Provenance::new(config.hash(), config.master_seed);
        let out = out.unwrap_or_else(|| config.output_dir.clone());
        Ok(Self { config: config.resolved(), provenance, out, jobs })
    }

    fn run_id(&self, kind: &str) -> String {
        format!("{kind}-{}", &self.provenance.config_hash[..12])
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Parse-free entry point: run one parsed command line.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Command::Report { run_dir } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| run_dir.clone());
        return cmd_report(run_dir, &out).map(|p| vec![p]);
    }
    let ctx = Context::new(config, cli.out, cli.jobs)?;
    output::ensure_dir(&ctx.out)?;
    let pool = thread_pool(ctx.jobs)?;
    pool.install(|| match cli.command {
        Command::GenCorpus => cmd_gen_corpus(&ctx).map(|p| vec![p]),
        Command::Train => cmd_train(&ctx),
        Command::Evaluate { checkpoint, baseline } => {
            let ckpt = checkpoint.unwrap_or_else(|| ctx.path("model.ckpt"));
            cmd_evaluate(&ctx, &ckpt, baseline.as_deref())
        }
        Command::Search { strategy, test_fitness } => cmd_search(&ctx, strategy, test_fitness),
        Command::Report { .. } => unreachable!("handled above"),
    })
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    label: u8,
}

#[derive(Serialize)]
struct ManifestDataset {
    name: String,
    entries: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    provenance: &'a Provenance,
    corpus: &'a robustaug_core::corpus::CorpusConfig,
    datasets: Vec<ManifestDataset>,
}

pub fn cmd_gen_corpus(ctx: &Context) -> Result<PathBuf> {
    let corpus = generate_corpus(&ctx.config.corpus)?;
    let root = ctx.path("corpus");
    let stamp = [format!(
        "schema={} config_hash={} master_seed={}",
        ctx.provenance.schema, ctx.provenance.config_hash, ctx.provenance.master_seed
    )];
    let mut datasets = Vec::new();
    for ds in std::iter::once(&corpus.train).chain(&corpus.eval_sets) {
        let dir = root.join(&ds.name);
        output::ensure_dir(&dir)?;
        let mut entries = Vec::with_capacity(ds.len());
        for (i, (img, &label)) in ds.images().iter().zip(ds.labels()).enumerate() {
            let file = format!("{}/{i:05}.ppm", ds.name);
            pnm::write(&root.join(&file), img, &stamp)?;
            entries.push(ManifestEntry { file, label });
        }
        datasets.push(ManifestDataset { name: ds.name.clone(), entries });
    }
    let manifest = root.join("manifest.json");
    let m = Manifest { provenance: &ctx.provenance, corpus: &ctx.config.corpus, datasets };
    output::write_bytes(&manifest, &output::json_bytes(&m)?)?;
    Ok(manifest)
}

/// Train with the configured augmentations and loss on the corpus training
/// split, holding every tenth pair out for validation.
pub fn train_model(ctx: &Context, corpus: &Corpus) -> Result<(Model, TrainHistory)> {
    let (train_set, val_set) = corpus.train_val()?;
    Ok(train(&train_set, &val_set, &ctx.config.train, &ctx.config.loss)?)
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    provenance: &'a Provenance,
    run_id: &'a str,
    augmentations: String,
    history: &'a TrainHistory,
}

pub fn cmd_train(ctx: &Context) -> Result<Vec<PathBuf>> {
    let corpus = generate_corpus(&ctx.config.corpus)?;
    let (model, history) = train_model(ctx, &corpus)?;
    let run_id = ctx.run_id("train");
    let meta = CheckpointMeta {
        provenance: ctx.provenance.clone(),
        run_id: run_id.clone(),
        train: ctx.config.train.clone(),
        loss: ctx.config.loss,
        history: Some(history.clone()),
    };
    let ckpt = ctx.path("model.ckpt");
    checkpoint::save(&ckpt, &model, &meta)?;
    let hist = ctx.path("history.json");
    let h = HistoryFile {
        provenance: &ctx.provenance,
        run_id: &run_id,
        augmentations: ctx.config.train.train_augmentations.label(),
        history: &history,
    };
    output::write_bytes(&hist, &output::json_bytes(&h)?)?;
    Ok(vec![ckpt, hist])
}

#[derive(Serialize)]
struct ScenarioGain {
    scenario: String,
    #[serde(flatten)]
    gain: GainReport,
}

#[derive(Serialize)]
struct EvaluationFile<'a> {
    provenance: &'a Provenance,
    run_id: &'a str,
    baseline_run_id: Option<&'a str>,
    reports: &'a [MetricsReport],
    gains: Vec<ScenarioGain>,
    /// Mean of the per-scenario gains over all configured scenarios.
    mean_gain_percent: Option<f64>,
}

pub fn cmd_evaluate(ctx: &Context, ckpt: &Path, baseline: Option<&Path>) -> Result<Vec<PathBuf>> {
    let (model, meta) = checkpoint::load(ckpt)?;
    let base = baseline.map(checkpoint::load).transpose()?;
    let corpus = generate_corpus(&ctx.config.corpus)?;
    let scenarios = ctx.config.scenario_list();
    let reports = evaluate_scenarios(&model, &corpus.eval_sets, &scenarios)?;
    let gains: Vec<ScenarioGain> = match &base {
        Some((base_model, _)) => evaluate_scenarios(base_model, &corpus.eval_sets, &scenarios)?
            .iter()
            .zip(&reports)
            .map(|(b, r)| Ok(ScenarioGain { scenario: r.scenario_name.clone(), gain: GainReport::new(r.map, b.map)? }))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let mean_gain_percent =
        (!gains.is_empty()).then(|| gains.iter().map(|g| g.gain.gain_percent).sum::<f64>() / gains.len() as f64);

    let mut rows = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        rows.extend(MetricsRow::from_report(&meta.run_id, r, gains.get(i).map(|g| g.gain.gain_percent)));
    }
    let mut comments = vec![format!("checkpoint_config_hash: {}", meta.provenance.config_hash)];
    if let Some((_, bm)) = &base {
        comments.push(format!("baseline_run_id: {}", bm.run_id));
    }
    let csv = ctx.path("metrics.csv");
    output::write_bytes(&csv, &output::metrics_csv(&ctx.provenance, &comments, &rows)?)?;
    let json = ctx.path("metrics.json");
    let file = EvaluationFile {
        provenance: &ctx.provenance,
        run_id: &meta.run_id,
        baseline_run_id: base.as_ref().map(|(_, m)| m.run_id.as_str()),
        reports: &reports,
        gains,
        mean_gain_percent,
    };
    output::write_bytes(&json, &output::json_bytes(&file)?)?;
    Ok(vec![csv, json])
}

#[derive(Serialize)]
struct BestFile<'a> {
    provenance: &'a Provenance,
    strategy: &'a str,
    pool: &'a [String],
    best_bits: &'a Chromosome,
    best_enabled: Vec<String>,
    best_fitness: f64,
    fitness_calls: usize,
    augmentation_set: Option<AugmentationSet>,
}

pub fn cmd_search(ctx: &Context, strategy: Strategy, test_weights: Option<Vec<f64>>) -> Result<Vec<PathBuf>> {
    let (fitness, pool, real): (Box<dyn Fitness>, Vec<String>, Option<MapFitness>) = match test_weights {
        Some(w) => {
            let names = (0..w.len()).map(|i| i.to_string()).collect();
            (Box::new(AdditiveFitness::new(w)), names, None)
        }
        None => {
            let f = MapFitness::new(
                &ctx.config.corpus,
                &ctx.config.train,
                ctx.config.search.fitness_epochs,
                ctx.config.master_seed,
            )?;
            let names = f.pool().iter().map(|k: &OperatorKind| k.name().to_owned()).collect();
            (Box::new(f.clone()), names, Some(f))
        }
    };
    let (best, trace): (Chromosome, SearchTrace) = match strategy {
        Strategy::Greedy => greedy_search(fitness.as_ref(), ctx.config.search.max_rounds, &RayonEvaluator)?,
        Strategy::Ga => ga_search(fitness.as_ref(), &ctx.config.search.ga, &RayonEvaluator)?,
    };
    let name = strategy.name();
    let run_id = ctx.run_id(&format!("search-{name}"));

    let trace_path = ctx.path(&format!("search-{name}.jsonl"));
    output::write_bytes(&trace_path, &output::trace_jsonl(&ctx.provenance, &pool, &trace)?)?;

    let best_path = ctx.path(&format!("search-{name}-best.json"));
    let best_file = BestFile {
        provenance: &ctx.provenance,
        strategy: name,
        pool: &pool,
        best_bits: &best,
        best_enabled: best.iter().zip(&pool).filter(|(&b, _)| b).map(|(_, p)| p.clone()).collect(),
        best_fitness: trace.best_fitness,
        fitness_calls: trace.fitness_calls,
        augmentation_set: real.as_ref().map(|f| f.set_for(&best)).transpose()?,
    };
    output::write_bytes(&best_path, &output::json_bytes(&best_file)?)?;

    // gain against the empty set when the search happened to score it
    let empty = vec![false; pool.len()];
    let baseline = trace.records.iter().find(|r| r.candidate == empty).map(|r| r.fitness);
    let gain = baseline.filter(|&b| b > 0.0).map(|b| map_gain(trace.best_fitness, b)).transpose()?;
    let row = MetricsRow {
        run_id,
        scenario: if real.is_some() { "combined".into() } else { "test_fitness".into() },
        dataset: "search".into(),
        ap: None,
        accuracy: None,
        map: trace.best_fitness,
        map_gain_percent: gain,
    };
    let summary = ctx.path(&format!("search-{name}-summary.csv"));
    let comments = vec![format!("best: {}", best_file.best_enabled.join("+"))];
    output::write_bytes(&summary, &output::metrics_csv(&ctx.provenance, &comments, &[row])?)?;
    Ok(vec![trace_path, best_path, summary])
}

/// Concatenate the rows of every metrics CSV below `run_dir` into
/// `out/report.csv`, listing each source with its config hash and master
/// seed. All inputs must share the current schema; earlier reports are
/// skipped.
pub fn cmd_report(run_dir: &Path, out: &Path) -> Result<PathBuf> {
    output::ensure_dir(out)?;
    let target = out.join("report.csv");
    let files = output::find_csv_files(run_dir, "report.csv")?;
    if files.is_empty() {
        return Err(Error::Schema(format!("no CSV files below {}", run_dir.display())));
    }
    let mut rows = Vec::new();
    let mut sources = Vec::new();
    for f in &files {
        let (schema, mut r) = output::read_metrics_csv(f)?;
        let prov = read_provenance(f)?;
        if schema.as_deref() != Some(output::SCHEMA) {
            return Err(Error::Schema(format!(
                "{} has schema {}, expected {}",
                f.display(),
                schema.as_deref().unwrap_or("(none)"),
                output::SCHEMA
            )));
        }
        let rel = f.strip_prefix(run_dir).unwrap_or(f);
        sources.push(format!(
            "source: {} config_hash={} master_seed={}",
            rel.display(),
            prov.config_hash,
            prov.master_seed
        ));
        rows.append(&mut r);
    }
    let mut header = vec![format!("schema: {}", output::SCHEMA)];
    header.append(&mut sources);
    output::write_bytes(&target, &output::csv_with_comments(&header, &rows)?)?;
    Ok(target)
}

fn read_provenance(path: &Path) -> Result<Provenance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let field = |key: &str| {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(&format!("# {key}: ")).map(str::to_owned))
    };
    let missing = || Error::Schema(format!("{}: provenance comments missing", path.display()));
    let config_hash = field("config_hash").ok_or_else(missing)?;
    let master_seed = field("master_seed").and_then(|s| s.parse().ok()).ok_or_else(missing)?;
    Ok(Provenance::new(config_hash, master_seed))
}
