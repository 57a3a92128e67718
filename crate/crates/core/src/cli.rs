//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use log::warn;

use crate::bench::{self, BenchConfig};
use crate::dataset::{self, DatasetManifest, PairLabel, Split};
use crate::error::{Error, Result};
use crate::landmarks;
use crate::train::{self, TrainConfig};
use crate::verify;
use crate::{checkpoint, kv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn version_text() -> String {
    format!(
        "{}\nlandmark format {}\ncheckpoint format {}\nmanifest format {}",
        env!("CARGO_PKG_VERSION"),
        landmarks::FORMAT_VERSION,
        checkpoint::FORMAT_VERSION,
        dataset::MANIFEST_VERSION
    )
}

#[derive(Debug, Parser)]
#[command(name = "facemotion", about = "Driver verification for talking-head clips from landmark motion")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads; results are identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a manifest and its landmark files, or individual landmark files.
    Validate(ValidateArgs),
    /// Train the encoder with triplet loss.
    Train(TrainArgs),
    /// Score every comparison of a split and write a report.
    Eval(EvalArgs),
    /// Build ROC points from a report.
    Roc(RocArgs),
    /// Export per-frame attention weights.
    Attention(AttentionArgs),
    /// Generate synthetic identities, train, and evaluate.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Landmark files to check on their own.
    pub files: Vec<PathBuf>,
    #[arg(long = "clip_length", alias = "clip-length", default_value_t = 50)]
    pub clip_length: usize,
    /// key=value file of flag values; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Flags named after the training configuration fields.
#[derive(Debug, Args, Default)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch_size", alias = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "learning_rate", alias = "learning-rate")]
    pub learning_rate: Option<f64>,
    #[arg(long = "adam_beta1", alias = "adam-beta1")]
    pub adam_beta1: Option<f64>,
    #[arg(long = "adam_beta2", alias = "adam-beta2")]
    pub adam_beta2: Option<f64>,
    #[arg(long = "adam_epsilon", alias = "adam-epsilon")]
    pub adam_epsilon: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "clip_length", alias = "clip-length")]
    pub clip_length: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, config: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field {
                    config.$field = v;
                })*
            };
        }
        set!(epochs, batch_size, learning_rate, adam_beta1, adam_beta2, adam_epsilon, margin, seed, clip_length);
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for the checkpoint and training log.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Report file; the ROC goes next to it as `<stem>.roc.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the value stored with the checkpoint.
    #[arg(long = "clip_length", alias = "clip-length")]
    pub clip_length: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    /// Report written by `eval` or `bench`.
    #[arg(long)]
    pub report: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttentionArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Clip ids (a manifest record or `record#k`); every clip of `--split` when absent.
    #[arg(long = "clip")]
    pub clips: Vec<String>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "clip_length", alias = "clip-length")]
    pub clip_length: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 12)]
    pub identities: usize,
    #[arg(long = "clips_per_identity", alias = "clips-per-identity", default_value_t = 6)]
    pub clips_per_identity: usize,
    #[arg(long = "impostors_per_target", alias = "impostors-per-target", default_value_t = 4)]
    pub impostors_per_target: usize,
    /// Frames per generated file; defaults to the clip length.
    #[arg(long = "frames_per_clip", alias = "frames-per-clip")]
    pub frames_per_clip: Option<usize>,
    #[arg(long = "noise_level", alias = "noise-level")]
    pub noise_level: Option<f64>,
    /// Frequency gap between identities, cycles per frame.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Untrained baseline models to score.
    #[arg(long = "untrained_seeds", alias = "untrained-seeds", default_value_t = 5)]
    pub untrained_seeds: usize,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Inserts `--key=value` pairs from every `--config FILE` right after the
/// subcommand, so flags given on the command line take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut files = Vec::new();
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            if let Some(p) = strs.get(i + 1) {
                files.push(PathBuf::from(p));
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            files.push(PathBuf::from(p));
        }
    }
    if files.is_empty() {
        return Ok(args);
    }
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(at) = strs.iter().position(|a| names.contains(a)) else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for f in files {
        let entries: BTreeMap<String, String> = kv::read(&f)?;
        for (k, v) in entries {
            injected.push(OsString::from(format!("--{k}={v}")));
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, injected);
    Ok(out)
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let matches = match Cli::command().version(version_text()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => verify::write_text(p, text),
        None => emit(out, text),
    }
}

/// Clip length from a flag, else from the checkpoint's sidecar, else the default.
fn clip_length_for(flag: Option<usize>, checkpoint: &Path) -> usize {
    flag.or_else(|| {
        let meta = kv::read(&train::meta_path(checkpoint)).ok()?;
        meta.get("config.clip_length")?.parse().ok()
    })
    .unwrap_or(TrainConfig::default().clip_length)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Validate(a) => validate(a, out),
        Command::Train(a) => {
            let manifest = dataset::load_manifest(&a.manifest)?;
            let mut config = TrainConfig {
                workers: cli.workers,
                ..TrainConfig::default()
            };
            a.overrides.apply(&mut config);
            config.validate()?;
            let outcome = train::train(&manifest, &config, Some(&a.out))?;
            let best = &outcome.best;
            emit(
                out,
                &format!(
                    "best epoch {} val_loss {} checkpoint {}\n",
                    best.epoch,
                    best.val_loss,
                    a.out.join("checkpoint.gvck").display()
                ),
            )
        }
        Command::Eval(a) => {
            let manifest = dataset::load_manifest(&a.manifest)?;
            let params = checkpoint::read_params(&a.checkpoint)?;
            let clip_length = clip_length_for(a.clip_length, &a.checkpoint);
            let report = crate::par::with_workers(cli.workers, || verify::run_protocol(&manifest, a.split, &params, clip_length))?;
            verify::write_text(&a.out, &report.to_text())?;
            let roc_path = a.out.with_extension("roc.tsv");
            verify::write_text(&roc_path, &report.roc_text())?;
            emit(
                out,
                &format!(
                    "AUC {:.6} ({} genuine, {} impostor pairs)\n",
                    report.auc, report.genuine_count, report.impostor_count
                ),
            )
        }
        Command::Roc(a) => {
            let text = std::fs::read_to_string(&a.report).map_err(|e| Error::io(&a.report, e))?;
            let rows = verify::parse_report_scores(&text)?;
            let pick = |label| rows.iter().filter(|r| r.0 == label).map(|r| r.1).collect::<Vec<_>>();
            let points = verify::roc_points(&pick(PairLabel::Genuine), &pick(PairLabel::Impostor))?;
            write_or_print(a.out.as_deref(), &verify::roc_text(&points), out)
        }
        Command::Attention(a) => {
            let manifest = dataset::load_manifest(&a.manifest)?;
            let params = checkpoint::read_params(&a.checkpoint)?;
            let clip_length = clip_length_for(a.clip_length, &a.checkpoint);
            let ids: Vec<String> = if a.clips.is_empty() {
                manifest.records_in(a.split).map(|r| r.clip_id.clone()).collect()
            } else {
                a.clips.clone()
            };
            let traces = crate::par::with_workers(cli.workers, || verify::export_attention(&manifest, &ids, &params, clip_length))?;
            write_or_print(a.out.as_deref(), &verify::attention_text(&traces), out)
        }
        Command::Bench(a) => {
            let seed = a.overrides.seed.unwrap_or(0);
            let mut config = BenchConfig::standard(seed);
            config.data.num_identities = a.identities;
            config.data.clips_per_identity = a.clips_per_identity;
            config.data.impostors_per_target = a.impostors_per_target;
            a.overrides.apply(&mut config.train);
            config.train.workers = cli.workers;
            config.data.frames_per_clip = a.frames_per_clip.unwrap_or(config.train.clip_length);
            if let Some(n) = a.noise_level {
                config.data.render.noise_level = n;
            }
            if let Some(s) = a.separation {
                config.data.signature.separation = s;
            }
            config.untrained_seeds = (0..a.untrained_seeds as u64).map(|k| seed.wrapping_add(1000 + k)).collect();
            config.train.validate()?;
            let report = bench::run_bench(&config, &a.out)?;
            emit(out, &format!("{}\n", report.auc_line()))
        }
    }
}

fn validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    if a.manifest.is_none() && a.files.is_empty() {
        return Err(Error::Config("give --manifest or at least one landmark file".into()));
    }
    for f in &a.files {
        let seq = landmarks::read_sequence(f)?;
        if !seq.normalized {
            landmarks::normalize(&seq)?;
        }
        emit(
            out,
            &format!(
                "{}: {} frames, {} landmarks, subset {}, {}\n",
                f.display(),
                seq.frame_count(),
                seq.landmark_count(),
                if seq.provenance.subset.is_empty() { "-" } else { &seq.provenance.subset },
                if seq.normalized { "normalized" } else { "raw" }
            ),
        )?;
    }
    if let Some(path) = &a.manifest {
        let manifest = dataset::load_manifest(path)?;
        validate_manifest(&manifest, a.clip_length, out)?;
    }
    Ok(())
}

fn validate_manifest(manifest: &DatasetManifest, clip_length: usize, out: &mut dyn Write) -> Result<()> {
    let mut clips = 0;
    for rec in &manifest.records {
        let path = manifest.resolve(rec);
        let seq = landmarks::read_sequence(&path).map_err(|e| Error::InvalidSequence(format!("{}: {e}", rec.clip_id)))?;
        if seq.frame_count() != rec.frame_count {
            return Err(Error::InvalidSequence(format!(
                "{}: manifest says {} frames, file has {}",
                rec.clip_id,
                rec.frame_count,
                seq.frame_count()
            )));
        }
        if !seq.normalized {
            landmarks::normalize(&seq).map_err(|e| Error::InvalidSequence(format!("{}: {e}", rec.clip_id)))?;
        }
        let n = seq.frame_count() / clip_length;
        if n == 0 {
            warn!("{} has {} frames, fewer than one clip of {clip_length}", rec.clip_id, seq.frame_count());
        }
        clips += n;
    }
    let mut text = format!("records {}\nclips of {clip_length} frames {clips}\n", manifest.records.len());
    for split in Split::ALL {
        let identities = manifest.identities_in(split).count();
        let records = manifest.records_in(split).count();
        let genuine = manifest.records_in(split).filter(|r| r.is_genuine()).count();
        text.push_str(&format!(
            "{split}: identities {identities}, records {records} ({genuine} genuine, {} impostor)\n",
            records - genuine
        ));
    }
    emit(out, &text)
}
