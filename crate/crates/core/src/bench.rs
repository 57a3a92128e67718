//! End-to-end synthetic benchmark: generate, train, evaluate.

use std::path::Path;

use log::info;

use crate::clips::{self, Clip};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::kv;
use crate::model::{self, ModelShape};
use crate::synth::{self, SynthSpec, SyntheticDataset};
use crate::train::{self, TrainConfig};
use crate::verify::{self, AttentionTrace, VerificationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub data: SynthSpec,
    pub train: TrainConfig,
    pub shape: ModelShape,
    /// Seeds of the randomly initialized models scored as a baseline.
    pub untrained_seeds: Vec<u64>,
}

impl BenchConfig {
    /// 12 identities, 6 genuine and 4 impostor clips each, one 50-frame clip
    /// per file. The 72 training clips give 36 optimizer steps per epoch.
    pub fn standard(seed: u64) -> BenchConfig {
        BenchConfig {
            data: SynthSpec::new(12, 6, 4, 50, seed),
            train: TrainConfig {
                epochs: 20,
                batch_size: 2,
                learning_rate: 2e-3,
                seed,
                ..TrainConfig::default()
            },
            shape: ModelShape::default(),
            untrained_seeds: (0..5).map(|k| seed.wrapping_add(1000 + k)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub trained: VerificationReport,
    pub untrained_auc: Vec<(u64, f64)>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub attention: Vec<AttentionTrace>,
    /// Test clips with exactly one burst whose `t_max` falls inside it.
    pub burst_hits: usize,
    pub burst_clips: usize,
}

impl BenchReport {
    pub fn auc_line(&self) -> String {
        format!("test AUC {:.6}", self.trained.auc)
    }

    pub fn summary_entries(&self) -> Vec<(&'static str, String)> {
        let untrained = self
            .untrained_auc
            .iter()
            .map(|(s, a)| format!("{s}:{a:.6}"))
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("test_auc", format!("{:.6}", self.trained.auc)),
            ("genuine_pairs", self.trained.genuine_count.to_string()),
            ("impostor_pairs", self.trained.impostor_count.to_string()),
            ("best_epoch", self.best_epoch.to_string()),
            ("best_val_loss", self.best_val_loss.to_string()),
            ("untrained_auc", untrained),
            ("burst_hits", format!("{}/{}", self.burst_hits, self.burst_clips)),
        ]
    }
}

/// Fraction bookkeeping for attention peaks on clips with a single burst.
pub fn burst_hits(data: &SyntheticDataset, traces: &[AttentionTrace]) -> (usize, usize) {
    let mut hits = 0;
    let mut total = 0;
    for tr in traces {
        let Some(windows) = data.burst_windows(&tr.clip_id) else { continue };
        if windows.len() != 1 {
            continue;
        }
        total += 1;
        if windows[0].contains(&tr.t_max) {
            hits += 1;
        }
    }
    (hits, total)
}

/// Runs the benchmark in `dir`: data under `data/`, then `manifest.tsv`,
/// `checkpoint.gvck`, `train.log`, `report.txt`, `roc.tsv`, `attention.tsv`
/// and `bench.txt`.
pub fn run_bench(config: &BenchConfig, dir: &Path) -> Result<BenchReport> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::par::with_workers(config.train.workers, || {
        let data = synth::build_synthetic_manifest(&config.data, dir)?;
        info!("generated {} clips in {}", data.manifest.records.len(), dir.display());
        let outcome = train::train_with_shape(&data.manifest, &config.train, &config.shape, Some(dir))?;
        let best = &outcome.best;

        let test: Vec<Clip> = clips::load_clips(&data.manifest, &[Split::Test], config.train.clip_length)?;
        let trained = verify::score_clips(&test, &data.manifest, Split::Test, &best.params)?;
        let mut untrained_auc = Vec::new();
        for &seed in &config.untrained_seeds {
            let params = model::init_params_with(&config.shape, seed);
            untrained_auc.push((seed, verify::score_clips(&test, &data.manifest, Split::Test, &params)?.auc));
        }
        let attention = test
            .iter()
            .map(|c| verify::attention_for_clip(c, &best.params))
            .collect::<Result<Vec<_>>>()?;
        let (hits, total) = burst_hits(&data, &attention);

        let report = BenchReport {
            trained,
            untrained_auc,
            best_epoch: best.epoch,
            best_val_loss: best.val_loss,
            attention,
            burst_hits: hits,
            burst_clips: total,
        };
        verify::write_text(&dir.join("report.txt"), &report.trained.to_text())?;
        verify::write_text(&dir.join("roc.tsv"), &report.trained.roc_text())?;
        verify::write_text(&dir.join("attention.tsv"), &verify::attention_text(&report.attention))?;
        kv::write(&dir.join("bench.txt"), report.summary_entries())?;
        Ok(report)
    })
}
