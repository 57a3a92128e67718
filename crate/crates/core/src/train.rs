//! Triplet-loss training: random triplets keyed on driver identity, Adam,
//! and checkpoint selection by validation loss.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::checkpoint;
use crate::clips::{self, Clip};
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::kv;
use crate::model::{self, Dropout, GradientTape, Gradients, ModelParams, ModelShape};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub margin: f64,
    pub seed: u64,
    pub clip_length: usize,
    /// Threads for per-clip forward/backward passes. Results do not depend on it.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 1024,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            margin: 0.2,
            seed: 0,
            clip_length: 50,
            workers: 1,
        }
    }
}

pub const CONFIG_KEYS: [&str; 10] = [
    "epochs",
    "batch_size",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
    "margin",
    "seed",
    "clip_length",
    "workers",
];

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key}={value}: {e}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("clip_length", self.clip_length),
            ("workers", self.workers),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        let reals = [
            ("learning_rate", self.learning_rate),
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
            ("adam_epsilon", self.adam_epsilon),
            ("margin", self.margin),
        ];
        for (key, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        for (key, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if v >= 1.0 {
                return Err(Error::Config(format!("{key} must be below 1, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "epochs" => self.epochs = parse_field(key, value)?,
            "batch_size" => self.batch_size = parse_field(key, value)?,
            "learning_rate" => self.learning_rate = parse_field(key, value)?,
            "adam_beta1" => self.adam_beta1 = parse_field(key, value)?,
            "adam_beta2" => self.adam_beta2 = parse_field(key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse_field(key, value)?,
            "margin" => self.margin = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "clip_length" => self.clip_length = parse_field(key, value)?,
            "workers" => self.workers = parse_field(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other}"))),
        }
        Ok(())
    }

    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<TrainConfig> {
        let mut config = TrainConfig::default();
        for (k, v) in entries {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        let values = [
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.learning_rate.to_string(),
            self.adam_beta1.to_string(),
            self.adam_beta2.to_string(),
            self.adam_epsilon.to_string(),
            self.margin.to_string(),
            self.seed.to_string(),
            self.clip_length.to_string(),
            self.workers.to_string(),
        ];
        CONFIG_KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Draws `count` triplets from the clips of `split`, with replacement.
///
/// Anchors are drawn uniformly over all clips; an anchor whose driver has no
/// other clip is redrawn.
pub fn sample_triplets(
    manifest: &DatasetManifest,
    split: Split,
    count: usize,
    rng: &mut Stream,
) -> Result<Vec<Triplet>> {
    let clips: Vec<(&str, &str)> = manifest
        .records_in(split)
        .map(|r| (r.clip_id.as_str(), r.driver_id.as_str()))
        .collect();
    sample_from(&clips, count, rng)
}

/// Same as [`sample_triplets`] over explicit `(clip_id, driver_id)` pairs.
pub fn sample_from(clips: &[(&str, &str)], count: usize, rng: &mut Stream) -> Result<Vec<Triplet>> {
    let mut by_driver: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, driver)) in clips.iter().enumerate() {
        by_driver.entry(driver).or_default().push(i);
    }
    if by_driver.len() < 2 {
        return Err(Error::ImpossibleTriplets(format!(
            "{} driver identities; need at least 2",
            by_driver.len()
        )));
    }
    if by_driver.values().all(|v| v.len() < 2) {
        return Err(Error::ImpossibleTriplets("no driver has two clips".into()));
    }
    let n = clips.len();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let driver = clips[a].1;
        let same = &by_driver[driver];
        if same.len() < 2 {
            continue;
        }
        // uniform over same-driver clips other than the anchor
        let own = same.iter().position(|&i| i == a).expect("anchor is in its driver group");
        let mut k = rng.random_range(0..same.len() - 1);
        if k >= own {
            k += 1;
        }
        let p = same[k];
        let negatives = n - same.len();
        let j = rng.random_range(0..negatives);
        let neg = clips
            .iter()
            .enumerate()
            .filter(|(_, c)| c.1 != driver)
            .nth(j)
            .map(|(i, _)| i)
            .expect("index within other-driver clips");
        out.push(Triplet {
            anchor: clips[a].0.to_string(),
            positive: clips[p].0.to_string(),
            negative: clips[neg].0.to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletLoss {
    pub loss: f64,
    pub grad_anchor: Array1<f64>,
    pub grad_positive: Array1<f64>,
    pub grad_negative: Array1<f64>,
}

/// Gradient of `u = x/|x|` pulled back through the normalization.
fn unnormalize_grad(x: ArrayView1<f64>, norm: f64, grad_u: &Array1<f64>) -> Array1<f64> {
    let u = &x / norm;
    let along = u.dot(grad_u);
    (grad_u - &(&u * along)) / norm
}

/// Hinge triplet loss on squared distances between L2-normalized embeddings.
pub fn triplet_loss(
    anchor: ArrayView1<f64>,
    positive: ArrayView1<f64>,
    negative: ArrayView1<f64>,
    margin: f64,
) -> Result<TripletLoss> {
    let d = anchor.len();
    if positive.len() != d || negative.len() != d {
        return Err(Error::Shape("triplet embeddings differ in length".into()));
    }
    let mut norms = [0.0; 3];
    for (slot, x) in norms.iter_mut().zip([anchor, positive, negative]) {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("triplet embedding".into()));
        }
        *slot = x.dot(&x).sqrt();
        if *slot == 0.0 {
            return Err(Error::ZeroNorm);
        }
    }
    let ua = &anchor / norms[0];
    let up = &positive / norms[1];
    let un = &negative / norms[2];
    let ap = &ua - &up;
    let an = &ua - &un;
    let raw = ap.dot(&ap) - an.dot(&an) + margin;
    if raw <= 0.0 {
        return Ok(TripletLoss {
            loss: 0.0,
            grad_anchor: Array1::zeros(d),
            grad_positive: Array1::zeros(d),
            grad_negative: Array1::zeros(d),
        });
    }
    let g_ua = (&un - &up) * 2.0;
    let g_up = &ap * -2.0;
    let g_un = &an * 2.0;
    Ok(TripletLoss {
        loss: raw,
        grad_anchor: unnormalize_grad(anchor, norms[0], &g_ua),
        grad_positive: unnormalize_grad(positive, norms[1], &g_up),
        grad_negative: unnormalize_grad(negative, norms[2], &g_un),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn for_sizes(sizes: impl IntoIterator<Item = usize>) -> AdamState {
        let sizes: Vec<usize> = sizes.into_iter().collect();
        AdamState {
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn new(params: &ModelParams) -> AdamState {
        AdamState::for_sizes(params.tensors().iter().map(|t| t.2.len()))
    }
}

/// One Adam update over matching lists of value and gradient buffers.
pub fn adam_update(values: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, config: &AdamConfig) -> Result<()> {
    if values.len() != grads.len() || values.len() != state.first.len() {
        return Err(Error::Shape("Adam: tensor counts differ".into()));
    }
    for ((v, g), m) in values.iter().zip(grads).zip(&state.first) {
        if v.len() != g.len() || v.len() != m.len() {
            return Err(Error::Shape("Adam: tensor sizes differ".into()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    for (k, (v, g)) in values.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first[k];
        let s = &mut state.second[k];
        for i in 0..v.len() {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            s[i] = config.beta2 * s[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let s_hat = s[i] / c2;
            v[i] -= config.learning_rate * m_hat / (s_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, config: &AdamConfig) -> Result<()> {
    let g = grads.values();
    let mut v = params.values_mut();
    adam_update(&mut v, &g, state, config)
}

/// Best checkpoint of a run, with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub epoch: usize,
    pub val_loss: f64,
    pub params: ModelParams,
    pub config: TrainConfig,
}

/// Modelling choices recorded next to every checkpoint.
pub const DESIGN_CHOICES: [(&str, &str); 6] = [
    ("adjacency", "symmetric D^-1/2 (A+I) D^-1/2"),
    ("gcn_bias", "true"),
    ("dropout_placement", "after ReLU on every layer, inverted scaling"),
    ("frame_pooling", "mean over nodes"),
    ("triplet_distance", "squared euclidean on L2-normalized embeddings"),
    ("epoch_definition", "triplets per epoch = number of train clips, sampled with replacement"),
];

impl CheckpointRecord {
    pub fn meta_entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("epoch".to_string(), self.epoch.to_string()),
            ("val_loss".to_string(), self.val_loss.to_string()),
        ];
        out.extend(self.config.to_entries().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
        out.extend(DESIGN_CHOICES.iter().map(|(k, v)| (format!("design.{k}"), v.to_string())));
        out
    }

    /// Writes `path` and its `.meta` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_params(&self.params, path)?;
        let entries = self.meta_entries();
        kv::write(&meta_path(path), entries.iter().map(|(k, v)| (k.as_str(), v.clone())))
    }

    pub fn load(path: &Path) -> Result<CheckpointRecord> {
        let params = checkpoint::read_params(path)?;
        let meta = kv::read(&meta_path(path))?;
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| Error::parse(meta_path(path).display().to_string(), format!("missing key {k}")))
        };
        let epoch = parse_field("epoch", get("epoch")?)?;
        let val_loss = parse_field("val_loss", get("val_loss")?)?;
        let config_entries = meta
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| (k.to_string(), v.clone())))
            .collect();
        Ok(CheckpointRecord {
            epoch,
            val_loss,
            params,
            config: TrainConfig::from_entries(&config_entries)?,
        })
    }
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

impl EpochLog {
    pub fn line(&self) -> String {
        format!("{}\t{}\t{}\t{:.3}", self.epoch, self.train_loss, self.val_loss, self.seconds)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: CheckpointRecord,
    pub final_params: ModelParams,
    pub log: Vec<EpochLog>,
}

/// Largest number of clips per batch whose tapes are kept between the
/// forward and backward passes.
pub const MAX_KEPT_TAPES: usize = 64;

/// Dropout stream for one clip in one epoch.
pub fn dropout_stream(seed: u64, clip_id: &str, epoch: usize) -> Stream {
    rng::stream(seed, &["dropout".into(), clip_id.into(), epoch.into()])
}

fn embed_all(clips: &[&Clip], params: &ModelParams, train_epoch: Option<(u64, usize)>) -> Result<Vec<Array1<f64>>> {
    crate::par::map(clips, |clip| {
        let out = match train_epoch {
            Some((seed, epoch)) => {
                let mut s = dropout_stream(seed, clip.id(), epoch);
                model::encode_clip(&clip.graphs, params, Dropout::Sample(&mut s))?
            }
            None => model::encode_clip(&clip.graphs, params, Dropout::Off)?,
        };
        Ok(out.embedding)
    })
    .into_iter()
    .collect()
}

/// Mean triplet loss with dropout disabled.
pub fn evaluate_loss(clips: &[Clip], triplets: &[Triplet], params: &ModelParams, margin: f64) -> Result<f64> {
    let index = clips::index_by_id(clips);
    let used: BTreeSet<usize> = triplets
        .iter()
        .flat_map(|t| [&t.anchor, &t.positive, &t.negative])
        .map(|id| lookup(&index, id))
        .collect::<Result<_>>()?;
    let used: Vec<usize> = used.into_iter().collect();
    let refs: Vec<&Clip> = used.iter().map(|&i| &clips[i]).collect();
    let embeddings = embed_all(&refs, params, None)?;
    let slot: HashMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut total = 0.0;
    for t in triplets {
        let e = |id: &str| embeddings[slot[&index[id]]].view();
        total += triplet_loss(e(&t.anchor), e(&t.positive), e(&t.negative), margin)?.loss;
    }
    Ok(total / triplets.len() as f64)
}

fn lookup(index: &HashMap<&str, usize>, id: &str) -> Result<usize> {
    index.get(id).copied().ok_or_else(|| Error::UnknownClip(id.to_string()))
}

fn pairs(clips: &[Clip]) -> Vec<(&str, &str)> {
    clips.iter().map(|c| (c.id(), c.record.driver_id.as_str())).collect()
}

/// Trains from `initial` on already loaded clips.
///
/// `on_epoch` sees every log entry and, when the validation loss improved,
/// the new best record.
pub fn train_clips(
    train: &[Clip],
    val: &[Clip],
    config: &TrainConfig,
    initial: ModelParams,
    mut on_epoch: impl FnMut(&EpochLog, Option<&CheckpointRecord>) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    initial.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if val.is_empty() {
        return Err(Error::EmptySplit("val".into()));
    }
    let adam = config.adam();
    let mut params = initial;
    let mut state = AdamState::new(&params);
    let train_pairs = pairs(train);
    let index = clips::index_by_id(train);
    let val_triplets = sample_from(&pairs(val), val.len(), &mut rng::stream(config.seed, &["val".into()]))?;
    let mut triplet_rng = rng::stream(config.seed, &["triplets".into()]);

    let mut best: Option<CheckpointRecord> = None;
    let mut log = Vec::new();
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut remaining = train.len();
        let mut batch_no = 0;
        let mut loss_sum = 0.0;
        while remaining > 0 {
            let size = remaining.min(config.batch_size);
            remaining -= size;
            let batch = sample_from(&train_pairs, size, &mut triplet_rng)?;
            let batch_loss = train_batch(train, &index, &batch, &mut params, &mut state, config, &adam, epoch, batch_no)?;
            loss_sum += batch_loss * size as f64;
            batch_no += 1;
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = evaluate_loss(val, &val_triplets, &params, config.margin)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        let entry = EpochLog {
            epoch,
            train_loss,
            val_loss,
            seconds: started.elapsed().as_secs_f64(),
        };
        info!("{}", entry.line());
        let improved = best.as_ref().is_none_or(|b| val_loss < b.val_loss);
        if improved {
            best = Some(CheckpointRecord {
                epoch,
                val_loss,
                params: params.clone(),
                config: config.clone(),
            });
        }
        on_epoch(&entry, if improved { best.as_ref() } else { None })?;
        log.push(entry);
    }
    Ok(TrainOutcome {
        best: best.expect("at least one epoch"),
        final_params: params,
        log,
    })
}

fn training_tape<'g>(clip: &'g Clip, params: &ModelParams, seed: u64, epoch: usize) -> Result<GradientTape<'g>> {
    let mut s = dropout_stream(seed, clip.id(), epoch);
    model::forward_with_tape(&clip.graphs, params, Dropout::Sample(&mut s))
}

#[allow(clippy::too_many_arguments)]
fn train_batch<'c>(
    clips: &'c [Clip],
    index: &HashMap<&str, usize>,
    batch: &[Triplet],
    params: &mut ModelParams,
    state: &mut AdamState,
    config: &TrainConfig,
    adam: &AdamConfig,
    epoch: usize,
    batch_no: usize,
) -> Result<f64> {
    let used: BTreeSet<usize> = batch
        .iter()
        .flat_map(|t| [&t.anchor, &t.positive, &t.negative])
        .map(|id| lookup(index, id))
        .collect::<Result<_>>()?;
    let used: Vec<usize> = used.into_iter().collect();
    let slot: HashMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let refs: Vec<&Clip> = used.iter().map(|&i| &clips[i]).collect();
    let frozen: &ModelParams = params;
    let training_forward = |clip: &&'c Clip| training_tape(clip, frozen, config.seed, epoch);
    // Tapes are large, so big batches run the forward pass twice instead of keeping them.
    let tapes = if refs.len() <= MAX_KEPT_TAPES {
        Some(crate::par::map(&refs, training_forward).into_iter().collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let embeddings = match &tapes {
        Some(t) => t.iter().map(|t| t.output.embedding.clone()).collect(),
        None => embed_all(&refs, frozen, Some((config.seed, epoch)))?,
    };

    let dim = params.embedding_dim();
    let mut upstream = vec![Array1::<f64>::zeros(dim); used.len()];
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for t in batch {
        let [a, p, n] = [&t.anchor, &t.positive, &t.negative].map(|id| slot[&index[id.as_str()]]);
        let non_finite = || Error::NonFiniteLoss {
            epoch,
            batch: batch_no,
            anchor: t.anchor.clone(),
            positive: t.positive.clone(),
            negative: t.negative.clone(),
        };
        let out = triplet_loss(embeddings[a].view(), embeddings[p].view(), embeddings[n].view(), config.margin)
            .map_err(|e| match e {
                Error::NonFinite(_) => non_finite(),
                other => other,
            })?;
        if !out.loss.is_finite() {
            return Err(non_finite());
        }
        total += out.loss;
        upstream[a].scaled_add(scale, &out.grad_anchor);
        upstream[p].scaled_add(scale, &out.grad_positive);
        upstream[n].scaled_add(scale, &out.grad_negative);
    }

    let work: Vec<usize> = (0..used.len()).filter(|&k| upstream[k].iter().any(|&g| g != 0.0)).collect();
    let per_clip = crate::par::map(&work, |&k| match &tapes {
        Some(t) => model::backward(upstream[k].view(), &t[k], frozen),
        None => model::backward(upstream[k].view(), &training_forward(&refs[k])?, frozen),
    });
    let mut grads = Gradients::zeros_like(frozen);
    for g in per_clip {
        grads.add_assign(&g?);
    }
    drop(tapes);
    adam_step(params, &grads, state, adam)?;
    Ok(total * scale)
}

/// Loads the train and val clips of `manifest` and trains the default model.
///
/// With `output_dir`, the best checkpoint goes to `checkpoint.gvck` (plus
/// `.meta`) and the epoch log to `train.log` as they are produced.
pub fn train(manifest: &DatasetManifest, config: &TrainConfig, output_dir: Option<&Path>) -> Result<TrainOutcome> {
    train_with_shape(manifest, config, &ModelShape::default(), output_dir)
}

pub fn train_with_shape(
    manifest: &DatasetManifest,
    config: &TrainConfig,
    shape: &ModelShape,
    output_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    crate::par::with_workers(config.workers, || {
        let train_clips_ = clips::load_clips(manifest, &[Split::Train], config.clip_length)?;
        let val_clips = clips::load_clips(manifest, &[Split::Val], config.clip_length)?;
        let initial = model::init_params_with(shape, config.seed);
        let mut log_text = String::new();
        if let Some(dir) = output_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        train_clips(&train_clips_, &val_clips, config, initial, |entry, improved| {
            let Some(dir) = output_dir else { return Ok(()) };
            writeln!(log_text, "{}", entry.line()).expect("write to string");
            let log_path = dir.join("train.log");
            std::fs::write(&log_path, &log_text).map_err(|e| Error::io(&log_path, e))?;
            if let Some(best) = improved {
                best.save(&dir.join("checkpoint.gvck"))?;
            }
            Ok(())
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn paper_defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (200, 1024, 1e-4));
        assert_eq!((c.adam_beta1, c.adam_beta2, c.adam_epsilon, c.margin), (0.9, 0.999, 1e-8, 0.2));
        assert_eq!(c.clip_length, 50);
        c.validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_entries() {
        let c = TrainConfig {
            epochs: 7,
            learning_rate: 3e-3,
            seed: 99,
            ..TrainConfig::default()
        };
        let map: BTreeMap<String, String> = c.to_entries().into_iter().collect();
        assert_eq!(TrainConfig::from_entries(&map).unwrap(), c);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = TrainConfig::default();
        assert!(c.set("margin", "0").is_ok());
        assert!(c.validate().is_err());
        assert!(TrainConfig::default().set("nope", "1").is_err());
        assert!(TrainConfig::default().set("epochs", "-1").is_err());
    }

    #[test]
    fn orthogonal_negative_gives_zero_loss() {
        let a = array![1.0, 0.0, 0.0];
        let n = array![0.0, 2.0, 0.0];
        let out = triplet_loss(a.view(), a.view(), n.view(), 0.2).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grad_anchor.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn equal_positive_and_negative_gives_margin() {
        let a = array![1.0, 0.5, -0.2];
        let p = array![0.3, 1.0, 0.0];
        let out = triplet_loss(a.view(), p.view(), p.view(), 0.2).unwrap();
        assert!((out.loss - 0.2).abs() < 1e-15);
        assert!(out.grad_positive.iter().any(|&g| g != 0.0));
        assert!(out.grad_negative.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn zero_norm_is_an_error() {
        let a = array![0.0, 0.0];
        let p = array![1.0, 0.0];
        assert!(matches!(triplet_loss(a.view(), p.view(), p.view(), 0.2), Err(Error::ZeroNorm)));
    }

    #[test]
    fn first_adam_step_has_unit_magnitude() {
        let cfg = AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        };
        for g in [3.0, -0.25] {
            let mut x = [1.0];
            let mut state = AdamState::for_sizes([1]);
            adam_update(&mut [&mut x[..]], &[&[g][..]], &mut state, &cfg).unwrap();
            let expected = 1.0 - cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((x[0] - expected).abs() < 1e-15, "{} vs {expected}", x[0]);
        }
    }

    #[test]
    fn zero_gradient_leaves_values_and_decays_moments() {
        let cfg = TrainConfig::default().adam();
        let mut x = [2.0, -1.0];
        let mut state = AdamState::for_sizes([2]);
        state.first[0] = vec![0.5, 0.5];
        state.second[0] = vec![0.25, 0.25];
        let before = x;
        // with nonzero moments the update is not zero, so check the pure fixed point
        let mut fresh = AdamState::for_sizes([2]);
        adam_update(&mut [&mut x[..]], &[&[0.0, 0.0][..]], &mut fresh, &cfg).unwrap();
        assert_eq!(x, before);
        let mut y = [0.0, 0.0];
        adam_update(&mut [&mut y[..]], &[&[0.0, 0.0][..]], &mut state, &cfg).unwrap();
        assert!((state.first[0][0] - 0.45).abs() < 1e-15);
        assert!((state.second[0][0] - 0.24975).abs() < 1e-15);
    }

    #[test]
    fn adam_rejects_mismatched_shapes() {
        let cfg = TrainConfig::default().adam();
        let mut x = [0.0; 3];
        let mut state = AdamState::for_sizes([3]);
        assert!(adam_update(&mut [&mut x[..]], &[&[0.0, 0.0][..]], &mut state, &cfg).is_err());
    }

    #[test]
    fn single_clip_driver_is_never_an_anchor() {
        let clips = [("a1", "A"), ("a2", "A"), ("b1", "B")];
        let mut rng = rng::stream(3, &[]);
        let ts = sample_from(&clips, 200, &mut rng).unwrap();
        assert!(ts.iter().all(|t| t.anchor != "b1" && t.positive != "b1"));
        assert!(ts.iter().all(|t| t.negative == "b1"));
    }

    #[test]
    fn single_driver_is_impossible() {
        let clips = [("a1", "A"), ("a2", "A")];
        let mut rng = rng::stream(3, &[]);
        assert!(matches!(sample_from(&clips, 1, &mut rng), Err(Error::ImpossibleTriplets(_))));
    }
}
