//! Scoring comparison pairs, ROC/AUC, and attention export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::ArrayView1;

pub use crate::clips::slice_clips;
use crate::clips::{self, Clip};
use crate::dataset::{build_comparisons, ComparisonPair, DatasetManifest, PairLabel, Split};
use crate::error::{Error, Result};
use crate::model::{self, ClipEmbedding, Dropout, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair: ComparisonPair,
    pub score: f64,
}

/// Cosine similarity of two embedding vectors.
pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape("embeddings differ in length".into()));
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn score_pair(reference: &ClipEmbedding, probe: &ClipEmbedding) -> Result<f64> {
    cosine(reference.embedding.view(), probe.embedding.view())
}

fn check_scores(genuine: &[f64], impostor: &[f64]) -> Result<()> {
    if genuine.is_empty() {
        return Err(Error::Empty("no genuine scores"));
    }
    if impostor.is_empty() {
        return Err(Error::Empty("no impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("verification score".into()));
    }
    Ok(())
}

/// Probability that a genuine score exceeds an impostor score, ties counted half.
pub fn compute_auc(genuine: &[f64], impostor: &[f64]) -> Result<f64> {
    check_scores(genuine, impostor)?;
    let mut sorted = impostor.to_vec();
    sorted.sort_by(f64::total_cmp);
    // twice the Mann-Whitney U, kept integral so the result is exact
    let mut twice_u: u128 = 0;
    for &g in genuine {
        let below = sorted.partition_point(|&i| i < g);
        let not_above = sorted.partition_point(|&i| i <= g);
        twice_u += 2 * below as u128 + (not_above - below) as u128;
    }
    Ok(twice_u as f64 / (2.0 * genuine.len() as f64 * impostor.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Pairs with `score >= threshold` are accepted.
    pub threshold: f64,
    pub false_match_rate: f64,
    pub true_match_rate: f64,
}

/// ROC swept at `+∞`, every distinct score in decreasing order, and `−∞`.
pub fn roc_points(genuine: &[f64], impostor: &[f64]) -> Result<Vec<RocPoint>> {
    check_scores(genuine, impostor)?;
    let mut all: Vec<(f64, PairLabel)> = genuine
        .iter()
        .map(|&s| (s, PairLabel::Genuine))
        .chain(impostor.iter().map(|&s| (s, PairLabel::Impostor)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        false_match_rate: 0.0,
        true_match_rate: 0.0,
    }];
    let (mut tg, mut ti) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let threshold = all[i].0;
        while i < all.len() && all[i].0 == threshold {
            match all[i].1 {
                PairLabel::Genuine => tg += 1,
                PairLabel::Impostor => ti += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            false_match_rate: ti as f64 / ni,
            true_match_rate: tg as f64 / ng,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        false_match_rate: 1.0,
        true_match_rate: 1.0,
    });
    Ok(points)
}

/// Trapezoidal area under an ROC given in sweep order.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].false_match_rate - w[0].false_match_rate) * (w[0].true_match_rate + w[1].true_match_rate) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub pairs: Vec<ScoredPair>,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub genuine_count: usize,
    pub impostor_count: usize,
    pub skipped_identities: Vec<String>,
}

impl VerificationReport {
    pub fn from_pairs(pairs: Vec<ScoredPair>, skipped_identities: Vec<String>) -> Result<VerificationReport> {
        let scores = |label| -> Vec<f64> { pairs.iter().filter(|p| p.pair.label == label).map(|p| p.score).collect() };
        let genuine = scores(PairLabel::Genuine);
        let impostor = scores(PairLabel::Impostor);
        Ok(VerificationReport {
            roc: roc_points(&genuine, &impostor)?,
            auc: compute_auc(&genuine, &impostor)?,
            genuine_count: genuine.len(),
            impostor_count: impostor.len(),
            pairs,
            skipped_identities,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# genuine_count\t{}", self.genuine_count).unwrap();
        writeln!(out, "# impostor_count\t{}", self.impostor_count).unwrap();
        writeln!(out, "# auc\t{:.6}", self.auc).unwrap();
        if !self.skipped_identities.is_empty() {
            writeln!(out, "# skipped_identities\t{}", self.skipped_identities.join(",")).unwrap();
        }
        for p in &self.pairs {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                p.pair.label.as_str(),
                p.pair.reference_clip,
                p.pair.probe_clip,
                p.score
            )
            .unwrap();
        }
        out
    }

    pub fn roc_text(&self) -> String {
        roc_text(&self.roc)
    }
}

pub fn roc_text(points: &[RocPoint]) -> String {
    let mut out = String::from("fmr\ttmr\n");
    for p in points {
        writeln!(out, "{}\t{}", p.false_match_rate, p.true_match_rate).unwrap();
    }
    out
}

/// Reads the scored rows of a report file back.
pub fn parse_report_scores(text: &str) -> Result<Vec<(PairLabel, f64)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |m: String| Error::parse(format!("report line {}", n + 1), m);
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let label = fields[0].parse::<PairLabel>().map_err(bad)?;
        let score = fields[3].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        out.push((label, score));
    }
    Ok(out)
}

/// Evaluation-mode embeddings, one per clip, in input order.
pub fn embed_clips(clips: &[Clip], params: &ModelParams) -> Result<Vec<ClipEmbedding>> {
    crate::par::map(clips, |c| model::encode_clip(&c.graphs, params, Dropout::Off))
        .into_iter()
        .collect()
}

/// Scores every comparison of `split` among already loaded clips.
pub fn score_clips(clips: &[Clip], manifest: &DatasetManifest, split: Split, params: &ModelParams) -> Result<VerificationReport> {
    let clip_manifest = clips::clip_manifest(manifest, clips)?;
    let comparisons = build_comparisons(&clip_manifest, split)?;
    let embeddings = embed_clips(clips, params)?;
    let index = clips::index_by_id(clips);
    let get = |id: &str| index.get(id).map(|&i| &embeddings[i]).ok_or_else(|| Error::UnknownClip(id.to_string()));
    let pairs = comparisons
        .pairs
        .into_iter()
        .map(|pair| {
            let score = score_pair(get(&pair.reference_clip)?, get(&pair.probe_clip)?)?;
            Ok(ScoredPair { pair, score })
        })
        .collect::<Result<Vec<_>>>()?;
    VerificationReport::from_pairs(pairs, comparisons.skipped_identities)
}

/// Loads `split`, embeds every clip once and scores all comparisons.
pub fn run_protocol(
    manifest: &DatasetManifest,
    split: Split,
    params: &ModelParams,
    clip_length: usize,
) -> Result<VerificationReport> {
    let mut loaded = Vec::new();
    for record in manifest.records_in(split) {
        let clips = clips::load_record(manifest, record, clip_length)?;
        if clips.is_empty() {
            return Err(Error::InvalidSequence(format!(
                "clip {} has {} frames, fewer than {clip_length}",
                record.clip_id, record.frame_count
            )));
        }
        loaded.push(clips);
    }
    let clips: Vec<Clip> = loaded.into_iter().flatten().collect();
    score_clips(&clips, manifest, split, params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    pub clip_id: String,
    pub alpha: Vec<f64>,
    pub t_max: usize,
}

impl AttentionTrace {
    pub fn from_embedding(clip_id: &str, out: &ClipEmbedding) -> AttentionTrace {
        AttentionTrace {
            clip_id: clip_id.to_string(),
            alpha: out.attention.to_vec(),
            t_max: out.t_max,
        }
    }
}

pub fn attention_for_clip(clip: &Clip, params: &ModelParams) -> Result<AttentionTrace> {
    let out = model::encode_clip(&clip.graphs, params, Dropout::Off)?;
    Ok(AttentionTrace::from_embedding(clip.id(), &out))
}

/// Attention traces for the requested clips.
///
/// An id may name a manifest record (all of its clips) or one sliced clip
/// (`record#k`).
pub fn export_attention(
    manifest: &DatasetManifest,
    clip_ids: &[String],
    params: &ModelParams,
    clip_length: usize,
) -> Result<Vec<AttentionTrace>> {
    let mut cache: HashMap<&str, Vec<Clip>> = HashMap::new();
    let mut traces = Vec::new();
    for id in clip_ids {
        let (record_id, piece) = match manifest.record(id) {
            Some(_) => (id.as_str(), None),
            None => match id.rsplit_once('#') {
                Some((base, k)) if manifest.record(base).is_some() => (base, Some(k)),
                _ => return Err(Error::UnknownClip(id.clone())),
            },
        };
        if !cache.contains_key(record_id) {
            let record = manifest.record(record_id).expect("checked above");
            cache.insert(record_id, clips::load_record(manifest, record, clip_length)?);
        }
        let selected: Vec<&Clip> = cache[record_id]
            .iter()
            .filter(|c| piece.is_none() || c.id() == id)
            .collect();
        if selected.is_empty() {
            return Err(Error::UnknownClip(id.clone()));
        }
        for clip in selected {
            traces.push(attention_for_clip(clip, params)?);
        }
    }
    Ok(traces)
}

pub fn attention_text(traces: &[AttentionTrace]) -> String {
    let mut out = String::new();
    for tr in traces {
        for (t, a) in tr.alpha.iter().enumerate() {
            writeln!(out, "{}\t{t}\t{a}", tr.clip_id).unwrap();
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cosine_reference_values() {
        let e = array![0.3, -1.0, 2.0];
        assert!((cosine(e.view(), e.view()).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine(e.view(), (-&e).view()).unwrap() + 1.0).abs() < 1e-15);
        let o = array![1.0, 0.0];
        let p = array![0.0, 5.0];
        assert_eq!(cosine(o.view(), p.view()).unwrap(), 0.0);
        assert!(matches!(cosine(o.view(), array![0.0, 0.0].view()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn auc_reference_values() {
        assert_eq!(compute_auc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(compute_auc(&[0.7, 0.3], &[0.5]).unwrap(), 0.5);
        assert_eq!(compute_auc(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap(), 0.5);
        assert!(compute_auc(&[], &[0.1]).is_err());
    }

    #[test]
    fn roc_has_infinite_endpoints_and_is_monotone() {
        let roc = roc_points(&[0.9, 0.5, 0.5], &[0.5, 0.1]).unwrap();
        assert_eq!(roc.first().unwrap().threshold, f64::INFINITY);
        assert_eq!(roc.last().unwrap().threshold, f64::NEG_INFINITY);
        // +inf, 0.9, 0.5, 0.1, -inf
        assert_eq!(roc.len(), 5);
        assert_eq!((roc[2].false_match_rate, roc[2].true_match_rate), (0.5, 1.0));
        for w in roc.windows(2) {
            assert!(w[1].false_match_rate >= w[0].false_match_rate);
            assert!(w[1].true_match_rate >= w[0].true_match_rate);
        }
    }

    #[test]
    fn report_rows_parse_back() {
        let pair = |label, s| ScoredPair {
            pair: ComparisonPair {
                reference_clip: "r".into(),
                probe_clip: "p".into(),
                label,
                target_id: "x".into(),
            },
            score: s,
        };
        let report =
            VerificationReport::from_pairs(vec![pair(PairLabel::Genuine, 0.75), pair(PairLabel::Impostor, -0.125)], vec![])
                .unwrap();
        let text = report.to_text();
        assert!(text.starts_with("# genuine_count\t1\n# impostor_count\t1\n# auc\t1.000000\n"));
        let rows = parse_report_scores(&text).unwrap();
        assert_eq!(rows, vec![(PairLabel::Genuine, 0.75), (PairLabel::Impostor, -0.125)]);
    }
}
