//! Identities, clips and the genuine/impostor comparison universe.
//!
//! A clip is *genuine* when its driver (the person whose motion animates it)
//! is also its target (the person whose appearance it carries). Comparisons
//! always pair a genuine reference clip of identity `i` with another clip
//! wearing the appearance of `i`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub driver_id: String,
    pub target_id: String,
    pub split: Split,
    pub source_path: PathBuf,
    pub frame_count: usize,
}

impl ClipRecord {
    pub fn is_genuine(&self) -> bool {
        self.driver_id == self.target_id
    }
}

/// A validated set of clip records.
///
/// Identity splits are induced from the records; every identity that appears
/// as a driver or target of a record carries that record's split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ClipRecord>,
    pub identities: BTreeMap<String, Split>,
    /// Directory relative landmark paths are resolved against.
    pub root: PathBuf,
}

impl DatasetManifest {
    /// Builds a manifest from records, inducing the identity → split map.
    pub fn from_records(records: Vec<ClipRecord>, root: impl Into<PathBuf>) -> Result<Self> {
        let mut identities: BTreeMap<String, Split> = BTreeMap::new();
        for rec in &records {
            for id in [&rec.driver_id, &rec.target_id] {
                match identities.get(id) {
                    Some(&s) if s != rec.split => {
                        return Err(Error::SplitViolation {
                            identity: id.clone(),
                            first: s.to_string(),
                            second: rec.split.to_string(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        identities.insert(id.clone(), rec.split);
                    }
                }
            }
        }
        Self::new(records, identities, root)
    }

    /// Builds a manifest from records and an explicit identity map.
    pub fn new(
        records: Vec<ClipRecord>,
        identities: BTreeMap<String, Split>,
        root: impl Into<PathBuf>,
    ) -> Result<Self> {
        let manifest = DatasetManifest {
            records,
            identities,
            root: root.into(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for rec in &self.records {
            if !seen.insert(rec.clip_id.as_str()) {
                return Err(Error::DuplicateClip(rec.clip_id.clone()));
            }
            for id in [&rec.driver_id, &rec.target_id] {
                match self.identities.get(id) {
                    None => {
                        return Err(Error::DanglingIdentity {
                            clip_id: rec.clip_id.clone(),
                            identity: id.clone(),
                        })
                    }
                    Some(&s) if s != rec.split => {
                        return Err(Error::SplitViolation {
                            identity: id.clone(),
                            first: s.to_string(),
                            second: rec.split.to_string(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &ClipRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn identities_in(&self, split: Split) -> impl Iterator<Item = &str> {
        self.identities
            .iter()
            .filter(move |(_, &s)| s == split)
            .map(|(id, _)| id.as_str())
    }

    pub fn record(&self, clip_id: &str) -> Option<&ClipRecord> {
        self.records.iter().find(|r| r.clip_id == clip_id)
    }

    pub fn resolve(&self, rec: &ClipRecord) -> PathBuf {
        if rec.source_path.is_absolute() {
            rec.source_path.clone()
        } else {
            self.root.join(&rec.source_path)
        }
    }

    /// Renders the manifest in its on-disk text form.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# clip_id\tdriver_id\ttarget_id\tsplit\tpath\tframe_count\n");
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.clip_id,
                r.driver_id,
                r.target_id,
                r.split,
                r.source_path.display(),
                r.frame_count
            ));
        }
        out
    }
}

/// Parses manifest text. `origin` names the source in error messages.
pub fn parse_manifest(text: &str, origin: &str, root: impl Into<PathBuf>) -> Result<DatasetManifest> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let loc = || format!("{origin}:{}", lineno + 1);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                loc(),
                format!("expected 6 tab-separated fields, found {}", fields.len()),
            ));
        }
        for (name, value) in ["clip_id", "driver_id", "target_id", "split", "path"]
            .iter()
            .zip(&fields)
        {
            if value.trim().is_empty() {
                return Err(Error::parse(loc(), format!("empty {name}")));
            }
        }
        let split = fields[3].parse::<Split>().map_err(|m| Error::parse(loc(), m))?;
        let frame_count = fields[5]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::parse(loc(), format!("frame_count: {e}")))?;
        records.push(ClipRecord {
            clip_id: fields[0].to_string(),
            driver_id: fields[1].to_string(),
            target_id: fields[2].to_string(),
            split,
            source_path: PathBuf::from(fields[4]),
            frame_count,
        });
    }
    DatasetManifest::from_records(records, root)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &path.display().to_string(), root)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    std::fs::write(path, manifest.to_text()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Genuine,
    Impostor,
}

impl PairLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Genuine => "genuine",
            PairLabel::Impostor => "impostor",
        }
    }
}

impl FromStr for PairLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "genuine" => Ok(PairLabel::Genuine),
            "impostor" => Ok(PairLabel::Impostor),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonPair {
    pub reference_clip: String,
    pub probe_clip: String,
    pub label: PairLabel,
    pub target_id: String,
}

#[derive(Debug, Clone, Default)]
pub struct Comparisons {
    pub pairs: Vec<ComparisonPair>,
    /// Identities of the split that have no genuine clip to serve as reference.
    pub skipped_identities: Vec<String>,
}

impl Comparisons {
    pub fn count(&self, label: PairLabel) -> usize {
        self.pairs.iter().filter(|p| p.label == label).count()
    }
}

/// Enumerates every genuine and impostor comparison of a split.
///
/// For identity `i` with `N` genuine clips and `M` impostor clips wearing
/// its appearance, each genuine clip is taken as reference once, yielding
/// `N·(N−1)` genuine and `N·M` impostor pairs.
pub fn build_comparisons(manifest: &DatasetManifest, split: Split) -> Result<Comparisons> {
    let mut by_target: BTreeMap<&str, Vec<&ClipRecord>> = BTreeMap::new();
    let mut any = false;
    for rec in manifest.records_in(split) {
        any = true;
        by_target.entry(rec.target_id.as_str()).or_default().push(rec);
    }
    if !any {
        return Err(Error::EmptySplit(split.to_string()));
    }

    let mut out = Comparisons::default();
    for identity in manifest.identities_in(split) {
        let clips = by_target.get(identity).map(Vec::as_slice).unwrap_or(&[]);
        let references: Vec<&ClipRecord> = clips.iter().copied().filter(|r| r.is_genuine()).collect();
        if references.is_empty() {
            warn!("identity {identity} has no genuine clip in split {split}; skipped");
            out.skipped_identities.push(identity.to_string());
            continue;
        }
        for reference in &references {
            for probe in clips {
                if probe.clip_id == reference.clip_id {
                    continue;
                }
                let label = if probe.driver_id == reference.driver_id {
                    PairLabel::Genuine
                } else {
                    PairLabel::Impostor
                };
                out.pairs.push(ComparisonPair {
                    reference_clip: reference.clip_id.clone(),
                    probe_clip: probe.clip_id.clone(),
                    label,
                    target_id: identity.to_string(),
                });
            }
        }
    }
    out.pairs.sort_by(|a, b| {
        a.reference_clip
            .cmp(&b.reference_clip)
            .then_with(|| a.probe_clip.cmp(&b.probe_clip))
    });
    Ok(out)
}
