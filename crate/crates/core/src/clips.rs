//! Loading manifest records into fixed-length, graph-ready clips.

use std::collections::HashMap;

use log::warn;

use crate::dataset::{ClipRecord, DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::landmarks::{self, LandmarkSequence};
use crate::mesh::{self, FrameGraph};

/// One fixed-length clip with its per-frame graphs.
#[derive(Debug, Clone)]
pub struct Clip {
    pub record: ClipRecord,
    pub graphs: Vec<FrameGraph>,
}

impl Clip {
    pub fn id(&self) -> &str {
        &self.record.clip_id
    }
}

/// Splits a sequence into consecutive, non-overlapping clips of `clip_length`
/// frames. Trailing frames that do not fill a clip are dropped.
pub fn slice_clips(seq: &LandmarkSequence, clip_length: usize) -> Vec<LandmarkSequence> {
    if clip_length == 0 {
        return Vec::new();
    }
    let n = seq.frame_count() / clip_length;
    if n == 0 {
        warn!(
            "sequence of {} frames is shorter than one clip of {clip_length}; discarded",
            seq.frame_count()
        );
    }
    (0..n)
        .map(|k| {
            seq.frames(k * clip_length..(k + 1) * clip_length)
                .expect("range within sequence")
        })
        .collect()
}

/// Id of the `k`-th clip of a record that yields `count` clips.
pub fn clip_id(record_id: &str, k: usize, count: usize) -> String {
    if count == 1 {
        record_id.to_string()
    } else {
        format!("{record_id}#{k}")
    }
}

/// Reads, normalizes and slices one record, then builds its graphs.
pub fn load_record(manifest: &DatasetManifest, record: &ClipRecord, clip_length: usize) -> Result<Vec<Clip>> {
    let path = manifest.resolve(record);
    let seq = landmarks::read_sequence(&path)?;
    let seq = if seq.normalized { seq } else { landmarks::normalize(&seq)? };
    let pieces = slice_clips(&seq, clip_length);
    let count = pieces.len();
    if count == 0 {
        warn!("record {} has {} frames (< {clip_length}); skipped", record.clip_id, seq.frame_count());
    }
    pieces
        .into_iter()
        .enumerate()
        .map(|(k, piece)| {
            let graphs = mesh::graphs_for_clip(&piece).map_err(|e| match e {
                Error::Frame { frame, source } => Error::Frame {
                    frame: frame + k * clip_length,
                    source,
                },
                other => other,
            })?;
            Ok(Clip {
                record: ClipRecord {
                    clip_id: clip_id(&record.clip_id, k, count),
                    frame_count: clip_length,
                    ..record.clone()
                },
                graphs,
            })
        })
        .collect()
}

/// Loads every record of the given splits, in manifest order.
pub fn load_clips(manifest: &DatasetManifest, splits: &[Split], clip_length: usize) -> Result<Vec<Clip>> {
    let records: Vec<&ClipRecord> = manifest.records.iter().filter(|r| splits.contains(&r.split)).collect();
    let loaded: Vec<Result<Vec<Clip>>> = crate::par::map(&records, |r| load_record(manifest, r, clip_length));
    let mut clips = Vec::new();
    for batch in loaded {
        clips.extend(batch?);
    }
    Ok(clips)
}

/// A manifest over the sliced clips, with the original identity splits.
pub fn clip_manifest(manifest: &DatasetManifest, clips: &[Clip]) -> Result<DatasetManifest> {
    let records = clips.iter().map(|c| c.record.clone()).collect();
    DatasetManifest::from_records(records, manifest.root.clone())
}

pub fn index_by_id(clips: &[Clip]) -> HashMap<&str, usize> {
    clips.iter().enumerate().map(|(i, c)| (c.id(), i)).collect()
}
