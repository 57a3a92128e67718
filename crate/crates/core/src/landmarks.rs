//! Landmark sequence files, landmark subsets and per-frame normalization.
//!
//! File layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LMKS" (4C 4D 4B 53)
//! 4       4     version (u32) = 1
//! 8       4     frame_count T (u32)
//! 12      4     landmark_count V (u32)
//! 16      12·V·T  x, y, z as f32, frame-major then landmark-major
//! ```
//!
//! A sidecar with the same stem and a `.meta` extension carries provenance as
//! `key=value` lines: subset name, role indices, normalized flag and source
//! video id.

use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kv;

pub const MAGIC: [u8; 4] = *b"LMKS";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Distance between inner canthi below which a frame cannot be normalized.
pub const MIN_INTERCANTHAL: f64 = 1e-9;

pub const FULL_MESH_COUNT: usize = 468;
pub const FULL_MESH_ROLES: RoleIndices = RoleIndices {
    nose_tip: 1,
    left_inner_canthus: 362,
    right_inner_canthus: 133,
};

const DEFAULT_SUBSET_TEXT: &str = include_str!("../data/default_subset.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleIndices {
    pub nose_tip: usize,
    pub left_inner_canthus: usize,
    pub right_inner_canthus: usize,
}

impl RoleIndices {
    pub fn validate(&self, landmark_count: usize) -> Result<()> {
        for idx in [self.nose_tip, self.left_inner_canthus, self.right_inner_canthus] {
            if idx >= landmark_count {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    count: landmark_count,
                });
            }
        }
        if self.nose_tip == self.left_inner_canthus
            || self.nose_tip == self.right_inner_canthus
            || self.left_inner_canthus == self.right_inner_canthus
        {
            return Err(Error::InvalidSequence("role indices must be distinct".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub subset: String,
    pub source_video: String,
}

/// Per-frame 3D landmark coordinates of one clip or video.
///
/// Coordinates are held in f64 and stored on disk as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSequence {
    coords: Vec<f64>,
    frame_count: usize,
    landmark_count: usize,
    pub roles: RoleIndices,
    pub normalized: bool,
    pub provenance: Provenance,
}

impl LandmarkSequence {
    /// `coords` is frame-major, landmark-major `x, y, z`.
    pub fn new(
        coords: Vec<f64>,
        frame_count: usize,
        landmark_count: usize,
        roles: RoleIndices,
    ) -> Result<Self> {
        if frame_count == 0 || landmark_count == 0 {
            return Err(Error::InvalidSequence(format!(
                "frame_count {frame_count} and landmark_count {landmark_count} must be positive"
            )));
        }
        if coords.len() != frame_count * landmark_count * 3 {
            return Err(Error::Shape(format!(
                "{} coordinates for {frame_count} frames of {landmark_count} landmarks",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!(
                "frame {}, landmark {}",
                i / (landmark_count * 3),
                (i / 3) % landmark_count
            )));
        }
        roles.validate(landmark_count)?;
        Ok(LandmarkSequence {
            coords,
            frame_count,
            landmark_count,
            roles,
            normalized: false,
            provenance: Provenance::default(),
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn landmark_count(&self) -> usize {
        self.landmark_count
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinates of frame `t` as `V·3` values.
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.landmark_count * 3;
        &self.coords[t * n..(t + 1) * n]
    }

    pub fn point(&self, t: usize, v: usize) -> [f64; 3] {
        let f = self.frame(t);
        [f[3 * v], f[3 * v + 1], f[3 * v + 2]]
    }

    /// Copies a contiguous range of frames into a new sequence.
    pub fn frames(&self, range: Range<usize>) -> Result<LandmarkSequence> {
        if range.start >= range.end || range.end > self.frame_count {
            return Err(Error::InvalidSequence(format!(
                "frame range {range:?} outside 0..{}",
                self.frame_count
            )));
        }
        let n = self.landmark_count * 3;
        Ok(LandmarkSequence {
            coords: self.coords[range.start * n..range.end * n].to_vec(),
            frame_count: range.len(),
            landmark_count: self.landmark_count,
            roles: self.roles,
            normalized: self.normalized,
            provenance: self.provenance.clone(),
        })
    }

    pub fn intercanthal_distance(&self, t: usize) -> f64 {
        let l = self.point(t, self.roles.left_inner_canthus);
        let r = self.point(t, self.roles.right_inner_canthus);
        ((l[0] - r[0]).powi(2) + (l[1] - r[1]).powi(2) + (l[2] - r[2]).powi(2)).sqrt()
    }

    /// Encodes the binary file body.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if let Some(i) = self.coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {i}")));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.coords.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.frame_count as u32).to_le_bytes());
        out.extend_from_slice(&(self.landmark_count as u32).to_le_bytes());
        for &c in &self.coords {
            let v = c as f32;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{c} overflows f32")));
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    /// Decodes a binary file body. Roles default to those implied by the
    /// landmark count; callers override them from the sidecar.
    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<LandmarkSequence> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::BadMagic(origin.to_string()));
        }
        let word = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let frame_count = word(8) as usize;
        let landmark_count = word(12) as usize;
        if frame_count == 0 || landmark_count == 0 {
            return Err(Error::InvalidSequence(format!(
                "{origin}: header declares T={frame_count}, V={landmark_count}"
            )));
        }
        let expected = HEADER_LEN + frame_count * landmark_count * 12;
        if bytes.len() != expected {
            if bytes.len() < expected {
                return Err(Error::Truncated {
                    expected,
                    found: bytes.len(),
                });
            }
            return Err(Error::InvalidSequence(format!(
                "{origin}: {} trailing bytes after payload",
                bytes.len() - expected
            )));
        }
        let coords: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        // Unknown layouts get placeholder roles until a sidecar supplies them.
        let roles = default_roles(landmark_count).unwrap_or(RoleIndices {
            nose_tip: 0,
            left_inner_canthus: 1.min(landmark_count - 1),
            right_inner_canthus: 2.min(landmark_count - 1),
        });
        let seq = LandmarkSequence {
            coords,
            frame_count,
            landmark_count,
            roles,
            normalized: false,
            provenance: Provenance::default(),
        };
        if let Some(i) = seq.coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{origin}: frame {}, landmark {}",
                i / (landmark_count * 3),
                (i / 3) % landmark_count
            )));
        }
        Ok(seq)
    }

    fn sidecar_entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("subset", self.provenance.subset.clone()),
            ("nose_tip", self.roles.nose_tip.to_string()),
            ("left_inner_canthus", self.roles.left_inner_canthus.to_string()),
            ("right_inner_canthus", self.roles.right_inner_canthus.to_string()),
            ("normalized", self.normalized.to_string()),
            ("source_video", self.provenance.source_video.clone()),
        ]
    }
}

/// Role indices implied by a known landmark layout.
pub fn default_roles(landmark_count: usize) -> Option<RoleIndices> {
    if landmark_count == FULL_MESH_COUNT {
        return Some(FULL_MESH_ROLES);
    }
    let subset = LandmarkSubset::default_109();
    if landmark_count == subset.kept_indices.len() {
        return subset.kept_roles().ok();
    }
    None
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta")
}

/// Reads a landmark file and, when present, its provenance sidecar.
pub fn read_sequence(path: &Path) -> Result<LandmarkSequence> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut seq = LandmarkSequence::from_bytes(&bytes, &path.display().to_string())?;
    let meta_path = sidecar_path(path);
    if meta_path.exists() {
        let meta = kv::read(&meta_path)?;
        let origin = meta_path.display().to_string();
        let index = |key: &str| -> Result<Option<usize>> {
            meta.get(key)
                .map(|v| v.parse::<usize>().map_err(|e| Error::parse(&origin, format!("{key}: {e}"))))
                .transpose()
        };
        if let (Some(n), Some(l), Some(r)) = (
            index("nose_tip")?,
            index("left_inner_canthus")?,
            index("right_inner_canthus")?,
        ) {
            seq.roles = RoleIndices {
                nose_tip: n,
                left_inner_canthus: l,
                right_inner_canthus: r,
            };
        }
        if let Some(flag) = meta.get("normalized") {
            seq.normalized = flag
                .parse::<bool>()
                .map_err(|e| Error::parse(&origin, format!("normalized: {e}")))?;
        }
        seq.provenance.subset = meta.get("subset").cloned().unwrap_or_default();
        seq.provenance.source_video = meta.get("source_video").cloned().unwrap_or_default();
    } else if default_roles(seq.landmark_count).is_none() {
        return Err(Error::InvalidSequence(format!(
            "{}: no sidecar and no default role layout for V={}",
            path.display(),
            seq.landmark_count
        )));
    }
    seq.roles.validate(seq.landmark_count)?;
    Ok(seq)
}

/// Writes the landmark file and its sidecar.
pub fn write_sequence(seq: &LandmarkSequence, path: &Path) -> Result<()> {
    let bytes = seq.to_bytes()?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    kv::write(&sidecar_path(path), seq.sidecar_entries())
}

/// An ordered selection of landmarks from a larger mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSubset {
    pub name: String,
    pub source_count: usize,
    pub kept_indices: Vec<usize>,
    /// Role landmarks, as indices into the source mesh.
    pub source_roles: RoleIndices,
    /// Named facial regions as ranges of positions in `kept_indices`.
    pub regions: Vec<(String, Range<usize>)>,
}

impl LandmarkSubset {
    pub fn default_109() -> LandmarkSubset {
        Self::parse(DEFAULT_SUBSET_TEXT, "default_subset.txt").expect("bundled subset is valid")
    }

    /// Keeps every landmark of a mesh in order.
    pub fn identity(source_count: usize, roles: RoleIndices) -> LandmarkSubset {
        LandmarkSubset {
            name: format!("identity{source_count}"),
            source_count,
            kept_indices: (0..source_count).collect(),
            source_roles: roles,
            regions: Vec::new(),
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<LandmarkSubset> {
        let map = kv::parse(text, origin)?;
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| Error::parse(origin, format!("missing key {k}")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse::<usize>()
                .map_err(|e| Error::parse(origin, format!("{k}: {e}")))
        };
        let kept_indices = get("indices")?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(origin, format!("indices: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut regions = Vec::new();
        if let Some(spec) = map.get("regions") {
            let mut start = 0;
            for part in spec.split(',') {
                let (name, len) = part
                    .split_once(':')
                    .ok_or_else(|| Error::parse(origin, "regions: expected name:len"))?;
                let len = len
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(origin, format!("regions: {e}")))?;
                regions.push((name.trim().to_string(), start..start + len));
                start += len;
            }
            if start != kept_indices.len() {
                return Err(Error::parse(origin, "regions do not cover the kept indices"));
            }
        }
        let subset = LandmarkSubset {
            name: get("name")?.clone(),
            source_count: num("source_count")?,
            kept_indices,
            source_roles: RoleIndices {
                nose_tip: num("nose_tip")?,
                left_inner_canthus: num("left_inner_canthus")?,
                right_inner_canthus: num("right_inner_canthus")?,
            },
            regions,
        };
        subset.validate()?;
        Ok(subset)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.source_count];
        for &i in &self.kept_indices {
            if i >= self.source_count {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    count: self.source_count,
                });
            }
            if seen[i] {
                return Err(Error::InvalidSequence(format!("subset keeps index {i} twice")));
            }
            seen[i] = true;
        }
        self.source_roles.validate(self.source_count)?;
        self.kept_roles().map(|_| ())
    }

    /// Role landmarks as positions within the kept ordering.
    pub fn kept_roles(&self) -> Result<RoleIndices> {
        let find = |role: &'static str, idx: usize| {
            self.kept_indices
                .iter()
                .position(|&k| k == idx)
                .ok_or(Error::RoleNotKept { role, index: idx })
        };
        Ok(RoleIndices {
            nose_tip: find("nose_tip", self.source_roles.nose_tip)?,
            left_inner_canthus: find("left_inner_canthus", self.source_roles.left_inner_canthus)?,
            right_inner_canthus: find("right_inner_canthus", self.source_roles.right_inner_canthus)?,
        })
    }

    pub fn region(&self, name: &str) -> Option<Range<usize>> {
        self.regions.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }
}

/// Picks the subset's landmarks out of every frame of a full-mesh sequence.
pub fn select_subset(full: &LandmarkSequence, subset: &LandmarkSubset) -> Result<LandmarkSequence> {
    if full.landmark_count != subset.source_count {
        return Err(Error::Shape(format!(
            "sequence has {} landmarks, subset expects {}",
            full.landmark_count, subset.source_count
        )));
    }
    if let Some(&bad) = subset.kept_indices.iter().find(|&&i| i >= full.landmark_count) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            count: full.landmark_count,
        });
    }
    let roles = subset.kept_roles()?;
    let v_out = subset.kept_indices.len();
    let mut coords = Vec::with_capacity(full.frame_count * v_out * 3);
    for t in 0..full.frame_count {
        let frame = full.frame(t);
        for &k in &subset.kept_indices {
            coords.extend_from_slice(&frame[3 * k..3 * k + 3]);
        }
    }
    let mut out = LandmarkSequence::new(coords, full.frame_count, v_out, roles)?;
    out.normalized = full.normalized;
    out.provenance = Provenance {
        subset: subset.name.clone(),
        source_video: full.provenance.source_video.clone(),
    };
    Ok(out)
}

/// Normalizes one frame in place: translate so the nose tip is at the
/// origin, then divide by the intercanthal distance. Returns the distance.
pub fn normalize_frame(frame: &mut [f64], roles: &RoleIndices) -> Result<f64> {
    let p = |v: usize| [frame[3 * v], frame[3 * v + 1], frame[3 * v + 2]];
    let nose = p(roles.nose_tip);
    let l = p(roles.left_inner_canthus);
    let r = p(roles.right_inner_canthus);
    let d = ((l[0] - r[0]).powi(2) + (l[1] - r[1]).powi(2) + (l[2] - r[2]).powi(2)).sqrt();
    if !(d >= MIN_INTERCANTHAL) {
        return Err(Error::DegenerateFrame { frame: 0, distance: d });
    }
    for point in frame.chunks_exact_mut(3) {
        for (c, n) in point.iter_mut().zip(nose) {
            *c = (*c - n) / d;
        }
    }
    Ok(d)
}

pub fn normalize(seq: &LandmarkSequence) -> Result<LandmarkSequence> {
    if seq.normalized {
        return Err(Error::InvalidSequence("sequence is already normalized".into()));
    }
    let mut out = seq.clone();
    let n = seq.landmark_count * 3;
    for (t, frame) in out.coords.chunks_exact_mut(n).enumerate() {
        normalize_frame(frame, &seq.roles).map_err(|e| match e {
            Error::DegenerateFrame { distance, .. } => Error::DegenerateFrame { frame: t, distance },
            other => other,
        })?;
    }
    out.normalized = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROLES3: RoleIndices = RoleIndices {
        nose_tip: 0,
        left_inner_canthus: 1,
        right_inner_canthus: 2,
    };

    fn toy(frames: usize, landmarks: usize) -> LandmarkSequence {
        let coords = (0..frames * landmarks * 3).map(|i| (i as f64) * 0.25 - 3.0).collect();
        LandmarkSequence::new(coords, frames, landmarks, ROLES3).unwrap()
    }

    #[test]
    fn minimal_round_trip() {
        let seq = toy(2, 4);
        let bytes = seq.to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 24 * 4);
        let back = LandmarkSequence::from_bytes(&bytes, "t").unwrap();
        assert_eq!(back.frame_count(), 2);
        assert_eq!(back.landmark_count(), 4);
        assert_eq!(back.coords(), seq.coords());
    }

    #[test]
    fn header_bytes_are_fixed() {
        let bytes = toy(2, 4).to_bytes().unwrap();
        assert_eq!(&bytes[..16], &[0x4C, 0x4D, 0x4B, 0x53, 1, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0]);
    }

    #[test]
    fn truncated_payload_is_detected() {
        let bytes = toy(2, 4).to_bytes().unwrap();
        let half = HEADER_LEN + (bytes.len() - HEADER_LEN) / 2;
        assert!(matches!(
            LandmarkSequence::from_bytes(&bytes[..half], "t"),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn bad_magic_and_zero_dims_are_rejected() {
        let mut bytes = toy(1, 3).to_bytes().unwrap();
        bytes[0] = b'X';
        assert!(matches!(LandmarkSequence::from_bytes(&bytes, "t"), Err(Error::BadMagic(_))));
        let mut bytes = toy(1, 3).to_bytes().unwrap();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            LandmarkSequence::from_bytes(&bytes, "t"),
            Err(Error::InvalidSequence(_))
        ));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let mut bytes = toy(1, 3).to_bytes().unwrap();
        bytes[HEADER_LEN + 8..HEADER_LEN + 12].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(LandmarkSequence::from_bytes(&bytes, "t"), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nan_sequence_is_rejected_before_write() {
        let mut coords = vec![0.0; 9];
        coords[4] = f64::NAN;
        assert!(matches!(
            LandmarkSequence::new(coords, 1, 3, ROLES3),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn standard_clip_file_size() {
        let roles = default_roles(109).unwrap();
        let seq = LandmarkSequence::new(vec![0.5; 50 * 109 * 3], 50, 109, roles).unwrap();
        assert_eq!(seq.to_bytes().unwrap().len(), 16 + 50 * 109 * 3 * 4);
    }

    #[test]
    fn file_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.lmks");
        let mut seq = toy(3, 5);
        seq.provenance.subset = "custom".into();
        seq.provenance.source_video = "vid7".into();
        write_sequence(&seq, &path).unwrap();
        let back = read_sequence(&path).unwrap();
        assert_eq!(back, seq);
        let meta = kv::read(&sidecar_path(&path)).unwrap();
        assert_eq!(meta["normalized"], "false");
        assert_eq!(meta["source_video"], "vid7");
    }

    #[test]
    fn unknown_layout_without_sidecar_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.lmks");
        std::fs::write(&path, toy(1, 5).to_bytes().unwrap()).unwrap();
        assert!(read_sequence(&path).is_err());
    }

    #[test]
    fn default_subset_covers_face_regions() {
        let s = LandmarkSubset::default_109();
        assert_eq!(s.kept_indices.len(), 109);
        assert_eq!(s.source_count, 468);
        for region in ["oval", "lips_outer", "right_eye", "left_eye", "right_brow", "left_brow", "nose"] {
            assert!(s.region(region).is_some(), "{region}");
        }
        let roles = s.kept_roles().unwrap();
        assert_eq!(s.kept_indices[roles.nose_tip], 1);
        assert_eq!(s.kept_indices[roles.left_inner_canthus], 362);
        assert_eq!(s.kept_indices[roles.right_inner_canthus], 133);
    }

    #[test]
    fn identity_subset_is_a_no_op() {
        let coords = (0..2 * 468 * 3).map(|i| (i % 97) as f64 * 0.1).collect();
        let full = LandmarkSequence::new(coords, 2, 468, FULL_MESH_ROLES).unwrap();
        let out = select_subset(&full, &LandmarkSubset::identity(468, FULL_MESH_ROLES)).unwrap();
        assert_eq!(out.coords(), full.coords());
        assert_eq!(out.roles, full.roles);
    }

    #[test]
    fn subset_permutes_landmarks() {
        let coords = (0..10 * 3).map(|i| i as f64).collect();
        let roles = RoleIndices {
            nose_tip: 5,
            left_inner_canthus: 2,
            right_inner_canthus: 7,
        };
        let full = LandmarkSequence::new(coords, 1, 10, roles).unwrap();
        let subset = LandmarkSubset {
            name: "pick".into(),
            source_count: 10,
            kept_indices: vec![5, 2, 7],
            source_roles: roles,
            regions: vec![],
        };
        let out = select_subset(&full, &subset).unwrap();
        assert_eq!(out.point(0, 0), full.point(0, 5));
        assert_eq!(out.point(0, 1), full.point(0, 2));
        assert_eq!(out.roles, ROLES3);

        let missing_role = LandmarkSubset {
            kept_indices: vec![5, 2],
            ..subset.clone()
        };
        assert!(matches!(select_subset(&full, &missing_role), Err(Error::RoleNotKept { .. })));
        let out_of_range = LandmarkSubset {
            kept_indices: vec![5, 2, 7, 12],
            ..subset
        };
        assert!(matches!(
            select_subset(&full, &out_of_range),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn default_subset_on_full_mesh_frame() {
        let coords = (0..468 * 3).map(|i| ((i * 37) % 101) as f64).collect();
        let full = LandmarkSequence::new(coords, 1, 468, FULL_MESH_ROLES).unwrap();
        let out = select_subset(&full, &LandmarkSubset::default_109()).unwrap();
        assert_eq!(out.landmark_count(), 109);
        assert_eq!(out.provenance.subset, "default109");
    }

    #[test]
    fn nose_maps_to_origin_and_canthi_to_unit_distance() {
        let coords = vec![3.0, 4.0, 5.0, 4.0, 4.0, 5.0, 1.0, 4.0, 5.0, 7.0, 8.0, 9.0];
        let seq = LandmarkSequence::new(coords, 1, 4, ROLES3).unwrap();
        let n = normalize(&seq).unwrap();
        assert_eq!(n.point(0, 0), [0.0, 0.0, 0.0]);
        assert!((n.intercanthal_distance(0) - 1.0).abs() < 1e-12);
        assert!(n.normalized);
        assert!(normalize(&n).is_err());
    }

    #[test]
    fn pure_scaling_halves_coordinates() {
        // nose at origin, canthi 2.0 apart
        let coords = vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, -1.0, 1.0, 0.0, 4.0, -2.0, 6.0];
        let seq = LandmarkSequence::new(coords.clone(), 1, 4, ROLES3).unwrap();
        let n = normalize(&seq).unwrap();
        for (a, b) in n.coords().iter().zip(&coords) {
            assert_eq!(*a, b / 2.0);
        }
    }

    #[test]
    fn degenerate_frame_is_named() {
        let mut coords = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        coords.extend_from_slice(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let seq = LandmarkSequence::new(coords, 2, 3, ROLES3).unwrap();
        assert!(matches!(normalize(&seq), Err(Error::DegenerateFrame { frame: 1, .. })));
    }
}
