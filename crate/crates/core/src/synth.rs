//! Synthetic talking-head identities with controllable motion signatures.
//!
//! An identity contributes a base face when it is the target of a clip and
//! a motion signature when it drives one. Motion is a sum of per-region
//! oscillations along identity-specific deformation axes, plus periodic
//! gesture bursts. Each clip adds its own head pose, depth distortion,
//! camera framing and observation noise, which carry no identity
//! information.
//!
//! The encoder ignores frame order, so oscillation frequency is invisible
//! to it. The defaults therefore carry identity mainly in the bursts: a
//! shared gesture that attention can learn to find, mixed with an
//! identity-specific deformation. The per-clip depth distortion hides
//! identity from a randomly initialized encoder but lies along one input
//! axis, so training can learn to discount it.

use std::f64::consts::{PI, TAU};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{ClipRecord, DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::landmarks::{self, LandmarkSequence, LandmarkSubset, Provenance};
use crate::rng::{self, Stream};

pub const LANDMARK_COUNT: usize = 109;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionRegion {
    Mouth,
    Brows,
    Eyes,
    Jaw,
}

impl MotionRegion {
    pub const ALL: [MotionRegion; 4] = [MotionRegion::Mouth, MotionRegion::Brows, MotionRegion::Eyes, MotionRegion::Jaw];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionRegion::Mouth => "mouth",
            MotionRegion::Brows => "brows",
            MotionRegion::Eyes => "eyes",
            MotionRegion::Jaw => "jaw",
        }
    }
}

/// Controls how frequencies are assigned to identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureConfig {
    /// Lowest oscillation frequency, in cycles per frame.
    pub base_frequency: f64,
    /// Minimum frequency gap between two identities in some region.
    pub separation: f64,
    /// Frequency levels per region.
    pub levels: u64,
    /// Range of gesture-burst amplitudes, in mode units.
    pub burst_amplitude: [f64; 2],
    /// Range of oscillation amplitudes, in mode units.
    pub oscillation_amplitude: [f64; 2],
    /// Largest resting displacement of a region, in mode units.
    pub resting_offset: f64,
    /// Scale of face-shape differences between identities; 1 allows about
    /// ±10% in each proportion.
    pub appearance_spread: f64,
    /// Weight in `[0, 1]` of the gesture every identity's bursts share
    /// (mouth opening with raised brows); the rest is identity specific
    /// and moves the other six modes.
    pub burst_sharing: f64,
}

impl Default for SignatureConfig {
    fn default() -> Self {
        SignatureConfig {
            base_frequency: 0.02,
            separation: 0.02,
            levels: 8,
            burst_amplitude: [6.0, 7.0],
            oscillation_amplitude: [0.1, 0.5],
            resting_offset: 0.1,
            appearance_spread: 0.1,
            burst_sharing: 0.5,
        }
    }
}

impl SignatureConfig {
    /// Number of identity seeds guaranteed to be pairwise separated.
    pub fn code_count(&self) -> u64 {
        self.levels.pow(MotionRegion::ALL.len() as u32)
    }
}

/// Oscillation of one facial region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMotion {
    pub region: MotionRegion,
    /// Cycles per frame.
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Mix between the region's two deformation modes.
    pub axis_angle: f64,
    /// Relative weight of the second harmonic.
    pub harmonic: f64,
    /// Resting displacement along the axis.
    pub offset: f64,
}

/// Gesture bursts recurring every `period` frames, starting at `first_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstSchedule {
    pub first_start: usize,
    pub period: usize,
    pub duration: usize,
    pub amplitude: f64,
    /// Unit weights over the eight deformation modes.
    pub pattern: [f64; 8],
}

impl BurstSchedule {
    pub fn start(&self, k: usize) -> usize {
        self.first_start + k * self.period
    }

    /// Burst envelope at absolute frame `tau` (a raised cosine over the burst).
    pub fn envelope(&self, tau: usize) -> f64 {
        if tau < self.first_start {
            return 0.0;
        }
        let into = (tau - self.first_start) % self.period;
        if into >= self.duration {
            return 0.0;
        }
        let x = (into as f64 + 0.5) / self.duration as f64;
        0.5 - 0.5 * (TAU * x).cos()
    }

    /// Bursts lying entirely inside `[start_frame, start_frame + frames)`,
    /// as frame ranges relative to `start_frame`.
    pub fn windows(&self, start_frame: usize, frames: usize) -> Vec<Range<usize>> {
        let end = start_frame + frames;
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let b = self.start(k);
            if b + self.duration > end {
                break;
            }
            if b >= start_frame {
                out.push(b - start_frame..b - start_frame + self.duration);
            }
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSignature {
    pub seed: u64,
    /// Appearance: face template in subset order, unit intercanthal spacing scale.
    pub base_face: Vec<[f64; 3]>,
    pub regions: [RegionMotion; 4],
    pub bursts: BurstSchedule,
}

impl MotionSignature {
    pub fn region(&self, region: MotionRegion) -> &RegionMotion {
        &self.regions[region as usize]
    }

    /// Coefficients of the eight deformation modes at absolute frame `tau`.
    pub fn mode_weights(&self, tau: usize) -> [f64; 8] {
        let mut w = [0.0; 8];
        let t = tau as f64;
        for (r, m) in self.regions.iter().enumerate() {
            let angle = TAU * m.frequency * t + m.phase;
            let s = m.amplitude * (angle.sin() + m.harmonic * (2.0 * angle).sin()) + m.offset;
            w[2 * r] += s * m.axis_angle.cos();
            w[2 * r + 1] += s * m.axis_angle.sin();
        }
        let e = self.bursts.amplitude * self.bursts.envelope(tau);
        for (wk, pk) in w.iter_mut().zip(self.bursts.pattern) {
            *wk += e * pk;
        }
        w
    }
}

fn subset() -> LandmarkSubset {
    LandmarkSubset::default_109()
}

fn region_range(s: &LandmarkSubset, name: &str) -> Range<usize> {
    s.region(name).expect("bundled subset has all regions")
}

/// Ring of `n` points on an ellipse; point `k` sits at angle `start + k·2π/n`.
fn ring(n: usize, center: [f64; 3], radii: [f64; 2], start: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|k| {
            let a = start + TAU * k as f64 / n as f64;
            [center[0] + radii[0] * a.cos(), center[1] + radii[1] * a.sin(), center[2]]
        })
        .collect()
}

/// Face shape knobs; the template uses 1.0 everywhere.
struct FaceShape {
    width: f64,
    height: f64,
    eye_spacing: f64,
    mouth_width: f64,
    mouth_height: f64,
    brow_height: f64,
    nose_length: f64,
}

const NEUTRAL_SHAPE: FaceShape = FaceShape {
    width: 1.0,
    height: 1.0,
    eye_spacing: 1.0,
    mouth_width: 1.0,
    mouth_height: 1.0,
    brow_height: 1.0,
    nose_length: 1.0,
};

fn build_face(shape: &FaceShape) -> Vec<[f64; 3]> {
    let s = subset();
    let mut face = vec![[0.0; 3]; LANDMARK_COUNT];
    let mut put = |name: &str, points: Vec<[f64; 3]>| {
        let range = region_range(&s, name);
        assert_eq!(range.len(), points.len(), "region {name}");
        for (i, p) in range.zip(points) {
            face[i] = p;
        }
    };
    // oval: first point at the top of the forehead, running clockwise as seen
    let oval: Vec<[f64; 3]> = (0..36)
        .map(|k| {
            let a = PI / 2.0 - TAU * k as f64 / 36.0;
            let x = 2.2 * shape.width * a.cos();
            let y = 0.2 + 3.0 * shape.height * a.sin();
            [x, y, -0.8 * (x / (2.2 * shape.width)).powi(2)]
        })
        .collect();
    put("oval", oval);
    let mouth_y = -1.3 * shape.height;
    put(
        "lips_outer",
        ring(20, [0.0, mouth_y, 0.5], [0.8 * shape.mouth_width, 0.3 * shape.mouth_height], PI),
    );
    put(
        "lips_inner",
        ring(10, [0.0, mouth_y, 0.45], [0.55 * shape.mouth_width, 0.1 * shape.mouth_height], PI),
    );
    let eye_x = 1.0 * shape.eye_spacing;
    // the inner canthus is the 4th right-eye point and the 1st left-eye point
    put("right_eye", ring(8, [-eye_x, 0.9, 0.2], [0.45, 0.18], -3.0 * TAU / 8.0));
    put("left_eye", ring(8, [eye_x, 0.9, 0.2], [0.45, 0.18], PI));
    let brow = |sign: f64| -> Vec<[f64; 3]> {
        (0..10)
            .map(|k| {
                let u = k as f64 / 9.0;
                let x = sign * (0.4 + 1.2 * u) * shape.eye_spacing;
                let y = 1.45 * shape.brow_height + 0.15 * (PI * u).sin() + if k % 2 == 1 { 0.12 } else { 0.0 };
                [x, y, 0.3]
            })
            .collect()
    };
    put("right_brow", brow(-1.0));
    put("left_brow", brow(1.0));
    let n = shape.nose_length;
    put(
        "nose",
        vec![
            [0.0, 0.0, 1.0],
            [0.0, -0.25 * n, 0.8],
            [0.0, 0.3 * n, 0.9],
            [0.0, 0.8 * n, 0.6],
            [0.0, 1.1, 0.4],
            [-0.35, -0.3 * n, 0.5],
            [0.35, -0.3 * n, 0.5],
        ],
    );
    face
}

/// The neutral face every identity's appearance is a variation of.
pub fn template_face() -> Vec<[f64; 3]> {
    build_face(&NEUTRAL_SHAPE)
}

/// Eight displacement fields, two per region, defined on the template so
/// the same driver moves every target face identically.
pub fn motion_modes() -> [Vec<[f64; 3]>; 8] {
    let s = subset();
    let face = template_face();
    let zero = || vec![[0.0; 3]; LANDMARK_COUNT];
    let mut modes: [Vec<[f64; 3]>; 8] = std::array::from_fn(|_| zero());
    let lips: Vec<usize> = region_range(&s, "lips_outer").chain(region_range(&s, "lips_inner")).collect();
    let mouth_y = -1.3;
    for &i in &lips {
        let [x, y, _] = face[i];
        let w = (1.0 - (x / 0.8).powi(2)).max(0.0);
        modes[0][i][1] = 0.3 * (y - mouth_y).signum() * w;
        modes[1][i][0] = 0.35 * x / 0.8;
        modes[1][i][2] = -0.05;
    }
    let brows: Vec<usize> = region_range(&s, "right_brow").chain(region_range(&s, "left_brow")).collect();
    for &i in &brows {
        let [x, _, _] = face[i];
        modes[2][i][1] = 0.25;
        let inner = (1.0 - (x.abs() - 0.4) / 1.2).clamp(0.0, 1.0);
        modes[3][i][0] = -x.signum() * 0.2 * inner;
        modes[3][i][1] = -0.12 * inner;
    }
    for (name, side) in [("right_eye", 1.0), ("left_eye", -1.0)] {
        for i in region_range(&s, name) {
            let y = face[i][1];
            let lid = if y > 0.9 + 1e-9 { -0.15 } else if y < 0.9 - 1e-9 { 0.05 } else { 0.0 };
            modes[4][i][1] = lid;
            modes[5][i][1] = side * lid;
        }
    }
    for i in region_range(&s, "oval") {
        let [_, y, _] = face[i];
        let w = ((0.2 - y) / 3.0).clamp(0.0, 1.0);
        modes[6][i][1] = -0.4 * w;
        modes[7][i][0] = 0.3 * w;
    }
    for &i in &lips {
        if face[i][1] < mouth_y - 1e-9 {
            modes[6][i][1] = -0.3;
            modes[7][i][0] = 0.15;
        }
    }
    modes
}

/// Mouth opening with raised brows, part of every identity's bursts. The
/// identity-specific part of a burst moves only the other modes, so it never
/// cancels this gesture.
const SHARED_GESTURE: [f64; 8] = [
    std::f64::consts::FRAC_1_SQRT_2,
    0.0,
    std::f64::consts::FRAC_1_SQRT_2,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
];

/// Maps a seed to a frequency code; a bijection on `[0, code_count)`.
fn frequency_code(seed: u64, config: &SignatureConfig) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let n = config.code_count();
    // a multiplier coprime to n makes x -> a·x + c a permutation of Z/n
    let mut a = ((n as f64 * 0.618_033_988_75) as u64).max(1);
    while gcd(a, n) != 1 {
        a += 1;
    }
    ((a as u128 * (seed % n) as u128 + 7) % n as u128) as u64
}

pub fn generate_identity(seed: u64) -> MotionSignature {
    generate_identity_with(seed, &SignatureConfig::default())
}

/// Builds the deterministic signature of identity `seed`.
///
/// Seeds that differ modulo [`SignatureConfig::code_count`] get frequency
/// codes that differ in at least one region, so those regions' frequencies
/// differ by at least `separation`.
pub fn generate_identity_with(seed: u64, config: &SignatureConfig) -> MotionSignature {
    let mut rng = rng::stream(seed, &["signature".into()]);
    let spread = config.appearance_spread;
    let mut vary = |half_width: f64| 1.0 + spread * rng.random_range(-half_width..half_width);
    let shape = FaceShape {
        width: vary(0.1),
        height: vary(0.1),
        eye_spacing: vary(0.1),
        mouth_width: vary(0.15),
        mouth_height: vary(0.2),
        brow_height: vary(0.08),
        nose_length: vary(0.15),
    };
    let mut base_face = build_face(&shape);
    for p in &mut base_face {
        for c in p.iter_mut() {
            *c += spread * rng.random_range(-0.02..0.02);
        }
    }

    let mut code = frequency_code(seed, config);
    let regions = MotionRegion::ALL.map(|region| {
        let digit = code % config.levels;
        code /= config.levels;
        RegionMotion {
            region,
            frequency: config.base_frequency + config.separation * digit as f64,
            amplitude: rng.random_range(config.oscillation_amplitude[0]..config.oscillation_amplitude[1]),
            phase: rng.random_range(0.0..TAU),
            axis_angle: rng.random_range(0.0..PI),
            harmonic: rng.random_range(0.0..0.6),
            offset: rng.random_range(-1.0..1.0) * config.resting_offset,
        }
    });

    let unit = |v: &mut [f64; 8]| {
        let norm = v.iter().map(|p| p * p).sum::<f64>().sqrt();
        v.iter_mut().for_each(|p| *p /= norm);
        norm
    };
    let mut pattern = [0.0; 8];
    loop {
        for (k, p) in pattern.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p = if SHARED_GESTURE[k] == 0.0 { z } else { 0.0 };
        }
        if unit(&mut pattern) > 1e-3 {
            break;
        }
    }
    let mut mixed: [f64; 8] =
        std::array::from_fn(|k| config.burst_sharing * SHARED_GESTURE[k] + (1.0 - config.burst_sharing) * pattern[k]);
    if unit(&mut mixed) > 1e-3 {
        pattern = mixed;
    }
    let period = rng.random_range(60..=80);
    let bursts = BurstSchedule {
        first_start: rng.random_range(0..period),
        period,
        duration: rng.random_range(6..=10),
        amplitude: rng.random_range(config.burst_amplitude[0]..config.burst_amplitude[1]),
        pattern,
    };
    MotionSignature {
        seed,
        base_face,
        regions,
        bursts,
    }
}

/// Per-clip nuisance and rendering switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Standard deviation of per-landmark noise, in face units.
    pub noise_level: f64,
    /// Largest per-clip head rotation about each axis, radians.
    pub head_pose: f64,
    /// Amplitude of slow head sway within a clip, radians.
    pub head_sway: f64,
    /// Standard deviation of the terms of a smooth per-clip depth
    /// distortion, as a monocular landmark extractor makes.
    pub depth_error: f64,
    /// Exponential smoothing of driver motion in `[0, 1)`; 0 transfers it exactly.
    pub smoothing: f64,
    /// Random camera scale and offset, as a landmark extractor would report.
    pub camera: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            noise_level: 0.01,
            head_pose: 0.02,
            head_sway: 0.02,
            depth_error: 0.2,
            smoothing: 0.0,
            camera: true,
        }
    }
}

impl RenderOptions {
    /// Pure driver motion on the target face: no noise, pose or camera.
    pub fn exact() -> RenderOptions {
        RenderOptions {
            noise_level: 0.0,
            head_pose: 0.0,
            head_sway: 0.0,
            depth_error: 0.0,
            smoothing: 0.0,
            camera: false,
        }
    }
}

fn rotation(yaw: f64, pitch: f64, roll: f64) -> [[f64; 3]; 3] {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    // R = Rz(roll) · Ry(yaw) · Rx(pitch)
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
    mat_mul(&rz, &mat_mul(&ry, &rx))
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Renders `frames` frames of `driver`'s motion, starting at absolute frame
/// `start_frame` of its timeline, on `target`'s face.
pub fn render_clip(
    driver: &MotionSignature,
    target: &MotionSignature,
    start_frame: usize,
    frames: usize,
    options: &RenderOptions,
    rng: &mut Stream,
) -> Result<LandmarkSequence> {
    if frames == 0 {
        return Err(Error::InvalidSequence("a clip needs at least one frame".into()));
    }
    let modes = motion_modes();
    let roles = subset().kept_roles()?;
    let mut pose = [0.0; 3];
    for p in &mut pose {
        *p = if options.head_pose > 0.0 {
            rng.random_range(-options.head_pose..options.head_pose)
        } else {
            0.0
        };
    }
    let sway_frequency = rng.random_range(0.005..0.03);
    let sway_phase = rng.random_range(0.0..TAU);
    let mut sway_axis = [0.0f64; 3];
    for a in &mut sway_axis {
        *a = rng.random_range(-1.0..1.0);
    }
    // a smooth depth field over the face: tilt, bulge and twist
    let mut depth_terms = [0.0f64; 4];
    if options.depth_error > 0.0 {
        for g in &mut depth_terms {
            let z: f64 = StandardNormal.sample(rng);
            *g = options.depth_error * z;
        }
    }
    let depth: Vec<f64> = template_face()
        .iter()
        .map(|&[x, y, _]| {
            let (u, v) = (x / 2.2, (y - 0.2) / 3.0);
            depth_terms[0] * u + depth_terms[1] * v + depth_terms[2] * (u * u - v * v) + depth_terms[3] * u * v
        })
        .collect();
    let (scale, shift) = if options.camera {
        (
            rng.random_range(30.0..50.0),
            [rng.random_range(200.0..400.0), rng.random_range(150.0..300.0), rng.random_range(-20.0..20.0)],
        )
    } else {
        (1.0, [0.0; 3])
    };

    let mut coords = Vec::with_capacity(frames * LANDMARK_COUNT * 3);
    let mut smoothed: Option<[f64; 8]> = None;
    for t in 0..frames {
        let raw = driver.mode_weights(start_frame + t);
        let w = match smoothed {
            Some(prev) if options.smoothing > 0.0 => {
                std::array::from_fn(|k| options.smoothing * prev[k] + (1.0 - options.smoothing) * raw[k])
            }
            _ => raw,
        };
        smoothed = Some(w);
        let sway = options.head_sway * (TAU * sway_frequency * t as f64 + sway_phase).sin();
        let rot = rotation(pose[0] + sway * sway_axis[0], pose[1] + sway * sway_axis[1], pose[2] + sway * sway_axis[2]);
        for v in 0..LANDMARK_COUNT {
            let mut p = target.base_face[v];
            p[2] += depth[v];
            for (k, mode) in modes.iter().enumerate() {
                for c in 0..3 {
                    p[c] += w[k] * mode[v][c];
                }
            }
            for c in 0..3 {
                let rotated: f64 = (0..3).map(|j| rot[c][j] * p[j]).sum();
                let noise: f64 = if options.noise_level > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    options.noise_level * z
                } else {
                    0.0
                };
                coords.push(scale * (rotated + noise) + shift[c]);
            }
        }
    }
    let mut seq = LandmarkSequence::new(coords, frames, LANDMARK_COUNT, roles)?;
    for t in 0..frames {
        let d = seq.intercanthal_distance(t);
        if d < 0.25 * scale {
            return Err(Error::DegenerateFrame { frame: t, distance: d });
        }
    }
    seq.provenance = Provenance {
        subset: subset().name,
        source_video: String::new(),
    };
    Ok(seq)
}

/// Shape of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_identities: usize,
    /// Genuine clips per identity.
    pub clips_per_identity: usize,
    /// Impostor clips per target identity, driven by other identities of its split.
    pub impostors_per_target: usize,
    pub frames_per_clip: usize,
    pub seed: u64,
    pub signature: SignatureConfig,
    pub render: RenderOptions,
}

impl SynthSpec {
    pub fn new(num_identities: usize, clips_per_identity: usize, impostors_per_target: usize, frames_per_clip: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            num_identities,
            clips_per_identity,
            impostors_per_target,
            frames_per_clip,
            seed,
            signature: SignatureConfig::default(),
            render: RenderOptions::default(),
        }
    }
}

/// Identities per split: 20% each (rounded down, at least one) for
/// validation and test, the rest for training.
pub fn split_sizes(num_identities: usize) -> Result<[usize; 3]> {
    if num_identities < 4 {
        return Err(Error::Config(format!(
            "need at least 4 identities to fill three splits, got {num_identities}"
        )));
    }
    let held_out = (num_identities / 5).max(1);
    Ok([num_identities - 2 * held_out, held_out, held_out])
}

/// Where one generated clip came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSource {
    pub clip_id: String,
    pub driver: usize,
    pub target: usize,
    pub start_frame: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub signatures: Vec<MotionSignature>,
    pub sources: Vec<ClipSource>,
}

impl SyntheticDataset {
    pub fn source(&self, clip_id: &str) -> Option<&ClipSource> {
        self.sources.iter().find(|s| s.clip_id == clip_id)
    }

    /// Burst windows, relative to the clip start, of a generated clip.
    pub fn burst_windows(&self, clip_id: &str) -> Option<Vec<Range<usize>>> {
        let src = self.source(clip_id)?;
        let frames = self.manifest.record(clip_id)?.frame_count;
        Some(self.signatures[src.driver].bursts.windows(src.start_frame, frames))
    }
}

pub fn identity_name(index: usize) -> String {
    format!("id{index:02}")
}

/// Seed of identity `index` in a dataset generated with `seed`.
pub fn identity_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, &["identities".into()]).wrapping_add(index as u64)
}

/// Start frame that puts burst `k` of `bursts` at a random position fully
/// inside a clip of `frames` frames.
fn clip_start(bursts: &BurstSchedule, k: usize, frames: usize, rng: &mut Stream) -> usize {
    let b = bursts.start(k + 1);
    let slack = frames.saturating_sub(bursts.duration + 4);
    b - 2 - rng.random_range(0..=slack).min(b - 2)
}

/// Generates identities, renders every clip into `dir`, and writes `manifest.tsv`.
pub fn build_synthetic_manifest(spec: &SynthSpec, dir: &Path) -> Result<SyntheticDataset> {
    let [n_train, n_val, _] = split_sizes(spec.num_identities)?;
    if spec.clips_per_identity == 0 || spec.frames_per_clip == 0 {
        return Err(Error::Config("clips_per_identity and frames_per_clip must be positive".into()));
    }
    let split_of = |i: usize| {
        if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        }
    };
    let signatures: Vec<MotionSignature> = (0..spec.num_identities)
        .map(|i| generate_identity_with(identity_seed(spec.seed, i), &spec.signature))
        .collect();

    let mut plan: Vec<ClipSource> = Vec::new();
    let mut segment = vec![0usize; spec.num_identities];
    let mut place_rng = rng::stream(spec.seed, &["placement".into()]);
    for target in 0..spec.num_identities {
        for c in 0..spec.clips_per_identity {
            let k = segment[target];
            segment[target] += 1;
            plan.push(ClipSource {
                clip_id: format!("{}_g{c}", identity_name(target)),
                driver: target,
                target,
                start_frame: clip_start(&signatures[target].bursts, k, spec.frames_per_clip, &mut place_rng),
            });
        }
    }
    for target in 0..spec.num_identities {
        let split = split_of(target);
        let others: Vec<usize> = (0..spec.num_identities).filter(|&j| j != target && split_of(j) == split).collect();
        if spec.impostors_per_target == 0 {
            continue;
        }
        if others.is_empty() {
            return Err(Error::Config(format!(
                "{} has no other identity in its split to drive impostor clips",
                identity_name(target)
            )));
        }
        let offset = place_rng.random_range(0..others.len());
        for m in 0..spec.impostors_per_target {
            let driver = others[(offset + m) % others.len()];
            let k = segment[driver];
            segment[driver] += 1;
            plan.push(ClipSource {
                clip_id: format!("{}_i{m}_{}", identity_name(target), identity_name(driver)),
                driver,
                target,
                start_frame: clip_start(&signatures[driver].bursts, k, spec.frames_per_clip, &mut place_rng),
            });
        }
    }

    let data_dir = dir.join("data");
    std::fs::create_dir_all(&data_dir).map_err(|e| Error::io(&data_dir, e))?;
    let rendered: Vec<Result<ClipRecord>> = crate::par::map(&plan, |src| {
        let mut rng = rng::stream(spec.seed, &["render".into(), src.clip_id.as_str().into()]);
        let mut seq = render_clip(
            &signatures[src.driver],
            &signatures[src.target],
            src.start_frame,
            spec.frames_per_clip,
            &spec.render,
            &mut rng,
        )?;
        seq.provenance.source_video = format!("synthetic:{}", src.clip_id);
        let rel = PathBuf::from("data").join(format!("{}.lmk", src.clip_id));
        landmarks::write_sequence(&seq, &dir.join(&rel))?;
        Ok(ClipRecord {
            clip_id: src.clip_id.clone(),
            driver_id: identity_name(src.driver),
            target_id: identity_name(src.target),
            split: split_of(src.target),
            source_path: rel,
            frame_count: spec.frames_per_clip,
        })
    });
    let records = rendered.into_iter().collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::from_records(records, dir)?;
    crate::dataset::write_manifest(&manifest, &dir.join("manifest.tsv"))?;
    Ok(SyntheticDataset {
        manifest,
        signatures,
        sources: plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_roles_are_where_expected() {
        let face = template_face();
        let roles = subset().kept_roles().unwrap();
        assert_eq!(face[roles.nose_tip], [0.0, 0.0, 1.0]);
        let l = face[roles.left_inner_canthus];
        let r = face[roles.right_inner_canthus];
        assert!((l[0] - 0.55).abs() < 1e-12 && (r[0] + 0.55).abs() < 1e-12, "{l:?} {r:?}");
    }

    #[test]
    fn split_sizes_follow_the_twenty_percent_rule() {
        assert_eq!(split_sizes(10).unwrap(), [6, 2, 2]);
        assert_eq!(split_sizes(12).unwrap(), [8, 2, 2]);
        assert_eq!(split_sizes(4).unwrap(), [2, 1, 1]);
        assert!(split_sizes(3).is_err());
    }

    #[test]
    fn burst_windows_are_relative_and_complete() {
        let b = BurstSchedule {
            first_start: 10,
            period: 60,
            duration: 8,
            amplitude: 1.0,
            pattern: [0.0; 8],
        };
        assert_eq!(b.windows(5, 50), vec![5..13]);
        assert_eq!(b.windows(12, 50), Vec::<Range<usize>>::new());
        assert_eq!(b.windows(0, 150), vec![10..18, 70..78, 130..138]);
        assert_eq!(b.envelope(9), 0.0);
        assert!(b.envelope(13) > 0.9);
        assert_eq!(b.envelope(18), 0.0);
    }

    #[test]
    fn clip_starts_contain_exactly_one_burst() {
        let mut rng = rng::stream(1, &[]);
        for seed in 0..20 {
            let sig = generate_identity(seed);
            for k in 0..10 {
                let start = clip_start(&sig.bursts, k, 50, &mut rng);
                assert_eq!(sig.bursts.windows(start, 50).len(), 1);
            }
        }
    }
}
