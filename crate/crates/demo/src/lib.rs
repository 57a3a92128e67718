//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Every export takes plain numbers or text and returns a JSON string, so
//! the page needs no bundler. The `*_json` functions are the same operations
//! callable from native code and tests.

use facemotion::landmarks::normalize;
use facemotion::mesh::{build_frame_graph, graphs_for_clip};
use facemotion::model::{encode_clip, init_params, Dropout};
use facemotion::rng;
use facemotion::synth::{generate_identity, render_clip, RenderOptions};
use facemotion::verify::{compute_auc, roc_points};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error_json(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// Normalized frame `frame` of a synthetic identity and its Delaunay edges.
pub fn face_mesh_json(seed: u64, frame: usize) -> Result<Value, String> {
    let sig = generate_identity(seed);
    let mut stream = rng::stream(seed, &["demo".into()]);
    let seq = render_clip(&sig, &sig, frame, 1, &RenderOptions::exact(), &mut stream).map_err(|e| e.to_string())?;
    let norm = normalize(&seq).map_err(|e| e.to_string())?;
    let graph = build_frame_graph(norm.frame(0)).map_err(|e| e.to_string())?;
    let points: Vec<[f64; 2]> = (0..norm.landmark_count()).map(|v| {
        let p = norm.point(0, v);
        [p[0], p[1]]
    }).collect();
    Ok(json!({ "points": points, "edges": graph.edges }))
}

/// Parses whitespace- or comma-separated numbers.
fn parse_scores(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s}")))
        .collect()
}

/// ROC points and AUC of two score lists, higher meaning more similar.
pub fn roc_json(genuine: &str, impostor: &str) -> Result<Value, String> {
    let g = parse_scores(genuine)?;
    let i = parse_scores(impostor)?;
    let auc = compute_auc(&g, &i).map_err(|e| e.to_string())?;
    let points = roc_points(&g, &i).map_err(|e| e.to_string())?;
    let curve: Vec<[f64; 2]> = points.iter().map(|p| [p.false_match_rate, p.true_match_rate]).collect();
    Ok(json!({ "auc": auc, "points": curve }))
}

/// Attention of a randomly initialized encoder over a synthetic clip that
/// contains one gesture burst, next to the per-frame motion energy.
pub fn attention_json(seed: u64, frames: usize) -> Result<Value, String> {
    if !(10..=200).contains(&frames) {
        return Err("frames must be between 10 and 200".into());
    }
    let sig = generate_identity(seed);
    let start = sig.bursts.start(2) - (frames - sig.bursts.duration) / 2;
    let mut stream = rng::stream(seed, &["demo".into()]);
    let seq = render_clip(&sig, &sig, start, frames, &RenderOptions::exact(), &mut stream).map_err(|e| e.to_string())?;
    let norm = normalize(&seq).map_err(|e| e.to_string())?;
    let graphs = graphs_for_clip(&norm).map_err(|e| e.to_string())?;
    let out = encode_clip(&graphs, &init_params(seed), Dropout::Off).map_err(|e| e.to_string())?;
    let rest = norm.frame(0);
    let energy: Vec<f64> = (0..frames)
        .map(|t| norm.frame(t).iter().zip(rest).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let burst = sig.bursts.windows(start, frames);
    Ok(json!({
        "attention": out.attention.to_vec(),
        "t_max": out.t_max,
        "energy": energy,
        "bursts": burst.iter().map(|r| [r.start, r.end]).collect::<Vec<_>>(),
    }))
}

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => error_json(e),
    }
}

#[wasm_bindgen]
pub fn face_mesh(seed: u32, frame: u32) -> String {
    respond(face_mesh_json(seed as u64, frame as usize))
}

#[wasm_bindgen]
pub fn roc(genuine: &str, impostor: &str) -> String {
    respond(roc_json(genuine, impostor))
}

#[wasm_bindgen]
pub fn attention(seed: u32, frames: u32) -> String {
    respond(attention_json(seed as u64, frames as usize))
}
