//! Spatio-temporal encoder: graph convolutions per frame, node-mean pooling,
//! then softmax attention over frames.
//!
//! Each layer computes `dropout(ReLU(Â · H · W + b))` where `Â` is the
//! symmetric normalized adjacency with self-loops. Dropout is inverted (kept
//! activations are scaled by `1/(1−p)`) and only active in training. The
//! clip embedding is `e = Σ_t α_t h_t` with `α = softmax(a · h_t + c)`.
//!
//! A clip is processed with its frames stacked into one `(T·V) × d` matrix so
//! the dense products run as single matrix multiplications; the adjacency
//! product is applied block by block.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::mesh::FrameGraph;
use crate::rng::{self, Stream};

pub const INPUT_DIM: usize = 3;
pub const LAYER_DIMS: [usize; 3] = [64, 64, 256];
pub const DROPOUT: f64 = 0.3;

/// Input width and the output width of every graph-convolution layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelShape {
    pub input_dim: usize,
    pub layer_dims: Vec<usize>,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            input_dim: INPUT_DIM,
            layer_dims: LAYER_DIMS.to_vec(),
        }
    }
}

impl ModelShape {
    pub fn embedding_dim(&self) -> usize {
        *self.layer_dims.last().expect("at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `d_in × d_out`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
    pub attention: Array1<f64>,
    pub attention_bias: f64,
    pub dropout: f64,
}

/// Gradients, congruent with [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
    pub attention: Array1<f64>,
    pub attention_bias: f64,
}

pub fn init_params(seed: u64) -> ModelParams {
    init_params_with(&ModelShape::default(), seed)
}

/// Weights uniform in `±sqrt(6/fan_in)`, biases zero.
pub fn init_params_with(shape: &ModelShape, seed: u64) -> ModelParams {
    let mut rng = rng::stream(seed, &["init".into()]);
    let mut uniform = |rows: usize, cols: usize| {
        let bound = (6.0 / rows as f64).sqrt();
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
    };
    let mut layers = Vec::with_capacity(shape.layer_dims.len());
    let mut d_in = shape.input_dim;
    for &d_out in &shape.layer_dims {
        layers.push(Layer {
            weight: uniform(d_in, d_out),
            bias: Array1::zeros(d_out),
        });
        d_in = d_out;
    }
    let attention = uniform(d_in, 1).column(0).to_owned();
    ModelParams {
        layers,
        attention,
        attention_bias: 0.0,
        dropout: DROPOUT,
    }
}

impl ModelParams {
    pub fn shape(&self) -> ModelShape {
        ModelShape {
            input_dim: self.layers.first().map_or(0, |l| l.weight.nrows()),
            layer_dims: self.layers.iter().map(|l| l.weight.ncols()).collect(),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.attention.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        let mut d_in = self.layers[0].weight.nrows();
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weight.nrows() != d_in || layer.bias.len() != layer.weight.ncols() {
                return Err(Error::Shape(format!("layer {l} does not chain")));
            }
            d_in = layer.weight.ncols();
        }
        if self.attention.len() != d_in {
            return Err(Error::Shape(format!(
                "attention vector has {} entries, embedding has {d_in}",
                self.attention.len()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        let finite = self.layers.iter().all(|l| {
            l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        }) && self.attention.iter().all(|v| v.is_finite())
            && self.attention_bias.is_finite();
        if !finite {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    /// Parameter tensors in canonical order: `(name, dims, values)`.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((
                format!("gcn.{l}.weight"),
                layer.weight.shape().to_vec(),
                layer.weight.as_slice().expect("standard layout"),
            ));
            out.push((
                format!("gcn.{l}.bias"),
                vec![layer.bias.len()],
                layer.bias.as_slice().expect("standard layout"),
            ));
        }
        out.push((
            "attention.weight".into(),
            vec![self.attention.len()],
            self.attention.as_slice().expect("standard layout"),
        ));
        out.push(("attention.bias".into(), vec![], std::slice::from_ref(&self.attention_bias)));
        out
    }

    /// Mutable views of the trainable values, same order as [`tensors`](Self::tensors).
    pub fn values_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.attention.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(&mut self.attention_bias));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Gradients {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
            attention: Array1::zeros(params.attention.len()),
            attention_bias: 0.0,
        }
    }

    pub fn values(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            out.push(layer.weight.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
        }
        out.push(self.attention.as_slice().expect("standard layout"));
        out.push(std::slice::from_ref(&self.attention_bias));
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
        self.attention += &other.attention;
        self.attention_bias += other.attention_bias;
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
        self.attention *= factor;
        self.attention_bias *= factor;
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Whether dropout masks are sampled (training) or not (evaluation).
pub enum Dropout<'a> {
    Off,
    Sample(&'a mut Stream),
}

impl Dropout<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Dropout::Sample(_))
    }
}

/// Inverted-dropout mask: entries are 0 or `1/(1−p)`.
pub fn sample_mask(rows: usize, cols: usize, p: f64, rng: &mut impl RngCore) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    let threshold = (p * 4_294_967_296.0) as u64;
    Array2::from_shape_simple_fn((rows, cols), || {
        if (rng.next_u32() as u64) < threshold {
            0.0
        } else {
            keep
        }
    })
}

/// One graph convolution on a single frame with a dense adjacency.
///
/// `dropout_mask` holds 0/1 entries; kept activations are divided by `1−p`.
pub fn gcn_layer_forward(
    h_in: ArrayView2<f64>,
    norm_adjacency: ArrayView2<f64>,
    weight: ArrayView2<f64>,
    bias: ArrayView1<f64>,
    dropout_mask: Option<ArrayView2<f64>>,
    p: f64,
) -> Result<Array2<f64>> {
    let v = h_in.nrows();
    if norm_adjacency.dim() != (v, v) || weight.nrows() != h_in.ncols() || bias.len() != weight.ncols() {
        return Err(Error::Shape(format!(
            "H {:?}, Â {:?}, W {:?}, b {}",
            h_in.dim(),
            norm_adjacency.dim(),
            weight.dim(),
            bias.len()
        )));
    }
    let mut out = norm_adjacency.dot(&h_in).dot(&weight) + &bias;
    out.mapv_inplace(|z| z.max(0.0));
    if let Some(mask) = dropout_mask {
        if mask.dim() != out.dim() {
            return Err(Error::Shape(format!("mask {:?} vs output {:?}", mask.dim(), out.dim())));
        }
        let keep = 1.0 / (1.0 - p);
        out.zip_mut_with(&mask, |o, &m| *o *= m * keep);
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("graph convolution output".into()));
    }
    Ok(out)
}

/// Clip-level output of the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipEmbedding {
    pub embedding: Array1<f64>,
    pub attention: Array1<f64>,
    /// `T × d` per-frame embeddings.
    pub frame_embeddings: Array2<f64>,
    /// First frame attaining the largest attention weight.
    pub t_max: usize,
}

/// Softmax attention over frame embeddings.
pub fn attention_pool(frame_embeddings: ArrayView2<f64>, params: &ModelParams) -> Result<ClipEmbedding> {
    let t = frame_embeddings.nrows();
    if t == 0 {
        return Err(Error::Empty("attention pooling needs at least one frame"));
    }
    if frame_embeddings.ncols() != params.attention.len() {
        return Err(Error::Shape(format!(
            "frame embeddings have width {}, attention expects {}",
            frame_embeddings.ncols(),
            params.attention.len()
        )));
    }
    let scores = frame_embeddings.dot(&params.attention) + params.attention_bias;
    let max = scores.fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let mut alpha = scores.mapv(|s| (s - max).exp());
    let z = alpha.sum();
    alpha /= z;
    let embedding = alpha.dot(&frame_embeddings);
    let mut t_max = 0;
    for (i, &a) in alpha.iter().enumerate() {
        if a > alpha[t_max] {
            t_max = i;
        }
    }
    Ok(ClipEmbedding {
        embedding,
        attention: alpha,
        frame_embeddings: frame_embeddings.to_owned(),
        t_max,
    })
}

struct LayerTape {
    /// `Â · H_in`, stacked over frames.
    propagated: Array2<f64>,
    /// `∂h_out/∂z` elementwise: the dropout scale where `z > 0`, else 0.
    gate: Array2<f64>,
}

/// Activations of a training-mode forward pass, kept for [`backward`].
pub struct GradientTape<'g> {
    graphs: &'g [FrameGraph],
    nodes: usize,
    layers: Vec<LayerTape>,
    pub output: ClipEmbedding,
}

fn check_graphs(graphs: &[FrameGraph], params: &ModelParams) -> Result<usize> {
    let first = graphs.first().ok_or(Error::Empty("clip has no frames"))?;
    let v = first.node_count();
    for (t, g) in graphs.iter().enumerate() {
        if g.node_count() != v {
            return Err(Error::Shape(format!("frame {t} has {} nodes, frame 0 has {v}", g.node_count())));
        }
        if g.node_features.ncols() != params.layers[0].weight.nrows() {
            return Err(Error::Shape(format!(
                "node features have width {}, model expects {}",
                g.node_features.ncols(),
                params.layers[0].weight.nrows()
            )));
        }
    }
    Ok(v)
}

fn propagate_stacked(graphs: &[FrameGraph], v: usize, input: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(input.raw_dim());
    for (t, g) in graphs.iter().enumerate() {
        let rows = s![t * v..(t + 1) * v, ..];
        g.adjacency.propagate_into(input.slice(rows), out.slice_mut(rows));
    }
    out
}

fn run_forward<'g>(
    graphs: &'g [FrameGraph],
    params: &ModelParams,
    mut dropout: Dropout<'_>,
    keep_tape: bool,
) -> Result<(ClipEmbedding, Vec<LayerTape>, usize)> {
    let v = check_graphs(graphs, params)?;
    let t = graphs.len();
    let d_in = params.layers[0].weight.nrows();
    let mut h = Array2::zeros((t * v, d_in));
    for (i, g) in graphs.iter().enumerate() {
        h.slice_mut(s![i * v..(i + 1) * v, ..]).assign(&g.node_features);
    }

    let mut tape = Vec::new();
    for layer in &params.layers {
        let propagated = propagate_stacked(graphs, v, &h);
        let pre = propagated.dot(&layer.weight) + &layer.bias;
        let mut out = pre.mapv(|z| z.max(0.0));
        let mask = match &mut dropout {
            Dropout::Off => None,
            Dropout::Sample(rng) => {
                let m = sample_mask(out.nrows(), out.ncols(), params.dropout, *rng);
                out *= &m;
                Some(m)
            }
        };
        if keep_tape {
            let mut gate = pre.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
            if let Some(m) = &mask {
                gate *= m;
            }
            tape.push(LayerTape { propagated, gate });
        }
        h = out;
    }

    let d_out = h.ncols();
    let frame_embeddings = h
        .into_shape_with_order((t, v, d_out))
        .expect("contiguous")
        .mean_axis(Axis(1))
        .expect("v > 0");
    if frame_embeddings.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("frame embeddings".into()));
    }
    let pooled = attention_pool(frame_embeddings.view(), params)?;
    Ok((pooled, tape, v))
}

/// Encodes one frame to its graph embedding `h_G`.
pub fn encode_frame(graph: &FrameGraph, params: &ModelParams, dropout: Dropout<'_>) -> Result<Array1<f64>> {
    let (out, _, _) = run_forward(std::slice::from_ref(graph), params, dropout, false)?;
    Ok(out.frame_embeddings.row(0).to_owned())
}

pub fn encode_clip(graphs: &[FrameGraph], params: &ModelParams, dropout: Dropout<'_>) -> Result<ClipEmbedding> {
    run_forward(graphs, params, dropout, false).map(|(out, _, _)| out)
}

/// Forward pass that keeps every activation and dropout mask.
pub fn forward_with_tape<'g>(
    graphs: &'g [FrameGraph],
    params: &ModelParams,
    dropout: Dropout<'_>,
) -> Result<GradientTape<'g>> {
    let (output, layers, nodes) = run_forward(graphs, params, dropout, true)?;
    Ok(GradientTape {
        graphs,
        nodes,
        layers,
        output,
    })
}

/// Parameter gradients of `L` given `∂L/∂e`, exact for the recorded masks.
pub fn backward(grad_embedding: ArrayView1<f64>, tape: &GradientTape<'_>, params: &ModelParams) -> Result<Gradients> {
    let out = &tape.output;
    let d = out.embedding.len();
    if grad_embedding.len() != d || params.attention.len() != d || tape.layers.len() != params.layers.len() {
        return Err(Error::Shape("tape, parameters and upstream gradient disagree".into()));
    }
    let mut grads = Gradients::zeros_like(params);
    let alpha = &out.attention;
    let h = &out.frame_embeddings;
    let t = alpha.len();
    let v = tape.nodes;

    // attention pooling
    let d_alpha = h.dot(&grad_embedding);
    let mean_d_alpha = alpha.dot(&d_alpha);
    let d_scores = alpha * &(d_alpha - mean_d_alpha);
    grads.attention = d_scores.dot(h);
    grads.attention_bias = d_scores.sum();
    let mut d_frames = Array2::zeros((t, d));
    for i in 0..t {
        let mut row = d_frames.row_mut(i);
        row.scaled_add(alpha[i], &grad_embedding);
        row.scaled_add(d_scores[i], &params.attention);
    }

    // node-mean pooling
    let inv_v = 1.0 / v as f64;
    let mut d_h = Array2::zeros((t * v, d));
    for i in 0..t {
        let g = &d_frames.row(i) * inv_v;
        for r in i * v..(i + 1) * v {
            d_h.row_mut(r).assign(&g);
        }
    }

    for (l, (layer, rec)) in params.layers.iter().zip(&tape.layers).enumerate().rev() {
        let mut d_pre = d_h;
        d_pre *= &rec.gate;
        grads.layers[l].weight = rec.propagated.t().dot(&d_pre);
        grads.layers[l].bias = d_pre.sum_axis(Axis(0));
        if l == 0 {
            break;
        }
        let d_propagated = d_pre.dot(&layer.weight.t());
        // Â is symmetric, so its transpose is itself
        d_h = propagate_stacked(tape.graphs, v, &d_propagated);
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("parameter gradients".into()));
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_frame_graph;
    use ndarray::{array, Array};

    fn triangle_graph() -> FrameGraph {
        build_frame_graph(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_configuration_passes_input_through() {
        let h = array![[1.0, 2.0, 0.5], [0.0, 3.0, 1.0]];
        let eye2 = Array2::eye(2);
        let mut w = Array2::zeros((3, 5));
        for i in 0..3 {
            w[[i, i]] = 1.0;
        }
        let b = Array1::zeros(5);
        let out = gcn_layer_forward(h.view(), eye2.view(), w.view(), b.view(), None, 0.3).unwrap();
        assert_eq!(out, h.dot(&w));
    }

    #[test]
    fn triangle_averages_one_hot_rows() {
        let g = triangle_graph();
        let adj = g.dense_adjacency();
        let h = Array2::eye(3);
        let w = Array2::eye(3);
        let out = gcn_layer_forward(h.view(), adj.view(), w.view(), Array1::zeros(3).view(), None, 0.3).unwrap();
        for v in out.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn layer_shape_mismatch_is_an_error() {
        let h = Array2::<f64>::zeros((3, 2));
        let adj = Array2::<f64>::eye(3);
        let w = Array2::<f64>::zeros((3, 4));
        let b = Array1::<f64>::zeros(4);
        assert!(matches!(
            gcn_layer_forward(h.view(), adj.view(), w.view(), b.view(), None, 0.3),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mask_keep_rate_matches_dropout() {
        let mut rng = rng::stream(1, &[]);
        let m = sample_mask(200, 100, 0.3, &mut rng);
        let kept = m.iter().filter(|&&x| x > 0.0).count() as f64 / 20_000.0;
        assert!((kept - 0.7).abs() < 0.02, "{kept}");
        assert!(m.iter().all(|&x| x == 0.0 || (x - 1.0 / 0.7).abs() < 1e-15));
    }

    #[test]
    fn zero_features_and_biases_give_zero_embedding() {
        let mut g = triangle_graph();
        g.node_features.fill(0.0);
        let params = init_params(3);
        let h = encode_frame(&g, &params, Dropout::Off).unwrap();
        assert_eq!(h.len(), 256);
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stacked_engine_matches_dense_layer_chain() {
        let pts: Vec<f64> = (0..12)
            .flat_map(|i| {
                let a = i as f64 * 0.7;
                [a.cos() * (1.0 + 0.1 * i as f64), a.sin(), 0.05 * i as f64]
            })
            .collect();
        let g = build_frame_graph(&pts).unwrap();
        let params = init_params(11);
        let adj = g.dense_adjacency();
        let mut h = g.node_features.clone();
        for layer in &params.layers {
            h = gcn_layer_forward(h.view(), adj.view(), layer.weight.view(), layer.bias.view(), None, 0.3).unwrap();
        }
        let expected = h.mean_axis(Axis(0)).unwrap();
        let got = encode_frame(&g, &params, Dropout::Off).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_scores_give_uniform_attention() {
        let params = init_params(0);
        let row = Array::linspace(0.0, 1.0, 256);
        let frames = Array2::from_shape_fn((4, 256), |(_, j)| row[j]);
        let out = attention_pool(frames.view(), &params).unwrap();
        for &a in &out.attention {
            assert!((a - 0.25).abs() < 1e-15);
        }
        for (e, r) in out.embedding.iter().zip(&row) {
            assert!((e - r).abs() < 1e-12);
        }
        assert_eq!(out.t_max, 0);
    }

    #[test]
    fn singleton_clip_has_unit_attention() {
        let params = init_params(0);
        let frames = Array2::from_shape_fn((1, 256), |(_, j)| j as f64);
        let out = attention_pool(frames.view(), &params).unwrap();
        assert_eq!(out.attention[0], 1.0);
        assert_eq!(out.embedding, frames.row(0));
    }

    #[test]
    fn saturated_score_dominates() {
        // Frame 2 scores +20 above the rest: α₂ = 1/(1 + 4e^-20).
        let mut params = init_params(0);
        params.attention.fill(0.0);
        params.attention[0] = 1.0;
        let mut frames = Array2::from_shape_fn((5, 256), |(t, j)| ((t + j) % 7) as f64 * 0.1);
        for t in 0..5 {
            frames[[t, 0]] = 0.0;
        }
        frames[[2, 0]] = 20.0;
        let out = attention_pool(frames.view(), &params).unwrap();
        let expected = 1.0 / (1.0 + 4.0 * (-20.0f64).exp());
        assert!((out.attention[2] - expected).abs() < 1e-15);
        assert!(out.attention[2] > 0.999);
        assert_eq!(out.t_max, 2);
        for (e, f) in out.embedding.iter().zip(frames.row(2)) {
            assert!((e - f).abs() < 1e-3);
        }
    }

    #[test]
    fn empty_clip_is_an_error() {
        let params = init_params(0);
        let frames = Array2::<f64>::zeros((0, 256));
        assert!(matches!(attention_pool(frames.view(), &params), Err(Error::Empty(_))));
        assert!(matches!(encode_clip(&[], &params, Dropout::Off), Err(Error::Empty(_))));
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(5);
        let b = init_params(5);
        let c = init_params(6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for layer in &a.layers {
            let bound = (6.0 / layer.weight.nrows() as f64).sqrt();
            assert!(layer.weight.iter().all(|w| w.abs() <= bound));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
        assert!(a.attention.iter().all(|w| w.abs() <= (6.0f64 / 256.0).sqrt()));
        assert_eq!(a.parameter_count(), 3 * 64 + 64 + 64 * 64 + 64 + 64 * 256 + 256 + 256 + 1);
        a.validate().unwrap();
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let g = triangle_graph();
        let graphs = vec![g.clone(), g];
        let params = init_params(2);
        let tape = forward_with_tape(&graphs, &params, Dropout::Off).unwrap();
        let grads = backward(Array1::zeros(256).view(), &tape, &params).unwrap();
        assert!(grads.values().iter().all(|s| s.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn singleton_clip_attention_gradient_is_zero() {
        let pts = [0.0, 0.0, 0.3, 1.0, 0.2, -0.1, 0.1, 1.0, 0.4, 0.9, 0.8, 0.0];
        let graphs = vec![build_frame_graph(&pts).unwrap()];
        let params = init_params(4);
        let tape = forward_with_tape(&graphs, &params, Dropout::Off).unwrap();
        let upstream = Array1::from_shape_fn(256, |i| (i as f64 * 0.37).sin());
        let grads = backward(upstream.view(), &tape, &params).unwrap();
        assert!(grads.attention.iter().all(|&x| x == 0.0));
        assert_eq!(grads.attention_bias, 0.0);
    }
}
