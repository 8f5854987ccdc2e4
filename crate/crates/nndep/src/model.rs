//! Dense feedforward networks: load/save, forward pass with activation
//! capture, prediction, FLOP counting, neuron pruning, and a small SGD
//! trainer for desk-scale runs.
//!
//! The model file is JSON with explicit shapes and row-major weight arrays:
//!
//! ```json
//! {"class_names": ["a", "b"],
//!  "monitored_layer": 0,
//!  "layers": [{"in": 2, "out": 3, "activation": "relu",
//!              "weights": [...], "bias": [...]}]}
//! ```
//!
//! All arithmetic is f64. The affine step accumulates `bias + Σ w·x` in
//! ascending input order; interval propagation relies on this exact order
//! for bit-level soundness, so keep the two in lockstep.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{indexed_seed, Rng};

/// Mini-batch size used by the trainer.
pub const BATCH_SIZE: usize = 16;

/// Elementwise nonlinearity of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
    Softmax,
}

/// One fully connected layer. Weights are row-major `out_dim x in_dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    /// Affine step `bias + W x`, no activation.
    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.out_dim {
            let mut acc = self.bias[row];
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            for (wi, xi) in w.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Post-activation values for every layer, plus the final probability vector.
#[derive(Debug, Clone)]
pub struct LayerActivations {
    pub per_layer: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// A validated dense network with a designated monitored layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub class_names: Vec<String>,
    pub monitored_layer: usize,
    pub layers: Vec<DenseLayer>,
}

impl Model {
    /// Validates all structural invariants; every constructor path funnels here.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidData("model has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_dim == 0 || layer.out_dim == 0 {
                return Err(Error::Dimension(format!("layer {i} has a zero dimension")));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim {
                return Err(Error::Dimension(format!(
                    "layer {i}: weights length {} != in*out = {}",
                    layer.weights.len(),
                    layer.in_dim * layer.out_dim
                )));
            }
            if layer.bias.len() != layer.out_dim {
                return Err(Error::Dimension(format!(
                    "layer {i}: bias length {} != out dim {}",
                    layer.bias.len(),
                    layer.out_dim
                )));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        for i in 0..self.layers.len() - 1 {
            let (a, b) = (&self.layers[i], &self.layers[i + 1]);
            if a.out_dim != b.in_dim {
                return Err(Error::Dimension(format!(
                    "layer {i} out dim {} != layer {} in dim {}",
                    a.out_dim,
                    i + 1,
                    b.in_dim
                )));
            }
        }
        if self.monitored_layer >= self.layers.len() {
            return Err(Error::InvalidData(format!(
                "monitored layer {} out of range for {} layers",
                self.monitored_layer,
                self.layers.len()
            )));
        }
        let last = self.layers.last().unwrap();
        if last.activation != Activation::Softmax {
            return Err(Error::InvalidData(
                "final layer activation must be softmax".into(),
            ));
        }
        if self.class_names.len() != last.out_dim {
            return Err(Error::Dimension(format!(
                "{} class names for output dim {}",
                self.class_names.len(),
                last.out_dim
            )));
        }
        Ok(())
    }

    /// Randomly initialized network: relu hidden layers, softmax output.
    /// He-scaled weights (`N(0, 2/in)`), zero bias.
    pub fn init_random(
        dims: &[usize],
        monitored_layer: usize,
        class_names: Vec<String>,
        seed: u64,
    ) -> Result<Model> {
        if dims.len() < 2 {
            return Err(Error::InvalidData("need at least input and output dims".into()));
        }
        let mut rng = Rng::new(seed);
        let n_layers = dims.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (in_dim, out_dim) = (dims[l], dims[l + 1]);
                let scale = (2.0 / in_dim as f64).sqrt();
                DenseLayer {
                    in_dim,
                    out_dim,
                    activation: if l + 1 == n_layers {
                        Activation::Softmax
                    } else {
                        Activation::Relu
                    },
                    weights: (0..in_dim * out_dim)
                        .map(|_| rng.next_normal() * scale)
                        .collect(),
                    bias: vec![0.0; out_dim],
                }
            })
            .collect();
        let model = Model {
            class_names,
            monitored_layer,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    /// Width of the monitored layer's output.
    pub fn monitored_width(&self) -> usize {
        self.layers[self.monitored_layer].out_dim
    }

    /// Forward pass capturing every layer's post-activation output.
    pub fn forward_capture(&self, input: &[f64]) -> Result<LayerActivations> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input length {} != model input dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        let mut pre = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&current, &mut pre);
            current = apply_activation(layer.activation, &pre);
            if current.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("activations at layer {i}")));
            }
            per_layer.push(current.clone());
        }
        let output = per_layer.last().unwrap().clone();
        Ok(LayerActivations { per_layer, output })
    }

    /// Exact forward pass starting at layer `from_layer`, whose input is `input`.
    pub fn forward_from(&self, from_layer: usize, input: &[f64]) -> Result<Vec<f64>> {
        if from_layer >= self.layers.len() {
            return Err(Error::InvalidParam(format!(
                "from_layer {} out of range for {} layers",
                from_layer,
                self.layers.len()
            )));
        }
        if input.len() != self.layers[from_layer].in_dim {
            return Err(Error::Dimension(format!(
                "input length {} != layer {} in dim {}",
                input.len(),
                from_layer,
                self.layers[from_layer].in_dim
            )));
        }
        let mut current = input.to_vec();
        let mut pre = Vec::new();
        for (i, layer) in self.layers[from_layer..].iter().enumerate() {
            layer.affine(&current, &mut pre);
            current = apply_activation(layer.activation, &pre);
            if current.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "activations at layer {}",
                    from_layer + i
                )));
            }
        }
        Ok(current)
    }

    /// Predicted class and its confidence. Ties break to the lowest index.
    pub fn predict(&self, input: &[f64]) -> Result<(usize, f64)> {
        let acts = self.forward_capture(input)?;
        Ok(argmax(&acts.output))
    }

    /// Multiply-adds counted as two operations each: `Σ 2·in·out`.
    pub fn flop_count(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| 2 * l.in_dim as u64 * l.out_dim as u64)
            .sum()
    }

    /// Removes the given neurons from a hidden layer, along with the matching
    /// input columns of the next layer. Returns a new model.
    pub fn prune_neurons(&self, layer: usize, neuron_ids: &[usize]) -> Result<Model> {
        if layer + 1 >= self.layers.len() {
            return Err(Error::InvalidParam(
                "cannot prune the output layer".into(),
            ));
        }
        let width = self.layers[layer].out_dim;
        let ids: BTreeSet<usize> = neuron_ids.iter().copied().collect();
        if let Some(&bad) = ids.iter().find(|&&id| id >= width) {
            return Err(Error::InvalidParam(format!(
                "neuron {bad} out of range for layer {layer} width {width}"
            )));
        }
        if ids.len() >= width {
            return Err(Error::InvalidParam(format!(
                "pruning all {width} neurons of layer {layer}"
            )));
        }
        let keep: Vec<usize> = (0..width).filter(|i| !ids.contains(i)).collect();

        let mut model = self.clone();
        let target = &mut model.layers[layer];
        let mut weights = Vec::with_capacity(keep.len() * target.in_dim);
        let mut bias = Vec::with_capacity(keep.len());
        for &row in &keep {
            weights.extend_from_slice(&target.weights[row * target.in_dim..(row + 1) * target.in_dim]);
            bias.push(target.bias[row]);
        }
        target.weights = weights;
        target.bias = bias;
        target.out_dim = keep.len();

        let next = &mut model.layers[layer + 1];
        let mut next_weights = Vec::with_capacity(next.out_dim * keep.len());
        for row in 0..next.out_dim {
            for &col in &keep {
                next_weights.push(next.weights[row * next.in_dim + col]);
            }
        }
        next.weights = next_weights;
        next.in_dim = keep.len();

        model.validate()?;
        Ok(model)
    }
}

fn apply_activation(kind: Activation, pre: &[f64]) -> Vec<f64> {
    match kind {
        Activation::Relu => pre.iter().map(|&z| z.max(0.0)).collect(),
        Activation::Linear => pre.to_vec(),
        Activation::Sigmoid => pre.iter().map(|&z| sigmoid(z)).collect(),
        Activation::Softmax => softmax(pre),
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Max-shifted softmax; sums to 1 within rounding.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Argmax with lowest-index tie-breaking.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

// === persistence ===

/// Loads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: Model = serde_json::from_str(&text).map_err(|e| {
        Error::parse(path.display().to_string(), e.line(), e.to_string())
    })?;
    model.validate()?;
    Ok(model)
}

/// Writes a model as pretty-printed JSON. Parameters survive a round-trip
/// bit-exactly.
pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    model.validate()?;
    let text = serde_json::to_string_pretty(model).expect("model serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

// === training ===

/// Per-layer parameter gradients.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

/// Mean cross-entropy of the model over `(input, label)` pairs.
pub fn batch_loss(model: &Model, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        let out = model.forward_capture(x)?.output;
        total += -out[y].ln();
    }
    Ok(total / inputs.len() as f64)
}

/// Mean cross-entropy loss and its gradients over a batch.
///
/// Softmax plus cross-entropy gives `p - onehot` at the output logits; hidden
/// layers backpropagate through their activation derivative, which for relu
/// and sigmoid is recoverable from the post-activation value.
#[allow(clippy::needless_range_loop)]
pub fn batch_gradients(
    model: &Model,
    inputs: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<LayerGrads>)> {
    let mut grads: Vec<LayerGrads> = model
        .layers
        .iter()
        .map(|l| LayerGrads {
            d_weights: vec![0.0; l.weights.len()],
            d_bias: vec![0.0; l.out_dim],
        })
        .collect();
    let mut total_loss = 0.0;
    let scale = 1.0 / inputs.len() as f64;

    for (x, &y) in inputs.iter().zip(labels) {
        let acts = model.forward_capture(x)?;
        total_loss += -acts.output[y].ln();

        // delta at the output logits
        let mut delta: Vec<f64> = acts.output.clone();
        delta[y] -= 1.0;

        for l in (0..model.layers.len()).rev() {
            let layer = &model.layers[l];
            let layer_input: &[f64] = if l == 0 { x } else { &acts.per_layer[l - 1] };
            let g = &mut grads[l];
            for row in 0..layer.out_dim {
                let d = delta[row] * scale;
                g.d_bias[row] += d;
                let dst = &mut g.d_weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (dw, xi) in dst.iter_mut().zip(layer_input) {
                    *dw += d * xi;
                }
            }
            if l > 0 {
                let prev = &model.layers[l - 1];
                let prev_out = &acts.per_layer[l - 1];
                let mut next_delta = vec![0.0; layer.in_dim];
                for row in 0..layer.out_dim {
                    let d = delta[row];
                    let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                    for (nd, wi) in next_delta.iter_mut().zip(w) {
                        *nd += d * wi;
                    }
                }
                for (nd, &a) in next_delta.iter_mut().zip(prev_out) {
                    *nd *= match prev.activation {
                        Activation::Relu => {
                            if a > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Activation::Linear => 1.0,
                        Activation::Sigmoid => a * (1.0 - a),
                        Activation::Softmax => {
                            // softmax only appears on the final layer
                            unreachable!("softmax on a hidden layer")
                        }
                    };
                }
                delta = next_delta;
            }
        }
    }
    Ok((total_loss * scale, grads))
}

/// Plain mini-batch SGD. Deterministic for a fixed seed: the per-epoch
/// shuffle order and batch walk are fully derived from it.
pub fn fine_tune(
    model: &Model,
    data: &Dataset,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<Model> {
    let inputs: Vec<Vec<f64>> = data.samples.iter().map(|s| s.features.to_vec()).collect();
    let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l >= model.output_dim()) {
        return Err(Error::InvalidData(format!(
            "label {bad} out of range for {} classes",
            model.output_dim()
        )));
    }
    if inputs.iter().any(|x| x.len() != model.input_dim()) {
        return Err(Error::Dimension(
            "dataset feature dim != model input dim".into(),
        ));
    }

    let mut model = model.clone();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..epochs {
        let mut rng = Rng::new(indexed_seed(seed, epoch as u64));
        rng.shuffle(&mut order);
        for batch in order.chunks(BATCH_SIZE) {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| inputs[i].clone()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = batch_gradients(&model, &bx, &by)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    iteration: None,
                });
            }
            for (layer, g) in model.layers.iter_mut().zip(&grads) {
                for (w, dw) in layer.weights.iter_mut().zip(&g.d_weights) {
                    *w -= learning_rate * dw;
                }
                for (b, db) in layer.bias.iter_mut().zip(&g.d_bias) {
                    *b -= learning_rate * db;
                }
            }
        }
    }
    // a final finiteness check doubles as the divergence report
    let loss = batch_loss(&model, &inputs, &labels)?;
    if !loss.is_finite() {
        return Err(Error::Diverged {
            epoch: epochs,
            iteration: None,
        });
    }
    Ok(model)
}

/// Overall and per-class accuracy of `model` on `data`.
///
/// Classes absent from `data` report NaN.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let classes = model.output_dim();
    let mut correct = vec![0usize; classes];
    let mut seen = vec![0usize; classes];
    for sample in &data.samples {
        let (pred, _) = model.predict(&sample.features.to_vec())?;
        seen[sample.label] += 1;
        if pred == sample.label {
            correct[sample.label] += 1;
        }
    }
    let overall = correct.iter().sum::<usize>() as f64 / data.samples.len() as f64;
    let per_class = correct
        .iter()
        .zip(&seen)
        .map(|(&c, &s)| c as f64 / s as f64)
        .collect();
    Ok((overall, per_class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_dataset;

    pub(crate) fn two_layer_fixture() -> Model {
        Model {
            class_names: vec!["a".into(), "b".into()],
            monitored_layer: 0,
            layers: vec![
                DenseLayer {
                    in_dim: 2,
                    out_dim: 3,
                    activation: Activation::Relu,
                    weights: vec![0.5, -0.25, 1.0, 0.75, -0.5, 0.3],
                    bias: vec![0.1, -0.2, 0.0],
                },
                DenseLayer {
                    in_dim: 3,
                    out_dim: 2,
                    activation: Activation::Softmax,
                    weights: vec![0.2, -0.4, 0.6, -0.3, 0.5, 0.1],
                    bias: vec![0.05, -0.05],
                },
            ],
        }
    }

    fn random_model(dims: &[usize], seed: u64) -> Model {
        let classes = (0..*dims.last().unwrap())
            .map(|i| format!("c{i}"))
            .collect();
        Model::init_random(dims, dims.len() - 2, classes, seed).unwrap()
    }

    #[test]
    fn identity_linear_layer_passes_input_through() {
        let model = Model {
            class_names: vec!["a".into(), "b".into()],
            monitored_layer: 0,
            layers: vec![
                DenseLayer {
                    in_dim: 2,
                    out_dim: 2,
                    activation: Activation::Linear,
                    weights: vec![1.0, 0.0, 0.0, 1.0],
                    bias: vec![0.0, 0.0],
                },
                DenseLayer {
                    in_dim: 2,
                    out_dim: 2,
                    activation: Activation::Softmax,
                    weights: vec![1.0, 0.0, 0.0, 1.0],
                    bias: vec![0.0, 0.0],
                },
            ],
        };
        let acts = model.forward_capture(&[1.0, 2.0]).unwrap();
        assert_eq!(acts.per_layer[0], vec![1.0, 2.0]);
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        // single relu "layer" checked via apply_activation
        assert_eq!(apply_activation(Activation::Relu, &[-1.0, 3.0]), vec![0.0, 3.0]);
    }

    #[allow(clippy::needless_range_loop)]
    #[test]
    fn forward_matches_naive_triple_loop_oracle() {
        // independent oracle: naive per-layer matrix multiply
        fn oracle(model: &Model, input: &[f64]) -> Vec<f64> {
            let mut x = input.to_vec();
            for layer in &model.layers {
                let mut z = vec![0.0; layer.out_dim];
                for r in 0..layer.out_dim {
                    z[r] = layer.bias[r];
                    for c in 0..layer.in_dim {
                        z[r] += layer.weights[r * layer.in_dim + c] * input_at(&x, c);
                    }
                }
                x = match layer.activation {
                    Activation::Relu => z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
                    Activation::Linear => z,
                    Activation::Sigmoid => z.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect(),
                    Activation::Softmax => {
                        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
                        let s: f64 = e.iter().sum();
                        e.iter().map(|&v| v / s).collect()
                    }
                };
            }
            x
        }
        fn input_at(x: &[f64], i: usize) -> f64 {
            x[i]
        }

        let model = random_model(&[3, 5, 4, 2], 11);
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let input: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
            let got = model.forward_capture(&input).unwrap().output;
            let want = oracle(&model, &input);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "got {g} want {w}");
            }
        }
    }

    #[test]
    fn softmax_output_is_a_distribution() {
        let model = random_model(&[4, 6, 3], 5);
        let mut rng = Rng::new(1);
        for _ in 0..50 {
            let input: Vec<f64> = (0..4).map(|_| rng.next_normal() * 3.0).collect();
            let out = model.forward_capture(&input).unwrap().output;
            let sum: f64 = out.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(out.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn predict_argmax_and_tie_break() {
        assert_eq!(argmax(&[0.3, 0.7]), (1, 0.7));
        assert_eq!(argmax(&[0.5, 0.5]), (0, 0.5));
    }

    #[test]
    fn predict_agrees_with_forward_capture() {
        let model = random_model(&[3, 8, 4], 21);
        let mut rng = Rng::new(2);
        for _ in 0..100 {
            let input: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
            let (cls, conf) = model.predict(&input).unwrap();
            let out = model.forward_capture(&input).unwrap().output;
            let (want_cls, want_conf) = argmax(&out);
            assert_eq!(cls, want_cls);
            assert_eq!(conf, want_conf);
        }
    }

    #[test]
    fn flop_count_single_layer() {
        let mut model = two_layer_fixture();
        model.layers.truncate(1);
        // 2 -> 3 layer alone: 2*2*3 = 12
        assert_eq!(
            model.layers[0].in_dim as u64 * model.layers[0].out_dim as u64 * 2,
            12
        );
        assert_eq!(two_layer_fixture().flop_count(), 12 + 2 * 3 * 2);
    }

    #[test]
    fn prune_shrinks_adjacent_shapes() {
        let model = random_model(&[2, 4, 3], 7);
        let pruned = model.prune_neurons(0, &[2]).unwrap();
        assert_eq!(pruned.layers[0].out_dim, 3);
        assert_eq!(pruned.layers[1].in_dim, 3);
        // flop accounting: both touching layers shrink proportionally
        assert!(pruned.flop_count() < model.flop_count());
    }

    #[test]
    fn prune_halving_halves_adjacent_flops() {
        let model = random_model(&[2, 4, 3], 7);
        let pruned = model.prune_neurons(0, &[0, 2]).unwrap();
        let before = 2 * (2 * 4 + 4 * 3) as u64;
        let after = 2 * (2 * 2 + 2 * 3) as u64;
        assert_eq!(model.flop_count(), before);
        assert_eq!(pruned.flop_count(), after);
    }

    #[test]
    fn prune_equals_masked_forward_oracle() {
        // oracle: force the pruned neurons' activations to zero instead
        let model = random_model(&[3, 6, 4, 2], 13);
        let pruned_ids = vec![1usize, 4];
        let pruned = model.prune_neurons(0, &pruned_ids).unwrap();
        let mut rng = Rng::new(3);
        for _ in 0..50 {
            let input: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
            let got = pruned.forward_capture(&input).unwrap().output;

            let acts = model.forward_capture(&input).unwrap();
            let mut masked = acts.per_layer[0].clone();
            for &id in &pruned_ids {
                masked[id] = 0.0;
            }
            let want = model.forward_from(1, &masked).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g, w, "pruned forward must equal masked forward exactly");
            }
        }
    }

    #[test]
    fn prune_zero_column_neuron_changes_nothing() {
        // neuron 2's outgoing column in layer 1 is zero, so deleting it
        // cannot move any output
        let mut model = random_model(&[3, 4, 2], 31);
        for row in 0..model.layers[1].out_dim {
            let in_dim = model.layers[1].in_dim;
            model.layers[1].weights[row * in_dim + 2] = 0.0;
        }
        let pruned = model.prune_neurons(0, &[2]).unwrap();
        let mut rng = Rng::new(5);
        for _ in 0..30 {
            let input: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
            let a = model.forward_capture(&input).unwrap().output;
            let b = pruned.forward_capture(&input).unwrap().output;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn prune_rejects_output_layer_and_emptying() {
        let model = random_model(&[2, 4, 3], 7);
        assert!(model.prune_neurons(1, &[0]).is_err());
        assert!(model.prune_neurons(0, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let model = random_model(&[3, 5, 2], 17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model.class_names, loaded.class_names);
        assert_eq!(model.monitored_layer, loaded.monitored_layer);
        for (a, b) in model.layers.iter().zip(&loaded.layers) {
            assert_eq!(a.in_dim, b.in_dim);
            assert_eq!(a.out_dim, b.out_dim);
            assert_eq!(a.activation, b.activation);
            assert!(a.weights.iter().zip(&b.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(a.bias.iter().zip(&b.bias).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn load_reports_bias_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"class_names":["a","b"],"monitored_layer":0,"layers":[
                {"in":2,"out":3,"activation":"relu","weights":[0,0,0,0,0,0],"bias":[0,0]},
                {"in":3,"out":2,"activation":"softmax","weights":[0,0,0,0,0,0],"bias":[0,0]}]}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)), "{err}");
    }

    #[test]
    fn load_reports_adjacent_dim_mismatch_naming_layers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"class_names":["a","b"],"monitored_layer":0,"layers":[
                {"in":2,"out":3,"activation":"relu","weights":[0,0,0,0,0,0],"bias":[0,0,0]},
                {"in":4,"out":2,"activation":"softmax","weights":[0,0,0,0,0,0,0,0],"bias":[0,0]}]}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layer 0") && msg.contains("layer 1"), "{msg}");
    }

    #[test]
    fn minimal_two_layer_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("min.json");
        std::fs::write(
            &path,
            r#"{"class_names":["a","b"],"monitored_layer":0,"layers":[
                {"in":2,"out":3,"activation":"relu","weights":[1,0,0,1,1,1],"bias":[0,0,0]},
                {"in":3,"out":2,"activation":"softmax","weights":[1,0,0,0,1,0],"bias":[0,0]}]}"#,
        )
        .unwrap();
        let model = load_model(&path).unwrap();
        assert_eq!(model.layers.len(), 2);
    }

    #[allow(clippy::needless_range_loop)]
    #[test]
    fn gradients_match_central_finite_differences() {
        let model = two_layer_fixture();
        let inputs = vec![vec![0.4, -0.7], vec![-0.2, 0.9], vec![1.1, 0.3]];
        let labels = vec![0, 1, 1];
        let (_, grads) = batch_gradients(&model, &inputs, &labels).unwrap();

        let eps = 1e-4;
        let mut checked = 0;
        for l in 0..model.layers.len() {
            for wi in 0..model.layers[l].weights.len() {
                let mut plus = model.clone();
                plus.layers[l].weights[wi] += eps;
                let mut minus = model.clone();
                minus.layers[l].weights[wi] -= eps;
                let numeric = (batch_loss(&plus, &inputs, &labels).unwrap()
                    - batch_loss(&minus, &inputs, &labels).unwrap())
                    / (2.0 * eps);
                let analytic = grads[l].d_weights[wi];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    ((numeric - analytic) / denom).abs() < 1e-3,
                    "layer {l} w{wi}: numeric {numeric} analytic {analytic}"
                );
                checked += 1;
            }
        }
        assert!(checked >= 12);
    }

    #[test]
    fn zero_epochs_leaves_parameters_unchanged() {
        let model = two_layer_fixture();
        let data = synth_dataset(20, 0.05, 1).unwrap();
        let tuned = fine_tune(&model, &data, 0, 0.1, 0).unwrap();
        for (a, b) in model.layers.iter().zip(&tuned.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn fine_tune_is_deterministic_per_seed() {
        let data = synth_dataset(30, 0.07, 5).unwrap();
        let model = random_model(&[2, 8, 2], 1);
        let a = fine_tune(&model, &data, 5, 0.1, 42).unwrap();
        let b = fine_tune(&model, &data, 5, 0.1, 42).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert!(la.weights.iter().zip(&lb.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(la.bias.iter().zip(&lb.bias).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let c = fine_tune(&model, &data, 5, 0.1, 43).unwrap();
        assert!(a.layers[0].weights != c.layers[0].weights);
    }

    #[test]
    fn trains_two_cluster_task_to_high_accuracy() {
        let data = synth_dataset(60, 0.07, 9).unwrap();
        let model = random_model(&[2, 16, 8, 2], 3);
        let tuned = fine_tune(&model, &data, 50, 0.15, 7).unwrap();
        let (acc, _) = evaluate(&tuned, &data).unwrap();
        assert!(acc >= 0.95, "training accuracy {acc}");
    }
}
