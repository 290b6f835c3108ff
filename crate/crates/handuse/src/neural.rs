//! From-scratch multilayer perceptron over the nine detection features.
//!
//! Architecture is fixed at 9 → 32 → 16 → 2: two rectified hidden layers and
//! a two-way softmax head. Training is plain stochastic gradient descent on
//! weighted cross-entropy (inverse class-frequency weights), with early
//! stopping on a validation split carved from the training subjects, and is
//! bit-for-bit reproducible given a seed: initialization, the
//! validation split and every shuffle flow from one seeded generator.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{pool_majority, InteractionProfile, PoolingConfig};
use crate::error::{Error, Result};
use crate::eval::LosoSplit;
use crate::ingest::{AnnotationRecord, DetectionRecord, HandSide, SessionManifest};

/// Layer widths, input to output.
pub const LAYER_SIZES: [usize; 4] = [9, 32, 16, 2];

/// The nine detector features in fixed order:
/// (x1, y1, x2, y2, confidence, contact_state/4, dx, dy, magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 9]);

/// Map a detection record onto the feature vector. The contact state is fed
/// as a scaled scalar (state/4) to keep the input dimension at nine.
pub fn featurize(record: &DetectionRecord) -> FeatureVector {
    FeatureVector([
        record.bbox.x1,
        record.bbox.y1,
        record.bbox.x2,
        record.bbox.y2,
        record.confidence,
        record.contact_state.code() as f64 / 4.0,
        record.offset.dx,
        record.offset.dy,
        record.offset.magnitude,
    ])
}

/// One dense layer; weights are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeroed(in_dim: usize, out_dim: usize) -> Layer {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    fn affine(&self, input: &[f64], output: &mut [f64]) {
        for (o, out) in output.iter_mut().enumerate().take(self.out_dim) {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            *out = acc;
        }
    }
}

/// The classifier: parameters plus the seed it was initialized from.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    pub seed: u64,
}

impl MlpModel {
    /// All-zero parameters (softmax then yields (0.5, 0.5) everywhere).
    pub fn zeroed() -> MlpModel {
        MlpModel {
            layers: LAYER_SIZES
                .windows(2)
                .map(|w| Layer::zeroed(w[0], w[1]))
                .collect(),
            seed: 0,
        }
    }

    /// Scaled uniform initialization (±sqrt(6/(fan_in+fan_out))) from a
    /// seeded generator; biases start at zero.
    pub fn new_seeded(seed: u64) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = MlpModel::zeroed();
        model.seed = seed;
        for layer in &mut model.layers {
            let limit = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        model
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() != LAYER_SIZES.len() - 1 {
            return Err(Error::Numeric(format!(
                "model has {} layers, expected {}",
                self.layers.len(),
                LAYER_SIZES.len() - 1
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_dim != LAYER_SIZES[i]
                || layer.out_dim != LAYER_SIZES[i + 1]
                || layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::Numeric(format!("layer {i} has wrong dimensions")));
            }
            if layer
                .weights
                .iter()
                .chain(&layer.biases)
                .any(|v| !v.is_finite())
            {
                return Err(Error::Numeric(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Read one parameter by flat index (layer weights then biases, in layer
    /// order). Used by the finite-difference checks.
    pub fn get_param(&self, index: usize) -> f64 {
        let mut i = index;
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                layer.weights[i] = value;
                return;
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                layer.biases[i] = value;
                return;
            }
            i -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// One SGD step: theta <- theta - lr * grad.
    pub fn sgd_step(&mut self, grad: &MlpGradient, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * gb;
            }
        }
    }

    /// Write a versioned checkpoint (JSON; floats keep full round-trip
    /// precision).
    pub fn save<W: Write>(&self, writer: &mut W) -> Result<()> {
        self.validate()?;
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            layer_sizes: LAYER_SIZES.to_vec(),
            seed: self.seed,
            weights: self.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: self.layers.iter().map(|l| l.biases.clone()).collect(),
        };
        serde_json::to_writer(&mut *writer, &file)
            .map_err(|e| Error::Numeric(format!("cannot encode checkpoint: {e}")))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Load a checkpoint, validating format, version and dimensions.
    pub fn load<R: Read>(reader: R) -> Result<MlpModel> {
        let file: CheckpointFile =
            serde_json::from_reader(reader).map_err(|e| Error::Validation {
                field: "checkpoint".to_string(),
                message: e.to_string(),
            })?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Validation {
                field: "format".to_string(),
                message: format!("expected '{CHECKPOINT_FORMAT}', found '{}'", file.format),
            });
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Validation {
                field: "version".to_string(),
                message: format!("unsupported checkpoint version {}", file.version),
            });
        }
        if file.layer_sizes != LAYER_SIZES {
            return Err(Error::Validation {
                field: "layer_sizes".to_string(),
                message: format!("expected {LAYER_SIZES:?}, found {:?}", file.layer_sizes),
            });
        }
        if file.weights.len() != LAYER_SIZES.len() - 1 || file.biases.len() != LAYER_SIZES.len() - 1
        {
            return Err(Error::Validation {
                field: "weights".to_string(),
                message: "layer count mismatch".to_string(),
            });
        }
        let mut model = MlpModel::zeroed();
        model.seed = file.seed;
        for (i, layer) in model.layers.iter_mut().enumerate() {
            if file.weights[i].len() != layer.weights.len()
                || file.biases[i].len() != layer.biases.len()
            {
                return Err(Error::Validation {
                    field: format!("weights[{i}]"),
                    message: "parameter count mismatch".to_string(),
                });
            }
            layer.weights = file.weights[i].clone();
            layer.biases = file.biases[i].clone();
        }
        model.validate()?;
        Ok(model)
    }
}

const CHECKPOINT_FORMAT: &str = "handuse-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    seed: u64,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Gradient with the model's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    layers: Vec<Layer>,
}

impl MlpGradient {
    fn zeroed() -> MlpGradient {
        MlpGradient {
            layers: LAYER_SIZES
                .windows(2)
                .map(|w| Layer::zeroed(w[0], w[1]))
                .collect(),
        }
    }

    pub fn get_param(&self, index: usize) -> f64 {
        let mut i = index;
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.biases.len() {
                return layer.biases[i];
            }
            i -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.biases {
                *b *= factor;
            }
        }
    }
}

/// Per-class loss weights. Inverse class frequency by default; absent
/// classes get weight 0 and a warning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w0: f64,
    pub w1: f64,
}

impl ClassWeights {
    pub fn uniform() -> ClassWeights {
        ClassWeights { w0: 1.0, w1: 1.0 }
    }

    /// w_c = n_total / (2 * n_c); a class with no samples gets weight 0.
    pub fn inverse_frequency(labels: &[u8]) -> ClassWeights {
        let n1 = labels.iter().filter(|&&l| l == 1).count();
        let n0 = labels.len() - n1;
        let total = labels.len() as f64;
        let weight = |count: usize| {
            if count == 0 {
                log::warn!(
                    "training labels contain a single class; the model can only learn that class"
                );
                0.0
            } else {
                total / (2.0 * count as f64)
            }
        };
        ClassWeights {
            w0: weight(n0),
            w1: weight(n1),
        }
    }

    pub fn for_label(&self, label: u8) -> f64 {
        if label == 0 {
            self.w0
        } else {
            self.w1
        }
    }
}

struct ForwardTrace {
    z1: [f64; 32],
    a1: [f64; 32],
    z2: [f64; 16],
    a2: [f64; 16],
    probs: [f64; 2],
    /// logsumexp(z3) - z3[y] terms need the logits.
    z3: [f64; 2],
}

fn forward_trace(model: &MlpModel, input: &[f64; 9]) -> ForwardTrace {
    let mut trace = ForwardTrace {
        z1: [0.0; 32],
        a1: [0.0; 32],
        z2: [0.0; 16],
        a2: [0.0; 16],
        probs: [0.0; 2],
        z3: [0.0; 2],
    };
    model.layers[0].affine(input, &mut trace.z1);
    for (a, z) in trace.a1.iter_mut().zip(&trace.z1) {
        *a = z.max(0.0);
    }
    model.layers[1].affine(&trace.a1, &mut trace.z2);
    for (a, z) in trace.a2.iter_mut().zip(&trace.z2) {
        *a = z.max(0.0);
    }
    model.layers[2].affine(&trace.a2, &mut trace.z3);
    let m = trace.z3[0].max(trace.z3[1]);
    let e0 = (trace.z3[0] - m).exp();
    let e1 = (trace.z3[1] - m).exp();
    let sum = e0 + e1;
    trace.probs = [e0 / sum, e1 / sum];
    trace
}

/// Class probabilities (p_nointeraction, p_interaction) for one feature
/// vector. Components are nonnegative and sum to 1 within 1e-12.
pub fn forward(model: &MlpModel, features: &FeatureVector) -> Result<(f64, f64)> {
    model.validate()?;
    if features.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature input".to_string()));
    }
    let trace = forward_trace(model, &features.0);
    Ok((trace.probs[0], trace.probs[1]))
}

/// Mean weighted cross-entropy over a batch together with its gradient.
/// The loss is (1/B) * sum_i w_{y_i} * (-ln p_{y_i}), so scaling the class
/// weights scales loss and gradient linearly.
pub fn loss_and_gradient(
    model: &MlpModel,
    batch: &[(FeatureVector, u8)],
    weights: &ClassWeights,
) -> Result<(f64, MlpGradient)> {
    if batch.is_empty() {
        return Err(Error::Argument("empty training batch".to_string()));
    }
    model.validate()?;
    let scale = 1.0 / batch.len() as f64;
    let mut grad = MlpGradient::zeroed();
    let mut loss = 0.0;
    for (features, label) in batch {
        if features.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite feature input".to_string()));
        }
        if *label > 1 {
            return Err(Error::Argument(format!("label {label} is not binary")));
        }
        let w = weights.for_label(*label);
        let trace = forward_trace(model, &features.0);
        // Stable -ln p_y = logsumexp(z) - z_y.
        let m = trace.z3[0].max(trace.z3[1]);
        let lse = m + ((trace.z3[0] - m).exp() + (trace.z3[1] - m).exp()).ln();
        loss += scale * w * (lse - trace.z3[*label as usize]);

        let mut dz3 = [0.0f64; 2];
        for (c, (dz, p)) in dz3.iter_mut().zip(&trace.probs).enumerate() {
            let one_hot = if c == *label as usize { 1.0 } else { 0.0 };
            *dz = scale * w * (p - one_hot);
        }
        accumulate(&mut grad.layers[2], &trace.a2, &dz3);
        let mut da2 = [0.0f64; 16];
        back_propagate(&model.layers[2], &dz3, &mut da2);
        let mut dz2 = [0.0f64; 16];
        for ((dz, &z), &da) in dz2.iter_mut().zip(&trace.z2).zip(&da2) {
            *dz = if z > 0.0 { da } else { 0.0 };
        }
        accumulate(&mut grad.layers[1], &trace.a1, &dz2);
        let mut da1 = [0.0f64; 32];
        back_propagate(&model.layers[1], &dz2, &mut da1);
        let mut dz1 = [0.0f64; 32];
        for ((dz, &z), &da) in dz1.iter_mut().zip(&trace.z1).zip(&da1) {
            *dz = if z > 0.0 { da } else { 0.0 };
        }
        accumulate(&mut grad.layers[0], &features.0, &dz1);
    }
    Ok((loss, grad))
}

fn accumulate(grad: &mut Layer, input: &[f64], delta: &[f64]) {
    for (o, &d) in delta.iter().enumerate() {
        let row = &mut grad.weights[o * grad.in_dim..(o + 1) * grad.in_dim];
        for (g, x) in row.iter_mut().zip(input) {
            *g += d * x;
        }
        grad.biases[o] += d;
    }
}

fn back_propagate(layer: &Layer, delta_out: &[f64], delta_in: &mut [f64]) {
    for (o, &d) in delta_out.iter().enumerate() {
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        for (di, w) in delta_in.iter_mut().zip(row) {
            *di += d * w;
        }
    }
}

fn batch_loss(model: &MlpModel, batch: &[(FeatureVector, u8)], weights: &ClassWeights) -> f64 {
    let scale = 1.0 / batch.len().max(1) as f64;
    batch
        .iter()
        .map(|(features, label)| {
            let trace = forward_trace(model, &features.0);
            let m = trace.z3[0].max(trace.z3[1]);
            let lse = m + ((trace.z3[0] - m).exp() + (trace.z3[1] - m).exp()).ln();
            scale * weights.for_label(*label) * (lse - trace.z3[*label as usize])
        })
        .sum()
}

/// Training hyperparameters. All invented plumbing with fixed defaults; the
/// validation fraction feeds the early-stopping split carved from the
/// training subjects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 50,
            patience: 5,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Argument("learning rate must be > 0".to_string()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Argument(
                "batch size, epochs and patience must be > 0".to_string(),
            ));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::Argument(
                "validation fraction must be in [0, 0.5]".to_string(),
            ));
        }
        Ok(())
    }
}

/// Labeled feature vectors with their participant ids, the unit the trainer
/// and the cross-validation splits operate on.
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<u8>,
    pub participants: Vec<String>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn push(&mut self, features: FeatureVector, label: u8, participant: &str) {
        self.features.push(features);
        self.labels.push(label);
        self.participants.push(participant.to_string());
    }
}

/// Join annotations to detection records on (participant, session, frame,
/// hand) and featurize. Annotated frames with no matching detection are
/// skipped (there is nothing to featurize); the count is logged.
pub fn build_sample_set<'a, I>(sessions: I, annotations: &[AnnotationRecord]) -> Result<SampleSet>
where
    I: IntoIterator<Item = (&'a SessionManifest, &'a [DetectionRecord])>,
{
    use std::collections::HashMap;
    let mut index: HashMap<(&str, &str, usize, HandSide), &DetectionRecord> = HashMap::new();
    for (manifest, records) in sessions {
        for record in records {
            index.insert(
                (
                    manifest.participant_id.as_str(),
                    manifest.session_id.as_str(),
                    record.frame_index,
                    record.hand_side,
                ),
                record,
            );
        }
    }
    let mut set = SampleSet::default();
    let mut skipped = 0usize;
    for ann in annotations {
        if ann.label > 1 {
            return Err(Error::Validation {
                field: "label".to_string(),
                message: format!("{} is not binary", ann.label),
            });
        }
        match index.get(&(
            ann.participant_id.as_str(),
            ann.session_id.as_str(),
            ann.frame_index,
            ann.hand_side,
        )) {
            Some(record) => set.push(featurize(record), ann.label, &ann.participant_id),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::debug!("{skipped} annotated frames had no detection and were skipped");
    }
    Ok(set)
}

/// One trained fold of a leave-one-subject-out run.
#[derive(Debug, Clone)]
pub struct FoldModel {
    pub held_out: String,
    pub model: MlpModel,
}

/// Train one model per LOSO fold. Each fold's training data is every sample
/// whose participant is in the fold's training list; a fold whose training
/// list contains its own held-out participant is rejected.
pub fn train(samples: &SampleSet, split: &LosoSplit, cfg: &TrainConfig) -> Result<Vec<FoldModel>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(split.folds.len());
    for (fold_index, fold) in split.folds.iter().enumerate() {
        if fold.training.contains(&fold.held_out) {
            return Err(Error::SplitIntegrity(format!(
                "fold '{}' lists its held-out participant in the training set",
                fold.held_out
            )));
        }
        let selected: Vec<(FeatureVector, u8)> = samples
            .participants
            .iter()
            .enumerate()
            .filter(|(_, p)| fold.training.iter().any(|t| t == *p))
            .map(|(i, _)| (samples.features[i], samples.labels[i]))
            .collect();
        if selected.is_empty() {
            return Err(Error::Argument(format!(
                "fold '{}' has no training samples",
                fold.held_out
            )));
        }
        let fold_seed = cfg
            .seed
            .wrapping_add((fold_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let model = fit(&selected, cfg, fold_seed)?;
        out.push(FoldModel {
            held_out: fold.held_out.clone(),
            model,
        });
    }
    Ok(out)
}

/// Core training loop on one sample list. Deterministic given `seed`:
/// initialization, validation split and epoch shuffles all derive from it.
/// Returns the parameter state with the best validation loss.
pub fn fit(samples: &[(FeatureVector, u8)], cfg: &TrainConfig, seed: u64) -> Result<MlpModel> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Argument("empty training set".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_5EED);
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    indices.shuffle(&mut rng);
    let val_count =
        ((samples.len() as f64 * cfg.validation_fraction).floor() as usize).min(samples.len() - 1);
    let (val_idx, train_idx) = indices.split_at(val_count);
    let mut train_idx: Vec<usize> = train_idx.to_vec();
    let validation: Vec<(FeatureVector, u8)> = if val_idx.is_empty() {
        // Too few samples for a split: early-stop on training loss.
        train_idx.iter().map(|&i| samples[i]).collect()
    } else {
        val_idx.iter().map(|&i| samples[i]).collect()
    };
    let train_labels: Vec<u8> = train_idx.iter().map(|&i| samples[i].1).collect();
    let weights = ClassWeights::inverse_frequency(&train_labels);

    let mut model = MlpModel::new_seeded(seed);
    let mut best_model = model.clone();
    let mut best_val = batch_loss(&model, &validation, &weights);
    let mut patience_left = cfg.patience;
    let mut batch: Vec<(FeatureVector, u8)> = Vec::with_capacity(cfg.batch_size);
    for _epoch in 0..cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            let (_, grad) = loss_and_gradient(&model, &batch, &weights)?;
            model.sgd_step(&grad, cfg.learning_rate);
        }
        let val_loss = batch_loss(&model, &validation, &weights);
        if val_loss < best_val {
            best_val = val_loss;
            best_model = model.clone();
            patience_left = cfg.patience;
        } else {
            patience_left -= 1;
            if patience_left == 0 {
                break;
            }
        }
    }
    Ok(best_model)
}

/// Per-frame neural prediction for one session: argmax of the forward
/// probabilities (exact ties map to 0), absent frames 0, optionally pooled.
pub fn predict_session(
    model: &MlpModel,
    records: &[DetectionRecord],
    manifest: &SessionManifest,
    pooled: bool,
    cfg: &PoolingConfig,
) -> Result<(InteractionProfile, InteractionProfile)> {
    model.validate()?;
    cfg.validate()?;
    let mut bits_left = vec![0u8; manifest.frame_count];
    let mut bits_right = vec![0u8; manifest.frame_count];
    for record in records {
        if record.participant_id != manifest.participant_id
            || record.session_id != manifest.session_id
        {
            return Err(Error::Validation {
                field: "session_id".to_string(),
                message: format!(
                    "record ({}, {}) does not belong to session ({}, {})",
                    record.participant_id,
                    record.session_id,
                    manifest.participant_id,
                    manifest.session_id
                ),
            });
        }
        if record.frame_index >= manifest.frame_count {
            return Err(Error::Range(format!(
                "frame_index {} >= frame_count {}",
                record.frame_index, manifest.frame_count
            )));
        }
        let trace = forward_trace(model, &featurize(record).0);
        let bit = u8::from(trace.probs[1] > trace.probs[0]);
        match record.hand_side {
            HandSide::Left => bits_left[record.frame_index] |= bit,
            HandSide::Right => bits_right[record.frame_index] |= bit,
        }
    }
    let make = |hand: HandSide, bits: Vec<u8>| InteractionProfile {
        participant_id: manifest.participant_id.clone(),
        session_id: manifest.session_id.clone(),
        hand,
        fps: manifest.fps,
        bits,
    };
    let left = make(HandSide::Left, bits_left);
    let right = make(HandSide::Right, bits_right);
    if pooled {
        Ok((pool_majority(&left, cfg), pool_majority(&right, cfg)))
    } else {
        Ok((left, right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BoundingBox, ContactState, Offset};

    fn record(state: u8) -> DetectionRecord {
        DetectionRecord {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            frame_index: 0,
            hand_side: HandSide::Left,
            bbox: BoundingBox {
                x1: 0.0,
                y1: 0.0,
                x2: 1.0,
                y2: 1.0,
            },
            confidence: 1.0,
            contact_state: ContactState::from_code(state).unwrap(),
            offset: Offset {
                dx: 0.0,
                dy: 0.0,
                magnitude: 0.0,
            },
        }
    }

    fn seeded_features(rng: &mut impl Rng) -> FeatureVector {
        let mut f = [0.0; 9];
        for v in &mut f {
            *v = rng.random_range(-1.0..1.0);
        }
        FeatureVector(f)
    }

    #[test]
    fn featurize_fixed_order() {
        let f = featurize(&record(4));
        assert_eq!(f.0, [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let f = featurize(&record(0));
        assert_eq!(f.0[5], 0.0);
        let f = featurize(&record(2));
        assert_eq!(f.0[5], 0.5);
    }

    #[test]
    fn zero_model_outputs_half_half() {
        let model = MlpModel::zeroed();
        let (p0, p1) = forward(&model, &FeatureVector([0.3; 9])).unwrap();
        assert_eq!(p0, 0.5);
        assert_eq!(p1, 0.5);
    }

    #[test]
    fn softmax_normalizes_for_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..50 {
            let model = MlpModel::new_seeded(seed);
            let f = seeded_features(&mut rng);
            let (p0, p1) = forward(&model, &f).unwrap();
            assert!(p0 >= 0.0 && p1 >= 0.0);
            assert!((p0 + p1 - 1.0).abs() < 1e-12);
        }
    }

    /// Straight-line reimplementation of the three matrix products, kept
    /// independent of the Layer plumbing.
    #[allow(clippy::needless_range_loop)]
    fn forward_oracle(model: &MlpModel, input: &[f64; 9]) -> (f64, f64) {
        let weight = |layer: usize, o: usize, i: usize| {
            let l = &model.layers[layer];
            l.weights[o * l.in_dim + i]
        };
        let bias = |layer: usize, o: usize| model.layers[layer].biases[o];
        let mut a1 = [0.0f64; 32];
        for o in 0..32 {
            let mut z = bias(0, o);
            for i in 0..9 {
                z += weight(0, o, i) * input[i];
            }
            a1[o] = if z > 0.0 { z } else { 0.0 };
        }
        let mut a2 = [0.0f64; 16];
        for o in 0..16 {
            let mut z = bias(1, o);
            for i in 0..32 {
                z += weight(1, o, i) * a1[i];
            }
            a2[o] = if z > 0.0 { z } else { 0.0 };
        }
        let mut z3 = [0.0f64; 2];
        for o in 0..2 {
            let mut z = bias(2, o);
            for i in 0..16 {
                z += weight(2, o, i) * a2[i];
            }
            z3[o] = z;
        }
        let e0 = z3[0].exp();
        let e1 = z3[1].exp();
        (e0 / (e0 + e1), e1 / (e0 + e1))
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..20 {
            let model = MlpModel::new_seeded(seed);
            let f = seeded_features(&mut rng);
            let (p0, p1) = forward(&model, &f).unwrap();
            let (q0, q1) = forward_oracle(&model, &f.0);
            assert!((p0 - q0).abs() < 1e-12);
            assert!((p1 - q1).abs() < 1e-12);
        }
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        // Drive the model to near-certainty by biasing the output layer.
        let mut model = MlpModel::zeroed();
        let last = model.param_count() - 1;
        model.set_param(last, 30.0); // bias of class-1 logit
        let batch = vec![(FeatureVector([0.0; 9]), 1u8)];
        let (loss, _) = loss_and_gradient(&model, &batch, &ClassWeights::uniform()).unwrap();
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn empty_batch_is_argument_error() {
        let model = MlpModel::zeroed();
        let err = loss_and_gradient(&model, &[], &ClassWeights::uniform()).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn doubling_class_weights_doubles_loss_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MlpModel::new_seeded(9);
        let batch: Vec<(FeatureVector, u8)> = (0..8)
            .map(|i| (seeded_features(&mut rng), (i % 2) as u8))
            .collect();
        let w = ClassWeights { w0: 0.7, w1: 1.9 };
        let w2 = ClassWeights {
            w0: 2.0 * w.w0,
            w1: 2.0 * w.w1,
        };
        let (loss1, grad1) = loss_and_gradient(&model, &batch, &w).unwrap();
        let (loss2, grad2) = loss_and_gradient(&model, &batch, &w2).unwrap();
        assert_eq!(loss2, 2.0 * loss1);
        for i in 0..model.param_count() {
            assert_eq!(grad2.get_param(i), 2.0 * grad1.get_param(i));
        }
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-5;
        for draw in 0..10 {
            let model = MlpModel::new_seeded(100 + draw);
            let batch: Vec<(FeatureVector, u8)> = (0..4)
                .map(|_| (seeded_features(&mut rng), u8::from(rng.random_bool(0.5))))
                .collect();
            let weights = ClassWeights { w0: 0.8, w1: 1.4 };
            let (_, grad) = loss_and_gradient(&model, &batch, &weights).unwrap();
            for index in (0..model.param_count()).step_by(17) {
                let mut plus = model.clone();
                plus.set_param(index, model.get_param(index) + h);
                let mut minus = model.clone();
                minus.set_param(index, model.get_param(index) - h);
                let (lp, _) = loss_and_gradient(&plus, &batch, &weights).unwrap();
                let (lm, _) = loss_and_gradient(&minus, &batch, &weights).unwrap();
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grad.get_param(index);
                assert!(
                    relative_error(numeric, analytic) < 1e-4,
                    "param {index}: numeric {numeric} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn full_batch_descent_is_non_increasing_at_small_lr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = MlpModel::new_seeded(7);
        let batch: Vec<(FeatureVector, u8)> = (0..32)
            .map(|_| (seeded_features(&mut rng), u8::from(rng.random_bool(0.4))))
            .collect();
        let weights = ClassWeights::uniform();
        let mut last = f64::INFINITY;
        for _ in 0..40 {
            let (loss, grad) = loss_and_gradient(&model, &batch, &weights).unwrap();
            assert!(loss <= last + 1e-12, "loss went up: {last} -> {loss}");
            last = loss;
            model.sgd_step(&grad, 1e-4);
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<(FeatureVector, u8)> = (0..300)
            .map(|_| {
                let f = seeded_features(&mut rng);
                let label = u8::from(f.0[5] > 0.0);
                (f, label)
            })
            .collect();
        let cfg = TrainConfig {
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let a = fit(&samples, &cfg, 42).unwrap();
        let b = fit(&samples, &cfg, 42).unwrap();
        assert_eq!(a, b);
        for i in 0..a.param_count() {
            assert_eq!(a.get_param(i).to_bits(), b.get_param(i).to_bits());
        }
    }

    #[test]
    fn single_class_training_predicts_that_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples: Vec<(FeatureVector, u8)> =
            (0..100).map(|_| (seeded_features(&mut rng), 1u8)).collect();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            max_epochs: 20,
            ..TrainConfig::default()
        };
        let model = fit(&samples, &cfg, 11).unwrap();
        for (f, _) in samples.iter().take(20) {
            let (p0, p1) = forward(&model, f).unwrap();
            assert!(p1 > p0);
        }
    }

    #[test]
    fn tied_probabilities_predict_zero() {
        let model = MlpModel::zeroed();
        let records = vec![record(4)];
        let manifest = SessionManifest {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            fps: 30.0,
            frame_count: 2,
            frame_width: 720,
            frame_height: 405,
        };
        let (left, right) = predict_session(
            &model,
            &records,
            &manifest,
            false,
            &PoolingConfig::default(),
        )
        .unwrap();
        assert_eq!(left.bits, vec![0, 0]);
        assert_eq!(right.bits, vec![0, 0]);
    }

    #[test]
    fn pooled_prediction_composes_with_pool_majority() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = MlpModel::new_seeded(3);
        let manifest = SessionManifest {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            fps: 30.0,
            frame_count: 100,
            frame_width: 720,
            frame_height: 405,
        };
        let records: Vec<DetectionRecord> = (0..100)
            .map(|f| {
                let mut r = record(rng.random_range(0..=4));
                r.frame_index = f;
                r.confidence = rng.random_range(0.0..1.0);
                r.bbox.x1 = rng.random_range(0.0..0.5);
                r.bbox.x2 = r.bbox.x1 + 0.2;
                r
            })
            .collect();
        let cfg = PoolingConfig::default();
        let (plain_left, _) = predict_session(&model, &records, &manifest, false, &cfg).unwrap();
        let (pooled_left, _) = predict_session(&model, &records, &manifest, true, &cfg).unwrap();
        assert_eq!(pooled_left, pool_majority(&plain_left, &cfg));
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let model = MlpModel::new_seeded(77);
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = MlpModel::load(&buf[..]).unwrap();
        assert_eq!(loaded, model);
        for i in 0..model.param_count() {
            assert_eq!(loaded.get_param(i).to_bits(), model.get_param(i).to_bits());
        }
    }

    #[test]
    fn checkpoint_rejects_wrong_dimensions() {
        let model = MlpModel::new_seeded(1);
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let tampered = text.replace("[9,32,16,2]", "[9,64,16,2]");
        assert!(MlpModel::load(tampered.as_bytes()).is_err());
    }
}
