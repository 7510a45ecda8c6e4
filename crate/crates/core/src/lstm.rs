//! Two-output LSTM regressor.
//!
//! A single recurrent body reads the window sequence; arousal and valence are
//! both read off the last hidden state by one linear head, so every recurrent
//! parameter is shaped by the joint loss of the two dimensions. Gradients are
//! computed by exact backpropagation through time.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{LABEL_MAX, LABEL_MIN};

pub const MODEL_MAGIC: &[u8; 4] = b"AVDM";
pub const FORMAT_VERSION: u32 = 1;
pub const OUTPUTS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum LstmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },
    #[error("activation cache does not belong to this model: {0}")]
    CacheError(String),
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PredictionPair {
    pub arousal: f64,
    pub valence: f64,
}

impl PredictionPair {
    pub fn new(arousal: f64, valence: f64) -> Self {
        PredictionPair { arousal, valence }
    }

    pub fn clamped(self) -> Self {
        PredictionPair {
            arousal: self.arousal.clamp(LABEL_MIN, LABEL_MAX),
            valence: self.valence.clamp(LABEL_MIN, LABEL_MAX),
        }
    }

    fn as_array(self) -> [f64; OUTPUTS] {
        [self.arousal, self.valence]
    }
}

/// Parameters of the network. Gate matrices are `hidden x (input + hidden)`,
/// row-major, acting on the concatenation `[x_t; h_{t-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub w_g: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
    /// `2 x hidden`, row 0 arousal, row 1 valence.
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let gate = vec![0.0; hidden_dim * (input_dim + hidden_dim)];
        let bias = vec![0.0; hidden_dim];
        LstmModel {
            input_dim,
            hidden_dim,
            w_i: gate.clone(),
            w_f: gate.clone(),
            w_o: gate.clone(),
            w_g: gate,
            b_i: bias.clone(),
            b_f: bias.clone(),
            b_o: bias.clone(),
            b_g: bias,
            w_out: vec![0.0; OUTPUTS * hidden_dim],
            b_out: vec![0.0; OUTPUTS],
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases except the forget gate at 1.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim);
        let gate_bound = 1.0 / ((input_dim + hidden_dim) as f64).sqrt();
        for w in [&mut m.w_i, &mut m.w_f, &mut m.w_o, &mut m.w_g] {
            w.iter_mut().for_each(|v| *v = rng.random_range(-gate_bound..gate_bound));
        }
        let out_bound = 1.0 / (hidden_dim as f64).sqrt();
        m.w_out
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-out_bound..out_bound));
        m.b_f.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    /// Parameter blocks in serialization order.
    pub fn sections(&self) -> [&[f64]; 10] {
        [
            &self.w_i, &self.w_f, &self.w_o, &self.w_g, &self.b_i, &self.b_f, &self.b_o, &self.b_g, &self.w_out,
            &self.b_out,
        ]
    }

    pub fn sections_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.w_i,
            &mut self.w_f,
            &mut self.w_o,
            &mut self.w_g,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_g,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.sections().iter().map(|s| s.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.sections().into_iter().flat_map(|s| s.iter().copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.sections_mut().into_iter().flat_map(|s| s.iter_mut())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.input_dim.hash(&mut h);
        self.hidden_dim.hash(&mut h);
        for p in self.params() {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn check_sequence(&self, sequence: &[Vec<f64>]) -> Result<(), LstmError> {
        if sequence.is_empty() {
            return Err(LstmError::DimensionError { expected: 1, got: 0 });
        }
        for x in sequence {
            if x.len() != self.input_dim {
                return Err(LstmError::DimensionError {
                    expected: self.input_dim,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    fn readout(&self, h: &[f64]) -> PredictionPair {
        let hd = self.hidden_dim;
        let out: Vec<f64> = (0..OUTPUTS)
            .map(|k| self.b_out[k] + self.w_out[k * hd..(k + 1) * hd].iter().zip(h).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        PredictionPair::new(out[0], out[1])
    }

    /// One cell step. Returns `(z, i, f, o, g, c, tanh_c, h)`.
    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepActivations {
        let hd = self.hidden_dim;
        let width = self.input_dim + hd;
        let mut z = Vec::with_capacity(width);
        z.extend_from_slice(x);
        z.extend_from_slice(h_prev);
        let affine = |w: &[f64], b: &[f64], r: usize| b[r] + w[r * width..(r + 1) * width].iter().zip(&z).map(|(a, v)| a * v).sum::<f64>();
        let mut act = StepActivations {
            i: vec![0.0; hd],
            f: vec![0.0; hd],
            o: vec![0.0; hd],
            g: vec![0.0; hd],
            c: vec![0.0; hd],
            tanh_c: vec![0.0; hd],
            h: vec![0.0; hd],
            z: Vec::new(),
        };
        for r in 0..hd {
            act.i[r] = sigmoid(affine(&self.w_i, &self.b_i, r));
            act.f[r] = sigmoid(affine(&self.w_f, &self.b_f, r));
            act.o[r] = sigmoid(affine(&self.w_o, &self.b_o, r));
            act.g[r] = affine(&self.w_g, &self.b_g, r).tanh();
            act.c[r] = act.f[r] * c_prev[r] + act.i[r] * act.g[r];
            act.tanh_c[r] = act.c[r].tanh();
            act.h[r] = act.o[r] * act.tanh_c[r];
        }
        act.z = z;
        act
    }
}

#[derive(Debug, Clone)]
struct StepActivations {
    z: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    fingerprint: u64,
    steps: Vec<StepActivations>,
    prediction: PredictionPair,
}

impl ForwardCache {
    pub fn hidden_states(&self) -> impl Iterator<Item = &[f64]> {
        self.steps.iter().map(|s| s.h.as_slice())
    }

    pub fn prediction(&self) -> PredictionPair {
        self.prediction
    }
}

/// Run the sequence from zero state; the prediction is read from the last hidden state.
pub fn forward(model: &LstmModel, sequence: &[Vec<f64>]) -> Result<(PredictionPair, ForwardCache), LstmError> {
    model.check_sequence(sequence)?;
    let hd = model.hidden_dim;
    let mut steps: Vec<StepActivations> = Vec::with_capacity(sequence.len());
    let zeros = vec![0.0; hd];
    for x in sequence {
        let (h_prev, c_prev) = match steps.last() {
            Some(s) => (s.h.as_slice(), s.c.as_slice()),
            None => (zeros.as_slice(), zeros.as_slice()),
        };
        let act = model.step(x, h_prev, c_prev);
        steps.push(act);
    }
    let prediction = model.readout(&steps.last().expect("nonempty").h);
    Ok((
        prediction,
        ForwardCache {
            fingerprint: model.fingerprint(),
            steps,
            prediction,
        },
    ))
}

/// Raw (unclamped) prediction without keeping activations.
pub fn predict_raw(model: &LstmModel, sequence: &[Vec<f64>]) -> Result<PredictionPair, LstmError> {
    model.check_sequence(sequence)?;
    let hd = model.hidden_dim;
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    for x in sequence {
        let act = model.step(x, &h, &c);
        h = act.h;
        c = act.c;
    }
    Ok(model.readout(&h))
}

/// Prediction clamped to the annotation range.
pub fn predict(model: &LstmModel, sequence: &[Vec<f64>]) -> Result<PredictionPair, LstmError> {
    Ok(predict_raw(model, sequence)?.clamped())
}

/// Half the summed squared error over both outputs.
pub fn loss(pred: PredictionPair, label: PredictionPair) -> f64 {
    0.5 * ((pred.arousal - label.arousal).powi(2) + (pred.valence - label.valence).powi(2))
}

/// Gradient of [`loss`] with respect to every parameter, by backpropagation through time.
pub fn backward(model: &LstmModel, cache: &ForwardCache, label: PredictionPair) -> Result<LstmModel, LstmError> {
    if cache.fingerprint != model.fingerprint() {
        return Err(LstmError::CacheError("parameters changed since the forward pass".into()));
    }
    let hd = model.hidden_dim;
    let width = model.input_dim + hd;
    let mut grad = LstmModel::zeros(model.input_dim, hd);

    let pred = cache.prediction.as_array();
    let target = label.as_array();
    let d_out: Vec<f64> = (0..OUTPUTS).map(|k| pred[k] - target[k]).collect();

    let last = cache.steps.last().ok_or_else(|| LstmError::CacheError("empty cache".into()))?;
    let mut dh = vec![0.0; hd];
    for k in 0..OUTPUTS {
        grad.b_out[k] = d_out[k];
        for j in 0..hd {
            grad.w_out[k * hd + j] = d_out[k] * last.h[j];
            dh[j] += model.w_out[k * hd + j] * d_out[k];
        }
    }

    let mut dc_next = vec![0.0; hd];
    let zeros = vec![0.0; hd];
    let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
    for t in (0..cache.steps.len()).rev() {
        let s = &cache.steps[t];
        let c_prev = if t == 0 { &zeros } else { &cache.steps[t - 1].c };
        for r in 0..hd {
            let d_o = dh[r] * s.tanh_c[r];
            let dc = dc_next[r] + dh[r] * s.o[r] * (1.0 - s.tanh_c[r] * s.tanh_c[r]);
            let d_i = dc * s.g[r];
            let d_g = dc * s.i[r];
            let d_f = dc * c_prev[r];
            dc_next[r] = dc * s.f[r];
            da[0][r] = d_i * s.i[r] * (1.0 - s.i[r]);
            da[1][r] = d_f * s.f[r] * (1.0 - s.f[r]);
            da[2][r] = d_o * s.o[r] * (1.0 - s.o[r]);
            da[3][r] = d_g * (1.0 - s.g[r] * s.g[r]);
        }

        let mut dz = vec![0.0; width];
        let weights = [&model.w_i, &model.w_f, &model.w_o, &model.w_g];
        let [gw_i, gw_f, gw_o, gw_g, gb_i, gb_f, gb_o, gb_g, _, _] = grad.sections_mut();
        let grads_w = [gw_i, gw_f, gw_o, gw_g];
        let grads_b = [gb_i, gb_f, gb_o, gb_g];
        for (gate, ((w, gw), gb)) in weights.iter().zip(grads_w).zip(grads_b).enumerate() {
            for r in 0..hd {
                let a = da[gate][r];
                if a == 0.0 {
                    continue;
                }
                gb[r] += a;
                let row = r * width;
                for col in 0..width {
                    gw[row + col] += a * s.z[col];
                    dz[col] += w[row + col] * a;
                }
            }
        }
        dh.copy_from_slice(&dz[model.input_dim..]);
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Epochs without validation improvement before stopping; `None` trains all epochs.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 32,
            learning_rate: 0.005,
            epochs: 200,
            batch_size: 8,
            grad_clip_norm: 5.0,
            seed: 0,
            optimizer: Optimizer::Adam,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        let bad = |m: &str| Err(LstmError::InvalidConfig(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 || self.hidden_dim == 0 {
            return bad("batch_size and hidden_dim must be positive");
        }
        if !(self.grad_clip_norm > 0.0) {
            return bad("grad_clip_norm must be positive");
        }
        Ok(())
    }
}

pub type Sample = (Vec<Vec<f64>>, PredictionPair);

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LstmModel,
    /// Mean training loss per epoch, measured before each batch's update.
    pub loss_trace: Vec<f64>,
    pub validation_trace: Vec<f64>,
    /// Epoch (0-based) whose parameters were returned.
    pub chosen_epoch: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn update(&mut self, model: &mut LstmModel, grad: &LstmModel, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in model.params_mut().zip(grad.params()).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

pub fn mean_loss(model: &LstmModel, data: &[Sample]) -> Result<f64, LstmError> {
    let mut total = 0.0;
    for (seq, label) in data {
        total += loss(predict_raw(model, seq)?, *label);
    }
    Ok(total / data.len().max(1) as f64)
}

/// Mini-batch Adam with global-norm clipping. Shuffling uses a ChaCha stream
/// seeded from `config.seed`; batch gradients are summed in sample order, so a
/// given seed always yields the same weights.
pub fn train(
    train_set: &[Sample],
    validation: Option<&[Sample]>,
    config: &TrainConfig,
) -> Result<TrainOutcome, LstmError> {
    config.validate()?;
    let input_dim = train_set.first().ok_or(LstmError::EmptyDataset)?.0.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LstmModel::init(input_dim, config.hidden_dim, &mut rng);
    let mut adam = Adam::new(model.param_count());
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut validation_trace = Vec::new();
    let mut best: Option<(f64, usize, LstmModel)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = LstmModel::zeros(input_dim, config.hidden_dim);
            for &idx in batch {
                let (seq, label) = &train_set[idx];
                let (pred, cache) = forward(&model, seq)?;
                epoch_loss += loss(pred, *label);
                let g = backward(&model, &cache, *label)?;
                grad.params_mut().zip(g.params()).for_each(|(a, b)| *a += b);
            }
            let scale = 1.0 / batch.len() as f64;
            grad.params_mut().for_each(|g| *g *= scale);
            let norm = grad.params().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(LstmError::TrainingDiverged { epoch });
            }
            if norm > config.grad_clip_norm {
                let s = config.grad_clip_norm / norm;
                grad.params_mut().for_each(|g| *g *= s);
            }
            adam.update(&mut model, &grad, config.learning_rate);
        }
        let epoch_loss = epoch_loss / train_set.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(LstmError::TrainingDiverged { epoch });
        }
        loss_trace.push(epoch_loss);

        if let Some(val) = validation.filter(|v| !v.is_empty()) {
            let val_loss = mean_loss(&model, val)?;
            if !val_loss.is_finite() {
                return Err(LstmError::TrainingDiverged { epoch });
            }
            validation_trace.push(val_loss);
            if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
                best = Some((val_loss, epoch, model.clone()));
            }
            if let (Some(patience), Some((_, best_epoch, _))) = (config.patience, &best) {
                if epoch - best_epoch >= patience {
                    let (_, chosen_epoch, model) = best.expect("checked above");
                    return Ok(TrainOutcome {
                        model,
                        loss_trace,
                        validation_trace,
                        chosen_epoch,
                    });
                }
            }
        }
    }
    Ok(TrainOutcome {
        chosen_epoch: config.epochs - 1,
        model,
        loss_trace,
        validation_trace,
    })
}

impl LstmModel {
    /// `AVDM` framing: magic, format version, input and hidden sizes (u32 LE),
    /// then every parameter section as f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.param_count());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden_dim as u32).to_le_bytes());
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LstmError> {
        if bytes.len() < 16 || &bytes[..4] != MODEL_MAGIC {
            return Err(LstmError::Format("missing AVDM header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(LstmError::Format(format!("unsupported format version {version}")));
        }
        let mut model = LstmModel::zeros(word(8) as usize, word(12) as usize);
        let expected = 16 + 8 * model.param_count();
        if bytes.len() != expected {
            return Err(LstmError::Format(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        for (p, chunk) in model.params_mut().zip(bytes[16..].chunks_exact(8)) {
            *p = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        Ok(model)
    }
}
