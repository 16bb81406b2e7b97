//! Quantization-aware training with straight-through gradients and Adam.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{
    generate_rf_dataset, load_image_dataset, rf_features, DatasetName, ImageDataset, RfDataset, Split,
    DEFAULT_SEQUENCE_LEN,
};
use crate::error::{Error, Result};
use crate::network::{
    argmax, Backend, Layer, NetworkInput, NetworkSpec, NetworkState, Params, QuantizedNetwork, Scalar,
    ValueKind, PIXEL_VOCABULARY,
};
use crate::quant::{ste_gradient, Constellation, Constellation1D};

/// Inputs of a labelled dataset in the form a network consumes them.
#[derive(Debug, Clone, PartialEq)]
pub enum Inputs {
    Pixels(Vec<Vec<u8>>),
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub inputs: Inputs,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledData {
    pub fn new(inputs: Inputs, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let n = match &inputs {
            Inputs::Pixels(v) => v.len(),
            Inputs::Real(v) => v.len(),
            Inputs::Complex(v) => v.len(),
        };
        if n != labels.len() {
            return Err(Error::Input(format!("{n} inputs but {} labels", labels.len())));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Range(format!("label {l} outside {classes} classes")));
        }
        Ok(Self { inputs, labels, classes })
    }

    pub fn from_images(data: &ImageDataset) -> Self {
        Self {
            inputs: Inputs::Pixels(data.images.iter().map(|i| i.to_vec()).collect()),
            labels: data.labels.iter().map(|&l| l as usize).collect(),
            classes: 10,
        }
    }

    /// RF sequences passed through [`rf_features`].
    pub fn from_rf(data: &RfDataset, classes: usize) -> Self {
        Self {
            inputs: Inputs::Complex(data.sequences.iter().map(|s| rf_features(s)).collect()),
            labels: data.labels.clone(),
            classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_size(&self) -> usize {
        match &self.inputs {
            Inputs::Pixels(v) => v.first().map_or(0, Vec::len),
            Inputs::Real(v) => v.first().map_or(0, Vec::len),
            Inputs::Complex(v) => v.first().map_or(0, Vec::len),
        }
    }

    pub fn input(&self, i: usize) -> NetworkInput<'_> {
        match &self.inputs {
            Inputs::Pixels(v) => NetworkInput::Pixels(&v[i]),
            Inputs::Real(v) => NetworkInput::Real(&v[i]),
            Inputs::Complex(v) => NetworkInput::Complex(&v[i]),
        }
    }

    /// Network shape for this data: input size, hidden sizes, classes.
    /// Complex networks on pixel data get an embedding.
    pub fn network_spec(&self, kind: ValueKind, hidden: &[usize]) -> Result<NetworkSpec> {
        let mut sizes = vec![self.input_size()];
        sizes.extend_from_slice(hidden);
        sizes.push(self.classes);
        match kind {
            ValueKind::Complex => NetworkSpec::complex(sizes, matches!(self.inputs, Inputs::Pixels(_))),
            ValueKind::Real => NetworkSpec::real(sizes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetRef {
    /// A directory holding the four standard IDX files.
    Images {
        dir: PathBuf,
        name: DatasetName,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
    /// Freshly generated RF sequences.
    Rf {
        classes: usize,
        train_per_class: usize,
        test_per_class: usize,
        #[serde(default = "default_seq_len")]
        seq_len: usize,
        snr_db: f64,
        seed: u64,
    },
}

fn default_seq_len() -> usize {
    DEFAULT_SEQUENCE_LEN
}

impl DatasetRef {
    /// Loads or generates the train and test splits.
    pub fn load(&self) -> Result<(LabeledData, LabeledData)> {
        match self {
            DatasetRef::Images {
                dir,
                name,
                train_limit,
                test_limit,
            } => {
                let mut train = load_image_dataset(dir, Split::Train, *name)?;
                let mut test = load_image_dataset(dir, Split::Test, *name)?;
                if let Some(n) = train_limit {
                    train.truncate(*n);
                }
                if let Some(n) = test_limit {
                    test.truncate(*n);
                }
                Ok((LabeledData::from_images(&train), LabeledData::from_images(&test)))
            }
            DatasetRef::Rf {
                classes,
                train_per_class,
                test_per_class,
                seq_len,
                snr_db,
                seed,
            } => {
                let train = generate_rf_dataset(*classes, *train_per_class, *seq_len, *snr_db, *seed)?;
                let test = generate_rf_dataset(
                    *classes,
                    *test_per_class,
                    *seq_len,
                    *snr_db,
                    seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
                )?;
                Ok((LabeledData::from_rf(&train, *classes), LabeledData::from_rf(&test, *classes)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub value_kind: ValueKind,
    pub hidden_sizes: Vec<usize>,
    pub constellation: Constellation,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetRef,
}

fn default_epochs() -> usize {
    30
}
fn default_batch() -> usize {
    128
}
fn default_lr() -> f64 {
    1e-3
}

impl TrainConfig {
    pub fn new(value_kind: ValueKind, hidden_sizes: Vec<usize>, constellation: Constellation, dataset: DatasetRef) -> Self {
        Self {
            value_kind,
            hidden_sizes,
            constellation,
            epochs: default_epochs(),
            batch_size: default_batch(),
            learning_rate: default_lr(),
            optimizer: Optimizer::Adam,
            seed: 0,
            dataset,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} is not positive", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub final_state: NetworkState,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Params,
    /// Dense table gradient; rows of pixels absent from the batch are zero.
    pub embedding: Option<Vec<Complex64>>,
    /// Sorted pixel values that occurred in the batch.
    pub touched_rows: Vec<usize>,
}

fn quantize_axes<T: Scalar>(v: T, grid: Option<&Constellation1D>) -> T {
    match grid {
        Some(g) => v.map_axes(|x| g.quantize(x)),
        None => v,
    }
}

fn ste_mask<T: Scalar>(v: T, grid: Option<&Constellation1D>) -> T {
    match grid {
        Some(_) => v.map_axes(ste_gradient),
        None => v.map_axes(|_| 1.0),
    }
}

fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + m - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

struct BatchOutcome<T> {
    loss: f64,
    correct: usize,
    layer_grads: Vec<Layer<T>>,
    input_grads: Vec<Vec<T>>,
}

/// Forward and backward pass over a batch for one value type. `inputs` are
/// full-precision first-layer inputs; the returned gradients are averaged
/// over the batch and already masked by the straight-through estimator.
fn batch_backprop<T: Scalar>(
    layers: &[Layer<T>],
    inputs: &[Vec<T>],
    labels: &[usize],
    grid: Option<&Constellation1D>,
) -> BatchOutcome<T> {
    let quantized: Vec<Layer<T>> = match grid {
        Some(g) => layers.iter().map(|l| l.quantized(g)).collect(),
        None => layers.to_vec(),
    };
    let mut grads: Vec<Layer<T>> = layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let mut input_grads = Vec::with_capacity(inputs.len());
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0;
    let n_layers = layers.len();

    for (x, &label) in inputs.iter().zip(labels) {
        // forward, keeping each layer's raw input and pre-activation
        let mut raw_inputs: Vec<Vec<T>> = Vec::with_capacity(n_layers);
        let mut pre: Vec<Vec<T>> = Vec::with_capacity(n_layers);
        let mut a = x.clone();
        for layer in &quantized {
            let aq: Vec<T> = a.iter().map(|&v| quantize_axes(v, grid)).collect();
            let z: Vec<T> = (0..layer.outputs)
                .map(|k| {
                    layer
                        .row(k)
                        .iter()
                        .zip(&aq)
                        .fold(layer.biases[k], |acc, (&w, &v)| acc + w * v.conj())
                })
                .collect();
            raw_inputs.push(a);
            a = z.iter().map(|&v| v.map_axes(|u| u.max(0.0))).collect();
            pre.push(z);
        }
        let out = pre.last().unwrap();
        let logits: Vec<f64> = out.iter().map(|z| z.logit()).collect();
        let (l, dlogits) = softmax_xent(&logits, label);
        loss += l;
        if argmax(&logits) == label {
            correct += 1;
        }

        let mut g: Vec<T> = out
            .iter()
            .zip(&dlogits)
            .map(|(z, &d)| z.logit_backward(d * scale))
            .collect();
        for li in (0..n_layers).rev() {
            let layer = &quantized[li];
            let raw = &raw_inputs[li];
            let aq: Vec<T> = raw.iter().map(|&v| quantize_axes(v, grid)).collect();
            let grad = &mut grads[li];
            let mut g_in = vec![T::ZERO; layer.inputs];
            for (k, &gk) in g.iter().enumerate() {
                grad.biases[k] += gk;
                let row = &mut grad.weights[k * layer.inputs..(k + 1) * layer.inputs];
                for (j, (gw, &v)) in row.iter_mut().zip(&aq).enumerate() {
                    *gw += gk * v;
                    g_in[j] += gk.conj() * layer.weights[k * layer.inputs + j];
                }
            }
            let g_raw: Vec<T> = g_in
                .iter()
                .zip(raw)
                .map(|(&gi, &v)| gi.hadamard(ste_mask(v, grid)))
                .collect();
            if li == 0 {
                input_grads.push(g_raw);
            } else {
                g = g_raw
                    .iter()
                    .zip(&pre[li - 1])
                    .map(|(&gi, &z)| gi.zip_axes(z, |d, u| if u > 0.0 { d } else { 0.0 }))
                    .collect();
            }
        }
    }

    for (grad, layer) in grads.iter_mut().zip(layers) {
        for (gw, &w) in grad.weights.iter_mut().zip(&layer.weights) {
            *gw = gw.hadamard(ste_mask(w, grid));
        }
        for (gb, &b) in grad.biases.iter_mut().zip(&layer.biases) {
            *gb = gb.hadamard(ste_mask(b, grid));
        }
    }
    BatchOutcome {
        loss: loss * scale,
        correct,
        layer_grads: grads,
        input_grads,
    }
}

/// Mean softmax cross-entropy of a batch under quantization-aware
/// training, with gradients for every weight, bias and embedding row.
/// `FullPrecision` disables quantization entirely.
pub fn qat_forward_backward(
    state: &NetworkState,
    data: &LabeledData,
    batch: &[usize],
    constellation: &Constellation,
) -> Result<(f64, Gradients)> {
    let (loss, _, grads) = qat_batch(state, data, batch, constellation)?;
    Ok((loss, grads))
}

fn qat_batch(
    state: &NetworkState,
    data: &LabeledData,
    batch: &[usize],
    constellation: &Constellation,
) -> Result<(f64, usize, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Input("batch is empty".into()));
    }
    state.check_constellation(constellation)?;
    let grid = constellation.axis();
    let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
    let (loss, correct, layers, embedding, touched) = match &state.params {
        Params::Complex(layers) => {
            let inputs = batch
                .iter()
                .map(|&i| crate::network::complex_input(state, data.input(i)))
                .collect::<Result<Vec<_>>>()?;
            let out = batch_backprop(layers, &inputs, &labels, grid.as_ref());
            let (embedding, touched) = match (&state.embedding, &data.inputs) {
                (Some(_), Inputs::Pixels(px)) => {
                    let mut table = vec![Complex64::new(0.0, 0.0); PIXEL_VOCABULARY];
                    let mut seen = vec![false; PIXEL_VOCABULARY];
                    for (&i, g) in batch.iter().zip(&out.input_grads) {
                        for (&p, &gp) in px[i].iter().zip(g) {
                            table[p as usize] += gp;
                            seen[p as usize] = true;
                        }
                    }
                    let touched = (0..PIXEL_VOCABULARY).filter(|&p| seen[p]).collect();
                    (Some(table), touched)
                }
                _ => (None, Vec::new()),
            };
            (out.loss, out.correct, Params::Complex(out.layer_grads), embedding, touched)
        }
        Params::Real(layers) => {
            let inputs = batch
                .iter()
                .map(|&i| crate::network::real_input(state, data.input(i)))
                .collect::<Result<Vec<_>>>()?;
            let out = batch_backprop(layers, &inputs, &labels, grid.as_ref());
            (out.loss, out.correct, Params::Real(out.layer_grads), None, Vec::new())
        }
    };
    if !loss.is_finite() {
        return Err(Error::Training(format!(
            "loss is {loss} on a batch of {} (first index {})",
            batch.len(),
            batch[0]
        )));
    }
    Ok((
        loss,
        correct,
        Gradients {
            layers,
            embedding,
            touched_rows: touched,
        },
    ))
}

#[derive(Debug, Clone, Copy)]
struct AdamParams {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamParams {
    const fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step<T: Scalar>(&self, t: i32, p: &mut T, g: T, m: &mut T, v: &mut T) {
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..T::AXES {
            let gi = g.axis(i);
            let mi = self.beta1 * m.axis(i) + (1.0 - self.beta1) * gi;
            let vi = self.beta2 * v.axis(i) + (1.0 - self.beta2) * gi * gi;
            *m = m.with_axis(i, mi);
            *v = v.with_axis(i, vi);
            let upd = self.lr * (mi / c1) / ((vi / c2).sqrt() + self.eps);
            *p = p.with_axis(i, p.axis(i) - upd);
        }
    }
}

struct Moments<T> {
    m: Vec<Layer<T>>,
    v: Vec<Layer<T>>,
}

impl<T: Scalar> Moments<T> {
    fn new(layers: &[Layer<T>]) -> Self {
        let z = || layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        Self { m: z(), v: z() }
    }

    fn update(&mut self, adam: &AdamParams, t: i32, layers: &mut [Layer<T>], grads: &[Layer<T>]) {
        for (((layer, g), m), v) in layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let gs = g.weights.iter().chain(&g.biases);
            let ms = m.weights.iter_mut().chain(m.biases.iter_mut());
            let vs = v.weights.iter_mut().chain(v.biases.iter_mut());
            for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                adam.step(t, p, gi, mi, vi);
            }
        }
    }
}

enum ModelMoments {
    Complex(Moments<Complex64>),
    Real(Moments<f64>),
}

struct Optim {
    adam: AdamParams,
    t: i32,
    layers: ModelMoments,
    embedding: Option<(Vec<Complex64>, Vec<Complex64>)>,
}

impl Optim {
    fn new(state: &NetworkState, lr: f64) -> Self {
        Self {
            adam: AdamParams::new(lr),
            t: 0,
            layers: match &state.params {
                Params::Complex(l) => ModelMoments::Complex(Moments::new(l)),
                Params::Real(l) => ModelMoments::Real(Moments::new(l)),
            },
            embedding: state.embedding.as_ref().map(|_| {
                let z = vec![Complex64::new(0.0, 0.0); PIXEL_VOCABULARY];
                (z.clone(), z)
            }),
        }
    }

    /// Dense Adam on layers; the embedding updates only the rows present
    /// in the batch, leaving other rows and their moments untouched.
    fn apply(&mut self, state: &mut NetworkState, grads: &Gradients) {
        self.t += 1;
        match (&mut state.params, &grads.layers, &mut self.layers) {
            (Params::Complex(p), Params::Complex(g), ModelMoments::Complex(m)) => {
                m.update(&self.adam, self.t, p, g)
            }
            (Params::Real(p), Params::Real(g), ModelMoments::Real(m)) => m.update(&self.adam, self.t, p, g),
            _ => unreachable!("gradients always mirror the state"),
        }
        if let (Some(table), Some(g), Some((m, v))) = (&mut state.embedding, &grads.embedding, &mut self.embedding) {
            for &row in &grads.touched_rows {
                self.adam
                    .step(self.t, &mut table.table[row], g[row], &mut m[row], &mut v[row]);
            }
        }
    }
}

/// Fraction of `data` classified correctly by the quantized view of
/// `state` on `backend`.
pub fn evaluate(state: &NetworkState, constellation: &Constellation, data: &LabeledData, backend: &mut Backend) -> Result<f64> {
    let net = QuantizedNetwork::new(state, constellation)?;
    let mut correct = 0usize;
    for i in 0..data.len() {
        if net.predict(data.input(i), backend)? == data.labels[i] {
            correct += 1;
        }
    }
    Ok(if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 })
}

/// Trains a freshly initialised network on already loaded data.
pub fn train_on(config: &TrainConfig, train: &LabeledData, test: &LabeledData) -> Result<TrainHistory> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let spec = train.network_spec(config.value_kind, &config.hidden_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = NetworkState::init(spec, &mut rng)?;
    state.check_constellation(&config.constellation)?;
    let mut optim = Optim::new(&state, config.learning_rate);
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.epochs),
        train_accuracy: Vec::with_capacity(config.epochs),
        test_accuracy: Vec::with_capacity(config.epochs),
        final_state: state.clone(),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let (loss, c, grads) = qat_batch(&state, train, batch, &config.constellation)
                .map_err(|e| match e {
                    Error::Training(m) => Error::Training(format!("epoch {epoch}: {m}")),
                    other => other,
                })?;
            loss_sum += loss * batch.len() as f64;
            correct += c;
            optim.apply(&mut state, &grads);
        }
        history.train_loss.push(loss_sum / train.len() as f64);
        history.train_accuracy.push(correct as f64 / train.len() as f64);
        history
            .test_accuracy
            .push(evaluate(&state, &config.constellation, test, &mut Backend::Digital)?);
    }
    history.final_state = state;
    Ok(history)
}

/// Loads the configured dataset and trains on it.
pub fn train(config: &TrainConfig) -> Result<TrainHistory> {
    let (train, test) = config.dataset.load()?;
    train_on(config, &train, &test)
}
