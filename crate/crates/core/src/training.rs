//! A fully connected ReLU network with softmax output, trained by Adam on
//! either the original points (ERM) or freshly drawn Mixup samples.
//!
//! Parameters live in one flat vector; layer l stores its weight matrix
//! (row-major, `out × in`) followed by its bias.

use std::io::Write;

use rand::Rng;

use serde::Serialize;

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::oracle::ClassProbs;
use crate::rng::{seeded, substream};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Weights uniform in ±1/√fan_in, biases zero.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 2 {
        return Err(Error::Contract(format!(
            "a network needs at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Contract(format!(
            "layer sizes must be positive, got {layer_sizes:?}"
        )));
    }
    let mut rng = seeded(seed);
    let mut params = Vec::new();
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)));
        params.extend(std::iter::repeat_n(0.0, fan_out));
    }
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        params,
    })
}

impl MlpModel {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    /// (weight offset, bias offset) for each layer.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.layer_sizes.len() - 1);
        let mut at = 0;
        for w in self.layer_sizes.windows(2) {
            let b = at + w[0] * w[1];
            out.push((at, b));
            at = b + w[1];
        }
        out
    }

    /// Activations of every layer; the last entry holds the logits.
    fn activations(&self, x: &[f64], offsets: &[(usize, usize)]) -> Vec<Vec<f64>> {
        let n_layers = offsets.len();
        let mut acts = vec![x.to_vec()];
        for (l, &(wo, bo)) in offsets.iter().enumerate() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let input = &acts[l];
            let mut z = self.params[bo..bo + n_out].to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.params[wo + o * n_in..wo + (o + 1) * n_in];
                *zo += row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                if l + 1 < n_layers {
                    *zo = zo.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x, &self.offsets())
            .pop()
            .expect("output layer")
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &[f64]) -> ClassProbs {
        ClassProbs::from_coefficients(&self.forward(x)).expect("softmax output is positive")
    }
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    log_softmax(z).into_iter().map(f64::exp).collect()
}

fn check_simplex(target: &[f64], k: usize) -> Result<()> {
    if target.len() != k {
        return Err(Error::Dimension {
            expected: k,
            found: target.len(),
        });
    }
    let sum: f64 = target.iter().sum();
    if target.iter().any(|&t| !(t >= -1e-12)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "label {target:?} is not in the probability simplex"
        )));
    }
    Ok(())
}

/// Mean cross-entropy of `model` against (soft) `targets` and its gradient
/// with respect to the flat parameter vector.
pub fn loss_and_grad(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::Contract(format!(
            "batch has {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let k = model.n_classes();
    let offsets = model.offsets();
    let scale = 1.0 / inputs.len() as f64;
    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != model.input_dim() {
            return Err(Error::Dimension {
                expected: model.input_dim(),
                found: x.len(),
            });
        }
        check_simplex(t, k)?;
        let acts = model.activations(x, &offsets);
        let logp = log_softmax(acts.last().expect("output layer"));
        loss -= t
            .iter()
            .zip(&logp)
            .filter(|(ti, _)| **ti != 0.0)
            .map(|(ti, lp)| ti * lp)
            .sum::<f64>();
        // ∂/∂z of −Σ t log softmax(z) is softmax(z) − t when Σ t = 1
        let mut delta: Vec<f64> = logp
            .iter()
            .zip(t)
            .map(|(lp, ti)| scale * (lp.exp() - ti))
            .collect();
        for l in (0..offsets.len()).rev() {
            let (wo, bo) = offsets[l];
            let n_in = model.layer_sizes[l];
            let input = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                grad[bo + o] += d;
                for (g, a) in grad[wo + o * n_in..wo + (o + 1) * n_in]
                    .iter_mut()
                    .zip(input)
                {
                    *g += d * a;
                }
            }
            if l > 0 {
                let mut back = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (b, w) in back
                        .iter_mut()
                        .zip(&model.params[wo + o * n_in..wo + (o + 1) * n_in])
                    {
                        *b += d * w;
                    }
                }
                // ReLU: pass gradient only where the unit was active
                for (b, a) in back.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
        }
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::Dimension {
            expected: state.m.len(),
            found: if params.len() != state.m.len() {
                params.len()
            } else {
                grads.len()
            },
        });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    Ok(())
}

/// Mixed inputs with soft labels and the (s, t, λ) that produced each.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub provenance: Vec<(usize, usize, f64)>,
}

/// Draws `batch_size` Mixup samples: s and t independent and uniform over all
/// points (with replacement), λ from `dist`.
pub fn mixup_batch<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    batch_size: usize,
    rng: &mut R,
) -> Result<MixedBatch> {
    if batch_size == 0 {
        return Err(Error::Contract("batch size must be at least 1".into()));
    }
    let m = ds.len();
    let k = ds.k();
    let mut batch = MixedBatch {
        inputs: Vec::with_capacity(batch_size),
        targets: Vec::with_capacity(batch_size),
        provenance: Vec::with_capacity(batch_size),
    };
    for _ in 0..batch_size {
        let s = rng.random_range(0..m);
        let t = rng.random_range(0..m);
        let lambda = dist.sample(rng);
        let (ci, cj) = (ds.label(s) - 1, ds.label(t) - 1);
        let input = ds
            .point(s)
            .iter()
            .zip(ds.point(t))
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let mut target = vec![0.0; k];
        if ci == cj {
            target[ci] = 1.0;
        } else {
            target[ci] = lambda;
            target[cj] = 1.0 - lambda;
        }
        batch.inputs.push(input);
        batch.targets.push(target);
        batch.provenance.push((s, t, lambda));
    }
    Ok(batch)
}

/// One-hot targets for the original points.
pub fn one_hot_targets(ds: &LabeledDataset) -> Vec<Vec<f64>> {
    ds.labels()
        .iter()
        .map(|&c| {
            let mut t = vec![0.0; ds.k()];
            t[c - 1] = 1.0;
            t
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainMode {
    Erm,
    Mixup(MixingDistribution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` trains full-batch: one step per epoch on m examples.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn full_batch(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: None,
            seed,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training objective over the epoch's steps.
    pub loss: f64,
    /// Error on the original labeled points after the epoch.
    pub train_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub model: MlpModel,
}

impl TrainHistory {
    pub fn final_train_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_error)
    }

    /// CSV with columns `epoch,loss,train_error`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "train_error"])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.loss.to_string(),
                r.train_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains `model` on `ds`. The run is a deterministic function of its inputs.
pub fn train(
    mut model: MlpModel,
    ds: &LabeledDataset,
    mode: &TrainMode,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    if model.input_dim() != ds.dim() || model.n_classes() != ds.k() {
        return Err(Error::Dimension {
            expected: ds.dim(),
            found: model.input_dim(),
        });
    }
    let m = ds.len();
    let batch = config.batch_size.unwrap_or(m).clamp(1, m.max(1));
    let steps_per_epoch = m.div_ceil(batch);
    let mut rng = substream(config.seed, 1);
    let mut adam = AdamState::new(model.parameter_count(), config.adam);
    let all_targets = one_hot_targets(ds);
    let mut order: Vec<usize> = (0..m).collect();
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        if matches!(mode, TrainMode::Erm) && batch < m {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
        }
        for step in 0..steps_per_epoch {
            let (loss, grad) = match mode {
                TrainMode::Erm if batch == m => loss_and_grad(&model, ds.points(), &all_targets)?,
                TrainMode::Erm => {
                    let idx = &order[step * batch..((step + 1) * batch).min(m)];
                    let inputs: Vec<Vec<f64>> = idx.iter().map(|&i| ds.point(i).to_vec()).collect();
                    let targets: Vec<Vec<f64>> =
                        idx.iter().map(|&i| all_targets[i].clone()).collect();
                    loss_and_grad(&model, &inputs, &targets)?
                }
                TrainMode::Mixup(dist) => {
                    let mb = mixup_batch(ds, dist, batch, &mut rng)?;
                    loss_and_grad(&model, &mb.inputs, &mb.targets)?
                }
            };
            epoch_loss += loss;
            adam_step(&mut adam, &mut model.params, &grad)?;
        }
        records.push(EpochRecord {
            epoch,
            loss: epoch_loss / steps_per_epoch as f64,
            train_error: 1.0 - evaluate(&model, ds)?.accuracy,
        });
    }
    Ok(TrainHistory { records, model })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub probs: Vec<ClassProbs>,
    pub correct: Vec<bool>,
    pub accuracy: f64,
}

/// Per-point class probabilities and 0/1 correctness (argmax ties go to the
/// lowest class index).
pub fn evaluate(model: &MlpModel, ds: &LabeledDataset) -> Result<Evaluation> {
    if model.input_dim() != ds.dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            found: ds.dim(),
        });
    }
    let probs: Vec<ClassProbs> = ds.points().iter().map(|x| model.predict(x)).collect();
    let correct: Vec<bool> = probs
        .iter()
        .zip(ds.labels())
        .map(|(p, &c)| p.argmax() == c)
        .collect();
    let accuracy = correct.iter().filter(|&&c| c).count() as f64 / ds.len().max(1) as f64;
    Ok(Evaluation {
        probs,
        correct,
        accuracy,
    })
}
