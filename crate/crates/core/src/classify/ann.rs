//! Feedforward network with two ReLU hidden layers and a sigmoid output,
//! trained with mini-batch gradient descent on binary cross-entropy.
//!
//! Training is deterministic for a fixed `(data, config)`: weights come
//! from a seeded Glorot-uniform draw and each epoch's batch order is a
//! pure function of `(seed, epoch)`. The learning-rate schedule is
//! halve-and-retry: an epoch whose full-data loss exceeds the previous
//! epoch's is rolled back and re-run at half the rate (same batches), so
//! the recorded loss history never increases. The rate has a 1e-12 floor
//! after which an equal-or-worse epoch is accepted to guarantee
//! termination.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabelValue;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub hidden: [usize; 2],
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            hidden: [32, 16],
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// One dense layer; `weights` is `[outputs x inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// `[d, h1, h2, 1]` network: two ReLU hidden layers, sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone)]
pub struct AnnTrainResult {
    pub model: AnnModel,
    /// Full-data loss after each accepted epoch; non-increasing.
    pub loss_history: Vec<f64>,
    pub final_learning_rate: f64,
}

/// Per-layer gradients in the same shapes as the layer parameters.
#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl AnnModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    fn new_glorot(input_dim: usize, hidden: [usize; 2], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [input_dim, hidden[0], hidden[1], 1];
        let layers = (0..3)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut weights = Matrix::zeros(fan_out, fan_in);
                for i in 0..fan_out {
                    for j in 0..fan_in {
                        weights.set(i, j, rng.random_range(-bound..bound));
                    }
                }
                Layer {
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        AnnModel { layers }
    }

    /// Forward pass keeping every activation; returns (activations, logit).
    /// `activations[0]` is the input, `activations[k]` the output of layer k.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let mut activations = Vec::with_capacity(4);
        activations.push(x.to_vec());
        let mut current = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut next = layer.biases.clone();
            for (i, out) in next.iter_mut().enumerate() {
                let row = layer.weights.row(i);
                for (w, a) in row.iter().zip(&current) {
                    *out += w * a;
                }
            }
            if idx + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
                activations.push(next.clone());
                current = next;
            } else {
                let logit = next[0];
                activations.push(vec![logit]);
                return (activations, logit);
            }
        }
        unreachable!("network always has an output layer")
    }

    /// Probability of the high class.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Invalid(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let (_, logit) = self.forward_trace(x);
        Ok(sigmoid(logit))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy of the model on labeled rows (targets 0/1).
pub fn batch_loss(model: &AnnModel, rows: &[&[f64]], targets: &[f64]) -> f64 {
    let mut total = 0.0;
    for (x, &y) in rows.iter().zip(targets) {
        let (_, logit) = model.forward_trace(x);
        total += softplus(logit) - y * logit;
    }
    total / rows.len() as f64
}

/// Mean gradients of the batch loss with respect to every parameter,
/// plus the loss itself. This is the training path and the surface the
/// finite-difference oracle checks.
pub fn batch_gradients(
    model: &AnnModel,
    rows: &[&[f64]],
    targets: &[f64],
) -> (Vec<LayerGradients>, f64) {
    let mut grads: Vec<LayerGradients> = model
        .layers
        .iter()
        .map(|l| LayerGradients {
            weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
            biases: vec![0.0; l.biases.len()],
        })
        .collect();
    let mut total_loss = 0.0;

    for (x, &y) in rows.iter().zip(targets) {
        let (acts, logit) = model.forward_trace(x);
        total_loss += softplus(logit) - y * logit;

        // delta at the logit; sigmoid and BCE fold together
        let mut delta = vec![sigmoid(logit) - y];
        for l in (0..model.layers.len()).rev() {
            let input = &acts[l];
            for (i, &d) in delta.iter().enumerate() {
                grads[l].biases[i] += d;
                let grow = grads[l].weights.row_mut(i);
                for (g, a) in grow.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            // propagate through the weights, then the ReLU kink
            let mut prev = vec![0.0; input.len()];
            for (i, &d) in delta.iter().enumerate() {
                let row = model.layers[l].weights.row(i);
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            for (p, &a) in prev.iter_mut().zip(input.iter()) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    let scale = 1.0 / rows.len() as f64;
    for g in grads.iter_mut() {
        for i in 0..g.weights.rows() {
            for v in g.weights.row_mut(i) {
                *v *= scale;
            }
        }
        for v in g.biases.iter_mut() {
            *v *= scale;
        }
    }
    (grads, total_loss * scale)
}

fn apply_step(model: &mut AnnModel, grads: &[LayerGradients], lr: f64) {
    for (layer, g) in model.layers.iter_mut().zip(grads) {
        for i in 0..layer.weights.rows() {
            let wrow = layer.weights.row_mut(i);
            for (w, gv) in wrow.iter_mut().zip(g.weights.row(i)) {
                *w -= lr * gv;
            }
        }
        for (b, gv) in layer.biases.iter_mut().zip(&g.biases) {
            *b -= lr * gv;
        }
    }
}

fn epoch_permutation(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut z = seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 31;
    let mut rng = ChaCha8Rng::seed_from_u64(z);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

const MIN_LEARNING_RATE: f64 = 1e-12;

pub fn ann_train(x: &Matrix, labels: &[LabelValue], cfg: &AnnConfig) -> Result<AnnTrainResult> {
    if x.rows() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} rows with {} labels",
            x.rows(),
            labels.len()
        )));
    }
    if !labels.iter().any(|l| l.is_high()) || !labels.iter().any(|l| !l.is_high()) {
        return Err(Error::Invalid("need at least one sample of each class".into()));
    }
    if !x.all_finite() {
        return Err(Error::Invalid("training data contains non-finite values".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::Config("batch size and epochs must be positive".into()));
    }
    if cfg.hidden.iter().any(|&h| h == 0) {
        return Err(Error::Config("hidden layer sizes must be positive".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }

    let targets: Vec<f64> = labels.iter().map(|l| if l.is_high() { 1.0 } else { 0.0 }).collect();
    let all_rows: Vec<&[f64]> = x.iter_rows().collect();

    let mut model = AnnModel::new_glorot(x.cols(), cfg.hidden, cfg.seed);
    let mut lr = cfg.learning_rate;
    let mut prev_loss = batch_loss(&model, &all_rows, &targets);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let perm = epoch_permutation(x.rows(), cfg.seed, epoch);
        loop {
            let snapshot = model.clone();
            for chunk in perm.chunks(cfg.batch_size) {
                let rows: Vec<&[f64]> = chunk.iter().map(|&i| all_rows[i]).collect();
                let ys: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
                let (grads, _) = batch_gradients(&model, &rows, &ys);
                apply_step(&mut model, &grads, lr);
            }
            let loss = batch_loss(&model, &all_rows, &targets);
            if !loss.is_finite() {
                return Err(Error::AnnDiverged { epoch });
            }
            if loss <= prev_loss || lr <= MIN_LEARNING_RATE {
                history.push(loss);
                prev_loss = loss;
                break;
            }
            model = snapshot;
            lr /= 2.0;
        }
    }

    Ok(AnnTrainResult {
        model,
        loss_history: history,
        final_learning_rate: lr,
    })
}

/// Classify one point; probabilities of at least 0.5 map to high.
pub fn ann_predict(model: &AnnModel, x: &[f64]) -> Result<(LabelValue, f64)> {
    let p = model.probability(x)?;
    let label = if p >= 0.5 {
        LabelValue::High
    } else {
        LabelValue::Low
    };
    Ok((label, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn blob_data(n_per_class: usize, seed: u64) -> (Matrix, Vec<LabelValue>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per_class {
            let high = i % 2 == 0;
            let c = if high { 1.5 } else { -1.5 };
            rows.push(vec![
                c + rng.random_range(-0.5..0.5),
                c + rng.random_range(-0.5..0.5),
            ]);
            labels.push(if high { LabelValue::High } else { LabelValue::Low });
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn zero_model_outputs_one_half() {
        let mut model = AnnModel::new_glorot(3, [4, 2], 0);
        for layer in model.layers.iter_mut() {
            for i in 0..layer.weights.rows() {
                for v in layer.weights.row_mut(i) {
                    *v = 0.0;
                }
            }
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        let p = model.probability(&[0.3, -2.0, 5.0]).unwrap();
        assert_eq!(p, 0.5);
        // threshold maps 0.5 to high
        assert_eq!(ann_predict(&model, &[1.0, 1.0, 1.0]).unwrap().0, LabelValue::High);
    }

    #[test]
    fn dead_relu_layers_pass_only_the_output_bias() {
        let mut model = AnnModel::new_glorot(2, [3, 2], 1);
        // force every hidden pre-activation negative regardless of input sign
        for layer in model.layers.iter_mut().take(2) {
            for i in 0..layer.weights.rows() {
                for v in layer.weights.row_mut(i) {
                    *v = 0.0;
                }
            }
            layer.biases.iter_mut().for_each(|b| *b = -1.0);
        }
        let out = model.layers[2].biases[0];
        let p = model.probability(&[7.0, -3.0]).unwrap();
        assert!((p - sigmoid(out)).abs() < 1e-15);
    }

    #[test]
    fn output_bias_monotonically_raises_probability() {
        let mut model = AnnModel::new_glorot(2, [4, 3], 2);
        let x = [0.4, -0.2];
        let mut last = 0.0;
        for step in 0..5 {
            model.layers[2].biases[0] = step as f64 * 0.5;
            let p = model.probability(&x).unwrap();
            if step > 0 {
                assert!(p > last);
            }
            last = p;
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = AnnModel::new_glorot(3, [5, 4], 12);
        let rows_data: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<&[f64]> = rows_data.iter().map(|r| r.as_slice()).collect();
        let targets = vec![1.0, 0.0, 1.0, 1.0, 0.0];
        let (grads, _) = batch_gradients(&model, &rows, &targets);

        let eps = 1e-6;
        let mut worst = 0.0_f64;
        for l in 0..3 {
            for i in 0..model.layers[l].weights.rows() {
                for j in 0..model.layers[l].weights.cols() {
                    let mut plus = model.clone();
                    let mut minus = model.clone();
                    plus.layers[l].weights.set(i, j, model.layers[l].weights.get(i, j) + eps);
                    minus.layers[l].weights.set(i, j, model.layers[l].weights.get(i, j) - eps);
                    let numeric = (batch_loss(&plus, &rows, &targets)
                        - batch_loss(&minus, &rows, &targets))
                        / (2.0 * eps);
                    let analytic = grads[l].weights.get(i, j);
                    let rel = (numeric - analytic).abs()
                        / numeric.abs().max(analytic.abs()).max(1e-8);
                    worst = worst.max(rel);
                }
            }
            for i in 0..model.layers[l].biases.len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                plus.layers[l].biases[i] += eps;
                minus.layers[l].biases[i] -= eps;
                let numeric = (batch_loss(&plus, &rows, &targets)
                    - batch_loss(&minus, &rows, &targets))
                    / (2.0 * eps);
                let analytic = grads[l].biases[i];
                let rel =
                    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
        assert!(worst <= 1e-4, "worst relative gradient error {worst}");
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let (x, labels) = blob_data(100, 21);
        let result = ann_train(&x, &labels, &AnnConfig::default()).unwrap();
        let hits = x
            .iter_rows()
            .zip(&labels)
            .filter(|(row, want)| ann_predict(&result.model, row).unwrap().0 == **want)
            .count();
        let acc = hits as f64 / labels.len() as f64;
        assert!(acc >= 0.99, "training accuracy {acc}");
    }

    #[test]
    fn loss_history_never_increases() {
        let (x, labels) = blob_data(40, 22);
        let result = ann_train(&x, &labels, &AnnConfig::default()).unwrap();
        assert_eq!(result.loss_history.len(), 200);
        for pair in result.loss_history.windows(2) {
            assert!(pair[1] <= pair[0], "loss rose from {} to {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn identical_inputs_converge_to_class_prior() {
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![0.5, 0.5]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<LabelValue> = (0..20)
            .map(|i| if i < 14 { LabelValue::High } else { LabelValue::Low })
            .collect();
        let cfg = AnnConfig {
            learning_rate: 0.3,
            epochs: 2000,
            ..AnnConfig::default()
        };
        let result = ann_train(&x, &labels, &cfg).unwrap();
        let p = result.model.probability(&[0.5, 0.5]).unwrap();
        assert!((p - 0.7).abs() < 0.05, "converged to {p}, want about 0.7");
        let prior_entropy = -(0.7_f64.ln() * 0.7 + 0.3_f64.ln() * 0.3);
        let final_loss = *result.loss_history.last().unwrap();
        assert!(
            (final_loss - prior_entropy).abs() < 0.02,
            "loss {final_loss}, prior entropy {prior_entropy}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let (x, labels) = blob_data(30, 23);
        let a = ann_train(&x, &labels, &AnnConfig::default()).unwrap();
        let b = ann_train(&x, &labels, &AnnConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn single_class_and_bad_config_are_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(ann_train(&x, &[LabelValue::High, LabelValue::High], &AnnConfig::default())
            .is_err());
        let labels = [LabelValue::High, LabelValue::Low];
        let cfg = AnnConfig {
            learning_rate: -0.1,
            ..AnnConfig::default()
        };
        assert!(ann_train(&x, &labels, &cfg).is_err());
    }
}
