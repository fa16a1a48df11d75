use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{softmax, ProbeModel, ProbeParams, TrainingMeta};
use super::{FeatureVector, ProbeError};
use crate::aggregate::SoftLabel;
use crate::corpus::Dimension;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    pub batch_size: usize,
    /// Controls example shuffling.
    pub seed: u64,
    /// Stop when the objective moves by less than this fraction over
    /// `early_stop_window` epochs.
    pub early_stop_tol: f64,
    pub early_stop_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            l2_lambda: 1e-4,
            batch_size: 64,
            seed: 0,
            early_stop_tol: 1e-6,
            early_stop_window: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |what: &str| Err(ProbeError::InvalidConfig(what.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_lambda > 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be positive");
        }
        if 2.0 * self.learning_rate * self.l2_lambda >= 1.0 {
            return bad("2 * learning_rate * l2_lambda must be below 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.early_stop_tol.is_nan() || self.early_stop_tol <= 0.0 || self.early_stop_window == 0 {
            return bad("early stopping tolerance and window must be positive");
        }
        Ok(())
    }
}

/// One training example: features and a target distribution (neg, zero, pos).
#[derive(Debug, Clone, Copy)]
pub struct Example<'a, F> {
    pub x: &'a FeatureVector<F>,
    pub target: [F; 3],
}

fn log_softmax<F: Real>(z: [F; 3]) -> [F; 3] {
    let max = z[0].max(z[1]).max(z[2]);
    let lse = max + ((z[0] - max).exp() + (z[1] - max).exp() + (z[2] - max).exp()).ln();
    z.map(|v| v - lse)
}

fn cross_entropy<F: Real>(z: [F; 3], p: &[F; 3]) -> F {
    let lq = log_softmax(z);
    -(p[0] * lq[0] + p[1] * lq[1] + p[2] * lq[2])
}

/// Soft-target cross-entropy plus L2 penalty:
/// `-(1/N) sum_i sum_c p_c(i) log q_c(i) + l2 * |W|^2`.
pub fn objective<F: Real>(params: &ProbeParams<F>, data: &[Example<'_, F>], l2: F) -> F {
    let n = F::from_count(data.len());
    let ce = data.iter().map(|e| cross_entropy(params.logits(e.x), &e.target)).fold(F::zero(), |a, b| a + b);
    ce / n + l2 * params.weight_norm_sq()
}

/// Objective and its exact gradient with respect to weights and bias.
pub fn objective_gradient<F: Real>(params: &ProbeParams<F>, data: &[Example<'_, F>], l2: F) -> (F, ProbeParams<F>) {
    let n = F::from_count(data.len());
    let mut grad = ProbeParams::zeros(params.d);
    let mut ce = F::zero();
    for e in data {
        let z = params.logits(e.x);
        ce = ce + cross_entropy(z, &e.target);
        let q = softmax(z);
        let r: [F; 3] = std::array::from_fn(|c| (q[c] - e.target[c]) / n);
        for (b, &rc) in grad.bias.iter_mut().zip(&r) {
            *b = *b + rc;
        }
        for &(j, v) in e.x.entries() {
            for (g, &rc) in grad.weights[j as usize * 3..j as usize * 3 + 3].iter_mut().zip(&r) {
                *g = *g + v * rc;
            }
        }
    }
    let two_l2 = l2 + l2;
    for (g, &w) in grad.weights.iter_mut().zip(&params.weights) {
        *g = *g + two_l2 * w;
    }
    (ce / n + l2 * params.weight_norm_sq(), grad)
}

/// Weights stored as `scale * v`, so the L2 shrink of every step is one
/// multiply and sparse updates only touch active rows.
struct ScaledWeights<F> {
    v: Vec<F>,
    scale: F,
    bias: [F; 3],
}

impl<F: Real> ScaledWeights<F> {
    fn logits(&self, x: &FeatureVector<F>) -> [F; 3] {
        let mut acc = [F::zero(); 3];
        for &(j, val) in x.entries() {
            let row = &self.v[j as usize * 3..j as usize * 3 + 3];
            for c in 0..3 {
                acc[c] = acc[c] + row[c] * val;
            }
        }
        std::array::from_fn(|c| self.bias[c] + self.scale * acc[c])
    }

    fn materialize(&self, d: usize) -> ProbeParams<F> {
        ProbeParams { d, weights: self.v.iter().map(|&w| w * self.scale).collect(), bias: self.bias }
    }

    fn renormalize(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|w| *w = *w * s);
        self.scale = F::one();
    }
}

/// Mini-batch gradient descent on the soft-target objective, from zero
/// weights. Trains on the verbatims present in both maps. Bit-for-bit
/// reproducible for identical inputs and config.
pub fn train_probe<F: Real>(
    features: &BTreeMap<String, FeatureVector<F>>,
    labels: &BTreeMap<String, SoftLabel>,
    dimension: Dimension,
    config: &TrainConfig,
) -> Result<ProbeModel<F>, ProbeError> {
    config.validate()?;
    let mut d = None;
    let mut data = Vec::new();
    for (id, label) in labels {
        let Some(x) = features.get(id) else { continue };
        let expected = *d.get_or_insert(x.dim());
        if x.dim() != expected {
            return Err(ProbeError::DimensionMismatch { id: id.clone(), expected, found: x.dim() });
        }
        data.push(Example { x, target: label.proportions::<F>().as_array() });
    }
    let d = d.ok_or(ProbeError::EmptyTraining)?;

    let lr = F::from_f64_lossy(config.learning_rate);
    let l2 = F::from_f64_lossy(config.l2_lambda);
    let decay = F::one() - (lr + lr) * l2;
    let renorm_below = F::from_f64_lossy(1e-3);

    let mut state = ScaledWeights { v: vec![F::zero(); d * 3], scale: F::one(), bias: [F::zero(); 3] };
    let initial_loss = objective(&state.materialize(d), &data, l2);
    let mut history = vec![initial_loss];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut residuals: Vec<[F; 3]> = Vec::with_capacity(config.batch_size);
    let mut epochs_run = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let b = F::from_count(batch.len());
            residuals.clear();
            residuals.extend(batch.iter().map(|&i| {
                let q = softmax(state.logits(data[i].x));
                let t = data[i].target;
                std::array::from_fn(|c| (q[c] - t[c]) / b)
            }));
            state.scale = state.scale * decay;
            let step = lr / state.scale;
            for (&i, r) in batch.iter().zip(&residuals) {
                for (b, &rc) in state.bias.iter_mut().zip(r) {
                    *b = *b - lr * rc;
                }
                for &(j, val) in data[i].x.entries() {
                    let row = &mut state.v[j as usize * 3..j as usize * 3 + 3];
                    for c in 0..3 {
                        row[c] = row[c] - step * val * r[c];
                    }
                }
            }
            if state.scale < renorm_below {
                state.renormalize();
            }
        }
        epochs_run = epoch + 1;
        let loss = objective(&state.materialize(d), &data, l2);
        if !loss.is_finite() {
            return Err(ProbeError::NonFiniteLoss { epoch: epochs_run });
        }
        history.push(loss);
        let w = config.early_stop_window;
        if history.len() > w {
            let before = history[history.len() - 1 - w];
            let change = (loss - before).abs() / before.abs().max(F::min_positive_value());
            if change.to_f64_lossy() < config.early_stop_tol {
                break;
            }
        }
    }

    let params = state.materialize(d);
    let final_loss = *history.last().expect("initial loss recorded");
    Ok(ProbeModel {
        dimension,
        params,
        meta: TrainingMeta {
            config: config.clone(),
            epochs_run,
            n_train: data.len(),
            initial_loss: initial_loss.to_f64_lossy(),
            final_loss: final_loss.to_f64_lossy(),
            featurizer: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::predict_value;

    fn label(n: u32, z: u32, p: u32) -> SoftLabel {
        SoftLabel::from_counts(n, z, p).unwrap()
    }

    fn two_points() -> (BTreeMap<String, FeatureVector<f64>>, BTreeMap<String, SoftLabel>) {
        let features = BTreeMap::from([
            ("a".to_string(), FeatureVector::from_dense(&[1.0, 0.0])),
            ("b".to_string(), FeatureVector::from_dense(&[0.0, 1.0])),
        ]);
        let labels = BTreeMap::from([("a".to_string(), label(0, 0, 6)), ("b".to_string(), label(6, 0, 0))]);
        (features, labels)
    }

    #[test]
    fn zero_epochs_leaves_zero_model() {
        let (f, l) = two_points();
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let m = train_probe(&f, &l, Dimension::Utility, &cfg).unwrap();
        assert!(m.params.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.params.bias, [0.0; 3]);
        assert!((m.meta.initial_loss - 3f64.ln()).abs() < 1e-12);
        assert_eq!(predict_value(&m, &f["a"]).unwrap(), 0.0);
    }

    #[test]
    fn separable_points_converge() {
        let (f, l) = two_points();
        let cfg = TrainConfig { epochs: 2000, learning_rate: 0.5, ..Default::default() };
        let m = train_probe(&f, &l, Dimension::Utility, &cfg).unwrap();
        assert!(m.meta.final_loss < 0.1, "loss {}", m.meta.final_loss);
        assert!(predict_value(&m, &f["a"]).unwrap() > 0.8);
        assert!(predict_value(&m, &f["b"]).unwrap() < -0.8);
    }

    #[test]
    fn training_is_deterministic() {
        let (f, l) = two_points();
        let cfg = TrainConfig { epochs: 50, batch_size: 1, seed: 9, ..Default::default() };
        let a = train_probe(&f, &l, Dimension::Utility, &cfg).unwrap();
        let b = train_probe(&f, &l, Dimension::Utility, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn f32_training_runs() {
        let f: BTreeMap<String, FeatureVector<f32>> = BTreeMap::from([
            ("a".to_string(), FeatureVector::from_dense(&[1.0f32, 0.0])),
            ("b".to_string(), FeatureVector::from_dense(&[0.0f32, 1.0])),
        ]);
        let (_, l) = two_points();
        let m = train_probe(&f, &l, Dimension::Utility, &TrainConfig::default()).unwrap();
        assert!(m.meta.final_loss < m.meta.initial_loss);
    }

    #[test]
    fn errors() {
        let (f, l) = two_points();
        let empty = BTreeMap::new();
        assert!(matches!(
            train_probe(&f, &empty, Dimension::Utility, &TrainConfig::default()),
            Err(ProbeError::EmptyTraining)
        ));
        let mut bad = f.clone();
        bad.insert("b".into(), FeatureVector::from_dense(&[1.0, 2.0, 3.0]));
        assert!(matches!(
            train_probe(&bad, &l, Dimension::Utility, &TrainConfig::default()),
            Err(ProbeError::DimensionMismatch { .. })
        ));
        let hot = TrainConfig { learning_rate: 1e6, l2_lambda: 1e-12, ..Default::default() };
        let big = BTreeMap::from([
            ("a".to_string(), FeatureVector::from_dense(&[1e150, 0.0])),
            ("b".to_string(), FeatureVector::from_dense(&[0.0, 1e150])),
        ]);
        assert!(matches!(train_probe(&big, &l, Dimension::Utility, &hot), Err(ProbeError::NonFiniteLoss { .. })));
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn gradient_matches_objective_at_zero() {
        let (f, l) = two_points();
        let data: Vec<Example<f64>> =
            l.iter().map(|(id, lab)| Example { x: &f[id], target: lab.proportions().as_array() }).collect();
        let p = ProbeParams::zeros(2);
        let (loss, g) = objective_gradient(&p, &data, 0.01);
        assert!((loss - objective(&p, &data, 0.01)).abs() < 1e-15);
        // At zero: dL/db = mean(q - p) = (1/3 - mean target).
        assert!((g.bias[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.bias[2] - (1.0 / 3.0 - 0.5)).abs() < 1e-15);
    }
}
