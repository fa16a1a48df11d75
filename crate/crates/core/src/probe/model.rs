use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FeatureVector, FeaturizerInfo, ProbeError, TrainConfig};
use crate::aggregate::SoftDistribution;
use crate::corpus::Dimension;
use crate::Real;

/// Output classes, in weight-column order.
pub const CLASS_ORDER: [&str; 3] = ["neg", "zero", "pos"];

/// Weights `d x 3` (row-major, one row per feature) and a bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams<F> {
    pub d: usize,
    pub weights: Vec<F>,
    pub bias: [F; 3],
}

impl<F: Real> ProbeParams<F> {
    pub fn zeros(d: usize) -> Self {
        ProbeParams { d, weights: vec![F::zero(); d * 3], bias: [F::zero(); 3] }
    }

    pub fn logits(&self, x: &FeatureVector<F>) -> [F; 3] {
        let mut z = self.bias;
        for &(j, v) in x.entries() {
            let row = &self.weights[j as usize * 3..j as usize * 3 + 3];
            for c in 0..3 {
                z[c] = z[c] + row[c] * v;
            }
        }
        z
    }

    pub fn weight_norm_sq(&self) -> F {
        self.weights.iter().fold(F::zero(), |a, &w| a + w * w)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|w| w.is_finite())
    }
}

/// Numerically stable softmax.
pub fn softmax<F: Real>(z: [F; 3]) -> [F; 3] {
    let max = z[0].max(z[1]).max(z[2]);
    let e = z.map(|v| (v - max).exp());
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub epochs_run: usize,
    pub n_train: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub featurizer: Option<FeaturizerInfo>,
}

/// A trained 3-class head for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel<F> {
    pub dimension: Dimension,
    pub params: ProbeParams<F>,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Real")]
struct ModelFile<F> {
    dimension: Dimension,
    d: usize,
    class_order: Vec<String>,
    #[serde(rename = "W")]
    weights: Vec<F>,
    b: [F; 3],
    config: TrainConfig,
    seed: u64,
    epochs_run: usize,
    n_train: usize,
    initial_loss: f64,
    final_loss: f64,
    featurizer: Option<FeaturizerInfo>,
}

impl<F: Real> ProbeModel<F> {
    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn with_featurizer(mut self, info: FeaturizerInfo) -> Self {
        self.meta.featurizer = Some(info);
        self
    }

    pub fn save_json<W: Write>(&self, out: W) -> Result<(), ProbeError> {
        let file = ModelFile {
            dimension: self.dimension,
            d: self.params.d,
            class_order: CLASS_ORDER.iter().map(|s| s.to_string()).collect(),
            weights: self.params.weights.clone(),
            b: self.params.bias,
            config: self.meta.config.clone(),
            seed: self.meta.config.seed,
            epochs_run: self.meta.epochs_run,
            n_train: self.meta.n_train,
            initial_loss: self.meta.initial_loss,
            final_loss: self.meta.final_loss,
            featurizer: self.meta.featurizer.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn load_json<R: Read>(input: R) -> Result<Self, ProbeError> {
        let f: ModelFile<F> = serde_json::from_reader(input)?;
        if f.class_order != CLASS_ORDER {
            return Err(ProbeError::InvalidConfig(format!("unsupported class order {:?}", f.class_order)));
        }
        if f.weights.len() != f.d * 3 {
            return Err(ProbeError::DimensionMismatch { id: "W".into(), expected: f.d * 3, found: f.weights.len() });
        }
        let params = ProbeParams { d: f.d, weights: f.weights, bias: f.b };
        if !params.is_finite() {
            return Err(ProbeError::NonFinite { id: "model".into() });
        }
        let mut config = f.config;
        config.seed = f.seed;
        Ok(ProbeModel {
            dimension: f.dimension,
            params,
            meta: TrainingMeta {
                config,
                epochs_run: f.epochs_run,
                n_train: f.n_train,
                initial_loss: f.initial_loss,
                final_loss: f.final_loss,
                featurizer: f.featurizer,
            },
        })
    }
}

fn check_dim<F: Real>(model: &ProbeModel<F>, x: &FeatureVector<F>) -> Result<(), ProbeError> {
    if x.dim() != model.params.d {
        return Err(ProbeError::DimensionMismatch { id: "input".into(), expected: model.params.d, found: x.dim() });
    }
    Ok(())
}

/// Class distribution `(q_neg, q_zero, q_pos)`.
pub fn predict_dist<F: Real>(model: &ProbeModel<F>, x: &FeatureVector<F>) -> Result<SoftDistribution<F>, ProbeError> {
    check_dim(model, x)?;
    let [n, z, p] = softmax(model.params.logits(x));
    Ok(SoftDistribution::new(n, z, p))
}

/// Continuous prediction `q_pos - q_neg`.
pub fn predict_value<F: Real>(model: &ProbeModel<F>, x: &FeatureVector<F>) -> Result<F, ProbeError> {
    Ok(predict_dist(model, x)?.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(params: ProbeParams<f64>) -> ProbeModel<f64> {
        ProbeModel {
            dimension: Dimension::Utility,
            params,
            meta: TrainingMeta {
                config: TrainConfig::default(),
                epochs_run: 0,
                n_train: 0,
                initial_loss: 3f64.ln(),
                final_loss: 3f64.ln(),
                featurizer: None,
            },
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = model(ProbeParams::zeros(4));
        let x = FeatureVector::from_dense(&[1.0, -2.0, 0.5, 0.0]);
        let q = predict_dist(&m, &x).unwrap();
        for p in q.as_array() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(predict_value(&m, &x).unwrap(), 0.0);
    }

    #[test]
    fn softmax_shift_invariance_and_sum() {
        let a = softmax([0.3_f64, -1.2, 2.0]);
        let b = softmax([100.3_f64, 98.8, 102.0]);
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let extreme = softmax([-800.0_f64, 0.0, 800.0]);
        assert!(extreme.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn saturated_positive_logit_drives_value_to_one() {
        let mut p = ProbeParams::zeros(1);
        p.weights[2] = 40.0;
        let m = model(p);
        let v = predict_value(&m, &FeatureVector::from_dense(&[1.0])).unwrap();
        assert!(v > 1.0 - 1e-12 && v <= 1.0);
        let dist = predict_dist(&m, &FeatureVector::from_dense(&[1.0])).unwrap();
        assert_eq!(v, dist.p_pos - dist.p_neg);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = model(ProbeParams::zeros(3));
        assert!(matches!(
            predict_dist(&m, &FeatureVector::zeros(4)),
            Err(ProbeError::DimensionMismatch { expected: 3, found: 4, .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let mut p = ProbeParams::zeros(2);
        p.weights = vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6];
        p.bias = [0.01, 0.02, -0.03];
        let m = model(p).with_featurizer(crate::probe::FeaturizerConfig::default().into());
        let mut buf = Vec::new();
        m.save_json(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"class_order\""));
        assert!(text.contains("fnv1a-64"));
        assert_eq!(ProbeModel::<f64>::load_json(buf.as_slice()).unwrap(), m);
    }
}
