//! Foreground-speech detection over frame embeddings.
//!
//! [`FsDetector`] is the pluggable classifier applied to the embeddings of
//! cue pairs. [`LinearFsModel`] is the reference implementation: a logistic
//! head with a deterministic full-batch trainer.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::error::FsdError;
use crate::types::Embedding;

pub const MODEL_FORMAT: &str = "socialpulse-fsd/1";

/// Binary foreground-speech classifier. `true` means the frame is speech
/// from the wearer.
pub trait FsDetector: Send + Sync {
    fn embedding_dim(&self) -> usize;

    /// Decision for one embedding already known to have the right shape.
    fn predict(&self, embedding: &Embedding) -> bool;

    /// Classifies each embedding independently.
    fn classify(&self, embeddings: &[Embedding]) -> Result<Vec<bool>, FsdError> {
        let dim = self.embedding_dim();
        for (index, e) in embeddings.iter().enumerate() {
            if !e.fits(dim) {
                return Err(FsdError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: e.apparent_dim(),
                });
            }
            if !e.is_finite() {
                return Err(FsdError::NonFiniteInput { index });
            }
        }
        Ok(embeddings.iter().map(|e| self.predict(e)).collect())
    }
}

impl<T: FsDetector + ?Sized> FsDetector for &T {
    fn embedding_dim(&self) -> usize {
        (**self).embedding_dim()
    }

    fn predict(&self, embedding: &Embedding) -> bool {
        (**self).predict(embedding)
    }
}

/// Logistic head: foreground speech when `sigmoid(w . x + b) >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFsModel {
    weights: Vec<f64>,
    bias: f64,
    threshold: f64,
}

impl LinearFsModel {
    pub fn new(weights: Vec<f64>, bias: f64, threshold: f64) -> Result<Self, FsdError> {
        if weights.is_empty() {
            return Err(FsdError::EmptyData);
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(FsdError::NonFiniteParameter("weights"));
        }
        if !bias.is_finite() {
            return Err(FsdError::NonFiniteParameter("bias"));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(FsdError::BadThreshold(threshold));
        }
        Ok(Self {
            weights,
            bias,
            threshold,
        })
    }

    /// Unit weight on dimension 0, zero bias, threshold 0.5. Used when no
    /// trained weights are available; synthetic traces are steered along
    /// whatever model they are generated for.
    pub fn reference(dim: usize) -> Self {
        let mut weights = vec![0.0; dim.max(1)];
        weights[0] = 1.0;
        Self {
            weights,
            bias: 0.0,
            threshold: 0.5,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(self, threshold: f64) -> Result<Self, FsdError> {
        Self::new(self.weights, self.bias, threshold)
    }

    pub fn logit(&self, embedding: &Embedding) -> f64 {
        embedding.dot(&self.weights) + self.bias
    }

    pub fn probability(&self, embedding: &Embedding) -> f64 {
        sigmoid(self.logit(embedding))
    }

    /// Logit at which the sigmoid output equals the threshold.
    pub fn decision_logit(&self) -> f64 {
        (self.threshold / (1.0 - self.threshold)).ln()
    }

    /// Fails unless the model matches the configured embedding dimension.
    pub fn check_config(&self, cfg: &DetectorConfig) -> Result<(), FsdError> {
        if self.weights.len() != cfg.embedding_dim {
            return Err(FsdError::ModelDimension {
                expected: cfg.embedding_dim,
                found: self.weights.len(),
            });
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            embedding_dim: self.weights.len(),
            bias: self.bias,
            threshold: self.threshold,
            weights: self.weights.clone(),
        };
        let mut s = serde_json::to_string(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, FsdError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| FsdError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(FsdError::Format(format!(
                "unsupported format {:?}, expected {MODEL_FORMAT:?}",
                file.format
            )));
        }
        if file.weights.len() != file.embedding_dim {
            return Err(FsdError::Format(format!(
                "embedding_dim {} but {} weights",
                file.embedding_dim,
                file.weights.len()
            )));
        }
        Self::new(file.weights, file.bias, file.threshold)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FsdError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| io_err(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FsdError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json_str(&text)
    }
}

impl FsDetector for LinearFsModel {
    fn embedding_dim(&self) -> usize {
        self.weights.len()
    }

    fn predict(&self, embedding: &Embedding) -> bool {
        self.probability(embedding) >= self.threshold
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    embedding_dim: usize,
    bias: f64,
    threshold: f64,
    weights: Vec<f64>,
}

fn io_err(path: &Path, e: std::io::Error) -> FsdError {
    let message = if e.kind() == std::io::ErrorKind::NotFound {
        "model not found".to_string()
    } else {
        e.to_string()
    };
    FsdError::Io {
        path: path.display().to_string(),
        message,
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// A labeled embedding: label 1 is foreground speech.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub embedding: Embedding,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    /// Seeds the weight initialization.
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearFsModel,
    /// Regularized mean log-loss before training and after each epoch.
    pub loss_history: Vec<f64>,
}

fn check_samples(data: &[Sample]) -> Result<(usize, usize, usize), FsdError> {
    let first = data.first().ok_or(FsdError::EmptyData)?;
    let dim = match &first.embedding {
        Embedding::Dense(v) => v.len(),
        Embedding::Sparse(_) => data
            .iter()
            .map(|s| s.embedding.apparent_dim())
            .max()
            .unwrap_or(0),
    };
    let mut counts = [0usize; 2];
    for (index, s) in data.iter().enumerate() {
        if s.label > 1 {
            return Err(FsdError::BadLabel {
                index,
                label: s.label,
            });
        }
        if !s.embedding.fits(dim) {
            return Err(FsdError::DimensionMismatch {
                index,
                expected: dim,
                found: s.embedding.apparent_dim(),
            });
        }
        if !s.embedding.is_finite() {
            return Err(FsdError::NonFiniteInput { index });
        }
        counts[s.label as usize] += 1;
    }
    Ok((dim, counts[0], counts[1]))
}

/// Fits a logistic-regression head by full-batch gradient descent.
///
/// Training is deterministic: identical data, parameters and seed give a
/// bit-identical model.
pub fn train_linear(data: &[Sample], params: &TrainParams) -> Result<TrainOutcome, FsdError> {
    let (dim, neg, pos) = check_samples(data)?;
    if dim == 0 {
        return Err(FsdError::EmptyData);
    }
    if pos == 0 {
        return Err(FsdError::DegenerateTrainingSet(0));
    }
    if neg == 0 {
        return Err(FsdError::DegenerateTrainingSet(1));
    }

    let xs: Vec<Vec<f64>> = data
        .iter()
        .map(|s| s.embedding.to_dense(dim).into_iter().map(f64::from).collect())
        .collect();
    let ys: Vec<f64> = data.iter().map(|s| s.label as f64).collect();
    let n = data.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut b = 0.0;

    let loss = |w: &[f64], b: f64| -> f64 {
        let data_loss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let z = dot(x, w) + b;
                // -[y ln s(z) + (1-y) ln(1 - s(z))]
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n;
        data_loss + 0.5 * params.l2 * dot(w, w)
    };

    let mut loss_history = Vec::with_capacity(params.epochs + 1);
    loss_history.push(loss(&w, b));
    let mut grad_w = vec![0.0; dim];
    for _ in 0..params.epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let err = sigmoid(dot(x, &w) + b) - y;
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= params.learning_rate * (g / n + params.l2 * *wi);
        }
        b -= params.learning_rate * grad_b / n;
        loss_history.push(loss(&w, b));
    }

    Ok(TrainOutcome {
        model: LinearFsModel::new(w, b, 0.5)?,
        loss_history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of the per-class recalls, as a percentage.
pub fn evaluate_balanced_accuracy(
    model: &dyn FsDetector,
    data: &[Sample],
) -> Result<f64, FsdError> {
    if data.is_empty() {
        return Err(FsdError::EmptyData);
    }
    let embeddings: Vec<Embedding> = data.iter().map(|s| s.embedding.clone()).collect();
    let predicted = model.classify(&embeddings)?;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (index, (s, p)) in data.iter().zip(predicted).enumerate() {
        if s.label > 1 {
            return Err(FsdError::BadLabel {
                index,
                label: s.label,
            });
        }
        let truth = s.label == 1;
        totals[s.label as usize] += 1;
        if p == truth {
            hits[s.label as usize] += 1;
        }
    }
    if let Some(class) = totals.iter().position(|t| *t == 0) {
        return Err(FsdError::MissingClass(class as u8));
    }
    let recall = |c: usize| hits[c] as f64 / totals[c] as f64;
    Ok(100.0 * (recall(0) + recall(1)) / 2.0)
}

/// Two clusters split along dimension 0 at -1 and +1, with uniform noise in
/// [-0.5, 0.5] on the remaining dimensions. Label 1 is the +1 cluster.
pub fn separable_fixture(per_class: usize, dim: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let label = (i % 2) as u8;
        let mut x = vec![0.0f32; dim];
        x[0] = if label == 1 { 1.0 } else { -1.0 };
        for v in x.iter_mut().skip(1) {
            *v = rng.gen_range(-0.5..0.5);
        }
        out.push(Sample {
            embedding: Embedding::Dense(x),
            label,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Constant(bool, usize);

    impl FsDetector for Constant {
        fn embedding_dim(&self) -> usize {
            self.1
        }
        fn predict(&self, _: &Embedding) -> bool {
            self.0
        }
    }

    struct Inverted<D>(D);

    impl<D: FsDetector> FsDetector for Inverted<D> {
        fn embedding_dim(&self) -> usize {
            self.0.embedding_dim()
        }
        fn predict(&self, e: &Embedding) -> bool {
            !self.0.predict(e)
        }
    }

    fn scalar(v: f32) -> Embedding {
        Embedding::Dense(vec![v])
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let m = LinearFsModel::reference(4);
        assert_eq!(m.classify(&[]).unwrap(), Vec::<bool>::new());
    }

    #[test]
    fn saturated_bias_is_always_foreground() {
        let m = LinearFsModel::new(vec![0.0; 3], 10.0, 0.5).unwrap();
        let xs = vec![
            Embedding::Dense(vec![-100.0, 5.0, 1.0]),
            Embedding::Sparse(vec![]),
            Embedding::Sparse(vec![(2, 1e6)]),
        ];
        assert_eq!(m.classify(&xs).unwrap(), vec![true; 3]);
    }

    #[test]
    fn one_hot_weight_follows_sign() {
        let m = LinearFsModel::new(vec![1.0, 0.0], 0.0, 0.5).unwrap();
        let xs = vec![
            Embedding::Dense(vec![-5.0, 3.0]),
            Embedding::Dense(vec![5.0, -3.0]),
        ];
        // sigmoid(-5) = 0.0067, sigmoid(5) = 0.9933
        assert!((m.probability(&xs[0]) - 1.0 / (1.0 + 5f64.exp())).abs() < 1e-15);
        assert_eq!(m.classify(&xs).unwrap(), vec![false, true]);
    }

    #[test]
    fn dimension_mismatch_names_index() {
        let m = LinearFsModel::reference(2);
        let xs = vec![
            Embedding::Dense(vec![1.0, 2.0]),
            Embedding::Dense(vec![1.0]),
        ];
        assert_eq!(
            m.classify(&xs),
            Err(FsdError::DimensionMismatch {
                index: 1,
                expected: 2,
                found: 1
            })
        );
        let xs = vec![Embedding::Sparse(vec![(5, 1.0)])];
        assert!(matches!(
            m.classify(&xs),
            Err(FsdError::DimensionMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn degenerate_training_set() {
        let data: Vec<Sample> = (0..10)
            .map(|i| Sample {
                embedding: scalar(i as f32),
                label: 1,
            })
            .collect();
        let err = train_linear(&data, &TrainParams::default()).unwrap_err();
        assert_eq!(err, FsdError::DegenerateTrainingSet(1));
        assert!(err.to_string().contains("degenerate training set"));
        assert_eq!(
            train_linear(&[], &TrainParams::default()).unwrap_err(),
            FsdError::EmptyData
        );
    }

    #[test]
    fn separable_fixture_trains_to_full_accuracy() {
        let data = separable_fixture(100, 8, 7);
        // The plane x0 = 0 separates the clusters.
        let oracle = LinearFsModel::new(
            (0..8).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            0.0,
            0.5,
        )
        .unwrap();
        assert_eq!(evaluate_balanced_accuracy(&oracle, &data).unwrap(), 100.0);

        let params = TrainParams {
            learning_rate: 0.1,
            epochs: 500,
            l2: 0.0,
            seed: 3,
        };
        let out = train_linear(&data, &params).unwrap();
        assert_eq!(evaluate_balanced_accuracy(&out.model, &data).unwrap(), 100.0);
        assert_eq!(out.loss_history.len(), 501);
    }

    #[test]
    fn training_is_bit_identical_for_same_seed() {
        let data = separable_fixture(50, 6, 1);
        let params = TrainParams {
            seed: 42,
            l2: 0.01,
            ..Default::default()
        };
        let a = train_linear(&data, &params).unwrap();
        let b = train_linear(&data, &params).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.model.to_json_string(), b.model.to_json_string());
    }

    #[test]
    fn loss_is_monotone_at_small_rate() {
        let data = separable_fixture(100, 8, 7);
        let params = TrainParams {
            learning_rate: 0.01,
            epochs: 500,
            l2: 0.0,
            seed: 0,
        };
        let out = train_linear(&data, &params).unwrap();
        for w in out.loss_history.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn balanced_accuracy_arithmetic() {
        let half: Vec<Sample> = (0..20)
            .map(|i| Sample {
                embedding: scalar(i as f32),
                label: (i % 2) as u8,
            })
            .collect();
        // Recalls 1.0 and 0.0.
        assert_eq!(
            evaluate_balanced_accuracy(&Constant(true, 1), &half).unwrap(),
            50.0
        );

        // 9/10 positives and 7/10 negatives correct: x >= 0 predicts speech.
        let mut data = vec![];
        for i in 0..10 {
            let v = if i < 9 { 1.0 } else { -1.0 };
            data.push(Sample {
                embedding: scalar(v),
                label: 1,
            });
        }
        for i in 0..10 {
            let v = if i < 7 { -1.0 } else { 1.0 };
            data.push(Sample {
                embedding: scalar(v),
                label: 0,
            });
        }
        let m = LinearFsModel::new(vec![1.0], 0.0, 0.5).unwrap();
        let got = evaluate_balanced_accuracy(&m, &data).unwrap();
        assert!((got - 80.0).abs() < 1e-12, "{got}");

        let only_pos = &data[..10];
        assert_eq!(
            evaluate_balanced_accuracy(&m, only_pos),
            Err(FsdError::MissingClass(0))
        );
    }

    #[test]
    fn model_file_round_trip_and_checks() {
        let m = LinearFsModel::new(vec![0.1, -2.5, 1e-300], 0.25, 0.7).unwrap();
        let back = LinearFsModel::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back, m);

        let cfg = DetectorConfig {
            embedding_dim: 4,
            ..Default::default()
        };
        assert_eq!(
            m.check_config(&cfg),
            Err(FsdError::ModelDimension {
                expected: 4,
                found: 3
            })
        );

        let bad = r#"{"format":"socialpulse-fsd/9","embedding_dim":1,"bias":0,"threshold":0.5,"weights":[1]}"#;
        assert!(matches!(
            LinearFsModel::from_json_str(bad),
            Err(FsdError::Format(_))
        ));
        let bad = r#"{"format":"socialpulse-fsd/1","embedding_dim":2,"bias":0,"threshold":0.5,"weights":[1]}"#;
        assert!(matches!(
            LinearFsModel::from_json_str(bad),
            Err(FsdError::Format(_))
        ));
        assert!(matches!(
            LinearFsModel::new(vec![1.0], 0.0, 1.0),
            Err(FsdError::BadThreshold(_))
        ));

        let err = LinearFsModel::load("/nonexistent/model.json").unwrap_err();
        assert!(err.to_string().contains("model not found"), "{err}");
    }

    #[test]
    fn decision_logit_matches_threshold() {
        let m = LinearFsModel::new(vec![1.0], 0.0, 0.8).unwrap();
        let z = m.decision_logit();
        assert!((sigmoid(z) - 0.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn positive_scaling_preserves_decisions(
            w in proptest::collection::vec(-3.0f64..3.0, 5),
            b in -3.0f64..3.0,
            c in 0.01f64..100.0,
            xs in proptest::collection::vec(proptest::collection::vec(-4.0f32..4.0, 5), 1..20),
        ) {
            let m = LinearFsModel::new(w.clone(), b, 0.5).unwrap();
            let scaled = LinearFsModel::new(w.iter().map(|v| v * c).collect(), b * c, 0.5).unwrap();
            let xs: Vec<Embedding> = xs.into_iter().map(Embedding::Dense).collect();
            let base = m.classify(&xs).unwrap();
            // Skip inputs whose logit is within rounding of zero.
            let clear: Vec<bool> = xs.iter().map(|x| m.logit(x).abs() > 1e-9).collect();
            let got = scaled.classify(&xs).unwrap();
            for i in 0..xs.len() {
                if clear[i] {
                    prop_assert_eq!(base[i], got[i]);
                }
            }
            prop_assert_eq!(m.classify(&xs).unwrap(), base);
        }

        #[test]
        fn balanced_accuracy_relabel_symmetry(
            rows in proptest::collection::vec((-2.0f32..2.0, 0u8..2), 2..40),
        ) {
            let mut rows = rows;
            rows[0].1 = 0;
            rows[1].1 = 1;
            let data: Vec<Sample> = rows.iter().map(|(v, l)| Sample { embedding: scalar(*v), label: *l }).collect();
            let swapped: Vec<Sample> = rows.iter().map(|(v, l)| Sample { embedding: scalar(*v), label: 1 - *l }).collect();
            let m = LinearFsModel::new(vec![1.3], -0.2, 0.5).unwrap();
            let a = evaluate_balanced_accuracy(&m, &data).unwrap();
            let b = evaluate_balanced_accuracy(&Inverted(m), &swapped).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
