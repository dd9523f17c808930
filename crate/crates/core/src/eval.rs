//! Clip-level decisions by probability voting, confusion matrices, and
//! the k-fold cross-validation driver.
//!
//! A clip is classified by summing the class-probability vectors of its
//! `r` segments and taking the argmax; ties resolve to the lowest class
//! index. Cross-validation rotates over the manifest folds: for rotation
//! `i`, fold `i` is the test fold, fold `i mod folds + 1` validates, and
//! the remaining folds train. The standardizer is fitted on the training
//! folds only, then applied unchanged everywhere, so no clip's statistics
//! ever leak into its own test fold.

use serde::{Deserialize, Serialize};

use crate::data::{segment_clip, Dataset, Segment, Standardizer};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::scalar::Scalar;
use crate::training::{train, EpochMetrics, TrainConfig};

/// One clip's segment-level probability vectors and the class they vote
/// for. Construction checks that every row is a probability vector
/// (sums to 1 within 1e-9) and that at least one segment is present.
#[derive(Clone, Debug)]
pub struct ClipPrediction<T> {
    pub clip_id: String,
    pub segment_probs: Vec<Vec<T>>,
    pub voted: usize,
}

impl<T: Scalar> ClipPrediction<T> {
    pub fn new(clip_id: impl Into<String>, segment_probs: Vec<Vec<T>>) -> Result<Self> {
        let tol = T::from_f64_lossy(1e-9);
        for (i, row) in segment_probs.iter().enumerate() {
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol {
                return Err(Error::Config(format!(
                    "segment {i} probabilities sum to {total}, not 1"
                )));
            }
        }
        let voted = vote(&segment_probs)?;
        Ok(ClipPrediction {
            clip_id: clip_id.into(),
            segment_probs,
            voted,
        })
    }

    /// Number of segments `r` behind the vote.
    pub fn segments(&self) -> usize {
        self.segment_probs.len()
    }
}

/// Sums the `r x c` probability rows and returns the argmax class; ties
/// break toward the lowest index.
pub fn vote<T: Scalar>(segment_probs: &[Vec<T>]) -> Result<usize> {
    if segment_probs.is_empty() {
        return Err(Error::EmptyInput("segment probabilities"));
    }
    let classes = segment_probs[0].len();
    if classes == 0 || segment_probs.iter().any(|row| row.len() != classes) {
        return Err(Error::Config("ragged probability table".into()));
    }
    let mut sums = vec![T::zero(); classes];
    for row in segment_probs {
        for (s, &p) in sums.iter_mut().zip(row.iter()) {
            *s += p;
        }
    }
    let mut best = 0;
    for (j, &s) in sums.iter().enumerate().skip(1) {
        if s > sums[best] {
            best = j;
        }
    }
    Ok(best)
}

/// `c x c` count matrix, rows = true class, columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_pairs(truths: &[usize], predictions: &[usize], classes: usize) -> Result<Self> {
        if truths.len() != predictions.len() {
            return Err(Error::Config(format!(
                "{} truths vs {} predictions",
                truths.len(),
                predictions.len()
            )));
        }
        let mut cm = ConfusionMatrix::zeros(classes);
        for (&t, &p) in truths.iter().zip(predictions.iter()) {
            cm.record(t, p, classes)?;
        }
        Ok(cm)
    }

    fn record(&mut self, truth: usize, pred: usize, classes: usize) -> Result<()> {
        for label in [truth, pred] {
            if label >= classes {
                return Err(Error::ClassOutOfRange { label, classes });
            }
        }
        self.counts[truth][pred] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flat_map(|r| r.iter()).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes(), other.classes());
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (x, &y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }

    /// Diagonal over row sum; rows with no examples report 0.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    0.0
                } else {
                    row[i] as f64 / total as f64
                }
            })
            .collect()
    }

    /// Trace over total.
    pub fn overall_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: u64 = (0..self.classes()).map(|i| self.counts[i][i]).sum();
        trace as f64 / total as f64
    }

    /// Aligned text table, true classes as rows, predictions as columns.
    pub fn render(&self) -> String {
        let c = self.classes();
        let width = self
            .counts
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| v.to_string().len())
            .chain(std::iter::once(format!("t{}", c - 1).len()))
            .max()
            .unwrap_or(1)
            .max(2);
        let mut out = String::new();
        out.push_str(&" ".repeat(width + 2));
        for j in 0..c {
            out.push_str(&format!("{:>width$}  ", format!("p{j}")));
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:>width$}  ", format!("t{i}")));
            for v in row {
                out.push_str(&format!("{v:>width$}  "));
            }
            out.push('\n');
        }
        out
    }
}

/// One cross-validation rotation's outcome.
#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub test_fold: usize,
    pub val_fold: usize,
    pub accuracy: f64,
    pub metrics: Vec<EpochMetrics>,
}

/// Aggregate outcome of a full rotation over the folds.
#[derive(Clone, Debug)]
pub struct CvReport {
    pub folds: Vec<FoldOutcome>,
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

impl CvReport {
    pub fn per_fold_accuracy(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }

    pub fn mean_accuracy(&self) -> f64 {
        if self.folds.is_empty() {
            return 0.0;
        }
        self.folds.iter().map(|f| f.accuracy).sum::<f64>() / self.folds.len() as f64
    }
}

/// The results-file schema: accuracies, the summed confusion matrix and
/// an echo of the resolved configuration that produced them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvResults {
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    pub config_echo: serde_json::Value,
}

impl CvResults {
    pub fn new(report: &CvReport, config_echo: serde_json::Value) -> Self {
        CvResults {
            per_fold_accuracy: report.per_fold_accuracy(),
            mean_accuracy: report.mean_accuracy(),
            confusion: report.confusion.counts().to_vec(),
            config_echo,
        }
    }
}

/// Standardizes and segments the clips of the given folds.
fn fold_segments<T: Scalar>(
    dataset: &Dataset<T>,
    folds: &[usize],
    standardizer: &Standardizer<T>,
    q: usize,
    hop: usize,
) -> Result<Vec<Segment<T>>> {
    let mut segments = Vec::new();
    for clip in dataset.clips_in_folds(folds) {
        let standardized = standardizer.apply(&clip.features);
        segments.extend(segment_clip(&standardized, &clip.id, clip.label, q, hop)?);
    }
    Ok(segments)
}

/// Full rotation: for every fold, fit the standardizer on the training
/// folds, train a freshly initialized model (seed = base seed + fold
/// index), vote per test clip, and aggregate accuracies and confusion
/// counts. Requires at least 3 folds for a train/val/test split.
pub fn run_cross_validation<T: Scalar>(
    dataset: &Dataset<T>,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    hop: Option<usize>,
    expected_folds: usize,
) -> Result<CvReport> {
    model_config.validate()?;
    if expected_folds < 3 {
        return Err(Error::Config(
            "cross-validation needs at least 3 folds for a train/val/test split".into(),
        ));
    }
    let fold_ids = dataset.fold_ids();
    if fold_ids != (1..=expected_folds).collect::<Vec<_>>() {
        return Err(Error::Manifest(format!(
            "expected folds 1..{expected_folds}, manifest has {fold_ids:?}"
        )));
    }
    if dataset.clips.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    for clip in &dataset.clips {
        if clip.label >= model_config.classes {
            return Err(Error::ClassOutOfRange {
                label: clip.label,
                classes: model_config.classes,
            });
        }
    }

    let mut warnings = Vec::new();
    for fold in 1..=expected_folds {
        for class in 0..model_config.classes {
            if !dataset
                .clips
                .iter()
                .any(|c| c.fold == fold && c.label == class)
            {
                warnings.push(format!("fold {fold} has no clips of class {class}"));
            }
        }
    }

    let q = model_config.segment_width();
    let hop = hop.unwrap_or(q);
    let input_len = dataset.clips[0].features.rows();

    let mut folds = Vec::with_capacity(expected_folds);
    let mut confusion = ConfusionMatrix::zeros(model_config.classes);
    for test_fold in 1..=expected_folds {
        let val_fold = test_fold % expected_folds + 1;
        let train_folds: Vec<usize> = (1..=expected_folds)
            .filter(|&f| f != test_fold && f != val_fold)
            .collect();

        let train_clips: Vec<&crate::numerics::Matrix<T>> = dataset
            .clips_in_folds(&train_folds)
            .iter()
            .map(|c| &c.features)
            .collect();
        let standardizer = Standardizer::fit(&train_clips)?;

        let train_set = fold_segments(dataset, &train_folds, &standardizer, q, hop)?;
        let val_set = fold_segments(dataset, &[val_fold], &standardizer, q, hop)?;

        let seed = train_config.seed + test_fold as u64;
        let mut model = Model::<T>::new(model_config, input_len, seed)?;
        let fold_train_config = TrainConfig {
            seed,
            ..train_config.clone()
        };
        let metrics = train(&mut model, &train_set, &val_set, &fold_train_config)?;

        let mut correct = 0usize;
        let mut tested = 0usize;
        for clip in dataset.clips_in_folds(&[test_fold]) {
            let standardized = standardizer.apply(&clip.features);
            let segments = segment_clip(&standardized, &clip.id, clip.label, q, hop)?;
            let probs: Vec<Vec<T>> = segments
                .iter()
                .map(|s| model.predict(&s.data))
                .collect::<Result<_>>()?;
            let prediction = ClipPrediction::new(clip.id.clone(), probs)?;
            confusion.record(clip.label, prediction.voted, model_config.classes)?;
            tested += 1;
            if prediction.voted == clip.label {
                correct += 1;
            }
        }

        folds.push(FoldOutcome {
            test_fold,
            val_fold,
            accuracy: if tested == 0 {
                0.0
            } else {
                correct as f64 / tested as f64
            },
            metrics,
        });
    }

    Ok(CvReport {
        folds,
        confusion,
        warnings,
    })
}
