//! Categorical cross-entropy, the ADAM optimizer, the training loop, and
//! a finite-difference gradient auditor.
//!
//! Training operates at segment level: every segment inherits its clip's
//! label, and the clip-level decision is made later by probability voting.
//! Everything is driven by one seeded generator, so a (seed, config, data)
//! triple fully determines the metric trajectory.

use crate::data::Segment;
use crate::error::{Error, Result};
use crate::layers::softmax;
use crate::model::{DropoutPlan, Gradients, Model};
use crate::numerics::SeededRng;
use crate::scalar::Scalar;

/// Loss floor: probabilities are clamped to at least this before the log.
const PROB_FLOOR: f64 = 1e-12;

/// Categorical cross-entropy of a probability vector against a class
/// index. Returns the loss and its gradient with respect to the
/// pre-softmax logits, `pred - onehot(target)`.
pub fn cross_entropy<T: Scalar>(pred: &[T], target: usize) -> Result<(T, Vec<T>)> {
    if target >= pred.len() {
        return Err(Error::ClassOutOfRange {
            label: target,
            classes: pred.len(),
        });
    }
    let floor = T::from_f64_lossy(PROB_FLOOR);
    let loss = -(pred[target].max(floor)).ln();
    let grad = pred
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == target { p - T::one() } else { p })
        .collect();
    Ok((loss, grad))
}

/// ADAM hyperparameters; the defaults are lr 0.001, beta1 0.9,
/// beta2 0.999, epsilon 1e-8.
#[derive(Clone, Copy, Debug)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter first and second moment accumulators plus the step
/// counter for bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
    params: AdamParams,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(block_sizes: &[usize], params: AdamParams) -> Self {
        AdamState {
            m: block_sizes.iter().map(|&s| vec![T::zero(); s]).collect(),
            v: block_sizes.iter().map(|&s| vec![T::zero(); s]).collect(),
            t: 0,
            params,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update of every parameter block in place.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &Gradients<T>) -> Result<()> {
        if params.len() != self.m.len() || grads.blocks.len() != self.m.len() {
            return Err(Error::Config(format!(
                "adam block count mismatch: {} params, {} grads, {} states",
                params.len(),
                grads.blocks.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let b1 = T::from_f64_lossy(self.params.beta1);
        let b2 = T::from_f64_lossy(self.params.beta2);
        let eps = T::from_f64_lossy(self.params.epsilon);
        let lr = T::from_f64_lossy(self.params.learning_rate);
        let corr1 = T::one() - T::from_f64_lossy(self.params.beta1.powi(self.t as i32));
        let corr2 = T::one() - T::from_f64_lossy(self.params.beta2.powi(self.t as i32));

        for (bi, block) in params.iter_mut().enumerate() {
            let gblock = &grads.blocks[bi];
            if block.len() != gblock.len() {
                return Err(Error::Config(format!(
                    "adam block {bi} size mismatch: {} vs {}",
                    block.len(),
                    gblock.len()
                )));
            }
            let mblock = &mut self.m[bi];
            let vblock = &mut self.v[bi];
            for (((p, &g), m), v) in block
                .iter_mut()
                .zip(gblock.iter())
                .zip(mblock.iter_mut())
                .zip(vblock.iter_mut())
            {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Training schedule. Epoch budget, batch size and learning rate are
/// plain conventional defaults; override them per experiment.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub dropout_clnn: f64,
    pub dropout_dense: f64,
    /// Epochs without a validation-accuracy improvement before stopping;
    /// `None` trains the full epoch budget.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.001,
            seed: 0,
            dropout_clnn: 0.0,
            dropout_dense: 0.5,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        for (name, rate) in [("dropout_clnn", self.dropout_clnn), ("dropout_dense", self.dropout_dense)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {rate}")));
            }
        }
        Ok(())
    }
}

/// One metrics row; `csv_line` matches the header
/// `epoch,train_loss,train_acc,val_loss,val_acc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

impl EpochMetrics {
    pub fn csv_header() -> &'static str {
        "epoch,train_loss,train_acc,val_loss,val_acc"
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6}",
            self.epoch, self.train_loss, self.train_acc, self.val_loss, self.val_acc
        )
    }
}

fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn check_segments<T: Scalar>(model: &Model<T>, segments: &[Segment<T>]) -> Result<()> {
    for seg in segments {
        model.check_segment_width(seg.data.cols())?;
        if seg.data.rows() != model.input_len() {
            return Err(Error::ShapeMismatch {
                op: "segment features",
                lhs_rows: model.input_len(),
                lhs_cols: model.segment_width(),
                rhs_rows: seg.data.rows(),
                rhs_cols: seg.data.cols(),
            });
        }
        if seg.label >= model.classes() {
            return Err(Error::ClassOutOfRange {
                label: seg.label,
                classes: model.classes(),
            });
        }
    }
    Ok(())
}

/// Mean loss and accuracy over segments in inference mode (no dropout).
pub fn evaluate_segments<T: Scalar>(
    model: &Model<T>,
    segments: &[Segment<T>],
) -> Result<(f64, f64)> {
    if segments.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for seg in segments {
        let probs = model.predict(&seg.data)?;
        let (loss, _) = cross_entropy(&probs, seg.label)?;
        loss_sum += loss.to_f64().expect("loss fits f64");
        if argmax(&probs) == seg.label {
            correct += 1;
        }
    }
    Ok((
        loss_sum / segments.len() as f64,
        correct as f64 / segments.len() as f64,
    ))
}

/// Minimizes mean segment-level cross-entropy with ADAM, shuffling every
/// epoch with the seeded generator. The model is left holding the
/// parameters of the best validation-accuracy epoch (ties broken by lower
/// validation loss, then by the earlier epoch).
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_set: &[Segment<T>],
    val_set: &[Segment<T>],
    config: &TrainConfig,
) -> Result<Vec<EpochMetrics>> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    check_segments(model, train_set)?;
    check_segments(model, val_set)?;

    let plan = DropoutPlan {
        clnn: config.dropout_clnn,
        dense: config.dropout_dense,
    };
    let mut rng = SeededRng::new(config.seed);
    let mut adam = AdamState::new(
        &model.block_sizes(),
        AdamParams {
            learning_rate: config.learning_rate,
            ..AdamParams::default()
        },
    );

    let mut metrics = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, f64, Vec<Vec<T>>)> = None;
    let mut epochs_since_best = 0usize;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let effective = model.effective_weights();
            let mut grads = Gradients::zeros_like(&model.block_sizes());
            for &idx in batch {
                let seg = &train_set[idx];
                let cache =
                    model.forward_full(&seg.data, &effective, Some((&plan, &mut rng)))?;
                let probs = softmax(&cache.logits);
                let (loss, dlogits) = cross_entropy(&probs, seg.label)?;
                loss_sum += loss.to_f64().expect("loss fits f64");
                if argmax(&probs) == seg.label {
                    correct += 1;
                }
                let sample_grads = model.backward(&effective, &cache, &dlogits)?;
                grads.accumulate(&sample_grads);
            }
            grads.scale(T::one() / T::from_usize(batch.len()).expect("batch size"));
            adam.step(&mut model.param_blocks_mut(), &grads)?;
        }

        let train_loss = loss_sum / train_set.len() as f64;
        let train_acc = correct as f64 / train_set.len() as f64;
        let (val_loss, val_acc) = evaluate_segments(model, val_set)?;
        metrics.push(EpochMetrics {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        });

        let improved = match &best {
            None => true,
            Some((best_acc, best_loss, _)) => {
                val_acc > *best_acc || (val_acc == *best_acc && val_loss < *best_loss)
            }
        };
        if improved {
            best = Some((val_acc, val_loss, model.snapshot()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if let Some(patience) = config.patience {
                if epochs_since_best > patience {
                    break;
                }
            }
        }
    }

    if let Some((_, _, snapshot)) = best {
        model.restore(&snapshot);
    }
    Ok(metrics)
}

/// Mean cross-entropy over samples with dropout disabled; the objective
/// both sides of the gradient audit differentiate.
pub fn batch_loss<T: Scalar>(model: &Model<T>, samples: &[Segment<T>]) -> Result<f64> {
    let mut total = 0.0;
    for seg in samples {
        let probs = model.predict(&seg.data)?;
        let (loss, _) = cross_entropy(&probs, seg.label)?;
        total += loss.to_f64().expect("loss fits f64");
    }
    Ok(total / samples.len() as f64)
}

/// Analytic batch gradient of [`batch_loss`] (dropout disabled).
pub fn batch_gradient<T: Scalar>(
    model: &Model<T>,
    samples: &[Segment<T>],
) -> Result<Gradients<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("gradient batch"));
    }
    let effective = model.effective_weights();
    let mut grads = Gradients::zeros_like(&model.block_sizes());
    for seg in samples {
        let cache = model.forward_full(&seg.data, &effective, None)?;
        let probs = softmax(&cache.logits);
        let (_, dlogits) = cross_entropy(&probs, seg.label)?;
        let sample_grads = model.backward(&effective, &cache, &dlogits)?;
        grads.accumulate(&sample_grads);
    }
    grads.scale(T::one() / T::from_usize(samples.len()).expect("sample count"));
    Ok(grads)
}

/// Audit result for one parameter block.
#[derive(Clone, Debug)]
pub struct BlockCheck {
    pub name: String,
    pub max_rel_error: f64,
    /// Analytic and central-difference gradients for every entry, kept so
    /// callers can assert entry-level facts (e.g. masked positions are
    /// exactly zero on both sides).
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_error)
            .fold(0.0, f64::max)
    }

    /// Blocks whose worst entry exceeds the tolerance.
    pub fn flagged(&self, tolerance: f64) -> Vec<&BlockCheck> {
        self.blocks
            .iter()
            .filter(|b| b.max_rel_error >= tolerance)
            .collect()
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.flagged(tolerance).is_empty()
    }
}

/// Relative error guarded against vanishing denominators; exact zeros on
/// both sides compare as zero error.
pub fn gradient_rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares the analytic batch gradient against central finite
/// differences `(loss(p + h) - loss(p - h)) / 2h` for every parameter,
/// with dropout disabled. Report-only: nothing fails here, callers decide
/// what to do with flagged blocks.
pub fn gradient_check<T: Scalar>(
    model: &mut Model<T>,
    samples: &[Segment<T>],
    step: f64,
) -> Result<GradCheckReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("gradient-check batch"));
    }
    check_segments(model, samples)?;
    let analytic = batch_gradient(model, samples)?;
    let names = model.param_block_names();
    let h = T::from_f64_lossy(step);

    let mut blocks = Vec::with_capacity(names.len());
    for (bi, name) in names.into_iter().enumerate() {
        let len = analytic.blocks[bi].len();
        let mut numeric = Vec::with_capacity(len);
        for pi in 0..len {
            let original = model.param_blocks()[bi][pi];
            model.param_blocks_mut()[bi][pi] = original + h;
            let plus = batch_loss(model, samples)?;
            model.param_blocks_mut()[bi][pi] = original - h;
            let minus = batch_loss(model, samples)?;
            model.param_blocks_mut()[bi][pi] = original;
            numeric.push((plus - minus) / (2.0 * step));
        }
        let analytic_f64: Vec<f64> = analytic.blocks[bi]
            .iter()
            .map(|v| v.to_f64().expect("gradient fits f64"))
            .collect();
        let max_rel_error = analytic_f64
            .iter()
            .zip(numeric.iter())
            .map(|(&a, &n)| gradient_rel_error(a, n))
            .fold(0.0, f64::max);
        blocks.push(BlockCheck {
            name,
            max_rel_error,
            analytic: analytic_f64,
            numeric,
        });
    }
    Ok(GradCheckReport { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerKind, LayerSpec, ModelConfig};
    use crate::numerics::Matrix;

    fn seg(data: Matrix<f64>, label: usize) -> Segment<f64> {
        Segment {
            clip_id: "t".into(),
            label,
            data,
        }
    }

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            classes: 3,
            extra_frames: 2,
            layers: vec![LayerSpec {
                kind: LayerKind::Mclnn,
                nodes: 5,
                order: 1,
                bandwidth: Some(2),
                overlap: Some(1),
            }],
            dense: vec![4],
        }
    }

    fn random_segments(model_input: usize, q: usize, count: usize, classes: usize, seed: u64) -> Vec<Segment<f64>> {
        let mut rng = SeededRng::new(seed);
        (0..count)
            .map(|i| {
                seg(
                    Matrix::from_fn(model_input, q, |_, _| rng.uniform(-1.0, 1.0)),
                    i % classes,
                )
            })
            .collect()
    }

    #[test]
    fn cross_entropy_examples() {
        // One-hot prediction of the right class: zero loss, zero gradient.
        let (loss, grad) = cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));

        // Uniform prediction: ln(c).
        let (loss, _) = cross_entropy(&[0.25; 4], 2).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);

        let (loss, grad) = cross_entropy(&[0.25, 0.75], 0).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
        assert!((grad[0] - (0.25 - 1.0)).abs() < 1e-15);
        assert!((grad[1] - 0.75).abs() < 1e-15);

        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn cross_entropy_softmax_gradient_identity() {
        // d/dz of CE(softmax(z), y) must equal softmax(z) - onehot(y).
        let z = [0.3f64, -1.1, 0.7, 2.0];
        let target = 2;
        let probs = softmax(&z);
        let (_, grad) = cross_entropy(&probs, target).unwrap();

        let h = 1e-6;
        for i in 0..z.len() {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let lp = cross_entropy(&softmax(&zp), target).unwrap().0;
            let lm = cross_entropy(&softmax(&zm), target).unwrap().0;
            let numeric = (lp - lm) / (2.0 * h);
            assert!((grad[i] - numeric).abs() < 1e-8);
            let identity = probs[i] - if i == target { 1.0 } else { 0.0 };
            assert!((grad[i] - identity).abs() < 1e-10);
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters_unchanged() {
        let mut params = [vec![1.0f64, -2.0, 3.0]];
        let grads = Gradients {
            blocks: vec![vec![0.0; 3]],
        };
        let mut adam = AdamState::new(&[3], AdamParams::default());
        let mut refs: Vec<&mut [f64]> = params.iter_mut().map(|b| b.as_mut_slice()).collect();
        adam.step(&mut refs, &grads).unwrap();
        assert_eq!(params[0], vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_constant_gradient_step_approaches_lr_sign() {
        let mut params = [vec![0.0f64, 0.0]];
        let grads = Gradients {
            blocks: vec![vec![0.5, -2.0]],
        };
        let mut adam = AdamState::new(&[2], AdamParams::default());
        let mut prev = params[0].clone();
        let mut last_step = [0.0f64; 2];
        for _ in 0..500 {
            let mut refs: Vec<&mut [f64]> = params.iter_mut().map(|b| b.as_mut_slice()).collect();
            adam.step(&mut refs, &grads).unwrap();
            last_step = [params[0][0] - prev[0], params[0][1] - prev[1]];
            prev = params[0].clone();
        }
        // Magnitude approaches lr, direction opposes the gradient sign.
        assert!((last_step[0].abs() - 0.001).abs() < 1e-5, "{last_step:?}");
        assert!((last_step[1].abs() - 0.001).abs() < 1e-5);
        assert!(last_step[0] < 0.0 && last_step[1] > 0.0);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut params = vec![vec![0.3f64, -0.7], vec![0.1]];
            let mut adam = AdamState::new(&[2, 1], AdamParams::default());
            let mut rng = SeededRng::new(4);
            for _ in 0..50 {
                let grads = Gradients {
                    blocks: vec![
                        vec![rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)],
                        vec![rng.uniform(-1.0, 1.0)],
                    ],
                };
                let mut refs: Vec<&mut [f64]> =
                    params.iter_mut().map(|b| b.as_mut_slice()).collect();
                adam.step(&mut refs, &grads).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let config = tiny_config();
        let mut model = Model::<f64>::new(&config, 6, 5).unwrap();
        let before = model.snapshot();
        let train_set = random_segments(6, 4, 8, 3, 10);
        let initial_loss = batch_loss(&model, &train_set).unwrap();

        let metrics = train(
            &mut model,
            &train_set,
            &train_set,
            &TrainConfig {
                epochs: 1,
                batch_size: 4,
                learning_rate: 0.0,
                seed: 1,
                dropout_clnn: 0.0,
                dropout_dense: 0.0,
                patience: None,
            },
        )
        .unwrap();

        for (a, b) in model.snapshot().iter().zip(before.iter()) {
            assert_eq!(a, b);
        }
        assert!((metrics[0].train_loss - initial_loss).abs() < 1e-12);
    }

    #[test]
    fn training_trajectory_is_deterministic() {
        let config = tiny_config();
        let train_set = random_segments(6, 4, 12, 3, 20);
        let val_set = random_segments(6, 4, 6, 3, 21);
        let tc = TrainConfig {
            epochs: 5,
            batch_size: 4,
            learning_rate: 0.01,
            seed: 3,
            dropout_clnn: 0.0,
            dropout_dense: 0.3,
            patience: None,
        };
        let run = || {
            let mut model = Model::<f64>::new(&config, 6, 2).unwrap();
            let metrics = train(&mut model, &train_set, &val_set, &tc).unwrap();
            (metrics, model.snapshot())
        };
        let (m1, p1) = run();
        let (m2, p2) = run();
        assert_eq!(m1, m2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn one_small_step_does_not_increase_batch_loss() {
        // lr = 1e-6 on a fixed batch, 20 random trials.
        for trial in 0..20 {
            let config = tiny_config();
            let mut model = Model::<f64>::new(&config, 6, 100 + trial).unwrap();
            let batch = random_segments(6, 4, 6, 3, 200 + trial);
            let before = batch_loss(&model, &batch).unwrap();

            let grads = batch_gradient(&model, &batch).unwrap();
            let mut adam = AdamState::new(
                &model.block_sizes(),
                AdamParams {
                    learning_rate: 1e-6,
                    ..AdamParams::default()
                },
            );
            adam.step(&mut model.param_blocks_mut(), &grads).unwrap();
            let after = batch_loss(&model, &batch).unwrap();
            assert!(
                after <= before + 1e-12,
                "trial {trial}: loss rose {before} -> {after}"
            );
        }
    }

    #[test]
    fn train_rejects_wrong_segment_width() {
        let config = tiny_config();
        let mut model = Model::<f64>::new(&config, 6, 5).unwrap();
        let bad = random_segments(6, 5, 4, 3, 30); // q must be 4
        let err = train(&mut model, &bad, &bad, &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("segment width q=5"));
        assert!(err.to_string().contains("requires 4"));
    }

    #[test]
    fn train_rejects_empty_dataset() {
        let config = tiny_config();
        let mut model = Model::<f64>::new(&config, 6, 5).unwrap();
        let val = random_segments(6, 4, 2, 3, 1);
        assert!(matches!(
            train(&mut model, &[], &val, &TrainConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn gradient_check_linear_single_layer_is_tight() {
        let config = ModelConfig {
            classes: 3,
            extra_frames: 2,
            layers: vec![LayerSpec {
                kind: LayerKind::Clnn,
                nodes: 4,
                order: 1,
                bandwidth: None,
                overlap: None,
            }],
            dense: vec![],
        };
        let mut model = Model::<f64>::new(&config, 5, 8).unwrap();
        let samples = random_segments(5, 4, 3, 3, 40);
        let report = gradient_check(&mut model, &samples, 1e-5).unwrap();
        assert!(
            report.max_rel_error() < 1e-7,
            "max rel error {}",
            report.max_rel_error()
        );
    }

    #[test]
    fn gradient_check_full_prelu_model() {
        let config = tiny_config();
        let mut model = Model::<f64>::new(&config, 6, 9).unwrap();
        let samples = random_segments(6, 4, 3, 3, 50);
        let report = gradient_check(&mut model, &samples, 1e-5).unwrap();
        assert!(
            report.passed(1e-5),
            "flagged: {:?}",
            report
                .flagged(1e-5)
                .iter()
                .map(|b| (&b.name, b.max_rel_error))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn gradient_check_masked_positions_are_exactly_zero_on_both_sides() {
        let config = tiny_config();
        let mut model = Model::<f64>::new(&config, 6, 9).unwrap();
        let mask = model.conditional_layers()[0].mask().unwrap().clone();
        let samples = random_segments(6, 4, 2, 3, 60);
        let report = gradient_check(&mut model, &samples, 1e-5).unwrap();

        let e = mask.cols();
        for (bi, name) in model.param_block_names().iter().enumerate() {
            if !name.starts_with("clnn1.w") {
                continue;
            }
            let block = &report.blocks[bi];
            for i in 0..mask.rows() {
                for j in 0..e {
                    if mask.get(i, j) == 0 {
                        assert_eq!(block.analytic[i * e + j], 0.0);
                        assert_eq!(block.numeric[i * e + j], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn metrics_csv_shape() {
        let m = EpochMetrics {
            epoch: 3,
            train_loss: 1.0 / 3.0,
            train_acc: 0.5,
            val_loss: 0.25,
            val_acc: 1.0,
        };
        assert_eq!(m.csv_line(), "3,0.333333,0.500000,0.250000,1.000000");
        assert_eq!(EpochMetrics::csv_header(), "epoch,train_loss,train_acc,val_loss,val_acc");
    }
}
