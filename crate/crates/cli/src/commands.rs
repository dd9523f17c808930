//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::Path;

use mclnn_core::data::{segment_clip, Dataset, Segment, Standardizer};
use mclnn_core::error::{Error, Result};
use mclnn_core::eval::{run_cross_validation, ClipPrediction, ConfusionMatrix, CvResults};
use mclnn_core::mask::{build_mask, MaskSpec};
use mclnn_core::model::Model;
use mclnn_core::training::{train, EpochMetrics};

use crate::config::{load_config, ResolvedConfig};

pub fn cmd_mask_dump(l: usize, e: usize, bw: usize, ov: i64) -> Result<()> {
    let mask = build_mask(MaskSpec::new(bw, ov, l, e))?;
    print!("{}", mask.render());
    println!("l={l} e={e} bw={bw} ov={ov} ones={}", mask.count_ones());
    Ok(())
}

pub fn cmd_synth(
    classes: usize,
    clips: usize,
    feature_len: usize,
    frames: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if classes == 0 || clips == 0 || !clips.is_multiple_of(classes) {
        return Err(Error::Config(format!(
            "clips ({clips}) must be a positive multiple of classes ({classes})"
        )));
    }
    let dataset: Dataset<f64> =
        mclnn_core::data::synth_dataset(classes, clips / classes, feature_len, frames, seed)?;
    dataset.save(out)?;
    println!(
        "wrote {} clips ({} classes, l={feature_len}, T={frames}, seed={seed}) and manifest.csv to {}",
        dataset.clips.len(),
        classes,
        out.display()
    );
    Ok(())
}

fn standardized_segments(
    dataset: &Dataset<f64>,
    folds: &[usize],
    standardizer: &Standardizer<f64>,
    q: usize,
    hop: usize,
) -> Result<Vec<Segment<f64>>> {
    let mut segments = Vec::new();
    for clip in dataset.clips_in_folds(folds) {
        let standardized = standardizer.apply(&clip.features);
        segments.extend(segment_clip(&standardized, &clip.id, clip.label, q, hop)?);
    }
    Ok(segments)
}

pub fn cmd_train(config_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<()> {
    let config = load_config(config_path, seed_override)?;
    let dataset: Dataset<f64> = Dataset::load(&config.manifest_path(), config.data.delta)?;
    if dataset.clips.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }

    let fold_ids = dataset.fold_ids();
    let val_fold = config.data.val_fold;
    let test_fold = config.data.test_fold;
    if val_fold == test_fold {
        return Err(Error::Config(format!(
            "val_fold and test_fold are both {val_fold}"
        )));
    }
    for (name, fold) in [("val_fold", val_fold), ("test_fold", test_fold)] {
        if !fold_ids.contains(&fold) {
            return Err(Error::Config(format!(
                "{name} {fold} not present in manifest folds {fold_ids:?}"
            )));
        }
    }
    let train_folds: Vec<usize> = fold_ids
        .iter()
        .copied()
        .filter(|&f| f != val_fold && f != test_fold)
        .collect();
    if train_folds.is_empty() {
        return Err(Error::Config(
            "no folds left for training after holding out val and test".into(),
        ));
    }

    let input_len = dataset.clips[0].features.rows();
    let mut model = Model::<f64>::new(&config.model, input_len, config.seed)?;
    for line in model.describe() {
        println!("{line}");
    }

    let train_clip_features: Vec<&mclnn_core::Matrix64> = dataset
        .clips_in_folds(&train_folds)
        .iter()
        .map(|c| &c.features)
        .collect();
    let standardizer = Standardizer::fit(&train_clip_features)?;

    let q = config.model.segment_width();
    let hop = config.data.hop;
    let train_set = standardized_segments(&dataset, &train_folds, &standardizer, q, hop)?;
    let val_set = standardized_segments(&dataset, &[val_fold], &standardizer, q, hop)?;
    println!(
        "train folds {train_folds:?}: {} segments, val fold {val_fold}: {} segments, hop {hop}",
        train_set.len(),
        val_set.len()
    );

    let metrics = train(&mut model, &train_set, &val_set, &config.train_config())?;
    println!("{}", EpochMetrics::csv_header());
    for m in &metrics {
        println!("{}", m.csv_line());
    }

    let mut truths = Vec::new();
    let mut predictions = Vec::new();
    for clip in dataset.clips_in_folds(&[test_fold]) {
        let standardized = standardizer.apply(&clip.features);
        let segments = segment_clip(&standardized, &clip.id, clip.label, q, hop)?;
        let probs: Vec<Vec<f64>> = segments
            .iter()
            .map(|s| model.predict(&s.data))
            .collect::<Result<_>>()?;
        truths.push(clip.label);
        predictions.push(ClipPrediction::new(clip.id.clone(), probs)?.voted);
    }
    let confusion = ConfusionMatrix::from_pairs(&truths, &predictions, model.classes())?;
    println!(
        "test fold {test_fold} accuracy: {:.4} ({}/{} clips)",
        confusion.overall_accuracy(),
        truths
            .iter()
            .zip(predictions.iter())
            .filter(|(t, p)| t == p)
            .count(),
        truths.len()
    );

    fs::create_dir_all(out)?;
    let model_path = out.join("model.mclnn");
    model.save(&model_path)?;
    write_metrics(&out.join("metrics.csv"), &metrics)?;
    let echo_path = out.join("config.json");
    fs::write(&echo_path, config.echo_pretty() + "\n")?;
    println!(
        "wrote {}, {}, {}",
        model_path.display(),
        out.join("metrics.csv").display(),
        echo_path.display()
    );
    Ok(())
}

fn write_metrics(path: &Path, metrics: &[EpochMetrics]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", EpochMetrics::csv_header())?;
    for m in metrics {
        writeln!(f, "{}", m.csv_line())?;
    }
    Ok(())
}

pub fn cmd_evaluate(
    config_path: &Path,
    folds: usize,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let config: ResolvedConfig = load_config(config_path, seed_override)?;
    let dataset: Dataset<f64> = Dataset::load(&config.manifest_path(), config.data.delta)?;

    let report = run_cross_validation(
        &dataset,
        &config.model,
        &config.train_config(),
        Some(config.data.hop),
        folds,
    )?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    for fold in &report.folds {
        println!(
            "fold {} (val {}): accuracy {:.4} over {} epochs",
            fold.test_fold,
            fold.val_fold,
            fold.accuracy,
            fold.metrics.len()
        );
    }
    println!("mean accuracy: {:.4}", report.mean_accuracy());
    println!("confusion (rows = true class):");
    print!("{}", report.confusion.render());

    let results = CvResults::new(&report, config.echo_json());
    let json = serde_json::to_string_pretty(&results)
        .map_err(|e| Error::Format(format!("results encode: {e}")))?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, json + "\n")?;
    println!("wrote {}", out.display());
    Ok(())
}
