//! Feature ingestion and preparation.
//!
//! The artifact consumes precomputed time-frequency features; audio
//! decoding and spectrogram extraction happen upstream. A feature file
//! holds one clip: magic `MCLF`, little-endian `u32` feature length `l`
//! and frame count `T`, then `l * T` little-endian 64-bit floats in
//! frame-major order (frame 0's `l` values, then frame 1's, ...).
//! Clip-to-fold assignments travel in a CSV manifest with the header
//! `clip_id,path,label,fold`, paths relative to the manifest's directory.

use std::fs;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};
use crate::scalar::Scalar;

pub const FEATURE_MAGIC: &[u8; 4] = b"MCLF";

/// One clip's features plus its manifest attributes.
#[derive(Clone, Debug)]
pub struct Clip<T> {
    pub id: String,
    pub label: usize,
    pub fold: usize,
    pub features: Matrix<T>,
}

#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub clips: Vec<Clip<T>>,
}

/// A contiguous `l x q` slice of a clip, carrying the clip's label.
#[derive(Clone, Debug)]
pub struct Segment<T> {
    pub clip_id: String,
    pub label: usize,
    pub data: Matrix<T>,
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRecord {
    pub clip_id: String,
    pub path: PathBuf,
    pub label: usize,
    pub fold: usize,
}

#[derive(Clone, Debug, Default)]
pub struct FoldManifest {
    pub records: Vec<ManifestRecord>,
}

impl FoldManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for rec in &self.records {
            if !seen.insert(rec.clip_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate clip_id '{}'",
                    rec.clip_id
                )));
            }
            if rec.fold == 0 {
                return Err(Error::Manifest(format!(
                    "clip '{}' has fold 0; folds are numbered from 1",
                    rec.clip_id
                )));
            }
        }
        Ok(())
    }

    pub fn fold_ids(&self) -> Vec<usize> {
        let mut folds: Vec<usize> = self.records.iter().map(|r| r.fold).collect();
        folds.sort_unstable();
        folds.dedup();
        folds
    }
}

/// Writes one clip in the feature-file format.
pub fn save_features<T: Scalar>(path: &Path, features: &Matrix<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(features.rows() as u32).to_le_bytes())?;
    w.write_all(&(features.cols() as u32).to_le_bytes())?;
    for t in 0..features.cols() {
        for i in 0..features.rows() {
            let v = features
                .get(i, t)
                .to_f64()
                .ok_or_else(|| Error::Format("feature not representable as f64".into()))?;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads one clip, rejecting bad magic, zero dimensions, truncation,
/// trailing bytes and non-finite values.
pub fn load_features<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format(format!("{}: too short for magic", path.display())))?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad magic {:?}, expected {:?}",
            path.display(),
            magic,
            FEATURE_MAGIC
        )));
    }
    let mut dim = [0u8; 4];
    r.read_exact(&mut dim)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    let l = u32::from_le_bytes(dim) as usize;
    r.read_exact(&mut dim)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    let frames = u32::from_le_bytes(dim) as usize;
    if l == 0 || frames == 0 {
        return Err(Error::Format(format!(
            "{}: empty dimensions l={l}, T={frames}",
            path.display()
        )));
    }

    let mut data = vec![T::zero(); l * frames];
    let mut buf = [0u8; 8];
    for t in 0..frames {
        for i in 0..l {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::Format(format!(
                    "{}: non-finite value at bin {i}, frame {t}",
                    path.display()
                )));
            }
            data[i * frames + t] = T::from_f64(v)
                .ok_or_else(|| Error::Format("value out of scalar range".into()))?;
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format(format!(
            "{}: trailing bytes after payload",
            path.display()
        )));
    }
    Ok(Matrix::from_vec(l, frames, data))
}

/// Concatenates first temporal differences below the original rows:
/// row `l + i` holds `x[i][t] - x[i][t-1]` with the first frame's delta
/// fixed at 0. Doubles the feature length.
pub fn append_delta<T: Scalar>(features: &Matrix<T>) -> Matrix<T> {
    let l = features.rows();
    let frames = features.cols();
    Matrix::from_fn(2 * l, frames, |i, t| {
        if i < l {
            features.get(i, t)
        } else if t == 0 {
            T::zero()
        } else {
            features.get(i - l, t) - features.get(i - l, t - 1)
        }
    })
}

/// Per-feature zero-mean/unit-variance scaling fitted on training folds
/// only; the fitted statistics are then applied unchanged to validation
/// and test folds.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<T> {
    mean: Vec<T>,
    std: Vec<T>,
}

const STD_FLOOR: f64 = 1e-8;

impl<T: Scalar> Standardizer<T> {
    /// Fits over all frames of all given clips; population standard
    /// deviation, floored at 1e-8 so constant features map to zero.
    pub fn fit(clips: &[&Matrix<T>]) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::EmptyInput("standardizer training set"));
        }
        let l = clips[0].rows();
        if clips.iter().any(|c| c.rows() != l) {
            return Err(Error::Config(
                "clips disagree on feature length during standardizer fit".into(),
            ));
        }
        let total_frames: usize = clips.iter().map(|c| c.cols()).sum();
        let denom = T::from_usize(total_frames).expect("frame count");

        let mut mean = vec![T::zero(); l];
        for clip in clips {
            for (i, m) in mean.iter_mut().enumerate() {
                *m += clip.row(i).iter().copied().sum::<T>();
            }
        }
        for m in mean.iter_mut() {
            *m /= denom;
        }

        let floor = T::from_f64_lossy(STD_FLOOR);
        let mut std = vec![T::zero(); l];
        for clip in clips {
            for (i, s) in std.iter_mut().enumerate() {
                for &v in clip.row(i) {
                    let d = v - mean[i];
                    *s += d * d;
                }
            }
        }
        for s in std.iter_mut() {
            *s = (*s / denom).sqrt().max(floor);
        }

        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, clip: &Matrix<T>) -> Matrix<T> {
        assert_eq!(clip.rows(), self.mean.len(), "feature length mismatch");
        Matrix::from_fn(clip.rows(), clip.cols(), |i, t| {
            (clip.get(i, t) - self.mean[i]) / self.std[i]
        })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn std(&self) -> &[T] {
        &self.std
    }
}

/// Cuts a clip into `l x q` segments starting at columns 0, hop, 2*hop, ...
/// while the segment still fits. Clips shorter than `q` are rejected, not
/// padded.
pub fn segment_clip<T: Scalar>(
    features: &Matrix<T>,
    clip_id: &str,
    label: usize,
    q: usize,
    hop: usize,
) -> Result<Vec<Segment<T>>> {
    assert!(hop >= 1, "hop must be at least 1");
    assert!(q >= 1, "segment width must be at least 1");
    if features.cols() < q {
        return Err(Error::ClipTooShort {
            clip_id: clip_id.to_string(),
            frames: features.cols(),
            required: q,
        });
    }
    let mut segments = Vec::new();
    let mut start = 0;
    while start + q <= features.cols() {
        segments.push(Segment {
            clip_id: clip_id.to_string(),
            label,
            data: features.col_slice(start, start + q),
        });
        start += hop;
    }
    Ok(segments)
}

/// Desk-scale synthetic dataset: class `k` concentrates energy in the
/// row band `[k*l/c, (k+1)*l/c)` as uniform [0.5, 1.0] noise over a
/// uniform [0, 0.05] floor. Clips are dealt round-robin over 5 folds.
pub fn synth_dataset<T: Scalar>(
    classes: usize,
    clips_per_class: usize,
    feature_len: usize,
    frames: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    if classes < 2 {
        return Err(Error::Config("synthetic dataset needs at least 2 classes".into()));
    }
    if clips_per_class == 0 || feature_len < classes || frames == 0 {
        return Err(Error::Config(
            "synthetic dataset needs clips_per_class >= 1, l >= classes, frames >= 1".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let mut clips = Vec::with_capacity(classes * clips_per_class);
    let mut clip_index = 0usize;
    for class in 0..classes {
        let band = (class * feature_len / classes)..((class + 1) * feature_len / classes);
        for j in 0..clips_per_class {
            let features = Matrix::from_fn(feature_len, frames, |i, _| {
                let v = if band.contains(&i) {
                    rng.uniform(0.5, 1.0)
                } else {
                    rng.uniform(0.0, 0.05)
                };
                T::from_f64_lossy(v)
            });
            clips.push(Clip {
                id: format!("c{class}_{j:03}"),
                label: class,
                fold: clip_index % 5 + 1,
                features,
            });
            clip_index += 1;
        }
    }
    Ok(Dataset { clips })
}

impl<T: Scalar> Dataset<T> {
    /// Loads every clip a manifest references; `delta` doubles the
    /// feature rows with first temporal differences.
    pub fn load(manifest_path: &Path, delta: bool) -> Result<Self> {
        let manifest = read_manifest(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut clips = Vec::with_capacity(manifest.records.len());
        for rec in &manifest.records {
            let path = base.join(&rec.path);
            let mut features = load_features::<T>(&path)?;
            if delta {
                features = append_delta(&features);
            }
            clips.push(Clip {
                id: rec.clip_id.clone(),
                label: rec.label,
                fold: rec.fold,
                features,
            });
        }
        Ok(Dataset { clips })
    }

    /// Writes every clip as `<clip_id>.mclf` plus `manifest.csv` in `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut records = Vec::with_capacity(self.clips.len());
        for clip in &self.clips {
            let file = format!("{}.mclf", clip.id);
            save_features(&dir.join(&file), &clip.features)?;
            records.push(ManifestRecord {
                clip_id: clip.id.clone(),
                path: PathBuf::from(file),
                label: clip.label,
                fold: clip.fold,
            });
        }
        write_manifest(&dir.join("manifest.csv"), &FoldManifest { records })
    }

    pub fn fold_ids(&self) -> Vec<usize> {
        let mut folds: Vec<usize> = self.clips.iter().map(|c| c.fold).collect();
        folds.sort_unstable();
        folds.dedup();
        folds
    }

    pub fn clips_in_folds(&self, folds: &[usize]) -> Vec<&Clip<T>> {
        self.clips
            .iter()
            .filter(|c| folds.contains(&c.fold))
            .collect()
    }
}

pub fn write_manifest(path: &Path, manifest: &FoldManifest) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "clip_id,path,label,fold")?;
    for rec in &manifest.records {
        writeln!(
            w,
            "{},{},{},{}",
            rec.clip_id,
            rec.path.display(),
            rec.label,
            rec.fold
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<FoldManifest> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("clip_id,path,label,fold") => {}
        Some(other) => {
            return Err(Error::Manifest(format!(
                "unexpected header '{other}', expected 'clip_id,path,label,fold'"
            )))
        }
        None => return Err(Error::Manifest("empty manifest".into())),
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Manifest(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let label: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::Manifest(format!("line {}: bad label '{}'", lineno + 2, fields[2])))?;
        let fold: usize = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::Manifest(format!("line {}: bad fold '{}'", lineno + 2, fields[3])))?;
        records.push(ManifestRecord {
            clip_id: fields[0].trim().to_string(),
            path: PathBuf::from(fields[1].trim()),
            label,
            fold,
        });
    }
    let manifest = FoldManifest { records };
    manifest.validate()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type M = Matrix<f64>;

    fn tmpdir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mclnn_data_{name}"));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn feature_file_round_trip() {
        let dir = tmpdir("roundtrip");
        let path = dir.join("clip.mclf");
        let m = M::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        save_features(&path, &m).unwrap();
        let loaded = load_features::<f64>(&path).unwrap();
        assert_eq!(loaded, m);

        // save(load(f)) is byte-identical
        let path2 = dir.join("clip2.mclf");
        save_features(&path2, &loaded).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn feature_file_rejects_malformed_input() {
        let dir = tmpdir("malformed");

        let empty_t = dir.join("empty_t.mclf");
        let mut bytes = FEATURE_MAGIC.to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        fs::write(&empty_t, &bytes).unwrap();
        assert!(matches!(load_features::<f64>(&empty_t), Err(Error::Format(_))));

        let bad_magic = dir.join("magic.mclf");
        fs::write(&bad_magic, b"XXXX\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(load_features::<f64>(&bad_magic), Err(Error::Format(_))));

        let truncated = dir.join("trunc.mclf");
        let mut bytes = FEATURE_MAGIC.to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        fs::write(&truncated, &bytes).unwrap();
        assert!(matches!(load_features::<f64>(&truncated), Err(Error::Format(_))));

        let nonfinite = dir.join("nan.mclf");
        let mut bytes = FEATURE_MAGIC.to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&nonfinite, &bytes).unwrap();
        assert!(matches!(load_features::<f64>(&nonfinite), Err(Error::Format(_))));

        let missing = dir.join("missing.mclf");
        assert!(matches!(load_features::<f64>(&missing), Err(Error::Io(_))));

        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn delta_examples() {
        let constant = M::from_fn(2, 4, |i, _| i as f64 + 1.0);
        let with_delta = append_delta(&constant);
        assert_eq!(with_delta.rows(), 4);
        for t in 0..4 {
            assert_eq!(with_delta.get(2, t), 0.0);
            assert_eq!(with_delta.get(3, t), 0.0);
        }

        let single = M::from_rows(&[vec![7.0]]);
        let d = append_delta(&single);
        assert_eq!(d.get(1, 0), 0.0);

        let x = M::from_rows(&[vec![1.0, 3.0, 2.0]]);
        let d = append_delta(&x);
        assert_eq!(d.row(0), &[1.0, 3.0, 2.0]);
        assert_eq!(d.row(1), &[0.0, 2.0, -1.0]);
    }

    #[test]
    fn delta_preserves_original_rows() {
        let mut rng = SeededRng::new(3);
        let x = M::from_fn(5, 9, |_, _| rng.uniform(-2.0, 2.0));
        let d = append_delta(&x);
        assert_eq!(d.rows(), 10);
        for i in 0..5 {
            assert_eq!(d.row(i), x.row(i));
        }
    }

    #[test]
    fn standardizer_normalizes_training_set() {
        let mut rng = SeededRng::new(11);
        let clips: Vec<M> = (0..4)
            .map(|_| M::from_fn(3, 20, |i, _| rng.uniform(-1.0, 1.0) * (i as f64 + 1.0) + i as f64))
            .collect();
        let refs: Vec<&M> = clips.iter().collect();
        let std = Standardizer::fit(&refs).unwrap();

        let total_frames: usize = clips.iter().map(|c| c.cols()).sum();
        let standardized: Vec<M> = clips.iter().map(|c| std.apply(c)).collect();
        for i in 0..3 {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for c in &standardized {
                for &v in c.row(i) {
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / total_frames as f64;
            let var = sq / total_frames as f64 - mean * mean;
            assert!(mean.abs() < 1e-9, "row {i} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "row {i} std {}", var.sqrt());
        }
    }

    #[test]
    fn standardizer_zeroes_constant_rows() {
        let clip = M::from_fn(2, 10, |i, t| if i == 0 { 5.0 } else { t as f64 });
        let std = Standardizer::fit(&[&clip]).unwrap();
        let out = std.apply(&clip);
        assert!(out.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardizer_is_not_idempotent_and_does_not_learn_from_apply() {
        let mut rng = SeededRng::new(5);
        let train = M::from_fn(2, 30, |_, _| rng.uniform(1.0, 3.0));
        let std = Standardizer::fit(&[&train]).unwrap();
        let before = std.clone();

        let test = M::from_fn(2, 10, |_, _| rng.uniform(-4.0, 0.0));
        let once = std.apply(&test);
        let twice = std.apply(&once);
        assert_ne!(once, twice);
        assert_eq!(std, before, "apply must not mutate fitted statistics");
    }

    #[test]
    fn standardizer_rejects_empty_fit() {
        assert!(matches!(
            Standardizer::<f64>::fit(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn segmentation_examples() {
        let clip = M::from_fn(2, 10, |_, t| t as f64);

        let one = segment_clip(&M::from_fn(2, 4, |_, t| t as f64), "a", 0, 4, 4).unwrap();
        assert_eq!(one.len(), 1);

        let segs = segment_clip(&clip, "b", 1, 4, 2).unwrap();
        assert_eq!(segs.len(), 4);
        for (i, s) in segs.iter().enumerate() {
            assert_eq!(s.data.get(0, 0), (2 * i) as f64);
            assert_eq!(s.data.cols(), 4);
            assert_eq!(s.label, 1);
        }

        let short = M::from_fn(2, 3, |_, t| t as f64);
        let err = segment_clip(&short, "shorty", 0, 4, 1).unwrap_err();
        assert!(err.to_string().contains("shorty"));
    }

    proptest! {
        #[test]
        fn hop_one_yields_t_minus_q_plus_one(t in 1usize..40, q_off in 0usize..40) {
            let q = 1 + q_off % t;
            let clip = M::from_fn(2, t, |_, c| c as f64);
            let segs = segment_clip(&clip, "p", 0, q, 1).unwrap();
            prop_assert_eq!(segs.len(), t - q + 1);
        }
    }

    #[test]
    fn synth_dataset_is_deterministic() {
        let a: Dataset<f64> = synth_dataset(3, 4, 12, 10, 99).unwrap();
        let b: Dataset<f64> = synth_dataset(3, 4, 12, 10, 99).unwrap();
        for (x, y) in a.clips.iter().zip(b.clips.iter()) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.features, y.features);
        }
        let c: Dataset<f64> = synth_dataset(3, 4, 12, 10, 100).unwrap();
        assert_ne!(a.clips[0].features, c.clips[0].features);
    }

    #[test]
    fn synth_dataset_concentrates_band_energy() {
        let ds: Dataset<f64> = synth_dataset(3, 10, 15, 20, 7).unwrap();
        for clip in &ds.clips {
            let band = (clip.label * 5)..((clip.label + 1) * 5);
            let mut in_band = (0.0, 0usize);
            let mut out_band = (0.0, 0usize);
            for i in 0..15 {
                for t in 0..20 {
                    let v = clip.features.get(i, t);
                    if band.contains(&i) {
                        in_band = (in_band.0 + v, in_band.1 + 1);
                    } else {
                        out_band = (out_band.0 + v, out_band.1 + 1);
                    }
                }
            }
            let in_mean = in_band.0 / in_band.1 as f64;
            let out_mean = out_band.0 / out_band.1 as f64;
            assert!(
                in_mean > 10.0 * out_mean,
                "clip {}: in {in_mean} out {out_mean}",
                clip.id
            );
        }
    }

    #[test]
    fn synth_folds_are_balanced_round_robin() {
        let ds: Dataset<f64> = synth_dataset(3, 11, 9, 6, 1).unwrap();
        let mut counts = [0usize; 5];
        for clip in &ds.clips {
            counts[clip.fold - 1] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 33);
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        assert!(max - min <= 1, "fold sizes {counts:?}");
    }

    #[test]
    fn synth_rejects_single_class() {
        assert!(synth_dataset::<f64>(1, 4, 8, 10, 0).is_err());
    }

    #[test]
    fn dataset_save_load_round_trip() {
        let dir = tmpdir("dataset_rt");
        let ds: Dataset<f64> = synth_dataset(2, 3, 6, 8, 21).unwrap();
        ds.save(&dir).unwrap();

        let loaded = Dataset::<f64>::load(&dir.join("manifest.csv"), false).unwrap();
        assert_eq!(loaded.clips.len(), ds.clips.len());
        for (a, b) in ds.clips.iter().zip(loaded.clips.iter()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            assert_eq!(a.fold, b.fold);
            assert_eq!(a.features, b.features);
        }

        let with_delta = Dataset::<f64>::load(&dir.join("manifest.csv"), true).unwrap();
        assert_eq!(with_delta.clips[0].features.rows(), 12);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_rejects_bad_rows() {
        let dir = tmpdir("manifest_bad");

        let bad_header = dir.join("h.csv");
        fs::write(&bad_header, "id,file,label,fold\n").unwrap();
        assert!(matches!(read_manifest(&bad_header), Err(Error::Manifest(_))));

        let dup = dir.join("dup.csv");
        fs::write(
            &dup,
            "clip_id,path,label,fold\na,x.mclf,0,1\na,y.mclf,1,2\n",
        )
        .unwrap();
        assert!(matches!(read_manifest(&dup), Err(Error::Manifest(_))));

        let bad_fold = dir.join("fold.csv");
        fs::write(&bad_fold, "clip_id,path,label,fold\na,x.mclf,0,0\n").unwrap();
        assert!(matches!(read_manifest(&bad_fold), Err(Error::Manifest(_))));

        fs::remove_dir_all(&dir).ok();
    }
}
