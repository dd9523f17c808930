//! Full architecture: a stack of conditional layers, global mean pooling
//! over the surviving frames, fully connected layers, and a softmax output.
//!
//! A model built for segment width `q` consumes `2n` frames per
//! conditional layer; the `k = q - sum(2n)` frames left over are pooled
//! into a single vector. Model files start with the magic bytes `MCLN`,
//! a little-endian `u16` format version and a length-prefixed JSON
//! architecture header, followed by every parameter as little-endian
//! 64-bit floats in declaration order. Masks are never stored; they are
//! regenerated from their specs on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{dropout_mask, global_mean_pool, softmax, ClnnCache, ClnnLayer, DenseLayer, Transfer};
use crate::mask::{build_mask, MaskSpec};
use crate::numerics::{Matrix, SeededRng};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 4] = b"MCLN";
pub const MODEL_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Clnn,
    Mclnn,
}

/// One conditional layer in a model config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Hidden width `e`.
    pub nodes: usize,
    /// Temporal order `n`; the window spans `2n + 1` frames.
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<i64>,
}

/// Architecture description: conditional layers, dense widths, classes
/// and the extra frames `k` pooled after the conditional stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub classes: usize,
    pub extra_frames: usize,
    pub layers: Vec<LayerSpec>,
    pub dense: Vec<usize>,
}

impl ModelConfig {
    /// Frames consumed by the conditional stack, `sum(2n)`.
    pub fn frames_consumed(&self) -> usize {
        self.layers.iter().map(|l| 2 * l.order).sum()
    }

    /// Required segment width `q = sum(2n) + k`.
    pub fn segment_width(&self) -> usize {
        self.frames_consumed() + self.extra_frames
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config("at least 2 classes required".into()));
        }
        if self.extra_frames == 0 {
            return Err(Error::Config("extra_frames k must be at least 1".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Config("at least one conditional layer required".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.order == 0 {
                return Err(Error::Config(format!("layer {}: order n must be >= 1", i + 1)));
            }
            if layer.nodes == 0 {
                return Err(Error::Config(format!("layer {}: nodes must be >= 1", i + 1)));
            }
            match layer.kind {
                LayerKind::Mclnn => {
                    if layer.bandwidth.is_none() || layer.overlap.is_none() {
                        return Err(Error::Config(format!(
                            "layer {}: mclnn needs bandwidth and overlap",
                            i + 1
                        )));
                    }
                }
                LayerKind::Clnn => {
                    if layer.bandwidth.is_some() || layer.overlap.is_some() {
                        return Err(Error::Config(format!(
                            "layer {}: clnn takes no bandwidth/overlap",
                            i + 1
                        )));
                    }
                }
            }
        }
        if self.dense.contains(&0) {
            return Err(Error::Config("dense widths must be positive".into()));
        }
        Ok(())
    }
}

/// Training-time dropout rates per layer kind; inference applies none.
#[derive(Clone, Copy, Debug)]
pub struct DropoutPlan {
    pub clnn: f64,
    pub dense: f64,
}

#[derive(Clone, Debug)]
pub struct Model<T> {
    clnn: Vec<ClnnLayer<T>>,
    dense: Vec<DenseLayer<T>>,
    output: DenseLayer<T>,
    classes: usize,
    extra_frames: usize,
}

/// Per-sample forward state kept for the backward pass.
pub(crate) struct ForwardCache<T> {
    clnn_inputs: Vec<Matrix<T>>,
    clnn_caches: Vec<ClnnCache<T>>,
    clnn_dropout: Vec<Option<Vec<T>>>,
    pool_width: usize,
    dense_inputs: Vec<Vec<T>>,
    dense_pres: Vec<Vec<T>>,
    dense_dropout: Vec<Option<Vec<T>>>,
    pub logits: Vec<T>,
}

/// Flat gradient blocks aligned with [`Model::param_blocks`].
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub blocks: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(sizes: &[usize]) -> Self {
        Gradients {
            blocks: sizes.iter().map(|&s| vec![T::zero(); s]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients<T>) {
        debug_assert_eq!(self.blocks.len(), other.blocks.len());
        for (a, b) in self.blocks.iter_mut().zip(other.blocks.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for block in &mut self.blocks {
            for v in block.iter_mut() {
                *v *= factor;
            }
        }
    }
}

impl<T: Scalar> Model<T> {
    /// Deterministically initializes the architecture from a config, the
    /// input feature length and a seed.
    pub fn new(config: &ModelConfig, input_len: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if input_len == 0 {
            return Err(Error::Config("input feature length must be positive".into()));
        }
        let mut rng = SeededRng::new(seed);
        let mut clnn = Vec::with_capacity(config.layers.len());
        let mut in_len = input_len;
        for spec in &config.layers {
            let mask = match spec.kind {
                LayerKind::Mclnn => {
                    let ms = MaskSpec::new(
                        spec.bandwidth.expect("validated"),
                        spec.overlap.expect("validated"),
                        in_len,
                        spec.nodes,
                    );
                    Some(build_mask(ms)?)
                }
                LayerKind::Clnn => None,
            };
            clnn.push(ClnnLayer::new(
                spec.order,
                in_len,
                spec.nodes,
                mask,
                Transfer::Prelu,
                &mut rng,
            )?);
            in_len = spec.nodes;
        }
        let mut dense = Vec::with_capacity(config.dense.len());
        for &width in &config.dense {
            dense.push(DenseLayer::new(in_len, width, Transfer::Prelu, &mut rng));
            in_len = width;
        }
        let output = DenseLayer::new(in_len, config.classes, Transfer::Linear, &mut rng);
        Ok(Model {
            clnn,
            dense,
            output,
            classes: config.classes,
            extra_frames: config.extra_frames,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn extra_frames(&self) -> usize {
        self.extra_frames
    }

    pub fn input_len(&self) -> usize {
        self.clnn[0].in_len()
    }

    pub fn conditional_layers(&self) -> &[ClnnLayer<T>] {
        &self.clnn
    }

    pub fn dense_layers(&self) -> &[DenseLayer<T>] {
        &self.dense
    }

    pub fn output_layer(&self) -> &DenseLayer<T> {
        &self.output
    }

    pub fn frames_consumed(&self) -> usize {
        self.clnn.iter().map(|l| 2 * l.order()).sum()
    }

    /// Required segment width `q`.
    pub fn segment_width(&self) -> usize {
        self.frames_consumed() + self.extra_frames
    }

    /// Rejects inputs whose width is not exactly `q`, reporting the
    /// arithmetic behind the requirement.
    pub fn check_segment_width(&self, found: usize) -> Result<()> {
        if found != self.segment_width() {
            return Err(Error::SegmentWidth {
                found,
                required: self.segment_width(),
                consumed: self.frames_consumed(),
                extra: self.extra_frames,
            });
        }
        Ok(())
    }

    /// One human-readable line per layer for log output.
    pub fn describe(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (i, layer) in self.clnn.iter().enumerate() {
            let kind = if layer.mask().is_some() { "mclnn" } else { "clnn" };
            let mask = match layer.mask() {
                Some(m) => format!(
                    " mask bw={} ov={}",
                    m.spec().bandwidth,
                    m.spec().overlap
                ),
                None => String::new(),
            };
            lines.push(format!(
                "layer {}: {} l={} e={} n={} d={}{}",
                i + 1,
                kind,
                layer.in_len(),
                layer.out_len(),
                layer.order(),
                layer.window_width(),
                mask
            ));
        }
        for (i, layer) in self.dense.iter().enumerate() {
            lines.push(format!(
                "dense {}: {} -> {}",
                i + 1,
                layer.in_len(),
                layer.out_len()
            ));
        }
        lines.push(format!(
            "output: {} -> {} (softmax)",
            self.output.in_len(),
            self.output.out_len()
        ));
        lines.push(format!(
            "segment width q={} (consumed {} + extra {})",
            self.segment_width(),
            self.frames_consumed(),
            self.extra_frames
        ));
        lines
    }

    /// Effective weight tensors of every conditional layer, computed once
    /// and shared across the samples of a batch.
    pub(crate) fn effective_weights(&self) -> Vec<Vec<Matrix<T>>> {
        self.clnn.iter().map(|l| l.effective_weights()).collect()
    }

    /// Class probabilities for one segment (no dropout).
    pub fn predict(&self, segment: &Matrix<T>) -> Result<Vec<T>> {
        let eff = self.effective_weights();
        let cache = self.forward_full(segment, &eff, None)?;
        Ok(softmax(&cache.logits))
    }

    pub(crate) fn forward_full(
        &self,
        segment: &Matrix<T>,
        effective: &[Vec<Matrix<T>>],
        mut dropout: Option<(&DropoutPlan, &mut SeededRng)>,
    ) -> Result<ForwardCache<T>> {
        self.check_segment_width(segment.cols())?;

        let mut clnn_inputs = Vec::with_capacity(self.clnn.len());
        let mut clnn_caches = Vec::with_capacity(self.clnn.len());
        let mut clnn_dropout = Vec::with_capacity(self.clnn.len());
        let mut x = segment.clone();
        for (layer, eff) in self.clnn.iter().zip(effective.iter()) {
            let (mut y, cache) = layer.forward_with(eff, &x)?;
            let mut applied = None;
            if let Some((plan, rng)) = dropout.as_mut() {
                if plan.clnn > 0.0 {
                    let mask: Vec<T> = dropout_mask(rng, plan.clnn, y.rows() * y.cols())?;
                    for (v, &m) in y.data_mut().iter_mut().zip(mask.iter()) {
                        *v *= m;
                    }
                    applied = Some(mask);
                }
            }
            clnn_inputs.push(x);
            clnn_caches.push(cache);
            clnn_dropout.push(applied);
            x = y;
        }

        let pool_width = x.cols();
        let pooled = global_mean_pool(&x);

        let mut dense_inputs = Vec::with_capacity(self.dense.len() + 1);
        let mut dense_pres = Vec::with_capacity(self.dense.len() + 1);
        let mut dense_dropout = Vec::with_capacity(self.dense.len());
        let mut v = pooled;
        for layer in &self.dense {
            let (pre, mut y) = layer.forward(&v)?;
            let mut applied = None;
            if let Some((plan, rng)) = dropout.as_mut() {
                if plan.dense > 0.0 {
                    let mask: Vec<T> = dropout_mask(rng, plan.dense, y.len())?;
                    for (o, &m) in y.iter_mut().zip(mask.iter()) {
                        *o *= m;
                    }
                    applied = Some(mask);
                }
            }
            dense_inputs.push(v);
            dense_pres.push(pre);
            dense_dropout.push(applied);
            v = y;
        }

        let (pre, logits) = self.output.forward(&v)?;
        dense_inputs.push(v);
        dense_pres.push(pre);

        Ok(ForwardCache {
            clnn_inputs,
            clnn_caches,
            clnn_dropout,
            pool_width,
            dense_inputs,
            dense_pres,
            dense_dropout,
            logits,
        })
    }

    /// Gradients of a scalar loss w.r.t. every parameter, given the loss
    /// gradient at the logits. Blocks line up with [`Self::param_blocks`].
    pub(crate) fn backward(
        &self,
        effective: &[Vec<Matrix<T>>],
        cache: &ForwardCache<T>,
        dlogits: &[T],
    ) -> Result<Gradients<T>> {
        // Output layer.
        let out_grads = self.output.backward(
            cache.dense_inputs.last().expect("cached"),
            cache.dense_pres.last().expect("cached"),
            dlogits,
        )?;

        // Hidden dense layers, last to first.
        let mut dense_grads = Vec::with_capacity(self.dense.len());
        let mut upstream = out_grads.input.clone();
        for (i, layer) in self.dense.iter().enumerate().rev() {
            if let Some(mask) = &cache.dense_dropout[i] {
                for (u, &m) in upstream.iter_mut().zip(mask.iter()) {
                    *u *= m;
                }
            }
            let g = layer.backward(&cache.dense_inputs[i], &cache.dense_pres[i], &upstream)?;
            upstream = g.input.clone();
            dense_grads.push(g);
        }
        dense_grads.reverse();

        // Un-pool: the mean distributes evenly over the pooled frames.
        let k = cache.pool_width;
        let scale = T::one() / T::from_usize(k).expect("pool width");
        let mut dframes =
            Matrix::from_fn(upstream.len(), k, |i, _| upstream[i] * scale);

        // Conditional layers, last to first.
        let mut clnn_grads = Vec::with_capacity(self.clnn.len());
        for (i, layer) in self.clnn.iter().enumerate().rev() {
            if let Some(mask) = &cache.clnn_dropout[i] {
                for (v, &m) in dframes.data_mut().iter_mut().zip(mask.iter()) {
                    *v *= m;
                }
            }
            let g = layer.backward_with(
                &effective[i],
                &cache.clnn_inputs[i],
                &cache.clnn_caches[i],
                &dframes,
            )?;
            dframes = g.input.clone();
            clnn_grads.push(g);
        }
        clnn_grads.reverse();

        let mut blocks = Vec::new();
        for g in clnn_grads {
            for w in g.weights {
                blocks.push(w.data().to_vec());
            }
            blocks.push(g.bias);
            if !g.alpha.is_empty() {
                blocks.push(g.alpha);
            }
        }
        for g in dense_grads {
            blocks.push(g.weights.data().to_vec());
            blocks.push(g.bias);
            if !g.alpha.is_empty() {
                blocks.push(g.alpha);
            }
        }
        blocks.push(out_grads.weights.data().to_vec());
        blocks.push(out_grads.bias);
        if !out_grads.alpha.is_empty() {
            blocks.push(out_grads.alpha);
        }

        Ok(Gradients { blocks })
    }

    /// Named parameter blocks in declaration (= serialization) order.
    pub fn param_block_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.clnn.iter().enumerate() {
            let n = layer.order() as i64;
            for u in -n..=n {
                names.push(format!("clnn{}.w[{}]", i + 1, u));
            }
            names.push(format!("clnn{}.bias", i + 1));
            if layer.transfer() == Transfer::Prelu {
                names.push(format!("clnn{}.alpha", i + 1));
            }
        }
        for (i, layer) in self.dense.iter().enumerate() {
            names.push(format!("dense{}.w", i + 1));
            names.push(format!("dense{}.bias", i + 1));
            if layer.transfer() == Transfer::Prelu {
                names.push(format!("dense{}.alpha", i + 1));
            }
        }
        names.push("output.w".into());
        names.push("output.bias".into());
        if self.output.transfer() == Transfer::Prelu {
            names.push("output.alpha".into());
        }
        names
    }

    pub fn param_blocks(&self) -> Vec<&[T]> {
        let mut blocks: Vec<&[T]> = Vec::new();
        for layer in &self.clnn {
            for w in layer.weights() {
                blocks.push(w.data());
            }
            blocks.push(layer.bias());
            if !layer.alpha().is_empty() {
                blocks.push(layer.alpha());
            }
        }
        for layer in &self.dense {
            blocks.push(layer.weights().data());
            blocks.push(layer.bias());
            if !layer.alpha().is_empty() {
                blocks.push(layer.alpha());
            }
        }
        blocks.push(self.output.weights().data());
        blocks.push(self.output.bias());
        if !self.output.alpha().is_empty() {
            blocks.push(self.output.alpha());
        }
        blocks
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut blocks: Vec<&mut [T]> = Vec::new();
        for layer in &mut self.clnn {
            blocks.extend(layer.params_mut());
        }
        for layer in &mut self.dense {
            blocks.extend(layer.params_mut());
        }
        blocks.extend(self.output.params_mut());
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.param_blocks().iter().map(|b| b.len()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len()).sum()
    }

    /// Copies every parameter into a flat snapshot.
    pub fn snapshot(&self) -> Vec<Vec<T>> {
        self.param_blocks().iter().map(|b| b.to_vec()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<T>]) {
        let mut blocks = self.param_blocks_mut();
        assert_eq!(blocks.len(), snapshot.len(), "snapshot block count");
        for (dst, src) in blocks.iter_mut().zip(snapshot.iter()) {
            assert_eq!(dst.len(), src.len(), "snapshot block size");
            dst.copy_from_slice(src);
        }
    }

    fn header(&self) -> ModelHeader {
        ModelHeader {
            classes: self.classes,
            extra_frames: self.extra_frames,
            clnn: self
                .clnn
                .iter()
                .map(|l| ClnnHeader {
                    kind: if l.mask().is_some() {
                        LayerKind::Mclnn
                    } else {
                        LayerKind::Clnn
                    },
                    order: l.order(),
                    in_len: l.in_len(),
                    out_len: l.out_len(),
                    mask: l.mask().map(|m| MaskHeader {
                        bandwidth: m.spec().bandwidth,
                        overlap: m.spec().overlap,
                    }),
                    transfer: l.transfer(),
                })
                .collect(),
            dense: self
                .dense
                .iter()
                .map(|l| DenseHeader {
                    in_len: l.in_len(),
                    out_len: l.out_len(),
                    transfer: l.transfer(),
                })
                .collect(),
            output: DenseHeader {
                in_len: self.output.in_len(),
                out_len: self.output.out_len(),
                transfer: self.output.transfer(),
            },
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(&self.header())
            .map_err(|e| Error::Format(format!("header encode: {e}")))?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for block in self.param_blocks() {
            for &v in block {
                let f = v.to_f64().ok_or_else(|| {
                    Error::Format("parameter not representable as f64".into())
                })?;
                w.write_all(&f.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("model file too short for magic".into()))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                magic, MODEL_MAGIC
            )));
        }
        let mut ver = [0u8; 2];
        r.read_exact(&mut ver)
            .map_err(|_| Error::Format("model file truncated at version".into()))?;
        let version = u16::from_le_bytes(ver);
        if version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {version}"
            )));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)
            .map_err(|_| Error::Format("model file truncated at header length".into()))?;
        let mut header_bytes = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut header_bytes)
            .map_err(|_| Error::Format("model file truncated in header".into()))?;
        let header: ModelHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::Format(format!("header decode: {e}")))?;

        let mut model = Self::from_header(&header)?;
        {
            let mut blocks = model.param_blocks_mut();
            let mut buf = [0u8; 8];
            for block in blocks.iter_mut() {
                for v in block.iter_mut() {
                    r.read_exact(&mut buf)
                        .map_err(|_| Error::Format("model file truncated in parameters".into()))?;
                    let f = f64::from_le_bytes(buf);
                    if !f.is_finite() {
                        return Err(Error::Format("non-finite parameter in model file".into()));
                    }
                    *v = T::from_f64(f)
                        .ok_or_else(|| Error::Format("parameter out of scalar range".into()))?;
                }
            }
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after parameters".into()));
        }
        Ok(model)
    }

    fn from_header(header: &ModelHeader) -> Result<Self> {
        let mut rng = SeededRng::new(0);
        let mut clnn = Vec::with_capacity(header.clnn.len());
        for h in &header.clnn {
            let mask = match (&h.kind, &h.mask) {
                (LayerKind::Mclnn, Some(m)) => Some(build_mask(MaskSpec::new(
                    m.bandwidth,
                    m.overlap,
                    h.in_len,
                    h.out_len,
                ))?),
                (LayerKind::Clnn, None) => None,
                _ => {
                    return Err(Error::Format(
                        "layer kind and mask presence disagree in header".into(),
                    ))
                }
            };
            clnn.push(ClnnLayer::new(
                h.order, h.in_len, h.out_len, mask, h.transfer, &mut rng,
            )?);
        }
        let dense = header
            .dense
            .iter()
            .map(|h| DenseLayer::new(h.in_len, h.out_len, h.transfer, &mut rng))
            .collect();
        let output = DenseLayer::new(
            header.output.in_len,
            header.output.out_len,
            header.output.transfer,
            &mut rng,
        );
        Ok(Model {
            clnn,
            dense,
            output,
            classes: header.classes,
            extra_frames: header.extra_frames,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MaskHeader {
    bandwidth: usize,
    overlap: i64,
}

#[derive(Serialize, Deserialize)]
struct ClnnHeader {
    kind: LayerKind,
    order: usize,
    in_len: usize,
    out_len: usize,
    mask: Option<MaskHeader>,
    transfer: Transfer,
}

#[derive(Serialize, Deserialize)]
struct DenseHeader {
    in_len: usize,
    out_len: usize,
    transfer: Transfer,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    classes: usize,
    extra_frames: usize,
    clnn: Vec<ClnnHeader>,
    dense: Vec<DenseHeader>,
    output: DenseHeader,
}
