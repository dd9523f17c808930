//! Filterbank-like binary weight masks.
//!
//! A mask is an `l x e` 0/1 matrix (feature bins by hidden nodes) whose
//! ones are laid out in bands of `bandwidth` consecutive positions along
//! the column-major linear index. Successive bands start `l + (bandwidth -
//! overlap)` linear positions apart, so each hidden node attends to a
//! shifted group of adjacent feature bins, and a band that straddles a
//! column boundary spills into the next hidden node's column. A negative
//! overlap widens the spacing, inserting all-zero gaps between bands.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Parameters of a banded mask pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    /// Consecutive ones per band; `1 <= bandwidth <= feature_len`.
    pub bandwidth: usize,
    /// Signed superposition between successive bands; negative values
    /// leave gaps. Any integer with `feature_len + (bandwidth - overlap) >= 1`.
    pub overlap: i64,
    /// Rows (input feature vector length `l`).
    pub feature_len: usize,
    /// Columns (hidden layer width `e`).
    pub hidden_len: usize,
}

impl MaskSpec {
    pub fn new(bandwidth: usize, overlap: i64, feature_len: usize, hidden_len: usize) -> Self {
        MaskSpec {
            bandwidth,
            overlap,
            feature_len,
            hidden_len,
        }
    }

    /// Distance between successive band starts along the linear index.
    pub fn stride(&self) -> i64 {
        self.feature_len as i64 + (self.bandwidth as i64 - self.overlap)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_len == 0 {
            return Err(Error::InvalidMask("feature_len must be positive".into()));
        }
        if self.hidden_len == 0 {
            return Err(Error::InvalidMask("hidden_len must be positive".into()));
        }
        if self.bandwidth == 0 {
            return Err(Error::InvalidMask("bandwidth must be positive".into()));
        }
        if self.bandwidth > self.feature_len {
            return Err(Error::InvalidMask(format!(
                "bandwidth {} exceeds feature_len {}",
                self.bandwidth, self.feature_len
            )));
        }
        if self.stride() < 1 {
            return Err(Error::InvalidMask(format!(
                "band stride l + (bw - ov) = {} must be at least 1",
                self.stride()
            )));
        }
        Ok(())
    }
}

/// An `l x e` binary matrix together with the spec that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    spec: MaskSpec,
    /// Row-major entries over {0, 1}.
    entries: Vec<u8>,
}

/// Builds the mask whose ones sit at the 0-based column-major linear
/// indices `a + (g - 1) * (l + (bw - ov))` for `a` in `[0, bw)` and band
/// index `g` counting from 1 until bands fall past `l * e`; out-of-range
/// indices are discarded, never wrapped. Column-major means linear index
/// `p` maps to row `p % l`, column `p / l`, so each band runs down a
/// column and may straddle into the next one.
pub fn build_mask(spec: MaskSpec) -> Result<BinaryMask> {
    spec.validate()?;
    let l = spec.feature_len;
    let e = spec.hidden_len;
    let total = (l * e) as i64;
    let stride = spec.stride();

    let mut entries = vec![0u8; l * e];
    let mut start: i64 = 0;
    while start < total {
        let end = (start + spec.bandwidth as i64).min(total);
        for lx in start..end {
            let row = (lx as usize) % l;
            let col = (lx as usize) / l;
            entries[row * e + col] = 1;
        }
        start += stride;
    }
    Ok(BinaryMask { spec, entries })
}

impl BinaryMask {
    pub fn spec(&self) -> &MaskSpec {
        &self.spec
    }

    pub fn rows(&self) -> usize {
        self.spec.feature_len
    }

    pub fn cols(&self) -> usize {
        self.spec.hidden_len
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.spec.hidden_len + col]
    }

    pub fn count_ones(&self) -> usize {
        self.entries.iter().filter(|&&b| b == 1).count()
    }

    /// Sorted `(row, col)` coordinates of all 1 entries.
    pub fn ones(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.count_ones());
        for row in 0..self.rows() {
            for col in 0..self.cols() {
                if self.get(row, col) == 1 {
                    out.push((row, col));
                }
            }
        }
        out
    }

    /// The mask as a dense matrix for element-wise application to weights.
    pub fn to_matrix<T: Scalar>(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows(), self.cols(), |i, j| {
            if self.get(i, j) == 1 {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Zeroes every masked entry of `w` in place; `w` must be `l x e`.
    pub(crate) fn apply_in_place<T: Scalar>(&self, w: &mut Matrix<T>) {
        debug_assert_eq!(w.rows(), self.rows());
        debug_assert_eq!(w.cols(), self.cols());
        for (v, &m) in w.data_mut().iter_mut().zip(self.entries.iter()) {
            if m == 0 {
                *v = T::zero();
            }
        }
    }

    /// Rows of `0`/`1` characters, one matrix row per line.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.rows() * (self.cols() + 1));
        for row in 0..self.rows() {
            for col in 0..self.cols() {
                s.push(if self.get(row, col) == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal enumeration of the closed form: for every (a, g) pair set
    /// the bit at linear index a + (g-1)(l + (bw - ov)), g up to
    /// ceil(l*e / stride), discarding indices past l*e.
    fn oracle(spec: MaskSpec) -> Vec<u8> {
        let l = spec.feature_len as i64;
        let e = spec.hidden_len as i64;
        let stride = spec.stride();
        let g_max = (l * e + stride - 1) / stride; // ceil
        let mut entries = vec![0u8; (l * e) as usize];
        for g in 1..=g_max {
            for a in 0..spec.bandwidth as i64 {
                let lx = a + (g - 1) * stride;
                if lx < l * e {
                    let row = lx % l;
                    let col = lx / l;
                    entries[(row * e + col) as usize] = 1;
                }
            }
        }
        entries
    }

    fn flat(mask: &BinaryMask) -> Vec<u8> {
        let mut v = Vec::new();
        for i in 0..mask.rows() {
            for j in 0..mask.cols() {
                v.push(mask.get(i, j));
            }
        }
        v
    }

    #[test]
    fn small_example_l4_e3_bw2_ov1() {
        let mask = build_mask(MaskSpec::new(2, 1, 4, 3)).unwrap();
        assert_eq!(
            mask.ones(),
            vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2)]
        );
        assert_eq!(mask.spec().stride(), 5);
        assert_eq!(flat(&mask), oracle(*mask.spec()));
    }

    #[test]
    fn full_bandwidth_full_overlap_saturates() {
        let mask = build_mask(MaskSpec::new(3, 3, 3, 2)).unwrap();
        assert_eq!(mask.count_ones(), 6);
        assert!(flat(&mask).iter().all(|&b| b == 1));
    }

    #[test]
    fn bw5_ov3_band_starts_advance_by_two() {
        // Bandwidth 5, overlap 3: within the first band group the first-one
        // row of each successive column advances by bw - ov = 2.
        let mask = build_mask(MaskSpec::new(5, 3, 10, 6)).unwrap();
        assert_eq!(flat(&mask), oracle(*mask.spec()));
        let first_one_row = |col: usize| (0..10).find(|&r| mask.get(r, col) == 1).unwrap();
        assert_eq!(
            (0..4).map(first_one_row).collect::<Vec<_>>(),
            vec![0, 2, 4, 6]
        );
    }

    #[test]
    fn bw3_negative_overlap_band_starts_advance_by_four() {
        // Bandwidth 3, overlap -1: successive band start rows are 4 apart
        // (mod l), and the straddle shifts the pattern across column groups.
        let spec = MaskSpec::new(3, -1, 9, 9);
        let mask = build_mask(spec).unwrap();
        assert_eq!(flat(&mask), oracle(spec));

        let stride = spec.stride();
        assert_eq!(stride, 13);
        let mut g = 0i64;
        let mut prev_row: Option<i64> = None;
        while g * stride < 81 {
            let row = (g * stride) % 9;
            if let Some(p) = prev_row {
                assert_eq!((row - p).rem_euclid(9), 4);
            }
            prev_row = Some(row);
            g += 1;
        }

        // Straddled second column group carries a shifted copy of the
        // first group's pattern rather than repeating it.
        let col_pattern =
            |c: usize| (0..9).map(|r| mask.get(r, c)).collect::<Vec<_>>();
        assert_ne!(col_pattern(0), col_pattern(3));
    }

    #[test]
    fn ones_listing() {
        // All-zero is unreachable through build_mask (band 1 always lands
        // in range), so the empty contract is checked on a bare value.
        let all_zero = BinaryMask {
            spec: MaskSpec::new(1, 0, 2, 2),
            entries: vec![0; 4],
        };
        assert!(all_zero.ones().is_empty());

        let mask = build_mask(MaskSpec::new(2, 1, 4, 3)).unwrap();
        assert_eq!(
            mask.ones(),
            vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2)]
        );

        let all_ones = build_mask(MaskSpec::new(3, 3, 3, 2)).unwrap();
        assert_eq!(
            all_ones.ones(),
            vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
        );
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(build_mask(MaskSpec::new(0, 0, 4, 3)).is_err());
        assert!(build_mask(MaskSpec::new(2, 0, 0, 3)).is_err());
        assert!(build_mask(MaskSpec::new(2, 0, 4, 0)).is_err());
        assert!(build_mask(MaskSpec::new(5, 0, 4, 3)).is_err()); // bw > l
        assert!(build_mask(MaskSpec::new(2, 9, 4, 3)).is_err()); // stride < 1
    }

    #[test]
    fn deterministic_construction() {
        let spec = MaskSpec::new(4, -2, 11, 7);
        assert_eq!(build_mask(spec).unwrap(), build_mask(spec).unwrap());
    }

    #[test]
    fn saturation_when_stride_does_not_exceed_bandwidth() {
        // Bands tile the whole linear index space exactly when the stride
        // is <= bw; with ov = bw that requires bw = l.
        for l in 2..6usize {
            let mask = build_mask(MaskSpec::new(l, l as i64, l, 4)).unwrap();
            assert_eq!(mask.count_ones(), l * 4, "bw=ov=l={l} must saturate");
        }
    }

    #[test]
    fn widening_bands_at_fixed_stride_is_monotone() {
        // Raising bw and ov together keeps the stride fixed, so every band
        // only widens: no 1 may turn into a 0.
        for l in [4usize, 9, 10] {
            for e in [3usize, 6] {
                for bw in 1..l {
                    for ov in -3i64..=(bw as i64) {
                        let base = build_mask(MaskSpec::new(bw, ov, l, e)).unwrap();
                        let wider = build_mask(MaskSpec::new(bw + 1, ov + 1, l, e)).unwrap();
                        for (row, col) in base.ones() {
                            assert_eq!(wider.get(row, col), 1);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn matches_oracle_on_random_specs(
            l in 2usize..16,
            e in 2usize..16,
            bw_off in 0usize..16,
            ov in -6i64..16,
        ) {
            let bw = 1 + bw_off % l;
            let spec = MaskSpec::new(bw, ov, l, e);
            if spec.validate().is_ok() {
                let mask = build_mask(spec).unwrap();
                prop_assert_eq!(flat(&mask), oracle(spec));
            }
        }

        #[test]
        fn columns_have_at_most_two_runs_when_overlap_bounded(
            l in 2usize..13,
            e in 2usize..13,
            bw_off in 0usize..13,
            ov_off in 0i64..17,
        ) {
            // For ov <= bw the stride is at least l, so a column sees at
            // most a straddled tail plus one fresh band.
            let bw = 1 + bw_off % l;
            let ov = (bw as i64) - ov_off.min(bw as i64 + 4);
            let spec = MaskSpec::new(bw, ov, l, e);
            prop_assume!(spec.validate().is_ok());
            let mask = build_mask(spec).unwrap();
            for col in 0..e {
                let mut runs = 0;
                let mut prev = 0u8;
                for row in 0..l {
                    let v = mask.get(row, col);
                    if v == 1 && prev == 0 {
                        runs += 1;
                    }
                    prev = v;
                }
                prop_assert!(runs <= 2, "column {col} has {runs} runs for {spec:?}");
            }
        }
    }
}
