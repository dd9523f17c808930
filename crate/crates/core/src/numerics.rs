//! Minimal dense linear-algebra and random-number substrate.
//!
//! Storage convention, stated once and used everywhere: matrices are
//! row-major, and time-frequency data keeps frames as columns (row =
//! feature bin, column = frame). A clip with `l` feature bins and `T`
//! frames is therefore an `l x T` matrix.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    /// Builds from a flat row-major buffer; `data.len()` must be `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Contiguous column slice `[from, to)` as a new matrix.
    pub fn col_slice(&self, from: usize, to: usize) -> Matrix<T> {
        assert!(from < to && to <= self.cols);
        Matrix::from_fn(self.rows, to - from, |i, j| self.get(i, j + from))
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Standard matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow.iter()) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Element-wise product.
    pub fn hadamard(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch {
                op: "hadamard",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Per-row arithmetic mean across columns (per-feature mean over frames).
    pub fn mean_over_columns(&self) -> Vec<T> {
        let denom = T::from_usize(self.cols).expect("cols fits scalar");
        (0..self.rows)
            .map(|i| self.row(i).iter().copied().sum::<T>() / denom)
            .collect()
    }
}

/// `out[j][t] += sum_i lhs[i][j] * rhs[i][rhs_col0 + t]`.
///
/// Transposed product against a column window of `rhs`; `lhs` is `l x e`,
/// the window of `rhs` is `l x out.cols`. This is the layer forward
/// pattern, where the window slides over the frames of a segment.
pub(crate) fn matmul_tn_window<T: Scalar>(
    lhs: &Matrix<T>,
    rhs: &Matrix<T>,
    rhs_col0: usize,
    out: &mut Matrix<T>,
) {
    debug_assert_eq!(lhs.rows, rhs.rows);
    debug_assert_eq!(out.rows, lhs.cols);
    debug_assert!(rhs_col0 + out.cols <= rhs.cols);
    let t = out.cols;
    for i in 0..lhs.rows {
        let lrow = lhs.row(i);
        let rwin = &rhs.row(i)[rhs_col0..rhs_col0 + t];
        for (j, &a) in lrow.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            let orow = &mut out.data[j * t..(j + 1) * t];
            for (o, &b) in orow.iter_mut().zip(rwin.iter()) {
                *o += a * b;
            }
        }
    }
}

/// `out[i][j] += sum_t lhs[i][lhs_col0 + t] * rhs[j][t]`.
///
/// Product of a column window of `lhs` against `rhs` transposed; the
/// weight-gradient pattern (input window times upstream deltas).
pub(crate) fn matmul_nt_window_acc<T: Scalar>(
    lhs: &Matrix<T>,
    lhs_col0: usize,
    rhs: &Matrix<T>,
    out: &mut Matrix<T>,
) {
    debug_assert_eq!(out.rows, lhs.rows);
    debug_assert_eq!(out.cols, rhs.rows);
    debug_assert!(lhs_col0 + rhs.cols <= lhs.cols);
    let t = rhs.cols;
    for i in 0..lhs.rows {
        let lwin = &self_row(lhs, i)[lhs_col0..lhs_col0 + t];
        for j in 0..rhs.rows {
            let rrow = rhs.row(j);
            let mut acc = T::zero();
            for (&a, &b) in lwin.iter().zip(rrow.iter()) {
                acc += a * b;
            }
            out.data[i * out.cols + j] += acc;
        }
    }
}

/// `out[i][out_col0 + t] += sum_j lhs[i][j] * rhs[j][t]`.
///
/// Plain product accumulated into a column window of `out`; the
/// input-gradient pattern (weights times upstream deltas).
pub(crate) fn matmul_nn_window_acc<T: Scalar>(
    lhs: &Matrix<T>,
    rhs: &Matrix<T>,
    out: &mut Matrix<T>,
    out_col0: usize,
) {
    debug_assert_eq!(lhs.cols, rhs.rows);
    debug_assert_eq!(out.rows, lhs.rows);
    debug_assert!(out_col0 + rhs.cols <= out.cols);
    let t = rhs.cols;
    let out_cols = out.cols;
    for i in 0..lhs.rows {
        for j in 0..lhs.cols {
            let a = lhs.get(i, j);
            if a == T::zero() {
                continue;
            }
            let rrow = rhs.row(j);
            let orow = &mut out.data[i * out_cols + out_col0..i * out_cols + out_col0 + t];
            for (o, &b) in orow.iter_mut().zip(rrow.iter()) {
                *o += a * b;
            }
        }
    }
}

#[inline]
fn self_row<T>(m: &Matrix<T>, i: usize) -> &[T] {
    &m.data[i * m.cols..(i + 1) * m.cols]
}

/// Deterministic 64-bit generator (splitmix64).
///
/// The state is a plain counter advanced by a fixed increment, so identical
/// seeds always reproduce identical streams regardless of platform.
#[derive(Clone, Debug)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; requires `lo < hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo < hi, "uniform requires lo < hi");
        lo + (hi - lo) * self.next_f64()
    }

    pub fn uniform_vec(&mut self, lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.uniform(lo, hi)).collect()
    }

    /// Uniform index below `n`. The modulo bias is irrelevant at the `n`
    /// used here (dataset sizes), and the mapping is reproducible.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i + 1);
            slice.swap(i, j);
        }
    }
}
