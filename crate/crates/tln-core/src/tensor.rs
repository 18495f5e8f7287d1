//! Dense row-major `f64` matrices and the handful of kernels everything
//! else is built from.
//!
//! All tensors are two-dimensional; scalars are `1×1`, row vectors `1×n`.
//! Shape mismatches are programmer errors and panic with the offending
//! shapes.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Dense matrix of 64-bit floats, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            rows * cols,
            data.len(),
            "tensor shape {rows}x{cols} does not match {} values",
            data.len()
        );
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(1, 1, vec![value])
    }

    /// C×C identity.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    /// Value of a 1×1 tensor.
    #[inline]
    pub fn scalar_value(&self) -> f64 {
        assert!(
            self.is_scalar(),
            "expected scalar tensor, got {}x{}",
            self.rows,
            self.cols
        );
        self.data[0]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reinterpret as a different shape with the same element count.
    pub fn reshaped(mut self, rows: usize, cols: usize) -> Self {
        assert_eq!(
            rows * cols,
            self.data.len(),
            "cannot reshape {}x{} to {rows}x{cols}",
            self.rows,
            self.cols
        );
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn transposed(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }
}

/// Dot product with four accumulators so the reduction pipelines.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let ai = &a[i * 4..i * 4 + 4];
        let bi = &b[i * 4..i * 4 + 4];
        acc[0] += ai[0] * bi[0];
        acc[1] += ai[1] * bi[1];
        acc[2] += ai[2] * bi[2];
        acc[3] += ai[3] * bi[3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn assert_inner(name: &str, a: &Tensor, b: &Tensor, a_inner: usize, b_inner: usize) {
    assert_eq!(
        a_inner,
        b_inner,
        "{name}: incompatible shapes {}x{} and {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
}

/// `a · b` for `a: m×k`, `b: k×n`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(a.rows, b.cols);
    matmul_acc(&mut out, a, b);
    out
}

/// `out += a · b`. The k-loop is unrolled by four so each pass over the
/// output row carries four fused multiply-adds.
pub fn matmul_acc(out: &mut Tensor, a: &Tensor, b: &Tensor) {
    assert_inner("matmul", a, b, a.cols, b.rows);
    assert_eq!((out.rows, out.cols), (a.rows, b.cols), "matmul: bad output shape");
    let k = a.cols;
    let n = b.cols;
    let bd = &b.data;
    for (a_row, out_row) in a.data.chunks_exact(k).zip(out.data.chunks_exact_mut(n)) {
        let mut p = 0;
        while p + 4 <= k {
            let (a0, a1, a2, a3) = (a_row[p], a_row[p + 1], a_row[p + 2], a_row[p + 3]);
            let b0 = &bd[p * n..(p + 1) * n];
            let b1 = &bd[(p + 1) * n..(p + 2) * n];
            let b2 = &bd[(p + 2) * n..(p + 3) * n];
            let b3 = &bd[(p + 3) * n..(p + 4) * n];
            for j in 0..n {
                out_row[j] += (a0 * b0[j] + a1 * b1[j]) + (a2 * b2[j] + a3 * b3[j]);
            }
            p += 4;
        }
        while p < k {
            let ap = a_row[p];
            let b_row = &bd[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += ap * bv;
            }
            p += 1;
        }
    }
}

/// `out += a · bᵀ` for `a: m×n`, `b: k×n`, `out: m×k`.
pub fn matmul_nt_acc(out: &mut Tensor, a: &Tensor, b: &Tensor) {
    assert_inner("matmul_nt", a, b, a.cols, b.cols);
    assert_eq!((out.rows, out.cols), (a.rows, b.rows), "matmul_nt: bad output shape");
    let n = a.cols;
    let k = b.rows;
    for (a_row, out_row) in a.data.chunks_exact(n).zip(out.data.chunks_exact_mut(k)) {
        for (o, b_row) in out_row.iter_mut().zip(b.data.chunks_exact(n)) {
            *o += dot(a_row, b_row);
        }
    }
}

/// `out += aᵀ · b` for `a: m×k`, `b: m×n`, `out: k×n`. Unrolled by four
/// over `m` to cut output-row traffic.
pub fn matmul_tn_acc(out: &mut Tensor, a: &Tensor, b: &Tensor) {
    assert_inner("matmul_tn", a, b, a.rows, b.rows);
    assert_eq!((out.rows, out.cols), (a.cols, b.cols), "matmul_tn: bad output shape");
    let m = a.rows;
    let k = a.cols;
    let n = b.cols;
    let (ad, bd) = (&a.data, &b.data);
    let mut i = 0;
    while i + 4 <= m {
        let ar0 = &ad[i * k..(i + 1) * k];
        let ar1 = &ad[(i + 1) * k..(i + 2) * k];
        let ar2 = &ad[(i + 2) * k..(i + 3) * k];
        let ar3 = &ad[(i + 3) * k..(i + 4) * k];
        let br0 = &bd[i * n..(i + 1) * n];
        let br1 = &bd[(i + 1) * n..(i + 2) * n];
        let br2 = &bd[(i + 2) * n..(i + 3) * n];
        let br3 = &bd[(i + 3) * n..(i + 4) * n];
        for (p, out_row) in out.data.chunks_exact_mut(n).enumerate() {
            let (a0, a1, a2, a3) = (ar0[p], ar1[p], ar2[p], ar3[p]);
            for j in 0..n {
                out_row[j] += (a0 * br0[j] + a1 * br1[j]) + (a2 * br2[j] + a3 * br3[j]);
            }
        }
        i += 4;
    }
    while i < m {
        let a_row = &ad[i * k..(i + 1) * k];
        let b_row = &bd[i * n..(i + 1) * n];
        for (&aip, out_row) in a_row.iter().zip(out.data.chunks_exact_mut(n)) {
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
        i += 1;
    }
}

/// Row-wise softmax with max-subtraction; every output row is strictly
/// positive and sums to 1 up to rounding.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    softmax_rows_inplace(&mut out);
    out
}

pub(crate) fn softmax_rows_inplace(x: &mut Tensor) {
    let cols = x.cols;
    for row in x.data.chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = math::exp(*v - max);
            sum += *v;
        }
        let inv = 1.0 / sum;
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
}

/// √(Σ entries²).
pub fn frobenius_norm(x: &Tensor) -> f64 {
    math::sqrt(dot(&x.data, &x.data))
}
