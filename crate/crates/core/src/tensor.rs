//! Dense row-major `Float` tensors and the matrix-multiply kernel every layer
//! is built on.

use crate::error::{Error, Result};

/// Scalar type of every tensor. Single precision unless the `f64` feature is on.
#[cfg(not(feature = "f64"))]
pub type Float = f32;
#[cfg(feature = "f64")]
pub type Float = f64;

#[cfg(feature = "f64")]
use matrixmultiply::dgemm as gemm_kernel;
#[cfg(not(feature = "f64"))]
use matrixmultiply::sgemm as gemm_kernel;

/// Dense row-major array of `Float` with an explicit shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Float>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<Float>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::shape(
                "tensor shape must have at least one dimension",
            ));
        }
        if shape.contains(&0) {
            return Err(Error::shape(format!("zero-sized dimension in {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Zero tensor. Panics on an empty or zero-sized shape.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), vec![0.0; n]).expect("zeros: invalid shape")
    }

    pub fn full(shape: &[usize], value: Float) -> Self {
        let mut t = Tensor::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn from_slice(values: &[Float]) -> Self {
        Tensor::new(vec![values.len()], values.to_vec()).expect("from_slice: empty input")
    }

    /// Builds a `[rows × cols]` matrix from row slices of equal length.
    pub fn from_rows(rows: &[&[Float]]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn zeros_like(&self) -> Self {
        Tensor::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Float] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Float] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Float> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// `(rows, cols)` of a 2-D tensor; a 1-D tensor is treated as one row.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [n] => Ok((1, *n)),
            [r, c] => Ok((*r, *c)),
            s => Err(Error::shape(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Size of the trailing dimension.
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap()
    }

    pub fn row(&self, i: usize) -> &[Float] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Float] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.is_empty() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        axpy(1.0, &other.data, &mut self.data);
    }

    pub fn add_scaled(&mut self, alpha: Float, other: &Tensor) {
        assert_eq!(self.shape, other.shape, "add_scaled shape mismatch");
        axpy(alpha, &other.data, &mut self.data);
    }

    pub fn scale(&mut self, alpha: Float) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill(&mut self, value: Float) {
        self.data.fill(value);
    }

    pub fn sum(&self) -> Float {
        self.data.iter().sum()
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|&v| (v as f64) * (v as f64)).sum()
    }

    pub fn max_abs(&self) -> Float {
        self.data.iter().fold(0.0 as Float, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the largest element; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.data)
    }
}

pub fn argmax(values: &[Float]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub(crate) fn axpy(alpha: Float, x: &[Float], y: &mut [Float]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn dot(a: &[Float], b: &[Float]) -> Float {
    debug_assert_eq!(a.len(), b.len());
    // Eight independent partial sums let the compiler vectorize the loop.
    let mut lanes = [0.0 as Float; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: Float = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (xa, xb) in ca.zip(cb) {
        for k in 0..8 {
            lanes[k] += xa[k] * xb[k];
        }
    }
    lanes.iter().sum::<Float>() + tail
}

/// Strided view of a row-major-ish matrix inside a flat slice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MatRef<'a> {
    pub data: &'a [Float],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a> MatRef<'a> {
    pub fn new(data: &'a [Float], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            row_stride: cols as isize,
            col_stride: 1,
        }
    }

    /// Rows of `cols` values starting every `row_stride` elements; rows may overlap.
    pub fn strided(data: &'a [Float], rows: usize, cols: usize, row_stride: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            row_stride: row_stride as isize,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn max_index(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        ((self.rows - 1) as isize * self.row_stride + (self.cols - 1) as isize * self.col_stride)
            as usize
    }
}

/// `c = a·b` (or `c += a·b` when `accumulate`), `c` row-major `[a.rows × b.cols]`
/// with row stride `ldc`.
pub(crate) fn gemm(a: MatRef<'_>, b: MatRef<'_>, c: &mut [Float], ldc: usize, accumulate: bool) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(k, b.rows, "gemm inner dimension mismatch");
    if m == 0 || n == 0 {
        return;
    }
    assert!(
        ldc >= n && (m - 1) * ldc + n <= c.len(),
        "gemm output out of bounds"
    );
    if k == 0 {
        if !accumulate {
            for i in 0..m {
                c[i * ldc..i * ldc + n].fill(0.0);
            }
        }
        return;
    }
    assert!(a.max_index() < a.data.len(), "gemm lhs out of bounds");
    assert!(b.max_index() < b.data.len(), "gemm rhs out of bounds");
    assert!(a.row_stride >= 0 && a.col_stride >= 0 && b.row_stride >= 0 && b.col_stride >= 0);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: every index reachable from the strides was bounds-checked above,
    // `c` is a distinct mutable slice whose rows do not overlap (ldc >= n).
    unsafe {
        gemm_kernel(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

/// `[m × k] · [k × n]` for plain row-major tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::shape(format!(
            "matmul inner dimensions differ: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm(
        MatRef::new(a.data(), m, k),
        MatRef::new(b.data(), k, n),
        out.data_mut(),
        n,
        false,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[Float], b: &[Float], m: usize, k: usize, n: usize) -> Vec<Float> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![], vec![]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn matmul_matches_naive() {
        let a: Vec<Float> = (0..12).map(|v| v as Float * 0.5 - 2.0).collect();
        let b: Vec<Float> = (0..20).map(|v| (v as Float).sin()).collect();
        let ta = Tensor::new(vec![3, 4], a.clone()).unwrap();
        let tb = Tensor::new(vec![4, 5], b.clone()).unwrap();
        let c = matmul(&ta, &tb).unwrap();
        for (x, y) in c.data().iter().zip(naive(&a, &b, 3, 4, 5)) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn gemm_transposed_and_overlapping_rows() {
        // Overlapping windows of a length-6 signal, width 3: rows [0..3], [1..4], ...
        let x: Vec<Float> = (1..=6).map(|v| v as Float).collect();
        let w = [1.0, 0.0, -1.0];
        let mut out = vec![0.0; 4];
        gemm(
            MatRef::strided(&x, 4, 3, 1),
            MatRef::new(&w, 3, 1),
            &mut out,
            1,
            false,
        );
        assert_eq!(out, vec![-2.0; 4]);

        let a = [1.0, 2.0, 3.0, 4.0];
        let mut c = vec![1.0; 4];
        // aᵀ·a accumulated onto ones.
        gemm(
            MatRef::new(&a, 2, 2).t(),
            MatRef::new(&a, 2, 2),
            &mut c,
            2,
            true,
        );
        assert_eq!(c, vec![11.0, 15.0, 15.0, 21.0]);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
    }
}
