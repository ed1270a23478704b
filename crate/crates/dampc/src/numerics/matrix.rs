//! Dense row-major f64 matrices. The single carrier for features, weights,
//! activations, and gradients throughout the crate.

use crate::error::{Error, Result};
use crate::numerics::Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Dense 2-D array of f64, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// Entries i.i.d. uniform in [lo, hi), drawn row-major.
    pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.uniform_in(lo, hi)).collect();
        Matrix { rows, cols, data }
    }

    /// Entries i.i.d. standard normal, drawn row-major.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.normal()).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// self += other, used for gradient accumulation on merge points.
    pub fn add_in_place(&mut self, other: &Matrix) -> Result<()> {
        self.check_same_shape(other, "add_in_place")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// self += s * other.
    pub fn add_scaled_in_place(&mut self, other: &Matrix, s: f64) -> Result<()> {
        self.check_same_shape(other, "add_scaled_in_place")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Per-column sums, as a 1xC matrix flattened to a Vec.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(i)) {
                *s += x;
            }
        }
        sums
    }

    /// Per-column means.
    pub fn col_means(&self) -> Vec<f64> {
        let n = self.rows as f64;
        self.col_sums().into_iter().map(|s| s / n).collect()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    fn check_same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

fn check_matmul_shapes(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

#[inline]
fn matmul_row(a_row: &[f64], b: &Matrix, out_row: &mut [f64]) {
    // k-outer accumulation walks b row-by-row; the per-entry operation
    // order is fixed, so the result never depends on thread scheduling.
    out_row.iter_mut().for_each(|x| *x = 0.0);
    for (l, &a_val) in a_row.iter().enumerate() {
        let b_row = b.row(l);
        for (o, &b_val) in out_row.iter_mut().zip(b_row) {
            *o += a_val * b_val;
        }
    }
}

/// Sequential matrix product.
pub fn matmul_seq(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_matmul_shapes(a, b)?;
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let (a_row, out_row) = (a.row(i), &mut out.data[i * b.cols..(i + 1) * b.cols]);
        matmul_row(a_row, b, out_row);
    }
    Ok(out)
}

/// Parallel matrix product over output rows; bitwise identical to `matmul_seq`.
#[cfg(feature = "parallel")]
pub fn matmul_par(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_matmul_shapes(a, b)?;
    let mut out = Matrix::zeros(a.rows, b.cols);
    out.data
        .par_chunks_mut(b.cols)
        .with_min_len(8)
        .enumerate()
        .for_each(|(i, out_row)| matmul_row(a.row(i), b, out_row));
    Ok(out)
}

/// Matrix product; parallel over output rows when the `parallel` feature is on.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    #[cfg(feature = "parallel")]
    {
        matmul_par(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        matmul_seq(a, b)
    }
}

/// Row-wise softmax with max-subtraction for stability.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    out
}

/// Stable softmax of one logit slice, in place.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        // Independent triple-loop oracle in i, j, l order.
        let mut c = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for l in 0..a.cols() {
                    acc += a.get(i, l) * b.get(l, j);
                }
                c.set(i, j, acc);
            }
        }
        c
    }

    #[test]
    fn matmul_identity_passthrough() {
        let mut rng = Rng::new(1);
        let b = Matrix::gaussian(3, 2, &mut rng);
        let c = matmul(&Matrix::identity(3), &b).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let mut rng = Rng::new(2);
        let b = Matrix::gaussian(2, 2, &mut rng);
        let c = matmul(&Matrix::zeros(2, 2), &b).unwrap();
        assert!(c.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = Rng::new(3);
        let a = Matrix::gaussian(4, 3, &mut rng);
        let b = Matrix::gaussian(3, 5, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.data().iter().zip(slow.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("4x2"), "{msg}");
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential_bitwise() {
        let mut rng = Rng::new(4);
        for _ in 0..5 {
            let a = Matrix::gaussian(33, 17, &mut rng);
            let b = Matrix::gaussian(17, 29, &mut rng);
            assert_eq!(matmul_par(&a, &b).unwrap(), matmul_seq(&a, &b).unwrap());
        }
    }

    #[test]
    fn matmul_associative_within_tolerance() {
        let mut rng = Rng::new(5);
        for _ in 0..10 {
            let a = Matrix::gaussian(4, 5, &mut rng);
            let b = Matrix::gaussian(5, 3, &mut rng);
            let c = Matrix::gaussian(3, 6, &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                let rel = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                assert!(rel < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn softmax_uniform_row() {
        let m = Matrix::filled(1, 4, 3.7);
        let s = softmax_rows(&m);
        for &p in s.data() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let m = Matrix::new(1, 3, vec![0.3, -1.2, 2.0]).unwrap();
        let shifted = m.map(|x| x + 123.0);
        let a = softmax_rows(&m);
        let b = softmax_rows(&shifted);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_saturated_entry() {
        let m = Matrix::new(1, 2, vec![100.0, 0.0]).unwrap();
        let s = softmax_rows(&m);
        assert!(s.get(0, 0) >= 1.0 - 1e-10);
    }

    #[test]
    fn softmax_rows_sum_to_one_for_large_entries() {
        let mut rng = Rng::new(6);
        let m = Matrix::uniform(5, 7, -1e3, 1e3, &mut rng);
        let s = softmax_rows(&m);
        for i in 0..s.rows() {
            let sum: f64 = s.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(s.row(i).iter().all(|&p| p >= 0.0));
        }
    }
}
