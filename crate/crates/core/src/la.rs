//! Small dense row-major matrices.
//!
//! Everything in this crate is desk-scale, so a plain `Vec`-backed matrix
//! with a lightly unrolled mat-vec kernel is all the linear algebra needed.
//! The same type doubles as the residual stream ([`SeqMatrix`]): `rows` is
//! the number of positions and `cols` the model width.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

/// Dense row-major matrix.
///
/// Serializes as nested row-major arrays of numbers, which is the form the
/// versioned JSON weight format requires.
#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// A length-`n` sequence of width-`d` activation vectors (the residual
/// stream): row `i` holds position `i + 1`.
pub type SeqMatrix<S> = Mat<S>;

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from explicit rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self, ShapeError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(ShapeError::Ragged);
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    /// 1×n row vector.
    pub fn row_vec(v: &[S]) -> Self {
        Mat { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    /// Selection matrix: `k×d`, row `r` is the basis vector `e_{picks[r]}`.
    /// Applied to a stream vector it reads the picked channels in order.
    pub fn pick(d: usize, picks: &[usize]) -> Self {
        let mut m = Self::zeros(picks.len(), d);
        for (r, &c) in picks.iter().enumerate() {
            assert!(c < d, "pick index {c} out of width {d}");
            m[(r, c)] = S::one();
        }
        m
    }

    /// Scatter matrix: `d×k`, column `c` writes into channel `places[c]`.
    /// Applied to a k-vector it places the entries at the given channels.
    pub fn place(d: usize, places: &[usize]) -> Self {
        let mut m = Self::zeros(d, places.len());
        for (c, &r) in places.iter().enumerate() {
            assert!(r < d, "place index {r} out of width {d}");
            m[(r, c)] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == S::zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }

    /// Matrix-vector product `self · x`.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.cols, x.len(), "matvec width mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *d + a * *s;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<S> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, c: S) -> Mat<S> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| *x * c).collect() }
    }

    pub fn add(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// Stacks matrices left to right (shared row count).
    pub fn hstack(parts: &[&Mat<S>]) -> Mat<S> {
        let rows = parts[0].rows;
        assert!(parts.iter().all(|p| p.rows == rows), "hstack row mismatch");
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            let dst = m.row_mut(i);
            let mut off = 0;
            for p in parts {
                dst[off..off + p.cols].copy_from_slice(p.row(i));
                off += p.cols;
            }
        }
        m
    }

    /// Stacks matrices top to bottom (shared column count).
    pub fn vstack(parts: &[&Mat<S>]) -> Mat<S> {
        let cols = parts[0].cols;
        assert!(parts.iter().all(|p| p.cols == cols), "vstack col mismatch");
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Mat { rows, cols, data }
    }

    pub fn block_diag(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
        let mut m = Mat::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            m.row_mut(i)[..a.cols].copy_from_slice(a.row(i));
        }
        for i in 0..b.rows {
            m.row_mut(a.rows + i)[a.cols..].copy_from_slice(b.row(i));
        }
        m
    }

    /// Copies `self` into a `rows×cols` zero matrix at the given offset.
    pub fn embedded(&self, rows: usize, cols: usize, row_off: usize, col_off: usize) -> Mat<S> {
        assert!(row_off + self.rows <= rows && col_off + self.cols <= cols, "embed out of bounds");
        let mut m = Mat::zeros(rows, cols);
        for i in 0..self.rows {
            m.row_mut(row_off + i)[col_off..col_off + self.cols].copy_from_slice(self.row(i));
        }
        m
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, x| m.max(x.abs()))
    }
}

/// Dot product with four-way accumulators; exactness-sensitive callers only
/// feed it values whose sums are exact in the element type, so the summation
/// order is free to choose for speed.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = [S::zero(); 4];
    let mut chunks_a = a.chunks_exact(4);
    let mut chunks_b = b.chunks_exact(4);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        for k in 0..4 {
            acc[k] = acc[k] + ca[k] * cb[k];
        }
    }
    let mut tail = S::zero();
    for (x, y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        tail = tail + *x * *y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("rows have differing lengths")]
    Ragged,
    #[error("matrix must be non-empty")]
    Empty,
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ... ({} more rows)", self.rows - 8)?;
        }
        write!(f, "]")
    }
}

impl<S: Scalar> Serialize for Mat<S> {
    fn serialize<T: Serializer>(&self, serializer: T) -> Result<T::Ok, T::Error> {
        serializer.collect_seq((0..self.rows).map(|i| self.row(i)))
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Mat<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<S>> = Vec::deserialize(deserializer)?;
        if rows.is_empty() || rows[0].is_empty() {
            return Err(D::Error::custom("matrix must be non-empty"));
        }
        Mat::from_rows(&rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matvec_identity() {
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(Mat::identity(3).matvec(&x), x);
    }

    #[test]
    fn matmul_small() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(a.matmul(&b), m(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn pick_and_place() {
        let pick = Mat::<f64>::pick(4, &[2, 0]);
        assert_eq!(pick.matvec(&[10.0, 11.0, 12.0, 13.0]), vec![12.0, 10.0]);
        let place = Mat::<f64>::place(4, &[3, 1]);
        assert_eq!(place.matvec(&[5.0, 6.0]), vec![0.0, 6.0, 0.0, 5.0]);
    }

    #[test]
    fn block_diag_shapes() {
        let a = Mat::<f64>::identity(2);
        let b = m(&[&[2.0]]);
        let d = Mat::block_diag(&a, &b);
        assert_eq!((d.rows(), d.cols()), (3, 3));
        assert_eq!(d.matvec(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 6.0]);
    }

    #[test]
    fn serde_nested_arrays_bit_exact() {
        let a = m(&[&[0.1, -2.5e-17], &[f64::MIN_POSITIVE, 3.0]]);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.starts_with("[["));
        let back: Mat<f64> = serde_json::from_str(&json).unwrap();
        assert!(a.data().iter().zip(back.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn ragged_rows_rejected() {
        let r: Result<Mat<f64>, _> = serde_json::from_str("[[1.0],[1.0,2.0]]");
        assert!(r.is_err());
    }

    #[test]
    fn dot_exact_on_integers() {
        let a: Vec<f64> = (0..17).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..17).map(|i| (i % 3) as f64 - 1.0).collect();
        let expect: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(dot(&a, &b), expect);
    }
}
