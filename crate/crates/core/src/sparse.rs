//! Compressed sparse row matrices.
//!
//! Every graph shift operator in the crate is a [`CsrMatrix`]. Construction goes
//! through [`CsrMatrix::from_triplets`], which sorts columns, sums duplicates and
//! drops entries whose magnitude is at or below [`Scalar::drop_tolerance`], so the
//! stored pattern never contains explicit zeros.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{param, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CsrMatrix<T = f64> {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n])
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
            .expect("diagonal indices are in range")
    }

    /// Builds a matrix from `(row, col, value)` entries in any order.
    ///
    /// Duplicate coordinates are summed; sums with `|v| <= 1e-15` are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= n_rows || c >= n_cols {
                return param(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                ));
            }
            if !v.is_finite() {
                return param(format!("non-finite entry at ({r}, {c})"));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let tol = T::drop_tolerance();
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.abs() > tol {
                row_offsets[r + 1] += 1;
                col_indices.push(c);
                values.push(v);
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let (r, c) = m.shape();
        Self::from_triplets(
            r,
            c,
            (0..r).flat_map(|i| (0..c).map(move |j| (i, j, m[(i, j)]))),
        )
        .expect("dense indices are in range")
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `(col, value)` pairs of one row, columns strictly increasing.
    #[inline]
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`, overwriting `y`.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yr = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_cols {
            return param(format!(
                "mul_vec: matrix has {} columns, vector has {}",
                self.n_cols,
                x.len()
            ));
        }
        let mut y = vec![T::zero(); self.n_rows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.n_cols,
            self.n_rows,
            self.triplets().map(|(r, c, v)| (c, r, v)),
        )
        .expect("transpose keeps indices in range")
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.n_cols != rhs.n_rows {
            return param(format!(
                "matmul shape mismatch: {}x{} times {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            ));
        }
        let mut out = Vec::new();
        let mut acc = vec![T::zero(); rhs.n_cols];
        let mut touched = vec![false; rhs.n_cols];
        let mut cols = Vec::new();
        for r in 0..self.n_rows {
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &cols {
                out.push((r, c, acc[c]));
                acc[c] = T::zero();
                touched[c] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.n_rows, rhs.n_cols, out)
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        if !self.is_square() {
            return param("pow of non-square matrix");
        }
        let mut acc = Self::identity(self.n_rows);
        for _ in 0..k {
            acc = acc.matmul(self)?;
        }
        Ok(acc)
    }

    /// Kronecker product `self ⊗ rhs`, built directly in sparse form.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (rhs.n_rows, rhs.n_cols);
        let mut entries = Vec::with_capacity(self.nnz() * rhs.nnz());
        for (i, j, a) in self.triplets() {
            for (k, l, b) in rhs.triplets() {
                entries.push((i * p + k, j * q + l, a * b));
            }
        }
        Self::from_triplets(self.n_rows * p, self.n_cols * q, entries)
            .expect("kron indices are in range")
    }

    /// `Σ coeff_i · M_i`; all terms must share one shape.
    pub fn linear_combination(terms: &[(T, &Self)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return param("empty linear combination");
        };
        let (r, c) = (first.n_rows, first.n_cols);
        if terms.iter().any(|(_, m)| m.n_rows != r || m.n_cols != c) {
            return param("linear combination shape mismatch");
        }
        Self::from_triplets(
            r,
            c,
            terms
                .iter()
                .filter(|(a, _)| *a != T::zero())
                .flat_map(|(a, m)| m.triplets().map(move |(i, j, v)| (i, j, *a * v))),
        )
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        Self::linear_combination(&[(T::one(), self), (T::one(), rhs)])
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets().map(|(r, c, v)| (r, c, alpha * v)),
        )
        .expect("scaling keeps indices in range")
    }

    pub fn frobenius_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over all entries.
    pub fn asymmetry(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let t = self.transpose();
        let mut worst = T::zero();
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - t.get(r, c)).abs());
        }
        for (r, c, v) in t.triplets() {
            worst = worst.max((v - self.get(r, c)).abs());
        }
        worst
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square() && self.asymmetry() <= tol
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n_rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn cast<U: Scalar>(&self) -> CsrMatrix<U> {
        CsrMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets().map(|(r, c, v)| (r, c, U::of(v.to_f64_lossy()))),
        )
        .expect("cast keeps indices in range")
    }
}
