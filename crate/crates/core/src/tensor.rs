// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Dense real matrices, permutations and doubly stochastic matrices.
//!
//! Storage is row-major everywhere, and so is vectorization: `vec(A)[i*n + j] = A[i][j]`.
//! With that convention `vec(A X B) = (A ⊗ Bᵀ) vec(X)`, which is the identity the cost
//! function relies on to turn `P G Pᵀ` into `(P ⊗ P) vec(G)`.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Largest number of qubits any operator in this crate is built for.
pub const MAX_QUBITS: usize = 64;
/// Largest side length of a dense matrix (`MAX_QUBITS²`).
pub const MAX_DIM: usize = MAX_QUBITS * MAX_QUBITS;
/// Entries of a doubly stochastic matrix in `[-DSM_CLAMP, 0)` are rounded to zero.
pub const DSM_CLAMP: f64 = 1e-12;
/// Default row/column sum tolerance for doubly stochastic checks.
pub const DSM_SUM_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Size(format!(
            "{rows}x{cols} exceeds the {MAX_DIM}x{MAX_DIM} limit"
        )));
    }
    Ok(())
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `I_m`.
    pub fn identity(m: usize) -> Self {
        let mut out = Self::zeros(m, m);
        for i in 0..m {
            out.data[i * m + i] = 1.0;
        }
        out
    }

    /// `J_m`, the all-ones matrix.
    pub fn ones(m: usize) -> Self {
        Self {
            rows: m,
            cols: m,
            data: vec![1.0; m * m],
        }
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self + scale * other`, shapes must agree.
    pub fn add_scaled(&self, other: &Matrix, scale: f64) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Matrix { data, ..*self })
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            data: self.data.iter().map(|x| x * s).collect(),
            ..*self
        }
    }

    /// Largest absolute entrywise difference; `f64::INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.check_same_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Kronecker product, `(A⊗B)[i·br+k, j·bc+l] = A[i,j]·B[k,l]`.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or_else(|| Error::Size("row count overflow".into()))?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or_else(|| Error::Size("column count overflow".into()))?;
    check_dims(rows, cols)?;
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for (l, bkl) in b.row(k).iter().enumerate() {
                    out.data[base + l] = aij * bkl;
                }
            }
        }
    }
    Ok(out)
}

/// Row-major vectorization of a square matrix.
pub fn vec_row_major(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "vectorization needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    Ok(a.data.clone())
}

/// `1ᵀ(A⊙B)1`, equal to `tr(ABᵀ)` and `vec(I)ᵀ(A⊗B)vec(I)`.
pub fn hadamard_contraction(a: &Matrix, b: &Matrix) -> Result<f64> {
    if !a.is_square() || !b.is_square() || a.rows != b.rows {
        return Err(Error::Shape(format!(
            "hadamard contraction of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// A permutation of `0..m`, stored as the image of each basis vector:
/// `P e_k = e_{mapping[k]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationMatrix {
    mapping: Vec<usize>,
}

impl PermutationMatrix {
    pub fn identity(m: usize) -> Self {
        Self {
            mapping: (0..m).collect(),
        }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let m = mapping.len();
        if m > MAX_DIM {
            return Err(Error::Size(format!("permutation of size {m}")));
        }
        let mut seen = vec![false; m];
        for &k in &mapping {
            if k >= m || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Argument(format!(
                    "{mapping:?} is not a bijection on 0..{m}"
                )));
            }
        }
        Ok(Self { mapping })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    #[inline]
    pub fn apply(&self, k: usize) -> usize {
        self.mapping[k]
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &PermutationMatrix) -> Result<PermutationMatrix> {
        if self.size() != other.size() {
            return Err(Error::Argument(format!(
                "cannot compose permutations of sizes {} and {}",
                self.size(),
                other.size()
            )));
        }
        Ok(Self {
            mapping: other.mapping.iter().map(|&k| self.mapping[k]).collect(),
        })
    }

    pub fn inverse(&self) -> PermutationMatrix {
        let mut inv = vec![0; self.size()];
        for (k, &img) in self.mapping.iter().enumerate() {
            inv[img] = k;
        }
        Self { mapping: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(k, &v)| k == v)
    }

    /// Exchange the images of positions `i` and `j` after applying `self`,
    /// i.e. left-multiply by the transposition `(i j)`.
    pub fn swap_after(&mut self, i: usize, j: usize) {
        for v in self.mapping.iter_mut() {
            if *v == i {
                *v = j;
            } else if *v == j {
                *v = i;
            }
        }
    }

    /// `P v` without a dense multiply.
    pub fn apply_to_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.size() {
            return Err(Error::Shape(format!(
                "vector of length {} against permutation of size {}",
                v.len(),
                self.size()
            )));
        }
        let mut out = vec![0.0; v.len()];
        for (k, &img) in self.mapping.iter().enumerate() {
            out[img] = v[k];
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let m = self.size();
        let mut out = Matrix::zeros(m, m);
        for (k, &img) in self.mapping.iter().enumerate() {
            out[(img, k)] = 1.0;
        }
        out
    }
}

/// A validated doubly stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublyStochasticMatrix(Matrix);

impl DoublyStochasticMatrix {
    /// Validates `a`; tiny negative roundoff (`>= -DSM_CLAMP`) is clamped to zero.
    pub fn new(mut a: Matrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!(
                "doubly stochastic matrix must be square, got {}x{}",
                a.rows, a.cols
            )));
        }
        for x in a.data.iter_mut() {
            if *x < 0.0 && *x >= -DSM_CLAMP {
                *x = 0.0;
            }
        }
        if !is_doubly_stochastic(&a, tol) {
            return Err(Error::Numeric("matrix is not doubly stochastic".into()));
        }
        Ok(Self(a))
    }

    pub fn size(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Products of doubly stochastic matrices stay doubly stochastic.
    pub fn matmul(&self, other: &DoublyStochasticMatrix) -> Result<DoublyStochasticMatrix> {
        Self::new(self.0.matmul(&other.0)?, DSM_SUM_TOL)
    }
}

impl From<&PermutationMatrix> for DoublyStochasticMatrix {
    fn from(p: &PermutationMatrix) -> Self {
        Self(p.to_dense())
    }
}

pub fn is_doubly_stochastic(a: &Matrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.rows;
    if a.data.iter().any(|&x| !x.is_finite() || x < -tol) {
        return false;
    }
    let mut col_sums = vec![0.0; n];
    for r in 0..n {
        let row = a.row(r);
        if (row.iter().sum::<f64>() - 1.0).abs() > tol {
            return false;
        }
        for (c, x) in row.iter().enumerate() {
            col_sums[c] += x;
        }
    }
    col_sums.iter().all(|s| (s - 1.0).abs() <= tol)
}

fn check_swap_args(m: usize, i: usize, j: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Argument(format!("swap needs m >= 2, got {m}")));
    }
    if m > MAX_QUBITS {
        return Err(Error::Size(format!("m = {m} exceeds {MAX_QUBITS}")));
    }
    if i >= m || j >= m {
        return Err(Error::Argument(format!(
            "swap targets ({i}, {j}) out of range for m = {m}"
        )));
    }
    if i == j {
        return Err(Error::Argument(format!("swap targets must be distinct, got ({i}, {i})")));
    }
    Ok(())
}

/// `SWAP_m(i, j)`.
pub fn swap_matrix(m: usize, i: usize, j: usize) -> Result<PermutationMatrix> {
    check_swap_args(m, i, j)?;
    let mut mapping: Vec<usize> = (0..m).collect();
    mapping.swap(i, j);
    Ok(PermutationMatrix { mapping })
}

/// `cos²θ·I + sin²θ·SWAP_m(i, j)`.
pub fn sswap(m: usize, i: usize, j: usize, theta: f64) -> Result<DoublyStochasticMatrix> {
    let swap = swap_matrix(m, i, j)?.to_dense();
    let (s, c) = theta.sin_cos();
    let out = Matrix::identity(m)
        .scaled(c * c)
        .add_scaled(&swap, s * s)?;
    DoublyStochasticMatrix::new(out, DSM_SUM_TOL)
}

/// `cos²θ·I_{m²} + sin²θ·SWAP_m(i, j)^⊗2`. Not the same as `sswap(..)^⊗2`.
pub fn psswap(m: usize, i: usize, j: usize, theta: f64) -> Result<DoublyStochasticMatrix> {
    let swap = swap_matrix(m, i, j)?.to_dense();
    let swap2 = kron(&swap, &swap)?;
    let (s, c) = theta.sin_cos();
    let out = Matrix::identity(m * m)
        .scaled(c * c)
        .add_scaled(&swap2, s * s)?;
    DoublyStochasticMatrix::new(out, DSM_SUM_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn scalar_kron(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                for k in 0..b.rows() {
                    for l in 0..b.cols() {
                        out[(i * b.rows() + k, j * b.cols() + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(2)).unwrap(), Matrix::identity(4));
        let s = swap_matrix(2, 0, 1).unwrap().to_dense();
        assert_eq!(kron(&s, &Matrix::identity(1)).unwrap(), s);
        let a = Matrix::from_rows(&[vec![1., 2.], vec![3., 4.]]).unwrap();
        let b = Matrix::from_rows(&[vec![0., 1.], vec![1., 0.]]).unwrap();
        assert_eq!(kron(&a, &b).unwrap(), scalar_kron(&a, &b));
    }

    #[test]
    fn kron_size_limit() {
        let big = Matrix::identity(65);
        assert!(matches!(kron(&big, &big), Err(Error::Size(_))));
    }

    #[test]
    fn vec_examples() {
        assert_eq!(vec_row_major(&Matrix::identity(2)).unwrap(), vec![1., 0., 0., 1.]);
        let a = Matrix::from_rows(&[vec![1., 2.], vec![3., 4.]]).unwrap();
        assert_eq!(vec_row_major(&a).unwrap(), vec![1., 2., 3., 4.]);
        assert!(matches!(vec_row_major(&Matrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard_contraction(&Matrix::identity(3), &Matrix::identity(3)).unwrap(), 3.0);
        assert_eq!(hadamard_contraction(&Matrix::ones(2), &Matrix::ones(2)).unwrap(), 4.0);
        assert!(hadamard_contraction(&Matrix::ones(2), &Matrix::ones(3)).is_err());
    }

    #[test]
    fn swap_examples() {
        let s = swap_matrix(3, 0, 1).unwrap();
        assert_eq!(s.apply_to_vec(&[1., 0., 0.]).unwrap(), vec![0., 1., 0.]);
        let sq = s.to_dense().matmul(&s.to_dense()).unwrap();
        assert_eq!(sq, Matrix::identity(3));
        let a = swap_matrix(5, 1, 3).unwrap().to_dense();
        let b = swap_matrix(5, 0, 4).unwrap().to_dense();
        assert_eq!(a.matmul(&b).unwrap(), b.matmul(&a).unwrap());
        assert!(swap_matrix(3, 1, 1).is_err());
        assert!(swap_matrix(3, 0, 3).is_err());
        assert!(swap_matrix(1, 0, 0).is_err());
    }

    #[test]
    fn sswap_examples() {
        assert!(sswap(3, 0, 1, 0.0).unwrap().matrix().max_abs_diff(&Matrix::identity(3)) < 1e-15);
        let vertex = sswap(3, 0, 1, FRAC_PI_2).unwrap();
        let swap = swap_matrix(3, 0, 1).unwrap().to_dense();
        assert!(vertex.matrix().max_abs_diff(&swap) < 1e-15);
        let mid = sswap(3, 0, 1, FRAC_PI_4).unwrap();
        for r in 0..3 {
            assert!((mid.matrix().row(r).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn psswap_examples() {
        assert!(psswap(3, 0, 1, 0.0).unwrap().matrix().max_abs_diff(&Matrix::identity(9)) < 1e-15);
        let swap = swap_matrix(3, 0, 1).unwrap().to_dense();
        let ss = kron(&swap, &swap).unwrap();
        assert!(psswap(3, 0, 1, FRAC_PI_2).unwrap().matrix().max_abs_diff(&ss) < 1e-15);
        let half = sswap(3, 0, 1, FRAC_PI_4).unwrap();
        let tensor_square = kron(half.matrix(), half.matrix()).unwrap();
        let p = psswap(3, 0, 1, FRAC_PI_4).unwrap();
        assert!(p.matrix().max_abs_diff(&tensor_square) > 0.1);
    }

    #[test]
    fn doubly_stochastic_checks() {
        assert!(is_doubly_stochastic(&Matrix::identity(4), 1e-9));
        assert!(!is_doubly_stochastic(&Matrix::identity(4).scaled(2.0), 1e-9));
        assert!(!is_doubly_stochastic(&Matrix::zeros(2, 3), 1e-9));
        let thetas = [0.3, 1.1, 2.0, -0.7, 0.01];
        let pairs = [(0, 1), (1, 2), (3, 4), (0, 4), (2, 3)];
        let mut acc = Matrix::identity(5);
        for (&t, &(i, j)) in thetas.iter().zip(&pairs) {
            acc = acc.matmul(sswap(5, i, j, t).unwrap().matrix()).unwrap();
        }
        assert!(is_doubly_stochastic(&acc, 1e-9));
    }

    #[test]
    fn dsm_clamps_roundoff() {
        let mut a = Matrix::identity(2);
        a[(0, 1)] = -1e-13;
        a[(0, 0)] = 1.0 + 1e-13;
        let d = DoublyStochasticMatrix::new(a, 1e-9).unwrap();
        assert_eq!(d.matrix()[(0, 1)], 0.0);
        let mut bad = Matrix::identity(2);
        bad[(0, 1)] = -1e-6;
        bad[(0, 0)] = 1.0 + 1e-6;
        assert!(DoublyStochasticMatrix::new(bad, 1e-9).is_err());
    }

    #[test]
    fn permutation_basics() {
        let p = PermutationMatrix::from_mapping(vec![2, 0, 1]).unwrap();
        assert_eq!(p.compose(&p.inverse()).unwrap(), PermutationMatrix::identity(3));
        assert!(PermutationMatrix::from_mapping(vec![0, 0, 1]).is_err());
        let v = [1.0, 2.0, 3.0];
        assert_eq!(p.apply_to_vec(&v).unwrap(), p.to_dense().mat_vec(&v).unwrap());
        let mut q = PermutationMatrix::identity(3);
        q.swap_after(0, 2);
        assert_eq!(q, swap_matrix(3, 0, 2).unwrap());
    }
}
