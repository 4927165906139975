//! Dense complex matrix helpers and a minimal triplet sparse operator.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entrywise modulus of `m - m^dagger`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let data = m.as_slice();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let col = &data[j * n..(j + 1) * n];
        for (i, v) in col.iter().enumerate().skip(j) {
            worst = worst.max((v - data[i * n + j].conj()).norm_sqr());
        }
    }
    worst.sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Index sets of the connected components of the nonzero pattern of `m`.
///
/// A Hermitian matrix whose pattern splits into components is block diagonal
/// after permutation, so its spectrum is the union of the component spectra.
pub fn pattern_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let data = m.as_slice();
    for j in 0..n {
        for i in 0..j {
            if data[j * n + i] != ZERO || data[i * n + j] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Eigenvalues of a Hermitian matrix, diagonalizing each pattern component separately.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows());
    for comp in pattern_components(m) {
        if comp.len() == 1 {
            out.push(m[(comp[0], comp[0])].re);
            continue;
        }
        let sub = CMatrix::from_fn(comp.len(), comp.len(), |i, j| m[(comp[i], comp[j])]);
        out.extend(SymmetricEigen::new(sub).eigenvalues.iter().copied());
    }
    out
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Operator stored as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    /// `out += coeff * self * rhs`
    pub fn mul_dense_into(&self, coeff: Complex64, rhs: &CMatrix, out: &mut CMatrix) {
        let n = rhs.ncols();
        for &(i, j, v) in &self.entries {
            let w = coeff * v;
            for col in 0..n {
                out[(i, col)] += w * rhs[(j, col)];
            }
        }
    }

    /// `out += coeff * lhs * self`
    pub fn dense_mul_into(&self, coeff: Complex64, lhs: &CMatrix, out: &mut CMatrix) {
        let n = lhs.nrows();
        for &(i, j, v) in &self.entries {
            let w = coeff * v;
            let src = lhs.column(i);
            let mut dst = out.column_mut(j);
            for row in 0..n {
                dst[row] += w * src[row];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_split_block_diagonal_matrix() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 2)] = c(1.0);
        m[(2, 0)] = c(1.0);
        m[(1, 1)] = c(3.0);
        m[(3, 3)] = c(-2.0);
        let comps = pattern_components(&m);
        assert_eq!(comps, vec![vec![0, 2], vec![1], vec![3]]);
        let mut ev = hermitian_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [-2.0, -1.0, 1.0, 3.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((trace_norm(&m) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let mut s = CMatrix::zeros(3, 3);
        s[(0, 1)] = Complex64::new(0.5, 1.0);
        s[(2, 0)] = c(2.0);
        let sp = SparseOp::from_dense(&s);
        let mut left = CMatrix::zeros(3, 3);
        sp.mul_dense_into(I, &a, &mut left);
        assert!(max_abs(&(left - (&s * &a) * I)) < 1e-14);
        let mut right = CMatrix::zeros(3, 3);
        sp.dense_mul_into(ONE, &a, &mut right);
        assert!(max_abs(&(right - &a * &s)) < 1e-14);
        assert_eq!(sp.adjoint().to_dense(), s.adjoint());
    }
}
