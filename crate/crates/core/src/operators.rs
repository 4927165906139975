//! Cavity, collective-spin and per-detector operators, and the two density
//! matrix representations: the full product space (brute force, N <= 4) and
//! the permutation-symmetric block form.
//!
//! Conventions: detector basis `|g> = 0`, `|e> = 1`; tensor order is
//! cavity (x) detector 1 (x) ... (x) detector N with detector 1 the most
//! significant bit of the spin index. Dicke ladder index `k = m + j`, so
//! `k = 0` is the collective ground state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DickeError, Result};
use crate::linalg::{c, hermiticity_deviation, identity, kron, min_eigenvalue, CMatrix, SparseOp, ZERO};
use crate::special::binomial;

/// Largest detector count handled on the full product space.
pub const MAX_FULL_DETECTORS: usize = 4;

/// Largest detector count accepted by the block representation.
pub const MAX_BLOCK_DETECTORS: usize = 200;

#[derive(Debug, Clone)]
pub struct FockOps {
    pub a: CMatrix,
    pub a_dag: CMatrix,
    pub number: CMatrix,
}

pub fn build_fock_ops(n_max: usize) -> FockOps {
    let dim = n_max + 1;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let number = CMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| c(n as f64)));
    FockOps {
        a_dag: a.adjoint(),
        a,
        number,
    }
}

/// `<j, m+1| J^+ |j, m>` for ladder index `k` (m = k - j), with `two_j = 2j`.
pub fn ladder_up(two_j: usize, k: usize) -> f64 {
    let jj = two_j as i64;
    let m2 = 2 * k as i64 - jj;
    let v = (jj * (jj + 2) - m2 * (m2 + 2)) as f64 / 4.0;
    v.max(0.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct DickeOps {
    pub j_plus: CMatrix,
    pub j_minus: CMatrix,
    pub j_z: CMatrix,
}

/// Collective ladder operators on the `2j + 1` dimensional Dicke ladder.
pub fn build_dicke_ops(two_j: usize) -> DickeOps {
    let dim = two_j + 1;
    let mut j_plus = CMatrix::zeros(dim, dim);
    for k in 0..two_j {
        j_plus[(k + 1, k)] = c(ladder_up(two_j, k));
    }
    let j_z = CMatrix::from_diagonal(&DVector::from_fn(dim, |k, _| {
        c(k as f64 - two_j as f64 / 2.0)
    }));
    DickeOps {
        j_minus: j_plus.adjoint(),
        j_plus,
        j_z,
    }
}

#[derive(Debug, Clone)]
pub struct PauliOps {
    pub plus: CMatrix,
    pub minus: CMatrix,
    pub z: CMatrix,
}

fn sigma_plus() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = c(1.0);
    m
}

fn check_full_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(DickeError::InvalidParameter {
            name: "n_detectors",
            reason: "at least one detector is required".into(),
        });
    }
    if n > MAX_FULL_DETECTORS {
        return Err(DickeError::TooLarge {
            what: "full product-space detector count",
            size: n,
            limit: MAX_FULL_DETECTORS,
        });
    }
    Ok(())
}

fn embed_site(n: usize, site: usize, op: &CMatrix) -> CMatrix {
    let mut out = identity(1);
    for i in 0..n {
        out = if i == site { kron(&out, op) } else { kron(&out, &identity(2)) };
    }
    out
}

/// Pauli ladder and inversion operators of detector `site` (0-based) on the
/// `2^N` dimensional detector space.
pub fn build_pauli_ops(n: usize, site: usize) -> Result<PauliOps> {
    check_full_size(n)?;
    if site >= n {
        return Err(DickeError::InvalidParameter {
            name: "site",
            reason: format!("site {site} out of range for {n} detectors"),
        });
    }
    let sp = sigma_plus();
    let mut sz = CMatrix::zeros(2, 2);
    sz[(0, 0)] = c(-1.0);
    sz[(1, 1)] = c(1.0);
    let plus = embed_site(n, site, &sp);
    Ok(PauliOps {
        minus: plus.adjoint(),
        plus,
        z: embed_site(n, site, &sz),
    })
}

/// `J^z = sum sigma_i^z / 2` and `J^+- = sum sigma_i^+-` on the `2^N` space.
pub fn collective_ops(n: usize) -> Result<DickeOps> {
    check_full_size(n)?;
    let dim = 1usize << n;
    let mut j_plus = CMatrix::zeros(dim, dim);
    let mut j_z = CMatrix::zeros(dim, dim);
    for site in 0..n {
        let p = build_pauli_ops(n, site)?;
        j_plus += p.plus;
        j_z += p.z * c(0.5);
    }
    Ok(DickeOps {
        j_minus: j_plus.adjoint(),
        j_plus,
        j_z,
    })
}

/// Lift a cavity operator to cavity (x) detectors.
pub fn cavity_op(op: &CMatrix, spin_dim: usize) -> CMatrix {
    kron(op, &identity(spin_dim))
}

/// Lift a detector-space operator to cavity (x) detectors.
pub fn spin_op(op: &CMatrix, n_max: usize) -> CMatrix {
    kron(&identity(n_max + 1), op)
}

/// Multiplicity of the spin-`j` sector among N detectors,
/// `C(N, N/2 - j) (2j + 1) / (N/2 + j + 1)`.
pub fn dicke_degeneracy(n: usize, two_j: usize) -> f64 {
    if two_j > n || !(n - two_j).is_multiple_of(2) {
        return 0.0;
    }
    let lower = ((n - two_j) / 2) as u64;
    binomial(n as u64, lower) * (two_j as f64 + 1.0) / ((n + two_j) as f64 / 2.0 + 1.0)
}

/// Allowed `2j` values for N detectors, largest first.
pub fn allowed_two_j(n: usize) -> Vec<usize> {
    (0..=n).rev().filter(|tj| (n - tj).is_multiple_of(2)).collect()
}

/// One `(n, m) x (n', m')` block of the permutation-symmetric state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBlock {
    pub two_j: usize,
    pub degeneracy: f64,
    /// Row/column index `n * (2j + 1) + k`.
    pub rho: CMatrix,
}

impl SpinBlock {
    pub fn spin_dim(&self) -> usize {
        self.two_j + 1
    }
}

fn check_density(rho: &CMatrix, weights_trace: f64) -> Result<()> {
    let herm = hermiticity_deviation(rho);
    if herm > 1e-10 {
        return Err(DickeError::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
    }
    if (weights_trace - 1.0).abs() > 1e-8 {
        return Err(DickeError::InvalidState(format!("trace {weights_trace} != 1")));
    }
    Ok(())
}

/// Density matrix on the full `(n_max + 1) 2^N` product space.
#[derive(Debug, Clone, PartialEq)]
pub struct FullDensityMatrix {
    pub n_detectors: usize,
    pub n_max: usize,
    pub rho: CMatrix,
}

impl FullDensityMatrix {
    pub fn new(n_detectors: usize, n_max: usize, rho: CMatrix) -> Result<Self> {
        check_full_size(n_detectors)?;
        let dim = (n_max + 1) << n_detectors;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(DickeError::InvalidState(format!(
                "expected {dim}x{dim}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self {
            n_detectors,
            n_max,
            rho,
        })
    }

    /// Cavity vacuum with every detector in its ground state.
    pub fn vacuum_ground(n_detectors: usize, n_max: usize) -> Result<Self> {
        let dim = (n_max + 1) << n_detectors;
        check_full_size(n_detectors)?;
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(0, 0)] = c(1.0);
        Self::new(n_detectors, n_max, rho)
    }

    /// Pure state `|psi><psi|` (normalized on input).
    pub fn from_pure(n_detectors: usize, n_max: usize, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        let v = psi / c(norm);
        Self::new(n_detectors, n_max, &v * v.adjoint())
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_detectors
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn expect(&self, op: &SparseOp) -> Complex64 {
        op.entries
            .iter()
            .fold(ZERO, |acc, &(i, j, v)| acc + v * self.rho[(j, i)])
    }

    /// Hermitian within 1e-10, unit trace within 1e-8, eigenvalues >= -1e-8.
    pub fn validate(&self) -> Result<()> {
        check_density(&self.rho, self.trace())?;
        let min = min_eigenvalue(&self.rho);
        if min < -1e-8 {
            return Err(DickeError::InvalidState(format!("not positive (min eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn cavity_reduced(&self) -> CMatrix {
        let sd = self.spin_dim();
        let cd = self.n_max + 1;
        CMatrix::from_fn(cd, cd, |n, m| {
            (0..sd).fold(ZERO, |acc, s| acc + self.rho[(n * sd + s, m * sd + s)])
        })
    }

    /// Largest deviation of `P rho P^T` from `rho` over adjacent detector swaps.
    pub fn permutation_asymmetry(&self) -> f64 {
        let n = self.n_detectors;
        let sd = self.spin_dim();
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for site in 0..n.saturating_sub(1) {
            let perm: Vec<usize> = (0..dim)
                .map(|idx| {
                    let (cav, s) = (idx / sd, idx % sd);
                    cav * sd + swap_bits(s, n, site, site + 1)
                })
                .collect();
            for i in 0..dim {
                for j in 0..dim {
                    worst = worst.max((self.rho[(perm[i], perm[j])] - self.rho[(i, j)]).norm());
                }
            }
        }
        worst
    }
}

/// Average of `P rho P^T` over all detector permutations.
pub fn symmetrize(state: &FullDensityMatrix) -> FullDensityMatrix {
    let n = state.n_detectors;
    let sd = state.spin_dim();
    let dim = state.dim();
    let mut perms = Vec::new();
    permutations(&mut (0..n).collect::<Vec<_>>(), 0, &mut perms);
    let mut acc = CMatrix::zeros(dim, dim);
    for p in &perms {
        let map: Vec<usize> = (0..dim)
            .map(|idx| {
                let (cav, s) = (idx / sd, idx % sd);
                let mut t = 0;
                for (site, &target) in p.iter().enumerate() {
                    t |= bit_of(s, n, site) << (n - 1 - target);
                }
                cav * sd + t
            })
            .collect();
        acc += CMatrix::from_fn(dim, dim, |i, j| state.rho[(map[i], map[j])]);
    }
    FullDensityMatrix {
        rho: acc / c(perms.len() as f64),
        ..state.clone()
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Deterministic pseudo-random density matrix on the product space, for tests and checks.
pub fn scrambled_state(n_detectors: usize, n_max: usize, seed: u64) -> Result<FullDensityMatrix> {
    check_full_size(n_detectors)?;
    let dim = (n_max + 1) << n_detectors;
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(next(), next()));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    FullDensityMatrix::new(n_detectors, n_max, rho / c(tr))
}

fn bit_of(s: usize, n: usize, site: usize) -> usize {
    (s >> (n - 1 - site)) & 1
}

fn swap_bits(s: usize, n: usize, a: usize, b: usize) -> usize {
    let (ba, bb) = (bit_of(s, n, a), bit_of(s, n, b));
    if ba == bb {
        s
    } else {
        s ^ (1 << (n - 1 - a)) ^ (1 << (n - 1 - b))
    }
}

/// Permutation-symmetric state `rho = sum_j rho_j (x) 1_{d_j}` on
/// cavity (x) Dicke ladders, one block per allowed total spin.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensityMatrix {
    pub n_detectors: usize,
    pub n_max: usize,
    /// Ordered by decreasing `j`.
    pub blocks: Vec<SpinBlock>,
}

impl BlockDensityMatrix {
    pub fn zeros(n_detectors: usize, n_max: usize) -> Result<Self> {
        if n_detectors == 0 || n_detectors > MAX_BLOCK_DETECTORS {
            return Err(DickeError::TooLarge {
                what: "block-representation detector count",
                size: n_detectors,
                limit: MAX_BLOCK_DETECTORS,
            });
        }
        let blocks = allowed_two_j(n_detectors)
            .into_iter()
            .map(|two_j| {
                let dim = (n_max + 1) * (two_j + 1);
                SpinBlock {
                    two_j,
                    degeneracy: dicke_degeneracy(n_detectors, two_j),
                    rho: CMatrix::zeros(dim, dim),
                }
            })
            .collect();
        Ok(Self {
            n_detectors,
            n_max,
            blocks,
        })
    }

    /// Cavity vacuum with all detectors in the ground state `|N/2, -N/2>`.
    pub fn vacuum_ground(n_detectors: usize, n_max: usize) -> Result<Self> {
        let mut s = Self::zeros(n_detectors, n_max)?;
        s.blocks[0].rho[(0, 0)] = c(1.0);
        Ok(s)
    }

    pub fn block(&self, two_j: usize) -> Option<&SpinBlock> {
        self.blocks.iter().find(|b| b.two_j == two_j)
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.degeneracy * b.rho.trace().re)
            .sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| hermiticity_deviation(&b.rho))
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| min_eigenvalue(&b.rho))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > 1e-10 {
            return Err(DickeError::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(DickeError::InvalidState(format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(DickeError::InvalidState(format!("not positive (min eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn cavity_reduced(&self) -> CMatrix {
        let cd = self.n_max + 1;
        let mut out = CMatrix::zeros(cd, cd);
        for b in &self.blocks {
            let sd = b.spin_dim();
            for n in 0..cd {
                for m in 0..cd {
                    let mut acc = ZERO;
                    for k in 0..sd {
                        acc += b.rho[(n * sd + k, m * sd + k)];
                    }
                    out[(n, m)] += acc * b.degeneracy;
                }
            }
        }
        out
    }

    /// `sum_j d_j sum tr(O_j rho_j)` for an operator given through its
    /// action `O |n, k> = sum coeff |n', k'>` on one ladder.
    pub fn expect_with<F>(&self, action: F) -> Complex64
    where
        F: Fn(usize, usize, usize, usize, &mut Vec<(usize, usize, f64)>),
    {
        let cd = self.n_max + 1;
        let mut buf = Vec::new();
        let mut total = ZERO;
        for b in &self.blocks {
            let sd = b.spin_dim();
            let mut acc = ZERO;
            for n in 0..cd {
                for k in 0..sd {
                    buf.clear();
                    action(b.two_j, self.n_max, n, k, &mut buf);
                    for &(n2, k2, coeff) in &buf {
                        acc += b.rho[(n * sd + k, n2 * sd + k2)] * coeff;
                    }
                }
            }
            total += acc * b.degeneracy;
        }
        total
    }
}

/// Orthonormal total-spin basis `|j, m, alpha>` of N detectors.
#[derive(Debug, Clone)]
pub struct DickeSector {
    pub two_j: usize,
    /// `vectors[alpha][k]` is `|j, m = k - j, alpha>` on the `2^N` space.
    pub vectors: Vec<Vec<DVector<f64>>>,
}

pub fn dicke_basis(n: usize) -> Result<Vec<DickeSector>> {
    check_full_size(n)?;
    let dim = 1usize << n;
    let real = |m: &CMatrix| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re);
    let ops = collective_ops(n)?;
    let jp = real(&ops.j_plus);
    let jm = real(&ops.j_minus);
    let mut sectors = Vec::new();
    for two_j in allowed_two_j(n) {
        let excited = (n + two_j) / 2;
        let states: Vec<usize> = (0..dim).filter(|s| s.count_ones() as usize == excited).collect();
        // highest weights span the kernel of J^+ on the m = j subspace
        let jmjp = &jm * &jp;
        let restricted = DMatrix::from_fn(states.len(), states.len(), |a, b| jmjp[(states[a], states[b])]);
        let eig = SymmetricEigen::new(restricted);
        let mut vectors = Vec::new();
        for (idx, &val) in eig.eigenvalues.iter().enumerate() {
            if val.abs() > 1e-9 {
                continue;
            }
            let mut top = DVector::zeros(dim);
            for (a, &s) in states.iter().enumerate() {
                top[s] = eig.eigenvectors[(a, idx)];
            }
            let mut ladder = vec![DVector::zeros(dim); two_j + 1];
            ladder[two_j] = top;
            for k in (1..=two_j).rev() {
                let lowered = &jm * &ladder[k];
                ladder[k - 1] = lowered / ladder_up(two_j, k - 1);
            }
            vectors.push(ladder);
        }
        let expected = dicke_degeneracy(n, two_j).round() as usize;
        if vectors.len() != expected {
            return Err(DickeError::InvalidState(format!(
                "found {} highest-weight vectors for 2j = {two_j}, expected {expected}",
                vectors.len()
            )));
        }
        sectors.push(DickeSector { two_j, vectors });
    }
    Ok(sectors)
}

/// Change basis from the product space to total-spin blocks.
pub fn project_to_blocks(full: &FullDensityMatrix) -> Result<BlockDensityMatrix> {
    let deviation = full.permutation_asymmetry();
    if deviation > 1e-9 {
        return Err(DickeError::NotPermutationSymmetric { deviation });
    }
    let n = full.n_detectors;
    let sd = full.spin_dim();
    let cd = full.n_max + 1;
    let basis = dicke_basis(n)?;
    let mut out = BlockDensityMatrix::zeros(n, full.n_max)?;
    for (sector, block) in basis.iter().zip(out.blocks.iter_mut()) {
        debug_assert_eq!(sector.two_j, block.two_j);
        let ld = sector.two_j + 1;
        // columns of `u` map block index (n, k) to full index for each copy alpha
        for ladder in &sector.vectors {
            let u = CMatrix::from_fn(cd * sd, cd * ld, |row, col| {
                let (n1, s) = (row / sd, row % sd);
                let (n2, k) = (col / ld, col % ld);
                if n1 == n2 {
                    c(ladder[k][s])
                } else {
                    ZERO
                }
            });
            block.rho += u.adjoint() * &full.rho * &u;
        }
        block.rho /= c(block.degeneracy);
    }
    Ok(out)
}

/// Rebuild the product-space matrix from blocks (N <= 4).
pub fn blocks_to_full(state: &BlockDensityMatrix) -> Result<FullDensityMatrix> {
    let n = state.n_detectors;
    check_full_size(n)?;
    let sd = 1usize << n;
    let cd = state.n_max + 1;
    let basis = dicke_basis(n)?;
    let mut rho = CMatrix::zeros(cd * sd, cd * sd);
    for (sector, block) in basis.iter().zip(&state.blocks) {
        let ld = sector.two_j + 1;
        for ladder in &sector.vectors {
            let u = CMatrix::from_fn(cd * sd, cd * ld, |row, col| {
                let (n1, s) = (row / sd, row % sd);
                let (n2, k) = (col / ld, col % ld);
                if n1 == n2 {
                    c(ladder[k][s])
                } else {
                    ZERO
                }
            });
            rho += &u * &block.rho * u.adjoint();
        }
    }
    FullDensityMatrix::new(n, state.n_max, rho)
}

/// Either representation of the cavity-detector state.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityState {
    Full(FullDensityMatrix),
    Blocks(BlockDensityMatrix),
}

impl DensityState {
    pub fn n_detectors(&self) -> usize {
        match self {
            Self::Full(s) => s.n_detectors,
            Self::Blocks(s) => s.n_detectors,
        }
    }

    pub fn n_max(&self) -> usize {
        match self {
            Self::Full(s) => s.n_max,
            Self::Blocks(s) => s.n_max,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Full(s) => s.trace(),
            Self::Blocks(s) => s.trace(),
        }
    }

    pub fn cavity_reduced(&self) -> CMatrix {
        match self {
            Self::Full(s) => s.cavity_reduced(),
            Self::Blocks(s) => s.cavity_reduced(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Full(s) => s.validate(),
            Self::Blocks(s) => s.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs, ONE};

    #[test]
    fn fock_ladder_elements() {
        let f = build_fock_ops(1);
        assert_eq!(f.a, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
        let f = build_fock_ops(5);
        assert!((f.a[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.a_dag, f.a.adjoint());
        let comm = commutator(&f.a, &f.a_dag);
        for n in 0..5 {
            for m in 0..6 {
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((comm[(m, n)] - c(want)).norm() < 1e-14);
            }
        }
        assert!(max_abs(&(&f.a_dag * &f.a - &f.number)) < 1e-14);
    }

    #[test]
    fn dicke_ladder_elements() {
        let half = build_dicke_ops(1);
        assert_eq!(half.j_plus, sigma_plus());
        let one = build_dicke_ops(2);
        // <1,0|J^-|1,1> = sqrt(2)
        assert!((one.j_minus[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        for two_j in 0..=20 {
            let d = build_dicke_ops(two_j);
            let top = two_j;
            assert!(d.j_plus.column(top).iter().all(|z| *z == ZERO));
            let comm = commutator(&d.j_plus, &d.j_minus);
            assert!(max_abs(&(comm - &d.j_z * c(2.0))) < 1e-12);
            let zp = commutator(&d.j_z, &d.j_plus);
            assert!(max_abs(&(zp - &d.j_plus)) < 1e-12);
            let zm = commutator(&d.j_z, &d.j_minus);
            assert!(max_abs(&(zm + &d.j_minus)) < 1e-12);
        }
    }

    #[test]
    fn pauli_embedding() {
        let p = build_pauli_ops(2, 0).unwrap();
        let mut sz = CMatrix::zeros(2, 2);
        sz[(0, 0)] = c(-1.0);
        sz[(1, 1)] = c(1.0);
        assert_eq!(p.z, kron(&sz, &identity(2)));
        for n in 1..=4 {
            for site in 0..n {
                let p = build_pauli_ops(n, site).unwrap();
                let anti = &p.plus * &p.minus + &p.minus * &p.plus;
                assert!(max_abs(&(anti - identity(1 << n))) < 1e-14);
            }
        }
        assert!(matches!(build_pauli_ops(5, 0), Err(DickeError::TooLarge { .. })));
        assert!(build_pauli_ops(3, 3).is_err());
    }

    #[test]
    fn collective_jz_matches_ladder_on_symmetric_subspace() {
        for n in [2usize, 3] {
            let ops = collective_ops(n).unwrap();
            let ladder = build_dicke_ops(n);
            let basis = dicke_basis(n).unwrap();
            let sym = &basis[0];
            assert_eq!(sym.two_j, n);
            let ladder_vecs = &sym.vectors[0];
            for k in 0..=n {
                for k2 in 0..=n {
                    let v = ladder_vecs[k].map(c);
                    let w = ladder_vecs[k2].map(c);
                    let jz = (w.adjoint() * &ops.j_z * &v)[(0, 0)];
                    let jp = (w.adjoint() * &ops.j_plus * &v)[(0, 0)];
                    assert!((jz - ladder.j_z[(k2, k)]).norm() < 1e-12);
                    assert!((jp - ladder.j_plus[(k2, k)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn degeneracies_fill_the_space() {
        for n in 1..=30usize {
            let total: f64 = allowed_two_j(n)
                .into_iter()
                .map(|tj| dicke_degeneracy(n, tj) * (tj as f64 + 1.0))
                .sum();
            assert_eq!(total, 2f64.powi(n as i32), "N = {n}");
        }
        assert_eq!(dicke_degeneracy(2, 0), 1.0);
        assert_eq!(dicke_degeneracy(3, 1), 2.0);
    }

    #[test]
    fn ground_state_projects_to_top_block() {
        let full = FullDensityMatrix::vacuum_ground(2, 2).unwrap();
        let blocks = project_to_blocks(&full).unwrap();
        assert_eq!(blocks.blocks[0].two_j, 2);
        assert!((blocks.blocks[0].rho[(0, 0)] - ONE).norm() < 1e-14);
        assert!((blocks.trace() - 1.0).abs() < 1e-14);
        assert!(max_abs(&blocks.blocks[1].rho) < 1e-14);
    }

    #[test]
    fn singlet_triplet_mixture_splits_by_population() {
        // rho = 0.3 |T0><T0| + 0.7 |S><S| with the cavity in vacuum (2 detectors).
        let n_max = 1;
        let dim = (n_max + 1) * 4;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut t0 = DVector::<Complex64>::zeros(dim);
        t0[1] = c(r);
        t0[2] = c(r);
        let mut singlet = DVector::<Complex64>::zeros(dim);
        singlet[1] = c(r);
        singlet[2] = c(-r);
        let rho = &t0 * t0.adjoint() * c(0.3) + &singlet * singlet.adjoint() * c(0.7);
        let full = FullDensityMatrix::new(2, n_max, rho).unwrap();
        let blocks = project_to_blocks(&full).unwrap();
        let triplet = blocks.block(2).unwrap();
        let single = blocks.block(0).unwrap();
        assert_eq!(triplet.degeneracy, 1.0);
        assert_eq!(single.degeneracy, 1.0);
        assert!((triplet.rho.trace().re - 0.3).abs() < 1e-14);
        assert!((single.rho.trace().re - 0.7).abs() < 1e-14);
        // |1, 0> sits at ladder index 1 of the triplet
        assert!((triplet.rho[(1, 1)].re - 0.3).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_state_is_rejected() {
        let mut psi = DVector::<Complex64>::zeros(2 * 4);
        psi[1] = c(1.0); // |0; g e>
        let full = FullDensityMatrix::from_pure(2, 1, &psi).unwrap();
        assert!(matches!(project_to_blocks(&full), Err(DickeError::NotPermutationSymmetric { .. })));
    }

    #[test]
    fn projection_round_trip() {
        let full = symmetrize(&scrambled_state(3, 1, 7).unwrap());
        full.validate().unwrap();
        assert!(full.permutation_asymmetry() < 1e-14);
        let blocks = project_to_blocks(&full).unwrap();
        blocks.validate().unwrap();
        let back = blocks_to_full(&blocks).unwrap();
        assert!(max_abs(&(back.rho - &full.rho)) < 1e-12);
        assert!(max_abs(&(blocks.cavity_reduced() - full.cavity_reduced())) < 1e-12);
    }
}
