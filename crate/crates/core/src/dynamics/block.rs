//! Permutation-symmetric evolution on cavity (x) Dicke-ladder blocks.
//!
//! Local dissipators `sum_i L[sigma_i^-]` do not conserve the total spin
//! `j`; on symmetric states they act as a same-`j` term plus transfers to
//! `j +- 1`. The transfer weights follow from the Wigner-Eckart theorem
//! applied to the rank-1 tensor `sigma^-` together with trace preservation.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;

use super::full::photon_moments;
use super::{check_sample, EvolveOptions, HamiltonianKind, LindbladSpec, Sample, SpinChannel, TrajectoryRecord};
use crate::error::{DickeError, Result};
use crate::integrate::dopri5;
use crate::linalg::{c, CMatrix, I, ZERO};
use crate::observables::log_negativity_blocks;
use crate::operators::{allowed_two_j, dicke_degeneracy, ladder_up, BlockDensityMatrix, DensityState};

/// `<j mu; 1 -1 | j' mu - 1>^2` in twice-integer arguments.
fn cg_lower_sq(two_j: usize, two_mu: i64, two_jt: usize) -> f64 {
    let j = two_j as f64 / 2.0;
    let m = two_mu as f64 / 2.0;
    if two_jt == two_j + 2 {
        (j - m + 1.0) * (j - m + 2.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0))
    } else if two_jt == two_j && two_j > 0 {
        (j + m) * (j - m + 1.0) / (2.0 * j * (j + 1.0))
    } else if two_jt + 2 == two_j {
        (j + m) * (j + m - 1.0) / (2.0 * j * (2.0 * j + 1.0))
    } else {
        0.0
    }
}

/// Weight of the `j_src -> j_tgt` transfer, including the ratio of sector multiplicities.
fn transfer_weight(n: usize, two_js: usize, two_jt: usize) -> f64 {
    let half_n = n as f64 / 2.0;
    let js = two_js as f64 / 2.0;
    if two_jt == two_js {
        half_n + 1.0
    } else if two_jt == two_js + 2 {
        dicke_degeneracy(n, two_js) * (half_n - js) / dicke_degeneracy(n, two_jt)
    } else {
        dicke_degeneracy(n, two_js) * (half_n + js + 1.0) / dicke_degeneracy(n, two_jt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coupling {
    None,
    Rwa(f64),
    TavisCummings(f64),
}

/// Time-independent Liouvillian in block form, evaluated entrywise.
#[derive(Debug, Clone)]
struct BlockModel {
    n: usize,
    n_max: usize,
    two_js: Vec<usize>,
    coupling: Coupling,
    gamma_c: f64,
    gamma_d: f64,
    channel: SpinChannel,
}

/// Source entry `(block, row, col)` and its weight.
type Source = (usize, usize, usize, Complex64);

impl BlockModel {
    fn block_of(&self, two_j: usize) -> Option<usize> {
        // blocks are ordered by decreasing j
        let top = self.two_js[0];
        if two_j > top || !(top - two_j).is_multiple_of(2) {
            return None;
        }
        Some((top - two_j) / 2)
    }

    /// `H |n, k>` components for the collective coupling.
    fn neighbours(&self, two_j: usize, n: usize, k: usize, out: &mut Vec<(usize, usize, f64)>) {
        out.clear();
        let sq = |v: usize| (v as f64).sqrt();
        match self.coupling {
            Coupling::None => {}
            Coupling::Rwa(lambda) => {
                if n >= 1 && k >= 1 {
                    out.push((n - 1, k - 1, lambda * sq(n) * ladder_up(two_j, k - 1)));
                }
                if n < self.n_max && k < two_j {
                    out.push((n + 1, k + 1, lambda * sq(n + 1) * ladder_up(two_j, k)));
                }
            }
            Coupling::TavisCummings(lambda) => {
                if n >= 1 && k < two_j {
                    out.push((n - 1, k + 1, lambda * sq(n) * ladder_up(two_j, k)));
                }
                if n < self.n_max && k >= 1 {
                    out.push((n + 1, k - 1, lambda * sq(n + 1) * ladder_up(two_j, k - 1)));
                }
            }
        }
    }

    /// Conserved excitation charge of a basis state; the Liouvillian shifts
    /// row and column charges equally.
    fn charge(&self, n: usize, k: usize) -> i64 {
        match self.coupling {
            Coupling::TavisCummings(_) => n as i64 + k as i64,
            _ => n as i64 - k as i64,
        }
    }

    fn sources(&self, b: usize, r: usize, col: usize, nb: &mut Vec<(usize, usize, f64)>, out: &mut Vec<Source>) {
        out.clear();
        let two_j = self.two_js[b];
        let ld = two_j + 1;
        let (n, k) = (r / ld, r % ld);
        let (n2, k2) = (col / ld, col % ld);
        let jd = two_j as f64 / 2.0;
        let m = k as f64 - jd;
        let m2 = k2 as f64 - jd;
        let nf = self.n as f64;

        let spin_diag = match self.channel {
            SpinChannel::Lowering => m + m2 + nf,
            SpinChannel::Raising => nf - m - m2,
        };
        let diag = -0.5 * self.gamma_c * (n + n2) as f64 - 0.5 * self.gamma_d * spin_diag;
        if diag != 0.0 {
            out.push((b, r, col, c(diag)));
        }

        // -i H rho + i rho H with H real symmetric
        self.neighbours(two_j, n, k, nb);
        for &(ns, ks, h) in nb.iter() {
            out.push((b, ns * ld + ks, col, -I * h));
        }
        self.neighbours(two_j, n2, k2, nb);
        for &(ns, ks, h) in nb.iter() {
            out.push((b, r, ns * ld + ks, I * h));
        }

        if self.gamma_c > 0.0 && n < self.n_max && n2 < self.n_max {
            let w = self.gamma_c * (((n + 1) * (n2 + 1)) as f64).sqrt();
            out.push((b, (n + 1) * ld + k, (n2 + 1) * ld + k2, c(w)));
        }

        if self.gamma_d > 0.0 {
            let two_m = 2 * k as i64 - two_j as i64;
            let two_m2 = 2 * k2 as i64 - two_j as i64;
            let shift = match self.channel {
                SpinChannel::Lowering => 2,
                SpinChannel::Raising => -2,
            };
            for two_js in [two_j + 2, two_j, two_j.wrapping_sub(2)] {
                let Some(bs) = self.block_of(two_js) else {
                    continue;
                };
                let (mu, mu2) = (two_m + shift, two_m2 + shift);
                let lim = two_js as i64;
                if mu.abs() > lim || mu2.abs() > lim {
                    continue;
                }
                let (cg, cg2) = match self.channel {
                    SpinChannel::Lowering => (cg_lower_sq(two_js, mu, two_j), cg_lower_sq(two_js, mu2, two_j)),
                    SpinChannel::Raising => (cg_lower_sq(two_js, -mu, two_j), cg_lower_sq(two_js, -mu2, two_j)),
                };
                let w = self.gamma_d * transfer_weight(self.n, two_js, two_j) * (cg * cg2).sqrt();
                if w == 0.0 {
                    continue;
                }
                let lds = two_js + 1;
                let ks = ((mu + lim) / 2) as usize;
                let ks2 = ((mu2 + lim) / 2) as usize;
                out.push((bs, n * lds + ks, n2 * lds + ks2, c(w)));
            }
        }
    }

    /// Dense action on every entry of `state`.
    fn apply(&self, state: &BlockDensityMatrix) -> BlockDensityMatrix {
        let mut out = state.clone();
        let mut nb = Vec::new();
        let mut src = Vec::new();
        for (b, blk) in out.blocks.iter_mut().enumerate() {
            let dim = blk.rho.nrows();
            for r in 0..dim {
                for col in 0..dim {
                    self.sources(b, r, col, &mut nb, &mut src);
                    blk.rho[(r, col)] = src
                        .iter()
                        .fold(ZERO, |acc, &(bs, rs, cs, w)| acc + w * state.blocks[bs].rho[(rs, cs)]);
                }
            }
        }
        out
    }
}

/// `gamma_d sum_i L[sigma_i^-+]` restricted to permutation-symmetric states.
#[derive(Debug, Clone)]
pub struct BlockDissipator {
    model: BlockModel,
}

/// Local energy decay of N detectors on the block representation.
pub fn local_dissipator_blocks(n: usize, gamma_d: f64) -> BlockDissipator {
    BlockDissipator::new(n, gamma_d, SpinChannel::Lowering)
}

impl BlockDissipator {
    pub fn new(n: usize, gamma_d: f64, channel: SpinChannel) -> Self {
        Self {
            model: BlockModel {
                n,
                n_max: 0,
                two_js: allowed_two_j(n),
                coupling: Coupling::None,
                gamma_c: 0.0,
                gamma_d,
                channel,
            },
        }
    }

    pub fn apply(&self, state: &BlockDensityMatrix) -> Result<BlockDensityMatrix> {
        if state.n_detectors != self.model.n {
            return Err(DickeError::InvalidState(format!(
                "dissipator built for {} detectors applied to {}",
                self.model.n, state.n_detectors
            )));
        }
        let model = BlockModel {
            n_max: state.n_max,
            ..self.model.clone()
        };
        Ok(model.apply(state))
    }
}

/// Sparse Liouvillian restricted to the entries reachable from an initial state.
pub struct BlockLiouvillian {
    model: BlockModel,
    /// `(block, row, col)` of each active entry.
    entries: Vec<(u32, u32, u32)>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl BlockLiouvillian {
    pub fn new(spec: &LindbladSpec, state: &BlockDensityMatrix) -> Result<Self> {
        spec.validate()?;
        let coupling = match spec.hamiltonian {
            HamiltonianKind::Rwa { lambda, .. } => Coupling::Rwa(lambda),
            HamiltonianKind::TavisCummings { lambda } => Coupling::TavisCummings(lambda),
            HamiltonianKind::TimeDependentFull(_) => {
                return Err(DickeError::InvalidParameter {
                    name: "hamiltonian",
                    reason: "the time-dependent lab-frame Hamiltonian needs the product-space solver".into(),
                })
            }
        };
        let model = BlockModel {
            n: state.n_detectors,
            n_max: state.n_max,
            two_js: state.blocks.iter().map(|b| b.two_j).collect(),
            coupling,
            gamma_c: spec.gamma_c,
            gamma_d: spec.gamma_d,
            channel: spec.spin_channel,
        };
        let cd = state.n_max + 1;
        let delta = |two_j: usize, r: usize, col: usize| {
            let ld = two_j + 1;
            model.charge(r / ld, r % ld) - model.charge(col / ld, col % ld)
        };
        let mut active = BTreeSet::new();
        for blk in &state.blocks {
            let dim = blk.rho.nrows();
            for col in 0..dim {
                for r in 0..dim {
                    if blk.rho[(r, col)] != ZERO {
                        active.insert(delta(blk.two_j, r, col));
                    }
                }
            }
        }
        let mut index: Vec<Vec<u32>> = Vec::with_capacity(state.blocks.len());
        let mut entries = Vec::new();
        for (b, blk) in state.blocks.iter().enumerate() {
            let dim = cd * (blk.two_j + 1);
            let mut idx = vec![u32::MAX; dim * dim];
            for r in 0..dim {
                for col in 0..dim {
                    if active.contains(&delta(blk.two_j, r, col)) {
                        idx[r * dim + col] = entries.len() as u32;
                        entries.push((b as u32, r as u32, col as u32));
                    }
                }
            }
            index.push(idx);
        }
        if entries.len() >= u32::MAX as usize {
            return Err(DickeError::TooLarge {
                what: "active block entries",
                size: entries.len(),
                limit: u32::MAX as usize - 1,
            });
        }
        let rows: Vec<Vec<(u32, Complex64)>> = entries
            .par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(nb, src), &(b, r, col)| {
                    model.sources(b as usize, r as usize, col as usize, nb, src);
                    src.iter()
                        .map(|&(bs, rs, cs, w)| {
                            let dim = cd * (model.two_js[bs] + 1);
                            let id = index[bs][rs * dim + cs];
                            debug_assert_ne!(id, u32::MAX, "Liouvillian leaves the active sector");
                            (id, w)
                        })
                        .collect()
                },
            )
            .collect();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (id, w) in row {
                cols.push(id);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            model,
            entries,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Number of active density-matrix entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    /// Interleaved re/im values of the active entries.
    pub fn gather(&self, state: &BlockDensityMatrix) -> Vec<f64> {
        let mut y = vec![0.0; 2 * self.entries.len()];
        for (i, &(b, r, col)) in self.entries.iter().enumerate() {
            let z = state.blocks[b as usize].rho[(r as usize, col as usize)];
            y[2 * i] = z.re;
            y[2 * i + 1] = z.im;
        }
        y
    }

    pub fn scatter(&self, y: &[f64], state: &mut BlockDensityMatrix) {
        for (i, &(b, r, col)) in self.entries.iter().enumerate() {
            state.blocks[b as usize].rho[(r as usize, col as usize)] = Complex64::new(y[2 * i], y[2 * i + 1]);
        }
    }

    /// `dy = L y` on interleaved vectors. Rows are independent, so the
    /// result does not depend on the thread count.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy.par_chunks_mut(2)
            .enumerate()
            .with_min_len(512)
            .for_each(|(row, out)| {
                let mut acc = ZERO;
                for p in self.row_ptr[row]..self.row_ptr[row + 1] {
                    let id = self.cols[p] as usize;
                    acc += self.vals[p] * Complex64::new(y[2 * id], y[2 * id + 1]);
                }
                out[0] = acc.re;
                out[1] = acc.im;
            });
    }

    /// Dense action on every block entry, for cross-checks.
    pub fn apply_dense(&self, state: &BlockDensityMatrix) -> BlockDensityMatrix {
        self.model.apply(state)
    }
}

fn spin_moments(st: &BlockDensityMatrix) -> [Complex64; 8] {
    let sq = |v: usize| (v as f64).sqrt();
    let jz = st.expect_with(|tj, _, n, k, buf| buf.push((n, k, k as f64 - tj as f64 / 2.0)));
    let jpjm = st.expect_with(|tj, _, n, k, buf| {
        if k >= 1 {
            buf.push((n, k, ladder_up(tj, k - 1).powi(2)));
        }
    });
    let a_jminus = st.expect_with(|tj, _, n, k, buf| {
        if n >= 1 && k >= 1 {
            buf.push((n - 1, k - 1, sq(n) * ladder_up(tj, k - 1)));
        }
    });
    let a = st.expect_with(|_, _, n, k, buf| {
        if n >= 1 {
            buf.push((n - 1, k, sq(n)));
        }
    });
    let aa = st.expect_with(|_, _, n, k, buf| {
        if n >= 2 {
            buf.push((n - 2, k, sq(n * (n - 1))));
        }
    });
    let a_jplus = st.expect_with(|tj, _, n, k, buf| {
        if n >= 1 && k < tj {
            buf.push((n - 1, k + 1, sq(n) * ladder_up(tj, k)));
        }
    });
    let jplus = st.expect_with(|tj, _, n, k, buf| {
        if k < tj {
            buf.push((n, k + 1, ladder_up(tj, k)));
        }
    });
    let jplus_jplus = st.expect_with(|tj, _, n, k, buf| {
        if k + 2 <= tj {
            buf.push((n, k + 2, ladder_up(tj, k) * ladder_up(tj, k + 1)));
        }
    });
    [jz, jpjm, a_jminus, a, aa, a_jplus, jplus, jplus_jplus]
}

pub(crate) fn sample_blocks(t: f64, st: &BlockDensityMatrix, opts: &EvolveOptions) -> (Sample, CMatrix) {
    let cav = st.cavity_reduced();
    let (n1, n2) = photon_moments(&cav);
    let [jz, jpjm, a_jminus, a, aa, a_jplus, jplus, jplus_jplus] = spin_moments(st);
    let nf = st.n_detectors as f64;
    let s = (st.n_detectors >= 2).then(|| (jpjm.re - jz.re - nf / 2.0) / (nf * (nf - 1.0)));
    let sample = Sample {
        t,
        trace: st.trace(),
        hermiticity: st.hermiticity_deviation(),
        min_eigenvalue: if opts.check_positivity { st.min_eigenvalue() } else { f64::NAN },
        top_fock: cav[(st.n_max, st.n_max)].re,
        photon_number: n1,
        photon_number_sq: n2,
        sigma_z: 2.0 * jz.re / nf,
        s,
        x: a_jminus / nf,
        a,
        aa,
        a_jplus,
        jplus,
        jplus_jplus,
        log_negativity: opts.log_negativity.then(|| log_negativity_blocks(st)),
    };
    (sample, cav)
}

pub(crate) fn evolve_blocks(
    spec: &LindbladSpec,
    state: &BlockDensityMatrix,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<TrajectoryRecord> {
    let liou = BlockLiouvillian::new(spec, state)?;
    let y0 = liou.gather(state);
    let mut current = state.clone();
    let mut samples = Vec::with_capacity(grid.len());
    let mut cavity_states = Vec::new();
    dopri5(
        |_, y, dy| liou.rhs(y, dy),
        &y0,
        grid,
        &opts.tol,
        |_, t, y| {
            liou.scatter(y, &mut current);
            let (sample, cav) = sample_blocks(t, &current, opts);
            check_sample(&sample, opts)?;
            samples.push(sample);
            if opts.keep_cavity_states {
                cavity_states.push(cav);
            }
            Ok(())
        },
    )?;
    Ok(TrajectoryRecord {
        samples,
        cavity_states,
        final_state: DensityState::Blocks(current),
    })
}
