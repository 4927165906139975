use super::{check_sample, pack, unpack, EvolveOptions, HamiltonianKind, LindbladSpec, Sample, SpinChannel, TrajectoryRecord};
use crate::error::Result;
use crate::integrate::dopri5;
use crate::linalg::{c, hermiticity_deviation, kron, min_eigenvalue, CMatrix, SparseOp, I, ONE, ZERO};
use crate::observables::log_negativity_full;
use crate::operators::{
    build_fock_ops, build_pauli_ops, cavity_op, collective_ops, spin_op, DensityState, FullDensityMatrix,
};
use crate::params::PhysicalParams;

use super::hamiltonian::{coupling_coefficient, hamiltonian_rwa_full, lorentz_factor, tavis_cummings_full};

struct Drive {
    params: PhysicalParams,
    /// `sigma_i^z / 2` per detector
    splitting: Vec<SparseOp>,
    /// `(a + a^dag) sigma_i^x` per detector
    coupling: Vec<SparseOp>,
}

/// Liouvillian on the product space, written as
/// `d rho = K rho + rho K^dag + sum_k gamma_k L_k rho L_k^dag` with
/// `K = -i H - 1/2 sum_k gamma_k L_k^dag L_k`.
pub struct FullSystem {
    pub n_detectors: usize,
    pub n_max: usize,
    k_const: SparseOp,
    drive: Option<Drive>,
    jumps: Vec<(f64, SparseOp, SparseOp)>,
}

impl FullSystem {
    pub fn new(spec: &LindbladSpec, n_detectors: usize, n_max: usize) -> Result<Self> {
        spec.validate()?;
        let fock = build_fock_ops(n_max);
        let spin_dim = 1usize << n_detectors;
        let dim = (n_max + 1) * spin_dim;
        let (h_const, drive) = match &spec.hamiltonian {
            HamiltonianKind::Rwa { lambda, .. } => (hamiltonian_rwa_full(*lambda, n_detectors, n_max)?, None),
            HamiltonianKind::TavisCummings { lambda } => (tavis_cummings_full(*lambda, n_detectors, n_max)?, None),
            HamiltonianKind::TimeDependentFull(p) => {
                let field = &fock.a + &fock.a_dag;
                let mut splitting = Vec::new();
                let mut coupling = Vec::new();
                for site in 0..n_detectors {
                    let ops = build_pauli_ops(n_detectors, site)?;
                    splitting.push(SparseOp::from_dense(&(spin_op(&ops.z, n_max) * c(0.5))));
                    coupling.push(SparseOp::from_dense(&kron(&field, &(&ops.plus + &ops.minus))));
                }
                let h0 = cavity_op(&fock.number, spin_dim) * c(p.omega_c);
                (
                    h0,
                    Some(Drive {
                        params: p.clone(),
                        splitting,
                        coupling,
                    }),
                )
            }
        };
        let mut jumps = Vec::new();
        if spec.gamma_c > 0.0 {
            let a = cavity_op(&fock.a, spin_dim);
            jumps.push((spec.gamma_c, a));
        }
        if spec.gamma_d > 0.0 {
            for site in 0..n_detectors {
                let ops = build_pauli_ops(n_detectors, site)?;
                let l = match spec.spin_channel {
                    SpinChannel::Lowering => ops.minus,
                    SpinChannel::Raising => ops.plus,
                };
                jumps.push((spec.gamma_d, spin_op(&l, n_max)));
            }
        }
        let mut k = &h_const * (-I);
        for (rate, l) in &jumps {
            k -= l.adjoint() * l * c(0.5 * rate);
        }
        debug_assert_eq!(k.nrows(), dim);
        let jumps = jumps
            .into_iter()
            .map(|(rate, l)| {
                let s = SparseOp::from_dense(&l);
                let adj = s.adjoint();
                (rate, s, adj)
            })
            .collect();
        Ok(Self {
            n_detectors,
            n_max,
            k_const: SparseOp::from_dense(&k),
            drive,
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) << self.n_detectors
    }

    /// Hamiltonian at time `t`.
    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        let mut k = self.k_const.to_dense();
        for (rate, l, adj) in &self.jumps {
            k += adj.to_dense() * l.to_dense() * c(0.5 * rate);
        }
        let mut h = k * I;
        if let Some(d) = &self.drive {
            for (site, (sz, cx)) in d.splitting.iter().zip(&d.coupling).enumerate() {
                let (ws, wc) = drive_coefficients(&d.params, t, site);
                h += sz.to_dense() * c(ws) + cx.to_dense() * c(wc);
            }
        }
        h
    }

    /// `out = L(t)[rho]`; `scratch` must have the shape of `rho`.
    pub fn apply(&self, t: f64, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        scratch.fill(ZERO);
        self.k_const.mul_dense_into(ONE, rho, scratch);
        if let Some(d) = &self.drive {
            for (site, (sz, cx)) in d.splitting.iter().zip(&d.coupling).enumerate() {
                let (ws, wc) = drive_coefficients(&d.params, t, site);
                sz.mul_dense_into(-I * ws, rho, scratch);
                cx.mul_dense_into(-I * wc, rho, scratch);
            }
        }
        out.copy_from(scratch);
        *out += scratch.adjoint();
        for (rate, l, adj) in &self.jumps {
            scratch.fill(ZERO);
            l.mul_dense_into(ONE, rho, scratch);
            adj.dense_mul_into(c(*rate), scratch, out);
        }
        let n = out.nrows();
        for i in 0..n {
            out[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let v = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
    }
}

fn drive_coefficients(p: &PhysicalParams, t: f64, site: usize) -> (f64, f64) {
    let theta = p.omega_m * t + p.phase(site);
    (p.omega_d0 * lorentz_factor(p.xi(), theta), coupling_coefficient(p, theta))
}

/// One application of the product-space Liouvillian at time `t`.
pub fn lindblad_action_full(spec: &LindbladSpec, rho: &FullDensityMatrix, t: f64) -> Result<CMatrix> {
    let sys = FullSystem::new(spec, rho.n_detectors, rho.n_max)?;
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    let mut scratch = out.clone();
    sys.apply(t, &rho.rho, &mut out, &mut scratch);
    Ok(out)
}

/// Sparse operators whose expectations fill a [`Sample`].
pub(crate) struct FullProbe {
    a: SparseOp,
    aa: SparseOp,
    a_jplus: SparseOp,
    jplus: SparseOp,
    jplus_jplus: SparseOp,
    sigma_z1: SparseOp,
    s12: Option<SparseOp>,
    x: SparseOp,
}

impl FullProbe {
    pub(crate) fn new(n: usize, n_max: usize) -> Result<Self> {
        let fock = build_fock_ops(n_max);
        let spin_dim = 1usize << n;
        let spin = collective_ops(n)?;
        let s1 = build_pauli_ops(n, 0)?;
        let a = cavity_op(&fock.a, spin_dim);
        let jp = spin_op(&spin.j_plus, n_max);
        let s12 = if n >= 2 {
            let s2 = build_pauli_ops(n, 1)?;
            Some(SparseOp::from_dense(&spin_op(&(&s1.plus * &s2.minus), n_max)))
        } else {
            None
        };
        Ok(Self {
            aa: SparseOp::from_dense(&(&a * &a)),
            a_jplus: SparseOp::from_dense(&(&a * &jp)),
            jplus_jplus: SparseOp::from_dense(&(&jp * &jp)),
            sigma_z1: SparseOp::from_dense(&spin_op(&s1.z, n_max)),
            x: SparseOp::from_dense(&(&a * spin_op(&s1.minus, n_max))),
            s12,
            jplus: SparseOp::from_dense(&jp),
            a: SparseOp::from_dense(&a),
        })
    }

    pub(crate) fn sample(&self, t: f64, st: &FullDensityMatrix, opts: &EvolveOptions) -> Result<(Sample, CMatrix)> {
        let cav = st.cavity_reduced();
        let (n1, n2) = photon_moments(&cav);
        let log_negativity = if opts.log_negativity {
            Some(log_negativity_full(st))
        } else {
            None
        };
        let sample = Sample {
            t,
            trace: st.trace(),
            hermiticity: hermiticity_deviation(&st.rho),
            min_eigenvalue: if opts.check_positivity { min_eigenvalue(&st.rho) } else { f64::NAN },
            top_fock: cav[(st.n_max, st.n_max)].re,
            photon_number: n1,
            photon_number_sq: n2,
            sigma_z: st.expect(&self.sigma_z1).re,
            s: self.s12.as_ref().map(|op| st.expect(op).re),
            x: st.expect(&self.x),
            a: st.expect(&self.a),
            aa: st.expect(&self.aa),
            a_jplus: st.expect(&self.a_jplus),
            jplus: st.expect(&self.jplus),
            jplus_jplus: st.expect(&self.jplus_jplus),
            log_negativity,
        };
        Ok((sample, cav))
    }
}

/// `(<a^dag a>, <(a^dag a)^2>)` of a cavity state.
pub(crate) fn photon_moments(cav: &CMatrix) -> (f64, f64) {
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for n in 0..cav.nrows() {
        let p = cav[(n, n)].re;
        n1 += n as f64 * p;
        n2 += (n * n) as f64 * p;
    }
    (n1, n2)
}

pub(crate) fn evolve_full(
    spec: &LindbladSpec,
    state: &FullDensityMatrix,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<TrajectoryRecord> {
    let sys = FullSystem::new(spec, state.n_detectors, state.n_max)?;
    let probe = FullProbe::new(state.n_detectors, state.n_max)?;
    let dim = sys.dim();
    let mut y0 = vec![0.0; 2 * dim * dim];
    pack(&state.rho, &mut y0);
    let mut rho = CMatrix::zeros(dim, dim);
    let mut out = rho.clone();
    let mut scratch = rho.clone();
    let mut current = state.clone();
    let mut samples = Vec::with_capacity(grid.len());
    let mut cavity_states = Vec::new();
    dopri5(
        |t, y, dy| {
            unpack(y, &mut rho);
            sys.apply(t, &rho, &mut out, &mut scratch);
            pack(&out, dy);
        },
        &y0,
        grid,
        &opts.tol,
        |_, t, y| {
            unpack(y, &mut current.rho);
            let (sample, cav) = probe.sample(t, &current, opts)?;
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
        final_state: DensityState::Full(current),
    })
}
