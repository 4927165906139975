//! Master-equation dynamics: Hamiltonians, Liouvillians and time evolution
//! for the product-space and permutation-symmetric representations.

mod block;
mod full;
mod hamiltonian;

pub use block::{local_dissipator_blocks, BlockDissipator, BlockLiouvillian};
pub use full::{lindblad_action_full, FullSystem};
pub use hamiltonian::{
    coupling_coefficient, hamiltonian_full, hamiltonian_rwa, hamiltonian_rwa_full, lorentz_factor,
    tavis_cummings_full,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DickeError, Result};
use crate::integrate::{check_grid, Tolerances};
use crate::linalg::CMatrix;
use crate::operators::DensityState;
use crate::params::PhysicalParams;

/// Dissipation acting on each detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinChannel {
    /// `gamma_d L[sigma_i^-]`, energy decay.
    Lowering,
    /// `gamma_d L[sigma_i^+]`, incoherent pump.
    Raising,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    /// Lab-frame Hamiltonian with relativistic time dilation and the
    /// oscillating mode-function coupling. Product space only.
    TimeDependentFull(PhysicalParams),
    /// `lambda (a^dag J^+ + a J^-)`, valid on the parametric resonance
    /// `Omega_m = omega_c + omega_d`.
    Rwa { lambda: f64, resonance_imposed: bool },
    /// `lambda (a^dag J^- + a J^+)`.
    TavisCummings { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladSpec {
    pub hamiltonian: HamiltonianKind,
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub spin_channel: SpinChannel,
}

impl LindbladSpec {
    pub fn rwa(lambda: f64, gamma_c: f64, gamma_d: f64) -> Self {
        Self {
            hamiltonian: HamiltonianKind::Rwa {
                lambda,
                resonance_imposed: true,
            },
            gamma_c,
            gamma_d,
            spin_channel: SpinChannel::Lowering,
        }
    }

    /// Unitarily equivalent pumped Tavis-Cummings form of [`LindbladSpec::rwa`].
    pub fn tavis_cummings(lambda: f64, gamma_c: f64, gamma_d: f64) -> Self {
        Self {
            hamiltonian: HamiltonianKind::TavisCummings { lambda },
            gamma_c,
            gamma_d,
            spin_channel: SpinChannel::Raising,
        }
    }

    pub fn full(params: PhysicalParams) -> Self {
        Self {
            gamma_c: params.gamma_c,
            gamma_d: params.gamma_d,
            hamiltonian: HamiltonianKind::TimeDependentFull(params),
            spin_channel: SpinChannel::Lowering,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_c", self.gamma_c), ("gamma_d", self.gamma_d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DickeError::InvalidParameter {
                    name,
                    reason: format!("rate must be non-negative and finite, got {v}"),
                });
            }
        }
        match &self.hamiltonian {
            HamiltonianKind::TimeDependentFull(p) => p.validate(),
            HamiltonianKind::Rwa {
                lambda,
                resonance_imposed,
            } => {
                if !resonance_imposed {
                    return Err(DickeError::InvalidParameter {
                        name: "resonance_imposed",
                        reason: "the rotating-wave Hamiltonian requires Omega_m = omega_c + omega_d".into(),
                    });
                }
                finite_lambda(*lambda)
            }
            HamiltonianKind::TavisCummings { lambda } => finite_lambda(*lambda),
        }
    }
}

fn finite_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() {
        Ok(())
    } else {
        Err(DickeError::InvalidParameter {
            name: "lambda",
            reason: "must be finite".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    /// Store the cavity reduced state at every sample.
    pub keep_cavity_states: bool,
    /// Evaluate the cavity | detectors logarithmic negativity at every sample.
    pub log_negativity: bool,
    /// Abort when the top Fock population exceeds this.
    pub truncation_limit: f64,
    /// Abort when an eigenvalue drops below this.
    pub positivity_limit: f64,
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            keep_cavity_states: false,
            log_negativity: false,
            truncation_limit: 1e-6,
            positivity_limit: -1e-6,
            check_positivity: true,
        }
    }
}

/// Observables at one output time. Spin moments refer to detectors 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub top_fock: f64,
    /// `<a^dag a>`
    pub photon_number: f64,
    /// `<(a^dag a)^2>`
    pub photon_number_sq: f64,
    /// `<sigma_1^z>`
    pub sigma_z: f64,
    /// `<sigma_1^+ sigma_2^->`, absent for a single detector.
    pub s: Option<f64>,
    /// `<a sigma_1^->`
    pub x: Complex64,
    pub a: Complex64,
    pub aa: Complex64,
    pub a_jplus: Complex64,
    pub jplus: Complex64,
    pub jplus_jplus: Complex64,
    pub log_negativity: Option<f64>,
}

impl Sample {
    /// Fano factor, `None` when the mean photon number is below 1e-12.
    pub fn fano(&self) -> Option<f64> {
        (self.photon_number > 1e-12).then(|| {
            (self.photon_number_sq - self.photon_number * self.photon_number) / self.photon_number
        })
    }

    /// Largest of the moments that vanish for phase-symmetric states.
    pub fn selection_rule_violation(&self) -> f64 {
        [self.a, self.aa, self.a_jplus, self.jplus, self.jplus_jplus]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    /// Cavity reduced states aligned with `samples` when requested.
    pub cavity_states: Vec<CMatrix>,
    pub final_state: DensityState,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn photon_numbers(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.photon_number).collect()
    }
}

/// Integrate the master equation from `rho0` over `grid`.
///
/// Product-space states accept every Hamiltonian; block states accept the
/// time-independent collective ones.
pub fn evolve(spec: &LindbladSpec, rho0: &DensityState, grid: &[f64], opts: &EvolveOptions) -> Result<TrajectoryRecord> {
    spec.validate()?;
    check_grid(grid)?;
    rho0.validate()?;
    match rho0 {
        DensityState::Full(state) => full::evolve_full(spec, state, grid, opts),
        DensityState::Blocks(state) => block::evolve_blocks(spec, state, grid, opts),
    }
}

pub(crate) fn check_sample(sample: &Sample, opts: &EvolveOptions) -> Result<()> {
    if sample.top_fock > opts.truncation_limit {
        return Err(DickeError::Truncation {
            population: sample.top_fock,
            time: sample.t,
        });
    }
    if opts.check_positivity && sample.min_eigenvalue < opts.positivity_limit {
        return Err(DickeError::Positivity {
            min_eigenvalue: sample.min_eigenvalue,
            time: sample.t,
        });
    }
    Ok(())
}

pub(crate) fn pack(m: &CMatrix, out: &mut [f64]) {
    for (i, z) in m.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
}

pub(crate) fn unpack(y: &[f64], m: &mut CMatrix) {
    for (i, z) in m.iter_mut().enumerate() {
        *z = Complex64::new(y[2 * i], y[2 * i + 1]);
    }
}

#[cfg(test)]
mod tests;
