//! Holstein-Primakoff limit: the detector ensemble becomes a bosonic mode `b`
//! and the coupling a nondegenerate parametric amplifier
//! `sqrt(N) lambda (a^dag b^dag + a b)`.
//!
//! For zero-mean Gaussian states the moments `n_a`, `n_b` and `c = <a b>`
//! close:
//!
//! ```text
//! dn_a/dt = -2 g Im c - gamma_c n_a
//! dn_b/dt = -2 g Im c - gamma_d n_b
//! dc/dt   = -i g (n_a + n_b + 1) - (gamma_c + gamma_d) c / 2
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DickeError, Result};
use crate::integrate::{dopri5, Tolerances};
use crate::params::RwaModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub n_a: f64,
    pub n_b: f64,
    /// `<a b>`
    pub c: Complex64,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self {
            n_a: 0.0,
            n_b: 0.0,
            c: Complex64::new(0.0, 0.0),
        }
    }

    /// Non-negative occupations and `|<ab>|^2 <= (n_a + 1)(n_b + 1)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.n_a >= 0.0 && self.n_b >= 0.0) {
            return Err(DickeError::InvalidState(format!("negative occupation in {self:?}")));
        }
        if self.c.norm_sqr() > (self.n_a + 1.0) * (self.n_b + 1.0) * (1.0 + 1e-12) {
            return Err(DickeError::InvalidState(format!("unphysical pair correlation in {self:?}")));
        }
        Ok(())
    }
}

/// Returns `(4 N lambda^2, gamma_c gamma_d)`.
fn threshold(model: &RwaModel) -> (f64, f64) {
    (4.0 * model.n_detectors * model.lambda * model.lambda, model.gamma_c * model.gamma_d)
}

pub fn is_above_threshold(model: &RwaModel) -> bool {
    let (drive, damping) = threshold(model);
    drive >= damping
}

/// `4 gamma_d N lambda^2 / ((gamma_c + gamma_d)(gamma_c gamma_d - 4 N lambda^2))`.
pub fn hp_steady_state(model: &RwaModel) -> Result<f64> {
    model.validate()?;
    if model.lambda == 0.0 {
        return Ok(0.0);
    }
    let (drive, damping) = threshold(model);
    if drive >= damping {
        return Err(DickeError::ParametricInstability { drive, damping });
    }
    Ok(model.gamma_d * drive / ((model.gamma_c + model.gamma_d) * (damping - drive)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    /// Set when `4 N lambda^2 >= gamma_c gamma_d`, where the moments grow
    /// exponentially and no steady state exists.
    pub above_threshold: bool,
}

impl HpTrajectory {
    pub fn photon_numbers(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.n_a).collect()
    }
}

fn rhs(y: &[f64], m: &RwaModel, out: &mut [f64]) {
    let g = m.n_detectors.sqrt() * m.lambda;
    let half = 0.5 * (m.gamma_c + m.gamma_d);
    let [na, nb, cr, ci] = [y[0], y[1], y[2], y[3]];
    out[0] = -2.0 * g * ci - m.gamma_c * na;
    out[1] = -2.0 * g * ci - m.gamma_d * nb;
    out[2] = -half * cr;
    out[3] = -g * (na + nb + 1.0) - half * ci;
}

/// Integrate the pair-amplifier moments. Growth above threshold is
/// reported through [`HpTrajectory::above_threshold`], not as an error.
pub fn hp_dynamics(g0: &GaussianState, model: &RwaModel, grid: &[f64], tol: &Tolerances) -> Result<HpTrajectory> {
    model.validate()?;
    g0.validate()?;
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    dopri5(
        |_, y, dy| rhs(y, model, dy),
        &[g0.n_a, g0.n_b, g0.c.re, g0.c.im],
        grid,
        tol,
        |_, t, y| {
            times.push(t);
            states.push(GaussianState {
                n_a: y[0],
                n_b: y[1],
                c: Complex64::new(y[2], y[3]),
            });
            Ok(())
        },
    )?;
    Ok(HpTrajectory {
        times,
        states,
        above_threshold: is_above_threshold(model),
    })
}
