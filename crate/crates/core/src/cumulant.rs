//! Cumulant-expansion moment equations for arbitrary (real) detector number.
//!
//! Variables: `n = <a^dag a>`, `x = <a sigma_1^->`, `s = <sigma_1^+ sigma_2^->`,
//! `z = <sigma_1^z>`. The fourth-order closure keeps the products of second
//! moments that the third-order closure drops.
//!
//! Writing `x = u + i v`, the equations are
//!
//! ```text
//! dn/dt = -gamma_c n - 2 N lambda v
//! du/dt = -Gamma u
//! dv/dt = -Gamma v - lambda [(N - 1) s - n z - 2 f |x|^2 + (1 - z) / 2]
//! ds/dt = -gamma_d s + 2 lambda v (z + 2 f s)
//! dz/dt = -gamma_d (z + 1) - 4 lambda v
//! ```
//!
//! with `Gamma = (gamma_c + gamma_d) / 2` and `f = 1` for the fourth closure,
//! `0` for the third.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DickeError, Result};
use crate::integrate::{dopri5, rosenbrock4, Tolerances};
use crate::params::RwaModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Third,
    Fourth,
}

impl Closure {
    fn factor(self) -> f64 {
        match self {
            Closure::Third => 0.0,
            Closure::Fourth => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub n: f64,
    pub x: Complex64,
    pub s: f64,
    pub z: f64,
}

impl MomentState {
    /// Cavity vacuum with every detector in its ground state.
    pub fn ground() -> Self {
        Self {
            n: 0.0,
            x: Complex64::new(0.0, 0.0),
            s: 0.0,
            z: -1.0,
        }
    }

    pub fn to_vec(&self) -> [f64; 5] {
        [self.n, self.x.re, self.x.im, self.s, self.z]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            n: y[0],
            x: Complex64::new(y[1], y[2]),
            s: y[3],
            z: y[4],
        }
    }

    /// Physical bounds on the moments, with 1e-9 slack.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(DickeError::InvalidState(format!("moment {what} out of range: {self:?}")));
        if !(self.n >= -1e-9) {
            return bad("n");
        }
        if !(self.z.abs() <= 1.0 + 1e-9) {
            return bad("z");
        }
        if !(self.s.abs() <= 1.0 + 1e-9) {
            return bad("s");
        }
        Ok(())
    }
}

fn rhs_raw(y: &[f64], m: &RwaModel, f: f64, out: &mut [f64]) {
    let [n, u, v, s, z] = [y[0], y[1], y[2], y[3], y[4]];
    let nn = m.n_detectors;
    let lam = m.lambda;
    let big_gamma = 0.5 * (m.gamma_c + m.gamma_d);
    let bracket = (nn - 1.0) * s - n * z - 2.0 * f * (u * u + v * v) + 0.5 * (1.0 - z);
    out[0] = -m.gamma_c * n - 2.0 * nn * lam * v;
    out[1] = -big_gamma * u;
    out[2] = -big_gamma * v - lam * bracket;
    out[3] = -m.gamma_d * s + 2.0 * lam * v * (z + 2.0 * f * s);
    out[4] = -m.gamma_d * (z + 1.0) - 4.0 * lam * v;
}

fn jacobian_raw(y: &[f64], m: &RwaModel, f: f64, j: &mut DMatrix<f64>) {
    let [n, u, v, s, z] = [y[0], y[1], y[2], y[3], y[4]];
    let nn = m.n_detectors;
    let lam = m.lambda;
    let big_gamma = 0.5 * (m.gamma_c + m.gamma_d);
    j.fill(0.0);
    j[(0, 0)] = -m.gamma_c;
    j[(0, 2)] = -2.0 * nn * lam;
    j[(1, 1)] = -big_gamma;
    j[(2, 0)] = lam * z;
    j[(2, 1)] = 4.0 * lam * f * u;
    j[(2, 2)] = -big_gamma + 4.0 * lam * f * v;
    j[(2, 3)] = -lam * (nn - 1.0);
    j[(2, 4)] = lam * (n + 0.5);
    j[(3, 2)] = 2.0 * lam * (z + 2.0 * f * s);
    j[(3, 3)] = -m.gamma_d + 4.0 * lam * f * v;
    j[(3, 4)] = 2.0 * lam * v;
    j[(4, 2)] = -4.0 * lam;
    j[(4, 4)] = -m.gamma_d;
}

/// Time derivative of the moments.
pub fn moment_rhs(state: &MomentState, model: &RwaModel, closure: Closure) -> MomentState {
    let mut out = [0.0; 5];
    rhs_raw(&state.to_vec(), model, closure.factor(), &mut out);
    MomentState::from_slice(&out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MomentIntegrator {
    /// Linearly implicit, for widely separated rates.
    #[default]
    Rosenbrock,
    DormandPrince,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
}

impl MomentTrajectory {
    pub fn photon_numbers(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.n).collect()
    }
}

/// Integrate the moment equations over `grid`. Fails with a divergence
/// error once `n` exceeds `1e12 N`.
pub fn integrate_moments(
    m0: &MomentState,
    model: &RwaModel,
    closure: Closure,
    grid: &[f64],
    tol: &Tolerances,
    method: MomentIntegrator,
) -> Result<MomentTrajectory> {
    model.validate()?;
    let f = closure.factor();
    let limit = 1e12 * model.n_detectors;
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let observe = |_: usize, t: f64, y: &[f64]| {
        if !(y[0] <= limit) {
            return Err(DickeError::Divergence { time: t, photons: y[0] });
        }
        times.push(t);
        states.push(MomentState::from_slice(y));
        Ok(())
    };
    let y0 = m0.to_vec();
    let result = match method {
        MomentIntegrator::Rosenbrock => rosenbrock4(
            |y, dy| rhs_raw(y, model, f, dy),
            |y, j| jacobian_raw(y, model, f, j),
            &y0,
            grid,
            tol,
            observe,
        ),
        MomentIntegrator::DormandPrince => dopri5(|_, y, dy| rhs_raw(y, model, f, dy), &y0, grid, tol, observe),
    };
    match result {
        Ok(_) => Ok(MomentTrajectory { times, states }),
        // a failing step past the divergence limit is reported as divergence
        Err(DickeError::Integrator { time, .. }) if states.last().is_some_and(|s| s.n > limit * 1e-3) => {
            Err(DickeError::Divergence {
                time,
                photons: states.last().map_or(f64::NAN, |s| s.n),
            })
        }
        Err(e) => Err(e),
    }
}

fn check_rates(model: &RwaModel) -> Result<()> {
    model.validate()?;
    if !(model.gamma_c > 0.0) {
        return Err(DickeError::InvalidParameter {
            name: "gamma_c",
            reason: "the steady state needs cavity damping".into(),
        });
    }
    Ok(())
}

/// Closed-form steady photon number of the third-order closure.
///
/// Evaluated in the form that avoids cancellation for `N << N_crit`.
pub fn steady_state_third(model: &RwaModel) -> Result<f64> {
    check_rates(model)?;
    if model.lambda == 0.0 {
        return Ok(0.0);
    }
    let n = model.n_detectors;
    let nc = model.n_crit();
    let (gc, gd) = (model.gamma_c, model.gamma_d);
    let gs = gc + gd;
    let denom = n * gs - gc;
    if denom == 0.0 {
        return Err(DickeError::DegenerateDenominator);
    }
    let a = (n - nc) * gs - 2.0 * gc;
    let b = (n - nc).powi(2) * gs * gs + 4.0 * gc * ((n + nc) * gs - gc);
    let root = b.sqrt();
    Ok(if a >= 0.0 {
        n * gd * (a + root) / (4.0 * gc * denom)
    } else {
        2.0 * n * gd / (root - a)
    })
}

/// Full stationary moments of a closure given its photon number, using the
/// stationarity of the `n`, `z` and `s` equations.
fn stationary_moments(model: &RwaModel, n_ss: f64, f: f64) -> MomentState {
    if model.lambda == 0.0 || n_ss == 0.0 {
        return MomentState::ground();
    }
    let lam = model.lambda;
    let v = -model.gamma_c * n_ss / (2.0 * model.n_detectors * lam);
    let z = -1.0 - 4.0 * lam * v / model.gamma_d;
    let s = 2.0 * lam * v * z / (model.gamma_d - 4.0 * lam * f * v);
    MomentState {
        n: n_ss,
        x: Complex64::new(0.0, v),
        s,
        z,
    }
}

pub fn steady_state_third_moments(model: &RwaModel) -> Result<MomentState> {
    Ok(stationary_moments(model, steady_state_third(model)?, 0.0))
}

/// Stationary moments of the fourth-order closure by damped Newton
/// iteration (step factor 0.5, at most 200 iterations) seeded from the
/// third-order closed form.
pub fn steady_state_fourth_moments(model: &RwaModel) -> Result<MomentState> {
    let seed = steady_state_third_moments(model)?;
    if model.lambda == 0.0 {
        return Ok(seed);
    }
    // unknowns (n, v, s, z); u decays independently to zero
    let scale = [seed.n.abs().max(1.0), seed.x.im.abs().max(1e-300), seed.s.abs().max(1e-300), 1.0];
    let residual = |p: &Vector4<f64>, out: &mut Vector4<f64>| {
        let y = [p[0], 0.0, p[1], p[2], p[3]];
        let mut d = [0.0; 5];
        rhs_raw(&y, model, 1.0, &mut d);
        *out = Vector4::new(d[0], d[2], d[3], d[4]);
    };
    let rate = model.gamma_c.max(model.gamma_d).max(model.lambda.abs() * model.n_detectors.sqrt());
    let size = |r: &Vector4<f64>, p: &Vector4<f64>| {
        // each equation relative to its natural magnitude
        let n = p[0].abs().max(1.0);
        let terms = [
            r[0] / (rate * n),
            r[1] / (rate * (n.sqrt() + 1.0)),
            r[2] / rate,
            r[3] / rate,
        ];
        terms.iter().fold(0.0f64, |m, t| m.max(t.abs()))
    };
    let mut p = Vector4::new(seed.n, seed.x.im, seed.s, seed.z);
    let mut r = Vector4::zeros();
    let mut jac = DMatrix::zeros(5, 5);
    let mut res = f64::INFINITY;
    for iter in 0..200 {
        residual(&p, &mut r);
        res = size(&r, &p);
        if res < 1e-10 {
            return Ok(MomentState {
                n: p[0],
                x: Complex64::new(0.0, p[1]),
                s: p[2],
                z: p[3],
            });
        }
        let y = [p[0], 0.0, p[1], p[2], p[3]];
        jacobian_raw(&y, model, 1.0, &mut jac);
        let idx = [0usize, 2, 3, 4];
        // column scaling keeps the 4x4 solve well conditioned
        let jm = Matrix4::from_fn(|i, k| jac[(idx[i], idx[k])] * scale[k]);
        let Some(step) = jm.lu().solve(&(-r)) else {
            return Err(DickeError::NoConvergence {
                iterations: iter,
                residual: res,
            });
        };
        for k in 0..4 {
            p[k] += 0.5 * step[k] * scale[k];
        }
    }
    Err(DickeError::NoConvergence {
        iterations: 200,
        residual: res,
    })
}

pub fn steady_state_fourth(model: &RwaModel) -> Result<f64> {
    Ok(steady_state_fourth_moments(model)?.n)
}
