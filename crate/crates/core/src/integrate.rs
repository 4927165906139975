//! Adaptive ODE integrators on flat `f64` state vectors.
//!
//! `dopri5` is the explicit Dormand-Prince 5(4) pair used for the density
//! matrix solvers. `rosenbrock4` is a 4th order L-stable Rosenbrock method
//! (Kaps-Rentrop / Shampine parameters) for the moment systems, whose rates
//! can differ by eight orders of magnitude. Both land exactly on every
//! output time and report the state there through `observe`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DickeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` means the full span.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: None,
            max_steps: 50_000_000,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(DickeError::InvalidParameter {
                name: "tolerance",
                reason: format!("rtol = {}, atol = {} must be positive", self.rtol, self.atol),
            });
        }
        Ok(())
    }
}

/// Checks that `grid` is finite, non-empty and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(DickeError::TimeGrid("empty time grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(DickeError::TimeGrid("non-finite time".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DickeError::TimeGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` evenly spaced samples from `t0` to `t1` inclusive.
pub fn linear_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t0];
    }
    let dt = (t1 - t0) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { t1 } else { t0 + dt * i as f64 }).collect()
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(rhs: &mut F, t: f64, y: &[f64], f0: &[f64], order: i32, tol: &Tolerances, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let sc: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len().max(1) as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1).min(span)
}

fn finite(y: &[f64]) -> bool {
    y.iter().all(|v| v.is_finite())
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = rhs(t, y)` over `grid`, calling `observe(i, t_i, y_i)` at
/// every grid point (including the first, with `y0`).
pub fn dopri5<F, O>(mut rhs: F, y0: &[f64], grid: &[f64], tol: &Tolerances, mut observe: O) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    check_grid(grid)?;
    tol.check()?;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = grid[0];
    observe(0, t, &y)?;
    if grid.len() == 1 {
        return Ok(y);
    }
    let span = grid[grid.len() - 1] - t;
    let h_max = tol.h_max.unwrap_or(span).min(span);
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    rhs(t, &y, &mut k1);
    let mut h = initial_step(&mut rhs, t, &y, &k1, 5, tol, h_max).min(h_max);
    let mut steps = 0usize;
    let mut next = 1;
    while next < grid.len() {
        let target = grid[next];
        let remaining = target - t;
        let mut hit = false;
        let mut h_try = h.min(h_max);
        if h_try >= remaining * (1.0 - 1e-12) {
            h_try = remaining;
            hit = true;
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(DickeError::Integrator {
                time: t,
                reason: format!("exceeded {} steps", tol.max_steps),
            });
        }
        let hh = h_try;
        for i in 0..n {
            tmp[i] = y[i] + hh * A21 * k1[i];
        }
        rhs(t + C2 * hh, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + hh * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * hh, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * hh, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * hh, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if hit { target } else { t + hh };
        rhs(t_new, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(t_new, &y_new, &mut k7);
        for i in 0..n {
            err[i] = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, tol);
        if !en.is_finite() {
            h = hh * 0.1;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(DickeError::Integrator {
                    time: t,
                    reason: "non-finite derivative".into(),
                });
            }
            continue;
        }
        if en <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if en == 0.0 { 10.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 10.0) };
            // keep the unclamped proposal when the step was shortened to hit a grid point
            h = if hit { h.max(hh * fac) } else { hh * fac };
            if hit {
                if !finite(&y) {
                    return Err(DickeError::Integrator {
                        time: t,
                        reason: "state became non-finite".into(),
                    });
                }
                observe(next, t, &y)?;
                next += 1;
            }
        } else {
            h = hh * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(DickeError::Integrator {
                    time: t,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok(y)
}

// Rosenbrock parameters
const GAM: f64 = 0.5;
const RA21: f64 = 2.0;
const RA31: f64 = 48.0 / 25.0;
const RA32: f64 = 6.0 / 25.0;
const RC21: f64 = -8.0;
const RC31: f64 = 372.0 / 25.0;
const RC32: f64 = 12.0 / 5.0;
const RC41: f64 = -112.0 / 125.0;
const RC42: f64 = -54.0 / 125.0;
const RC43: f64 = -2.0 / 5.0;
const RB1: f64 = 19.0 / 9.0;
const RB2: f64 = 0.5;
const RB3: f64 = 25.0 / 108.0;
const RB4: f64 = 125.0 / 108.0;
const RE1: f64 = 17.0 / 54.0;
const RE2: f64 = 7.0 / 36.0;
const RE3: f64 = 0.0;
const RE4: f64 = 125.0 / 108.0;

/// Rosenbrock integration of an autonomous system `y' = rhs(y)` with the
/// analytic Jacobian `jac(y, J)`, `J[(i, k)] = d rhs_i / d y_k`.
pub fn rosenbrock4<F, Jf, O>(
    mut rhs: F,
    mut jac: Jf,
    y0: &[f64],
    grid: &[f64],
    tol: &Tolerances,
    mut observe: O,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
    Jf: FnMut(&[f64], &mut DMatrix<f64>),
    O: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    check_grid(grid)?;
    tol.check()?;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = grid[0];
    observe(0, t, &y)?;
    if grid.len() == 1 {
        return Ok(y);
    }
    let span = grid[grid.len() - 1] - t;
    let h_max = tol.h_max.unwrap_or(span).min(span);
    let mut f0 = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut jm = DMatrix::<f64>::zeros(n, n);
    rhs(&y, &mut f0);
    let mut wrapped = |_t: f64, y: &[f64], out: &mut [f64]| rhs(y, out);
    let mut h = initial_step(&mut wrapped, t, &y, &f0, 4, tol, h_max).min(h_max);
    let mut rhs = |y: &[f64], out: &mut [f64]| wrapped(0.0, y, out);
    let mut steps = 0usize;
    let mut next = 1;
    jac(&y, &mut jm);
    while next < grid.len() {
        let target = grid[next];
        let remaining = target - t;
        let mut hit = false;
        let mut hh = h.min(h_max);
        if hh >= remaining * (1.0 - 1e-12) {
            hh = remaining;
            hit = true;
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(DickeError::Integrator {
                time: t,
                reason: format!("exceeded {} steps", tol.max_steps),
            });
        }
        let mut a = -&jm;
        for i in 0..n {
            a[(i, i)] += 1.0 / (GAM * hh);
        }
        let lu = a.lu();
        let solve = |b: &[f64]| -> Option<Vec<f64>> {
            lu.solve(&DVector::from_column_slice(b)).map(|v| v.as_slice().to_vec())
        };
        let Some(g1) = solve(&f0) else {
            h = hh * 0.5;
            continue;
        };
        for i in 0..n {
            tmp[i] = y[i] + RA21 * g1[i];
        }
        rhs(&tmp, &mut f);
        let b2: Vec<f64> = (0..n).map(|i| f[i] + RC21 * g1[i] / hh).collect();
        let Some(g2) = solve(&b2) else {
            h = hh * 0.5;
            continue;
        };
        for i in 0..n {
            tmp[i] = y[i] + RA31 * g1[i] + RA32 * g2[i];
        }
        rhs(&tmp, &mut f);
        let b3: Vec<f64> = (0..n).map(|i| f[i] + (RC31 * g1[i] + RC32 * g2[i]) / hh).collect();
        let Some(g3) = solve(&b3) else {
            h = hh * 0.5;
            continue;
        };
        let b4: Vec<f64> = (0..n)
            .map(|i| f[i] + (RC41 * g1[i] + RC42 * g2[i] + RC43 * g3[i]) / hh)
            .collect();
        let Some(g4) = solve(&b4) else {
            h = hh * 0.5;
            continue;
        };
        for i in 0..n {
            y_new[i] = y[i] + RB1 * g1[i] + RB2 * g2[i] + RB3 * g3[i] + RB4 * g4[i];
            err[i] = RE1 * g1[i] + RE2 * g2[i] + RE3 * g3[i] + RE4 * g4[i];
        }
        let en = error_norm(&err, &y, &y_new, tol);
        if en.is_finite() && en <= 1.0 {
            t = if hit { target } else { t + hh };
            std::mem::swap(&mut y, &mut y_new);
            rhs(&y, &mut f0);
            jac(&y, &mut jm);
            let fac = if en == 0.0 { 4.0 } else { (0.9 * en.powf(-0.25)).clamp(0.2, 4.0) };
            h = if hit { h.max(hh * fac) } else { hh * fac };
            if hit {
                if !finite(&y) {
                    return Err(DickeError::Integrator {
                        time: t,
                        reason: "state became non-finite".into(),
                    });
                }
                observe(next, t, &y)?;
                next += 1;
            }
        } else {
            let fac = if en.is_finite() { (0.9 * en.powf(-1.0 / 3.0)).clamp(0.1, 0.5) } else { 0.1 };
            h = hh * fac;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(DickeError::Integrator {
                    time: t,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_grid_points() {
        let grid = linear_grid(0.0, 5.0, 11);
        let mut seen = Vec::new();
        let y = dopri5(
            |_, y, dy| dy[0] = -y[0],
            &[1.0],
            &grid,
            &Tolerances::new(1e-10, 1e-12),
            |i, t, y| {
                assert_eq!(t, grid[i]);
                assert!((y[0] - (-t).exp()).abs() < 1e-9);
                seen.push(i);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, (0..11).collect::<Vec<_>>());
        assert!((y[0] - (-5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let grid = linear_grid(0.0, 100.0, 3);
        let y = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            &grid,
            &Tolerances::new(1e-11, 1e-13),
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 100f64.cos()).abs() < 1e-8);
        assert!((y[1] + 100f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_handles_stiff_linear_system() {
        // y0' = -1e6 (y0 - cos t)-like autonomous analogue: fast relaxation onto a slow mode
        let k = 1e6;
        let grid = linear_grid(0.0, 10.0, 6);
        let mut steps = 0;
        let y = rosenbrock4(
            |y, dy| {
                dy[0] = -k * (y[0] - y[1]);
                dy[1] = -0.1 * y[1];
                steps += 1;
            },
            |_, j| {
                j.fill(0.0);
                j[(0, 0)] = -k;
                j[(0, 1)] = k;
                j[(1, 1)] = -0.1;
            },
            &[0.0, 1.0],
            &grid,
            &Tolerances::new(1e-8, 1e-12),
            |_, _, _| Ok(()),
        )
        .unwrap();
        let slow = (-1.0f64).exp();
        assert!((y[1] - slow).abs() < 1e-7);
        // y0 tracks y1 up to O(0.1 / k)
        assert!((y[0] - slow * (1.0 + 0.1 / k)).abs() < 1e-7);
        assert!(steps < 20_000, "took {steps} rhs calls");
    }

    #[test]
    fn rosenbrock_matches_logistic_solution() {
        let grid = linear_grid(0.0, 8.0, 9);
        rosenbrock4(
            |y, dy| dy[0] = y[0] * (1.0 - y[0]),
            |y, j| j[(0, 0)] = 1.0 - 2.0 * y[0],
            &[0.01],
            &grid,
            &Tolerances::new(1e-10, 1e-12),
            |_, t, y| {
                let exact = 1.0 / (1.0 + 99.0 * (-t).exp());
                assert!((y[0] - exact).abs() < 1e-7, "t = {t}");
                Ok(())
            },
        )
        .unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        let f = |_: f64, _: &[f64], _: &mut [f64]| {};
        let tol = Tolerances::default();
        assert!(dopri5(f, &[0.0], &[], &tol, |_, _, _| Ok(())).is_err());
        assert!(dopri5(f, &[0.0], &[1.0, 0.5], &tol, |_, _, _| Ok(())).is_err());
        assert!(dopri5(f, &[0.0], &[0.0, f64::NAN], &tol, |_, _, _| Ok(())).is_err());
    }
}
