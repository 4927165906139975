//! Diagnostics computed from states and trajectories: photon statistics,
//! Wigner functions, logarithmic negativity, burst extraction and scaling fits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DickeError, Result};
use crate::linalg::{hermitian_eigenvalues, trace_norm, CMatrix};
use crate::operators::{BlockDensityMatrix, DensityState, FullDensityMatrix};

/// `<a^dag a>` of a cavity density matrix.
pub fn photon_number_cavity(cav: &CMatrix) -> f64 {
    (0..cav.nrows()).map(|n| n as f64 * cav[(n, n)].re).sum()
}

/// Photon-number variance over mean.
pub fn fano_cavity(cav: &CMatrix) -> Result<f64> {
    let mean = photon_number_cavity(cav);
    if mean <= 1e-12 {
        return Err(DickeError::UndefinedFano { mean });
    }
    let second: f64 = (0..cav.nrows()).map(|n| (n * n) as f64 * cav[(n, n)].re).sum();
    Ok((second - mean * mean) / mean)
}

pub fn photon_number(state: &DensityState) -> f64 {
    photon_number_cavity(&state.cavity_reduced())
}

pub fn fano(state: &DensityState) -> Result<f64> {
    fano_cavity(&state.cavity_reduced())
}

/// Coherent state `|alpha>` truncated at `n_max` and renormalized.
pub fn coherent_state(alpha: Complex64, n_max: usize) -> CMatrix {
    let mut amp = vec![Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0)];
    for n in 1..=n_max {
        let prev = amp[n - 1];
        amp.push(prev * alpha / (n as f64).sqrt());
    }
    let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
    CMatrix::from_fn(n_max + 1, n_max + 1, |i, j| amp[i] * amp[j].conj() / norm)
}

/// Thermal state with mean `nbar`, truncated at `n_max` and renormalized.
pub fn thermal_state(nbar: f64, n_max: usize) -> CMatrix {
    let q = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..=n_max).map(|n| q.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    CMatrix::from_fn(n_max + 1, n_max + 1, |i, j| {
        if i == j {
            Complex64::new(weights[i] / total, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Partial transpose over the cavity of a product-space matrix.
fn cavity_partial_transpose(rho: &CMatrix, cav_dim: usize) -> CMatrix {
    let dim = rho.nrows();
    let sd = dim / cav_dim;
    CMatrix::from_fn(dim, dim, |r, c| {
        let (n, s) = (r / sd, r % sd);
        let (n2, s2) = (c / sd, c % sd);
        rho[(n2 * sd + s, n * sd + s2)]
    })
}

/// Logarithmic negativity (base 2) across cavity | detectors.
pub fn log_negativity_full(state: &FullDensityMatrix) -> f64 {
    let pt = cavity_partial_transpose(&state.rho, state.n_max + 1);
    trace_norm(&pt).log2()
}

/// Logarithmic negativity (base 2) across cavity | detectors of a
/// permutation-symmetric state. The partial transpose acts inside each
/// spin block, so `||rho^T_c||_1 = sum_j d_j ||rho_j^T_c||_1` and no
/// product-space reconstruction is needed.
pub fn log_negativity_blocks(state: &BlockDensityMatrix) -> f64 {
    let total: f64 = state
        .blocks
        .iter()
        .map(|b| b.degeneracy * trace_norm(&cavity_partial_transpose(&b.rho, state.n_max + 1)))
        .sum();
    total.log2()
}

pub fn log_negativity(state: &DensityState) -> f64 {
    match state {
        DensityState::Full(s) => log_negativity_full(s),
        DensityState::Blocks(s) => log_negativity_blocks(s),
    }
}

/// Generalized Laguerre polynomials `L_n^{(k)}(x)` for `n = 0..=n_max`.
fn laguerre_all(n_max: usize, k: usize, x: f64) -> Vec<f64> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(1.0 + kf - x);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * out[n] - (nf + kf) * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// Wigner function of a cavity state at `alpha`, normalized so that the
/// integral over `d Re(alpha) d Im(alpha)` is one (vacuum peak `2 / pi`).
pub fn wigner_point(cav: &CMatrix, alpha: Complex64) -> f64 {
    let dim = cav.nrows();
    let r2 = alpha.norm_sqr();
    let x = 4.0 * r2;
    let gauss = (-2.0 * r2).exp();
    let two_conj = 2.0 * alpha.conj();
    let mut w = 0.0;
    for k in 0..dim {
        let lag = laguerre_all(dim - 1 - k, k, x);
        // sqrt(n! / (n + k)!) (2 alpha*)^k, built incrementally in n
        let mut pow = Complex64::new(1.0, 0.0);
        for _ in 0..k {
            pow *= two_conj;
        }
        let mut ratio = 1.0;
        for i in 1..=k {
            ratio /= (i as f64).sqrt();
        }
        for n in 0..dim - k {
            if n > 0 {
                ratio *= (n as f64 / (n + k) as f64).sqrt();
            }
            let m = n + k;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let basis = pow * (sign * ratio * lag[n]);
            if k == 0 {
                w += cav[(n, n)].re * basis.re;
            } else {
                w += 2.0 * (cav[(m, n)] * basis).re;
            }
        }
    }
    w * gauss * 2.0 / std::f64::consts::PI
}

/// Rectangular grid in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            re_min: -half_width,
            re_max: half_width,
            n_re: points,
            im_min: -half_width,
            im_max: half_width,
            n_im: points,
        }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.n_re)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.n_im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `values[(i, j)] = W(re[j] + i im[i])`
    pub values: DMatrix<f64>,
    /// Trapezoidal estimate of the integral of W over the grid.
    pub normalization: f64,
}

impl WignerGrid {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Evaluate W on `spec` without checking the normalization.
pub fn wigner_unchecked(cav: &CMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    if spec.n_re < 2 || spec.n_im < 2 || !(spec.re_max > spec.re_min) || !(spec.im_max > spec.im_min) {
        return Err(DickeError::InvalidParameter {
            name: "grid",
            reason: "need at least 2 points and a positive extent on each axis".into(),
        });
    }
    let re = spec.re_axis();
    let im = spec.im_axis();
    let rows: Vec<Vec<f64>> = im
        .par_iter()
        .map(|&y| re.iter().map(|&x| wigner_point(cav, Complex64::new(x, y))).collect())
        .collect();
    let values = DMatrix::from_fn(im.len(), re.len(), |i, j| rows[i][j]);
    let wr = trapezoid_weights(&re);
    let wi = trapezoid_weights(&im);
    let mut normalization = 0.0;
    for (i, wy) in wi.iter().enumerate() {
        for (j, wx) in wr.iter().enumerate() {
            normalization += wy * wx * values[(i, j)];
        }
    }
    Ok(WignerGrid {
        spec: *spec,
        re,
        im,
        values,
        normalization,
    })
}

/// Evaluate W on `spec`; fails when the grid misses part of the state.
pub fn wigner(cav: &CMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    let grid = wigner_unchecked(cav, spec)?;
    if (grid.normalization - 1.0).abs() > 1e-3 {
        return Err(DickeError::WignerNormalization {
            normalization: grid.normalization,
        });
    }
    Ok(grid)
}

/// Square grid wide enough for a state with photons up to `n_max`.
pub fn default_grid(cav: &CMatrix, points: usize) -> GridSpec {
    let n_eff = (0..cav.nrows())
        .rev()
        .find(|&n| cav[(n, n)].re > 1e-10)
        .unwrap_or(0) as f64;
    GridSpec::square((n_eff + 1.0).sqrt() + 3.0, points)
}

/// Largest `|W(alpha) - W(e^{i theta} alpha)|` over the points of `grid`,
/// with both values evaluated exactly rather than interpolated.
pub fn rotation_asymmetry(cav: &CMatrix, grid: &WignerGrid, theta: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, theta);
    let rows: Vec<f64> = grid
        .im
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            grid.re
                .iter()
                .enumerate()
                .map(|(j, &x)| (grid.values[(i, j)] - wigner_point(cav, rot * Complex64::new(x, y))).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    rows.into_iter().fold(0.0, f64::max)
}

/// `W` along the positive real axis at `points` radii in `[0, r_max]`.
pub fn radial_profile(cav: &CMatrix, r_max: f64, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|i| {
            let r = r_max * i as f64 / (points.max(2) - 1) as f64;
            (r, wigner_point(cav, Complex64::new(r, 0.0)))
        })
        .collect()
}

/// Root-mean-square radius `sqrt(<|alpha|^2>_W) = sqrt(<n> + 1/2)`.
pub fn rms_radius(cav: &CMatrix) -> f64 {
    (photon_number_cavity(cav) + 0.5).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstSummary {
    /// Value at the first local maximum, absent without a burst.
    pub peak_value: Option<f64>,
    /// Time of the first local maximum.
    pub t_d: Option<f64>,
    /// Mean over the final 10% of the samples.
    pub steady_value: f64,
    /// False when the final window varies by more than 1%.
    pub steady_state_reached: bool,
    pub alpha_fit: Option<f64>,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(t: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (t[1] - t[0]);
    let d2 = (y[2] - y[1]) / (t[2] - t[1]);
    let a = (d2 - d1) / (t[2] - t[0]);
    if a >= 0.0 {
        return (t[1], y[1]);
    }
    let b = d1 - a * (t[0] + t[1]);
    let tv = (-b / (2.0 * a)).clamp(t[0], t[2]);
    let yv = y[0] + d1 * (tv - t[0]) + a * (tv - t[0]) * (tv - t[1]);
    (tv, yv)
}

/// Index of the first local maximum whose drop afterwards exceeds
/// `rel_prominence` of its value.
pub fn first_peak_index(values: &[f64], rel_prominence: f64) -> Option<usize> {
    let n = values.len();
    for i in 1..n.saturating_sub(1) {
        let v = values[i];
        if !(v > values[i - 1] && v >= values[i + 1]) {
            continue;
        }
        let mut low = v;
        for &w in &values[i + 1..] {
            if w > v {
                break;
            }
            low = low.min(w);
        }
        if v - low > rel_prominence * v.abs().max(f64::MIN_POSITIVE) {
            return Some(i);
        }
    }
    None
}

pub fn burst_summary(times: &[f64], values: &[f64]) -> Result<BurstSummary> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(DickeError::InsufficientData(format!(
            "need matching series of at least 3 samples, got {} and {}",
            times.len(),
            values.len()
        )));
    }
    let n = values.len();
    let window = &values[n - (n / 10).max(2)..];
    let steady_value = window.iter().sum::<f64>() / window.len() as f64;
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let steady_state_reached = hi - lo <= 0.01 * steady_value.abs();
    let (peak_value, t_d) = match first_peak_index(values, 1e-6) {
        Some(i) => {
            let (t, y) = parabola_vertex(
                [times[i - 1], times[i], times[i + 1]],
                [values[i - 1], values[i], values[i + 1]],
            );
            (Some(y), Some(t))
        }
        None => (None, None),
    };
    Ok(BurstSummary {
        peak_value,
        t_d,
        steady_value,
        steady_state_reached,
        alpha_fit: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(DickeError::InsufficientData(format!("need >= 3 paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DickeError::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Log-log slope.
    pub alpha: f64,
    pub alpha_stderr: f64,
    /// `y ~ prefactor N^alpha`
    pub prefactor: f64,
    pub log_r_squared: f64,
    /// Linear fit of `y` against `N`.
    pub linear: LinearFit,
    pub points: usize,
}

/// Power-law and linear fits of `(N, y)` pairs; needs five positive points
/// spanning a decade in `N`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 5 {
        return Err(DickeError::InsufficientData(format!("need >= 5 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(DickeError::InsufficientData("all values must be positive and finite".into()));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(DickeError::InsufficientData(format!("points span only a factor {:.3} in N", hi / lo)));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let log = linear_fit(&lx, &ly)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(ScalingFit {
        alpha: log.slope,
        alpha_stderr: log.slope_stderr,
        prefactor: log.intercept.exp(),
        log_r_squared: log.r_squared,
        linear: linear_fit(&xs, &ys)?,
        points: points.len(),
    })
}

/// Index of the largest finite entry.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Sample indices of the Fano peak, the Fano trough after it, and the last sample.
pub fn snapshot_indices(fano: &[Option<f64>]) -> Option<[usize; 3]> {
    let vals: Vec<f64> = fano.iter().map(|f| f.unwrap_or(f64::NAN)).collect();
    let peak = argmax(&vals)?;
    let after: Vec<f64> = vals[peak..].iter().map(|v| -v).collect();
    let trough = peak + argmax(&after)?;
    Some([peak, trough, vals.len() - 1])
}

/// Eigenvalues of a Hermitian cavity state, ascending.
pub fn cavity_spectrum(cav: &CMatrix) -> Vec<f64> {
    let mut ev = hermitian_eigenvalues(cav);
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{project_to_blocks, scrambled_state, symmetrize};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fock(n: usize, n_max: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        m
    }

    #[test]
    fn fano_of_reference_states() {
        assert!(fano_cavity(&fock(3, 6)).unwrap().abs() < 1e-14);
        let coh = coherent_state(Complex64::new(1.2, -0.7), 60);
        assert!((fano_cavity(&coh).unwrap() - 1.0).abs() < 1e-10);
        let th = thermal_state(0.8, 200);
        assert!((photon_number_cavity(&th) - 0.8).abs() < 1e-10);
        assert!((fano_cavity(&th).unwrap() - 1.8).abs() < 1e-10);
        assert!(matches!(fano_cavity(&fock(0, 4)), Err(DickeError::UndefinedFano { .. })));
    }

    #[test]
    fn wigner_reference_values() {
        let vac = fock(0, 5);
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.4), (1.1, 0.2)] {
            let r2: f64 = x * x + y * y;
            let want = 2.0 / PI * (-2.0 * r2).exp();
            assert!((wigner_point(&vac, Complex64::new(x, y)) - want).abs() < 1e-14);
        }
        let one = fock(1, 5);
        assert!((wigner_point(&one, Complex64::new(0.0, 0.0)) + 2.0 / PI).abs() < 1e-14);
        // W_1 = (2/pi)(4|a|^2 - 1) e^{-2|a|^2}
        let a = Complex64::new(0.5, 0.5);
        let want = 2.0 / PI * (4.0 * a.norm_sqr() - 1.0) * (-2.0 * a.norm_sqr()).exp();
        assert!((wigner_point(&one, a) - want).abs() < 1e-14);
    }

    #[test]
    fn wigner_grid_normalization() {
        let coh = coherent_state(Complex64::new(0.8, 0.3), 30);
        let spec = default_grid(&coh, 81);
        let g = wigner(&coh, &spec).unwrap();
        assert!((g.normalization - 1.0).abs() < 1e-3);
        assert!((g.max_abs() - 2.0 / PI).abs() < 0.02);
        let tiny = GridSpec::square(0.3, 11);
        assert!(matches!(wigner(&coh, &tiny), Err(DickeError::WignerNormalization { .. })));
        // Fock and thermal states are phase invariant, a coherent state is not.
        let th = thermal_state(1.5, 40);
        let gt = wigner(&th, &default_grid(&th, 41)).unwrap();
        assert!(rotation_asymmetry(&th, &gt, 0.9) < 1e-14);
        assert!(rotation_asymmetry(&coh, &g, 0.9) > 0.1);
        assert!((rms_radius(&thermal_state(1.5, 120)) - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn log_negativity_of_bell_pair() {
        let mut psi = DVector::from_element(4, Complex64::new(0.0, 0.0));
        psi[1] = Complex64::new(0.5f64.sqrt(), 0.0);
        psi[2] = Complex64::new(0.5f64.sqrt(), 0.0);
        let bell = FullDensityMatrix::from_pure(1, 1, &psi).unwrap();
        assert!((log_negativity_full(&bell) - 1.0).abs() < 1e-12);
        let product = FullDensityMatrix::vacuum_ground(1, 1).unwrap();
        assert!(log_negativity_full(&product).abs() < 1e-12);
    }

    #[test]
    fn block_log_negativity_matches_product_space() {
        for n in 2..=4 {
            let full = symmetrize(&scrambled_state(n, 2, 11 + n as u64).unwrap());
            let blocks = project_to_blocks(&full).unwrap();
            let a = log_negativity_full(&full);
            let b = log_negativity_blocks(&blocks);
            assert!((a - b).abs() < 1e-10, "N = {n}: {a} vs {b}");
        }
    }

    #[test]
    fn burst_of_synthetic_pulse() {
        let times = crate::integrate::linear_grid(0.0, 40.0, 4001);
        let values: Vec<f64> = times.iter().map(|t| t * (1.0 - t).exp() + 0.1).collect();
        let s = burst_summary(&times, &values).unwrap();
        assert!((s.t_d.unwrap() - 1.0).abs() < 1e-4);
        assert!((s.peak_value.unwrap() - 1.1).abs() < 1e-6);
        assert!((s.steady_value - 0.1).abs() < 1e-6);
        assert!(s.steady_state_reached);

        let mono: Vec<f64> = times.iter().map(|t| 1.0 - (-t).exp()).collect();
        let s = burst_summary(&times, &mono).unwrap();
        assert!(s.peak_value.is_none() && s.t_d.is_none());
        assert!(burst_summary(&times[..2], &mono[..2]).is_err());
    }

    #[test]
    fn fits_recover_exact_laws() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|k| {
            let n = 2f64.powi(k);
            (n, 3.0 * n * n)
        }).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!((f.log_r_squared - 1.0).abs() < 1e-12);

        let lin: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64 * 5.0, 0.7 * k as f64 * 5.0)).collect();
        let f = scaling_fit(&lin).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-12);
        assert!((f.linear.slope - 0.7).abs() < 1e-12);
        assert!(f.linear.intercept.abs() < 1e-10);

        assert!(scaling_fit(&pts[..4]).is_err());
        let narrow: Vec<(f64, f64)> = (0..6).map(|k| (10.0 + k as f64, 1.0 + k as f64)).collect();
        assert!(scaling_fit(&narrow).is_err());
    }

    #[test]
    fn snapshots_pick_peak_then_trough() {
        let f = [None, Some(1.0), Some(3.0), Some(2.0), Some(0.5), Some(0.8), Some(0.9)];
        assert_eq!(snapshot_indices(&f), Some([2, 4, 6]));
        assert_eq!(argmax(&[f64::NAN, 1.0, 2.0, 2.0]), Some(2));
    }

    proptest! {
        #[test]
        fn thermal_fano_is_one_plus_mean(nbar in 0.05f64..3.0) {
            let th = thermal_state(nbar, 400);
            prop_assert!((fano_cavity(&th).unwrap() - (1.0 + nbar)).abs() < 1e-8);
        }

        #[test]
        fn coherent_wigner_is_displaced_gaussian(re in -1.5f64..1.5, im in -1.5f64..1.5, x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let alpha = Complex64::new(re, im);
            let coh = coherent_state(alpha, 50);
            let p = Complex64::new(x, y);
            let want = 2.0 / PI * (-2.0 * (p - alpha).norm_sqr()).exp();
            prop_assert!((wigner_point(&coh, p) - want).abs() < 1e-9);
        }
    }
}
