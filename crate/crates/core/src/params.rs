//! Physical inputs, derived rotating-wave couplings and small closed forms.
//!
//! All rates and frequencies are angular (rad/s), lengths in metres and
//! times in seconds. Hamiltonians elsewhere in the crate are expressed in
//! units of hbar, so an energy `hbar * w` is stored as `w`.

use serde::{Deserialize, Serialize};

use crate::error::{DickeError, Result};
use crate::special::{bessel_j0, bessel_j1};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Default relative truncation tolerance for the Lorentz-factor series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Raw model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Cavity angular frequency.
    pub omega_c: f64,
    /// Rest-frame transition angular frequency of each detector.
    pub omega_d0: f64,
    /// Bare detector-cavity coupling.
    pub lambda_0: f64,
    /// Mechanical drive angular frequency.
    pub omega_m: f64,
    /// Oscillation amplitude (m).
    pub amplitude: f64,
    /// Detector count. Carried as a float so moment solvers can take N > 2^64.
    pub n_detectors: f64,
    /// Per-detector oscillation phases; empty means all zero.
    pub phases: Vec<f64>,
    pub gamma_c: f64,
    pub gamma_d: f64,
    /// Cavity Fock truncation (highest retained photon number).
    pub n_max: usize,
    pub c_light: f64,
    pub quality_factor: Option<f64>,
    pub cavity_length: Option<f64>,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            omega_d0: 1.0,
            lambda_0: 0.0,
            omega_m: 2.0,
            amplitude: 0.0,
            n_detectors: 1.0,
            phases: Vec::new(),
            gamma_c: 0.0,
            gamma_d: 0.0,
            n_max: 4,
            c_light: SPEED_OF_LIGHT,
            quality_factor: None,
            cavity_length: None,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> DickeError {
    DickeError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn close_rel(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

impl PhysicalParams {
    /// Dimensionless velocity `Omega_m A / c`.
    pub fn xi(&self) -> f64 {
        self.omega_m * self.amplitude / self.c_light
    }

    /// Cavity wavenumber `omega_c / c`.
    pub fn k_c(&self) -> f64 {
        self.omega_c / self.c_light
    }

    /// Phase of detector `i`, zero when no phases were given.
    pub fn phase(&self, i: usize) -> f64 {
        self.phases.get(i).copied().unwrap_or(0.0)
    }

    /// Detector count as an exact integer, for Hilbert-space solvers.
    pub fn detector_count(&self) -> Result<usize> {
        let n = self.n_detectors;
        if !(n >= 1.0) || n.fract() != 0.0 || n > 1e6 {
            return Err(invalid(
                "n_detectors",
                format!("{n} is not a representable positive integer detector count"),
            ));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_c", self.omega_c),
            ("omega_d0", self.omega_d0),
            ("omega_m", self.omega_m),
            ("c_light", self.c_light),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        let non_negative = [
            ("gamma_c", self.gamma_c),
            ("gamma_d", self.gamma_d),
            ("amplitude", self.amplitude),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        if !self.lambda_0.is_finite() {
            return Err(invalid("lambda_0", "must be finite"));
        }
        if !(self.n_detectors >= 1.0) || !self.n_detectors.is_finite() {
            return Err(invalid("n_detectors", format!("must be >= 1, got {}", self.n_detectors)));
        }
        if !self.phases.is_empty() && self.phases.len() as f64 != self.n_detectors {
            return Err(invalid(
                "phases",
                format!("expected {} phases, got {}", self.n_detectors, self.phases.len()),
            ));
        }
        let xi = self.xi();
        if xi >= 1.0 {
            return Err(DickeError::Superluminal { xi });
        }
        if let Some(q) = self.quality_factor {
            if !(q > 0.0) || !close_rel(self.gamma_c, self.omega_c / q, 1e-12) {
                return Err(invalid(
                    "quality_factor",
                    format!("gamma_c = {} differs from omega_c / Q_c = {}", self.gamma_c, self.omega_c / q),
                ));
            }
        }
        if let Some(l) = self.cavity_length {
            let expected = 2.0 * std::f64::consts::PI * self.c_light / l;
            if !(l > 0.0) || !close_rel(self.omega_c, expected, 1e-12) {
                return Err(invalid(
                    "cavity_length",
                    format!("omega_c = {} differs from 2 pi c / L = {expected}", self.omega_c),
                ));
            }
        }
        Ok(())
    }
}

/// Coefficients of the time-independent rotating-wave reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    pub xi: f64,
    /// Mean reciprocal Lorentz factor.
    pub d0: f64,
    /// Second-harmonic amplitude of the reciprocal Lorentz factor.
    pub d2: f64,
    /// First-harmonic amplitude of the time-dilated sine coupling.
    pub c1: f64,
    /// Modulation index `omega_d0 D2 / (2 Omega_m)`.
    pub modulation_index: f64,
    /// Renormalized transition frequency `omega_d0 D0`.
    pub omega_d: f64,
    /// Effective rotating-wave coupling.
    pub lambda_eff: f64,
    /// `gamma_c gamma_d / (4 lambda^2)`; infinite when the coupling vanishes.
    pub n_crit: f64,
    pub n_crit_defined: bool,
    /// Rigorous bound on the neglected tails of the D0 and D2 series.
    pub truncation_bound: f64,
}

impl DerivedCouplings {
    pub fn n_crit(&self) -> Result<f64> {
        if self.n_crit_defined {
            Ok(self.n_crit)
        } else {
            Err(DickeError::ZeroCoupling)
        }
    }
}

/// Mean and second-harmonic Fourier coefficients of `sqrt(1 - xi^2 sin^2 theta)`,
/// plus a bound on the truncated tails.
///
/// Both series have term ratios bounded by `xi^2`, so the tail after the last
/// included term `t` is at most `|t| xi^2 / (1 - xi^2)`.
pub fn lorentz_series(xi: f64, tol: f64) -> (f64, f64, f64) {
    let q = 0.25 * xi * xi;
    let mut a = 1.0; // (-1)^n C(1/2, n) C(2n, n) q^n
    let mut d0 = 1.0;
    let mut d2 = 0.0;
    let mut last0: f64 = 0.0;
    let mut last2: f64 = 0.0;
    let mut done0 = false;
    let mut done2 = false;
    let mut n = 1usize;
    while !(done0 && done2) && n < 1_000_000 {
        let nf = n as f64;
        a *= (nf - 1.5) * 2.0 * (2.0 * nf - 1.0) * q / (nf * nf);
        let u = -2.0 * a * nf / (nf + 1.0);
        if !done0 {
            d0 += a;
            last0 = a;
            done0 = a.abs() < tol * d0.abs() || a == 0.0;
        }
        if !done2 {
            d2 += u;
            last2 = u;
            done2 = u.abs() < tol * d2.abs() || u == 0.0;
        }
        n += 1;
    }
    let ratio = if xi > 0.0 { xi * xi / (1.0 - xi * xi) } else { 0.0 };
    let bound = last0.abs().max(last2.abs()) * ratio;
    (d0, d2, bound)
}

/// Derive the rotating-wave coefficients from the raw inputs.
pub fn derive_couplings(p: &PhysicalParams, tol: f64) -> Result<DerivedCouplings> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(invalid("tol", format!("must lie in (0, 1e-6], got {tol}")));
    }
    p.validate()?;
    let xi = p.xi();
    let (d0, d2, truncation_bound) = lorentz_series(xi, tol);
    let c1 = 2.0 * bessel_j1(p.omega_c * xi / p.omega_m);
    let modulation_index = p.omega_d0 * d2 / (2.0 * p.omega_m);
    let omega_d = p.omega_d0 * d0;
    let lambda_eff =
        0.5 * p.lambda_0 * c1 * (bessel_j0(modulation_index) - bessel_j1(modulation_index));
    let (n_crit, n_crit_defined) = if lambda_eff != 0.0 {
        (critical_number(p.gamma_c, p.gamma_d, lambda_eff), true)
    } else {
        (f64::INFINITY, false)
    };
    Ok(DerivedCouplings {
        xi,
        d0,
        d2,
        c1,
        modulation_index,
        omega_d,
        lambda_eff,
        n_crit,
        n_crit_defined,
        truncation_bound,
    })
}

/// `gamma_c gamma_d / (4 lambda^2)`.
pub fn critical_number(gamma_c: f64, gamma_d: f64, lambda: f64) -> f64 {
    gamma_c * gamma_d / (4.0 * lambda * lambda)
}

/// Temperature seen by a uniformly accelerating detector, `hbar a / (2 pi c k_B)`.
pub fn unruh_temperature(acceleration: f64) -> f64 {
    debug_assert!(acceleration >= 0.0);
    HBAR * acceleration / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * BOLTZMANN)
}

/// Parameters of the time-independent rotating-wave model shared by the
/// block, cumulant and Holstein-Primakoff solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaModel {
    pub n_detectors: f64,
    pub lambda: f64,
    pub gamma_c: f64,
    pub gamma_d: f64,
}

impl RwaModel {
    pub fn new(n_detectors: f64, lambda: f64, gamma_c: f64, gamma_d: f64) -> Self {
        Self {
            n_detectors,
            lambda,
            gamma_c,
            gamma_d,
        }
    }

    pub fn from_physical(p: &PhysicalParams, dc: &DerivedCouplings) -> Self {
        Self::new(p.n_detectors, dc.lambda_eff, p.gamma_c, p.gamma_d)
    }

    /// Rates chosen so that the critical detector number equals `n_crit`.
    pub fn with_critical_number(n_detectors: f64, n_crit: f64, gamma_c: f64, gamma_d: f64) -> Self {
        let lambda = (gamma_c * gamma_d / (4.0 * n_crit)).sqrt();
        Self::new(n_detectors, lambda, gamma_c, gamma_d)
    }

    pub fn n_crit(&self) -> f64 {
        critical_number(self.gamma_c, self.gamma_d, self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_detectors >= 1.0) || !self.n_detectors.is_finite() {
            return Err(invalid("n_detectors", format!("must be >= 1, got {}", self.n_detectors)));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite"));
        }
        for (name, v) in [("gamma_c", self.gamma_c), ("gamma_d", self.gamma_d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Simpson average of sqrt(1 - xi^2 sin^2) over one period.
    fn quadrature_d0(xi: f64) -> f64 {
        let n = 20_000;
        let h = 2.0 * PI / n as f64;
        let f = |t: f64| (1.0 - xi * xi * t.sin().powi(2)).sqrt();
        let mut s = f(0.0) + f(2.0 * PI);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 / (2.0 * PI)
    }

    fn nv_params() -> PhysicalParams {
        let omega_c = 2.0 * PI * 3.2e9;
        let omega_d0 = 2.0 * PI * 2.87e9;
        PhysicalParams {
            omega_c,
            omega_d0,
            lambda_0: 2.0 * PI * 0.070,
            omega_m: omega_c + omega_d0,
            amplitude: 1e-10,
            n_detectors: 1e16,
            gamma_c: 2e4,
            gamma_d: 2e-4,
            ..Default::default()
        }
    }

    #[test]
    fn static_detectors_have_no_coupling() {
        let p = PhysicalParams {
            lambda_0: 0.3,
            gamma_c: 0.1,
            gamma_d: 0.1,
            ..Default::default()
        };
        let dc = derive_couplings(&p, DEFAULT_SERIES_TOL).unwrap();
        assert_eq!(dc.d0, 1.0);
        assert_eq!(dc.d2, 0.0);
        assert_eq!(dc.c1, 0.0);
        assert_eq!(dc.lambda_eff, 0.0);
        assert!(!dc.n_crit_defined);
        assert!(dc.n_crit.is_infinite());
        assert_eq!(dc.n_crit(), Err(DickeError::ZeroCoupling));
    }

    #[test]
    fn nv_membrane_coupling() {
        let p = nv_params();
        let dc = derive_couplings(&p, DEFAULT_SERIES_TOL).unwrap();
        assert!((dc.lambda_eff - 1.5e-9).abs() < 0.05e-9, "lambda = {}", dc.lambda_eff);
        let linear = p.lambda_0 * p.omega_c * p.amplitude / (2.0 * p.c_light);
        assert!(((dc.lambda_eff - linear) / dc.lambda_eff).abs() < 1e-4);
        let n_crit = critical_number(2e4, 2e-4, 1.5e-9);
        assert!((n_crit / (4.0 / 9.0 * 1e18) - 1.0).abs() < 1e-12);
        assert_eq!((n_crit / 1e17).round(), 4.0);
        assert!((dc.n_crit / 4e17) > 1.0 && (dc.n_crit / 4e17) < 1.2);
    }

    #[test]
    fn d0_at_half_light_speed() {
        let (d0, _, _) = lorentz_series(0.5, DEFAULT_SERIES_TOL);
        let oracle = quadrature_d0(0.5);
        assert!((d0 - 0.9342).abs() < 5e-5);
        assert!(((d0 - oracle) / oracle).abs() < 1e-9, "{d0} vs {oracle}");
    }

    #[test]
    fn d0_matches_quadrature_across_xi() {
        for &xi in &[1e-3, 0.1, 0.3, 0.7, 0.9, 0.95] {
            let (d0, _, _) = lorentz_series(xi, DEFAULT_SERIES_TOL);
            let oracle = quadrature_d0(xi);
            assert!(((d0 - oracle) / oracle).abs() < 1e-9, "xi = {xi}: {d0} vs {oracle}");
        }
    }

    #[test]
    fn d2_matches_cosine_projection() {
        let xi = 0.8;
        let (_, d2, _) = lorentz_series(xi, DEFAULT_SERIES_TOL);
        let n = 20_000;
        let h = 2.0 * PI / n as f64;
        let proj: f64 = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                (1.0 - xi * xi * t.sin().powi(2)).sqrt() * (2.0 * t).cos()
            })
            .sum::<f64>()
            * h
            / PI;
        assert!((d2 - proj).abs() < 1e-12, "{d2} vs {proj}");
    }

    #[test]
    fn unit_critical_number() {
        assert_eq!(critical_number(0.02, 0.02, 0.01), 1.0);
        let m = RwaModel::new(15.0, 0.01, 0.02, 0.02);
        assert!((m.n_crit() - 1.0).abs() < 1e-12);
        let back = RwaModel::with_critical_number(3.0, 1e6, 2.0, 1.0);
        assert!((back.n_crit() / 1e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unruh_temperatures() {
        assert_eq!(unruh_temperature(0.0), 0.0);
        let t1 = unruh_temperature(2.47e20);
        assert!((t1 - 1.0).abs() < 0.01, "{t1}");
        let t2 = unruh_temperature(2.0 * 2.47e20);
        assert!((t2 - 2.0 * t1).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let superluminal = PhysicalParams {
            amplitude: 1.0,
            c_light: 1.0,
            omega_m: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            derive_couplings(&superluminal, 1e-12),
            Err(DickeError::Superluminal { .. })
        ));
        let bad_tol = derive_couplings(&PhysicalParams::default(), 1e-3);
        assert!(matches!(bad_tol, Err(DickeError::InvalidParameter { name: "tol", .. })));
        let bad_q = PhysicalParams {
            gamma_c: 1.0,
            quality_factor: Some(10.0),
            ..Default::default()
        };
        assert!(bad_q.validate().is_err());
        let good_q = PhysicalParams {
            gamma_c: 0.1,
            quality_factor: Some(10.0),
            ..Default::default()
        };
        assert!(good_q.validate().is_ok());
        let l = 2.0 * PI * SPEED_OF_LIGHT / 3.0;
        let good_l = PhysicalParams {
            omega_c: 3.0,
            cavity_length: Some(l),
            ..Default::default()
        };
        assert!(good_l.validate().is_ok());
        let bad_l = PhysicalParams {
            omega_c: 3.1,
            cavity_length: Some(l),
            ..Default::default()
        };
        assert!(bad_l.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn d0_bounded_and_non_increasing(a in 0.0f64..0.98, b in 0.0f64..0.98) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let (d_lo, _, _) = lorentz_series(lo, DEFAULT_SERIES_TOL);
                let (d_hi, _, _) = lorentz_series(hi, DEFAULT_SERIES_TOL);
                prop_assert!(d_hi > 0.0 && d_lo <= 1.0);
                prop_assert!(d_hi <= d_lo + 1e-15);
            }

            #[test]
            fn halving_tolerance_stays_within_bound(xi in 0.0f64..0.97, e in 7.0f64..13.0) {
                let tol = 10f64.powf(-e);
                let (d0a, d2a, bound) = lorentz_series(xi, tol);
                let (d0b, d2b, _) = lorentz_series(xi, tol / 2.0);
                prop_assert!((d0a - d0b).abs() <= bound + 1e-16);
                prop_assert!((d2a - d2b).abs() <= bound + 1e-16);
            }

            #[test]
            fn small_xi_coupling_is_linear(xi in 1e-7f64..1e-4) {
                let omega_c = 1.0;
                let omega_m = 2.0;
                let p = PhysicalParams {
                    omega_c,
                    omega_d0: 1.0,
                    lambda_0: 0.5,
                    omega_m,
                    amplitude: xi * SPEED_OF_LIGHT / omega_m,
                    ..Default::default()
                };
                let dc = derive_couplings(&p, DEFAULT_SERIES_TOL).unwrap();
                let linear = p.lambda_0 * omega_c * p.amplitude / (2.0 * p.c_light);
                prop_assert!(((dc.lambda_eff - linear) / dc.lambda_eff).abs() <= 1e-4);
            }
        }
    }
}
