use crate::error::{DickeError, Result};
use crate::linalg::{c, kron, CMatrix};
use crate::operators::{build_fock_ops, build_pauli_ops, cavity_op, collective_ops, spin_op, DickeOps, FockOps};
use crate::params::PhysicalParams;

/// Reciprocal Lorentz factor `d tau / d t = sqrt(1 - xi^2 sin^2 theta)`.
pub fn lorentz_factor(xi: f64, theta: f64) -> f64 {
    let s = theta.sin();
    (1.0 - xi * xi * s * s).sqrt()
}

/// Coefficient of `(a + a^dag) sigma_i^x` for a detector at drive phase
/// `theta = Omega_m t + phi_i`.
pub fn coupling_coefficient(p: &PhysicalParams, theta: f64) -> f64 {
    p.lambda_0 * lorentz_factor(p.xi(), theta) * (p.k_c() * p.amplitude * theta.cos()).sin()
}

/// Lab-frame Hamiltonian at time `t` on cavity (x) N detectors (N <= 4).
pub fn hamiltonian_full(t: f64, p: &PhysicalParams) -> Result<CMatrix> {
    p.validate()?;
    let xi = p.xi();
    if xi >= 1.0 {
        return Err(DickeError::Superluminal { xi });
    }
    let n = p.detector_count()?;
    let fock = build_fock_ops(p.n_max);
    let spin_dim = 1usize << n;
    let field = &fock.a + &fock.a_dag;
    let mut h = cavity_op(&fock.number, spin_dim) * c(p.omega_c);
    for site in 0..n {
        let ops = build_pauli_ops(n, site)?;
        let theta = p.omega_m * t + p.phase(site);
        let sx = &ops.plus + &ops.minus;
        h += spin_op(&ops.z, p.n_max) * c(0.5 * p.omega_d0 * lorentz_factor(xi, theta));
        h += kron(&field, &sx) * c(coupling_coefficient(p, theta));
    }
    Ok(h)
}

/// `lambda (a^dag J^+ + a J^-)` for the given cavity and spin operators.
pub fn hamiltonian_rwa(lambda: f64, fock: &FockOps, spin: &DickeOps) -> CMatrix {
    (kron(&fock.a_dag, &spin.j_plus) + kron(&fock.a, &spin.j_minus)) * c(lambda)
}

/// Rotating-wave Hamiltonian on the product space of N detectors.
pub fn hamiltonian_rwa_full(lambda: f64, n: usize, n_max: usize) -> Result<CMatrix> {
    Ok(hamiltonian_rwa(lambda, &build_fock_ops(n_max), &collective_ops(n)?))
}

/// `lambda (a^dag J^- + a J^+)` on the product space.
pub fn tavis_cummings_full(lambda: f64, n: usize, n_max: usize) -> Result<CMatrix> {
    let fock = build_fock_ops(n_max);
    let spin = collective_ops(n)?;
    Ok((kron(&fock.a_dag, &spin.j_minus) + kron(&fock.a, &spin.j_plus)) * c(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_deviation, max_abs, ZERO};
    use crate::operators::build_dicke_ops;
    use crate::params::{derive_couplings, DEFAULT_SERIES_TOL};
    use std::f64::consts::PI;

    fn moving(n: usize, xi: f64) -> PhysicalParams {
        PhysicalParams {
            omega_c: 1.0,
            omega_d0: 1.3,
            lambda_0: 0.7,
            omega_m: 2.0,
            amplitude: xi / 2.0,
            c_light: 1.0,
            n_detectors: n as f64,
            phases: vec![0.0, 0.4, 1.1][..n.min(3)].to_vec(),
            n_max: 3,
            ..Default::default()
        }
    }

    #[test]
    fn static_detectors_decouple() {
        let p = PhysicalParams {
            n_detectors: 2.0,
            omega_d0: 1.5,
            lambda_0: 0.3,
            n_max: 2,
            ..Default::default()
        };
        let h = hamiltonian_full(0.37, &p).unwrap();
        let fock = build_fock_ops(2);
        let spin = collective_ops(2).unwrap();
        let want = cavity_op(&fock.number, 4) + spin_op(&spin.j_z, 2) * c(1.5);
        assert!(max_abs(&(h - want)) < 1e-15);
    }

    #[test]
    fn lorentz_factor_at_turning_velocity() {
        assert!((lorentz_factor(0.9, PI / 2.0) - 0.19f64.sqrt()).abs() < 1e-15);
        assert!((0.19f64.sqrt() - 0.43589).abs() < 1e-5);
    }

    #[test]
    fn full_hamiltonian_is_hermitian() {
        for n in 1..=3 {
            let p = moving(n, 0.6);
            for t in [0.0, 0.3, 1.7, 10.0] {
                let h = hamiltonian_full(t, &p).unwrap();
                assert!(hermiticity_deviation(&h) < 1e-14);
            }
        }
        let mut p = moving(1, 0.5);
        p.amplitude = 1.0; // xi = 2
        assert!(hamiltonian_full(0.0, &p).is_err());
    }

    #[test]
    fn period_average_of_splitting_is_renormalized_frequency() {
        let p = moving(1, 0.8);
        let dc = derive_couplings(&p, DEFAULT_SERIES_TOL).unwrap();
        let steps = 4096;
        let period = 2.0 * PI / p.omega_m;
        let mean = (0..steps)
            .map(|i| p.omega_d0 * lorentz_factor(p.xi(), p.omega_m * period * i as f64 / steps as f64))
            .sum::<f64>()
            / steps as f64;
        assert!((mean - dc.omega_d).abs() < 1e-11, "{mean} vs {}", dc.omega_d);
    }

    #[test]
    fn rwa_elements() {
        let fock = build_fock_ops(3);
        let zero = hamiltonian_rwa(0.0, &fock, &build_dicke_ops(2));
        assert!(zero.iter().all(|z| *z == ZERO));
        let h = hamiltonian_rwa(0.25, &build_fock_ops(1), &build_dicke_ops(1));
        // basis |n, k>: index 2n + k; <1, e|H|0, g> = lambda
        assert!((h[(3, 0)] - c(0.25)).norm() < 1e-15);
        assert_eq!(h[(0, 0)], ZERO);
        assert!(hermiticity_deviation(&h) < 1e-15);
        // couples only (n, k) to (n + 1, k + 1)
        let h = hamiltonian_rwa(1.0, &fock, &build_dicke_ops(3));
        for r in 0..16 {
            for s in 0..16 {
                if h[(r, s)] != ZERO {
                    let (n1, k1, n2, k2) = (r / 4, r % 4, s / 4, s % 4);
                    assert_eq!(n1 as i64 - k1 as i64, n2 as i64 - k2 as i64);
                    assert_eq!((n1 as i64 - n2 as i64).abs(), 1);
                }
            }
        }
    }
}
