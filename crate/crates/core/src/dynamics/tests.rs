use super::*;
use crate::integrate::linear_grid;
use crate::linalg::{max_abs, CMatrix};
use crate::operators::{
    project_to_blocks, scrambled_state, symmetrize, BlockDensityMatrix, FullDensityMatrix,
};

fn max_block_diff(a: &BlockDensityMatrix, b: &BlockDensityMatrix) -> f64 {
    a.blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| max_abs(&(&x.rho - &y.rho)))
        .fold(0.0, f64::max)
}

fn dissipator_only(gamma_d: f64, channel: SpinChannel) -> LindbladSpec {
    LindbladSpec {
        hamiltonian: HamiltonianKind::Rwa {
            lambda: 0.0,
            resonance_imposed: true,
        },
        gamma_c: 0.0,
        gamma_d,
        spin_channel: channel,
    }
}

fn as_blocks_derivative(full: &FullDensityMatrix, d: CMatrix) -> BlockDensityMatrix {
    // the derivative of a symmetric state is symmetric; reuse the projection
    let mut shifted = full.clone();
    shifted.rho = d;
    project_blocks_unchecked(&shifted)
}

fn project_blocks_unchecked(m: &FullDensityMatrix) -> BlockDensityMatrix {
    project_to_blocks(m).expect("symmetric")
}

#[test]
fn single_detector_dissipator_is_plain_decay() {
    let full = scrambled_state(1, 2, 3).unwrap();
    let blocks = project_to_blocks(&full).unwrap();
    let got = local_dissipator_blocks(1, 0.7).apply(&blocks).unwrap();
    let want = lindblad_action_full(&dissipator_only(0.7, SpinChannel::Lowering), &full, 0.0).unwrap();
    let want = as_blocks_derivative(&full, want);
    assert!(max_block_diff(&got, &want) < 1e-14);
}

#[test]
fn block_dissipator_matches_brute_force() {
    for n in [2usize, 3, 4] {
        for channel in [SpinChannel::Lowering, SpinChannel::Raising] {
            let full = symmetrize(&scrambled_state(n, 1, 11 + n as u64).unwrap());
            let blocks = project_to_blocks(&full).unwrap();
            let got = BlockDissipator::new(n, 0.3, channel).apply(&blocks).unwrap();
            let d = lindblad_action_full(&dissipator_only(0.3, channel), &full, 0.0).unwrap();
            let want = as_blocks_derivative(&full, d);
            let diff = max_block_diff(&got, &want);
            assert!(diff < 1e-9, "N = {n}, {channel:?}: {diff:e}");
            assert!(got.trace().abs() < 1e-14);
        }
    }
}

#[test]
fn ground_state_is_dark() {
    for n in [1usize, 2, 5, 8] {
        let ground = BlockDensityMatrix::vacuum_ground(n, 2).unwrap();
        let d = local_dissipator_blocks(n, 1.0).apply(&ground).unwrap();
        assert!(d.blocks.iter().all(|b| max_abs(&b.rho) < 1e-15), "N = {n}");
    }
}

#[test]
fn block_liouvillian_matches_brute_force() {
    for n in [2usize, 3] {
        for spec in [LindbladSpec::rwa(0.13, 0.4, 0.25), LindbladSpec::tavis_cummings(0.13, 0.4, 0.25)] {
            let full = symmetrize(&scrambled_state(n, 2, 5).unwrap());
            let blocks = project_to_blocks(&full).unwrap();
            let liou = BlockLiouvillian::new(&spec, &blocks).unwrap();
            let got = liou.apply_dense(&blocks);
            let want = as_blocks_derivative(&full, lindblad_action_full(&spec, &full, 0.0).unwrap());
            assert!(max_block_diff(&got, &want) < 1e-12);
            // a generic state activates every entry, so the sparse form is complete
            let total: usize = blocks.blocks.iter().map(|b| b.rho.len()).sum();
            assert_eq!(liou.len(), total);
            let mut dy = vec![0.0; 2 * liou.len()];
            liou.rhs(&liou.gather(&blocks), &mut dy);
            let mut sparse = blocks.clone();
            liou.scatter(&dy, &mut sparse);
            assert!(max_block_diff(&sparse, &got) < 1e-14);
        }
    }
}

#[test]
fn canonical_state_activates_one_charge_sector() {
    let ground = BlockDensityMatrix::vacuum_ground(6, 8).unwrap();
    let liou = BlockLiouvillian::new(&LindbladSpec::rwa(0.01, 0.02, 0.02), &ground).unwrap();
    let total: usize = ground.blocks.iter().map(|b| b.rho.len()).sum();
    assert!(liou.len() * 5 < total, "{} of {total}", liou.len());
}

#[test]
fn uncoupled_undamped_state_is_stationary() {
    let spec = LindbladSpec::rwa(0.0, 0.0, 0.0);
    let grid = linear_grid(0.0, 50.0, 6);
    for rho0 in [
        DensityState::Full(FullDensityMatrix::vacuum_ground(2, 3).unwrap()),
        DensityState::Blocks(BlockDensityMatrix::vacuum_ground(4, 3).unwrap()),
    ] {
        let rec = evolve(&spec, &rho0, &grid, &EvolveOptions::default()).unwrap();
        assert_eq!(rec.final_state, rho0);
        assert!(rec.samples.iter().all(|s| s.photon_number == 0.0 && s.sigma_z == -1.0));
    }
}

#[test]
fn single_detector_rabi_oscillation() {
    let lambda = 0.3;
    let spec = LindbladSpec::rwa(lambda, 0.0, 0.0);
    let grid = linear_grid(0.0, 20.0, 41);
    let opts = EvolveOptions {
        truncation_limit: 1.0,
        ..Default::default()
    };
    for rho0 in [
        DensityState::Full(FullDensityMatrix::vacuum_ground(1, 2).unwrap()),
        DensityState::Blocks(BlockDensityMatrix::vacuum_ground(1, 2).unwrap()),
    ] {
        let rec = evolve(&spec, &rho0, &grid, &opts).unwrap();
        for s in &rec.samples {
            let want = (lambda * s.t).sin().powi(2);
            assert!((s.photon_number - want).abs() < 1e-7, "t = {}", s.t);
            assert!((s.trace - 1.0).abs() < 1e-8);
            assert!(s.hermiticity < 1e-10);
        }
    }
}

#[test]
fn block_and_full_agree_with_damping() {
    let spec = LindbladSpec::rwa(0.01, 0.02, 0.02);
    let grid = linear_grid(0.0, 100.0, 51);
    let opts = EvolveOptions::default();
    let full = evolve(&spec, &DensityState::Full(FullDensityMatrix::vacuum_ground(2, 10).unwrap()), &grid, &opts).unwrap();
    let blocks = evolve(&spec, &DensityState::Blocks(BlockDensityMatrix::vacuum_ground(2, 10).unwrap()), &grid, &opts).unwrap();
    for (a, b) in full.samples.iter().zip(&blocks.samples) {
        assert!((a.photon_number - b.photon_number).abs() < 1e-8);
        assert!((a.sigma_z - b.sigma_z).abs() < 1e-8);
        assert!((a.s.unwrap() - b.s.unwrap()).abs() < 1e-8);
        assert!((a.x - b.x).norm() < 1e-8);
        assert!(b.selection_rule_violation() < 1e-12);
        assert!(a.selection_rule_violation() < 1e-10);
    }
}

#[test]
fn tavis_cummings_form_is_equivalent() {
    let grid = linear_grid(0.0, 150.0, 31);
    let opts = EvolveOptions::default();
    for n in [1usize, 2, 3] {
        let rwa = LindbladSpec::rwa(0.05, 0.03, 0.02);
        let tc = LindbladSpec::tavis_cummings(0.05, 0.03, 0.02);
        let ground = BlockDensityMatrix::vacuum_ground(n, 12).unwrap();
        let mut excited = ground.clone();
        excited.blocks[0].rho[(0, 0)] = crate::linalg::ZERO;
        excited.blocks[0].rho[(n, n)] = crate::linalg::ONE;
        let a = evolve(&rwa, &DensityState::Blocks(ground), &grid, &opts).unwrap();
        let b = evolve(&tc, &DensityState::Blocks(excited), &grid, &opts).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.photon_number - y.photon_number).abs() < 1e-8, "N = {n}, t = {}", x.t);
            assert!((x.sigma_z + y.sigma_z).abs() < 1e-8);
        }
    }
}

#[test]
fn truncation_violation_aborts() {
    let spec = LindbladSpec::rwa(0.5, 0.0, 0.0);
    let rho0 = DensityState::Blocks(BlockDensityMatrix::vacuum_ground(4, 2).unwrap());
    let err = evolve(&spec, &rho0, &linear_grid(0.0, 10.0, 11), &EvolveOptions::default()).unwrap_err();
    assert!(matches!(err, crate::DickeError::Truncation { .. }));
}

#[test]
fn time_dependent_full_is_rejected_on_blocks() {
    let spec = LindbladSpec::full(crate::params::PhysicalParams::default());
    let rho0 = DensityState::Blocks(BlockDensityMatrix::vacuum_ground(2, 2).unwrap());
    assert!(evolve(&spec, &rho0, &[0.0, 1.0], &EvolveOptions::default()).is_err());
}

#[test]
fn full_system_hamiltonian_matches_direct_construction() {
    let p = crate::params::PhysicalParams {
        omega_c: 1.0,
        omega_d0: 1.1,
        lambda_0: 0.4,
        omega_m: 2.0,
        amplitude: 0.2,
        c_light: 1.0,
        n_detectors: 2.0,
        phases: vec![0.0, 0.9],
        n_max: 2,
        gamma_c: 0.1,
        gamma_d: 0.05,
        ..Default::default()
    };
    let sys = FullSystem::new(&LindbladSpec::full(p.clone()), 2, 2).unwrap();
    for t in [0.0, 0.7, 3.1] {
        let want = hamiltonian_full(t, &p).unwrap();
        assert!(max_abs(&(sys.hamiltonian(t) - want)) < 1e-14);
    }
}
