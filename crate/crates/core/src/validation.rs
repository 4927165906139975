//! Cross-solver acceptance checks, numbered 1 to 9. Each check runs its
//! own small simulation and reports pass/fail with the measured numbers.
//! Runs shared by several checks are computed once per [`Validator`].

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::cumulant::{
    integrate_moments, steady_state_fourth, steady_state_third, Closure, MomentIntegrator, MomentState,
};
use crate::dynamics::{evolve, EvolveOptions, LindbladSpec, Sample};
use crate::error::{DickeError, Result};
use crate::hp::{hp_dynamics, hp_steady_state, GaussianState};
use crate::integrate::{linear_grid, Tolerances};
use crate::linalg::CMatrix;
use crate::observables::{
    argmax, burst_summary, default_grid, linear_fit, radial_profile, rms_radius, rotation_asymmetry, scaling_fit,
    snapshot_indices, wigner, wigner_point, BurstSummary,
};
use crate::operators::{BlockDensityMatrix, DensityState, FullDensityMatrix};
use crate::params::{derive_couplings, lorentz_series, PhysicalParams, RwaModel};

/// Coupling and rates of the N = 15 burst run.
pub const BURST_LAMBDA: f64 = 0.01;
pub const BURST_GAMMA: f64 = 0.02;
pub const BURST_T_FINAL: f64 = 600.0;
pub const BURST_SAMPLES: usize = 601;
pub const BURST_N_MAX: usize = 28;

/// Rates of the large-N scaling sweep and its critical number.
pub const LARGE_N_GAMMA_C: f64 = 2e4;
pub const LARGE_N_GAMMA_D: f64 = 2e-4;
pub const LARGE_N_N_CRIT: f64 = 4.4e17;

pub const ALL_CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];
pub const DEFAULT_CRITERIA: [u8; 4] = [1, 2, 4, 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Default,
    Full,
}

impl Profile {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Profile::Default => &DEFAULT_CRITERIA,
            Profile::Full => &ALL_CRITERIA,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = DickeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Profile::Default),
            "full" => Ok(Profile::Full),
            other => Err(DickeError::InvalidParameter {
                name: "profile",
                reason: format!("unknown profile {other:?}, expected \"default\" or \"full\""),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] criterion {}: {} ({:.1} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "block solver equals product-space solver",
        2 => "rotating-wave reduction tracks the lab-frame Hamiltonian",
        3 => "fourth-order cumulants reproduce the N = 15 burst",
        4 => "third-order closed-form steady state",
        5 => "large-N threshold and burst scaling",
        6 => "Holstein-Primakoff amplifier",
        7 => "entanglement follows the Fano factor",
        8 => "Wigner snapshots",
        9 => "phase-symmetry selection rules",
        _ => "unknown criterion",
    }
}

/// The N = 15 master-equation run and its fourth-order cumulant counterpart.
#[derive(Debug, Clone)]
pub struct BurstRun {
    pub times: Vec<f64>,
    pub samples: Vec<Sample>,
    pub cavity_states: Vec<CMatrix>,
    pub summary: BurstSummary,
    pub cumulant_photons: Vec<f64>,
    pub cumulant_summary: BurstSummary,
}

#[derive(Debug, Clone)]
struct SmallRun {
    n: usize,
    block: Vec<Sample>,
    full: Vec<Sample>,
}

/// Runs criteria, caching the simulations they share.
#[derive(Default)]
pub struct Validator {
    burst: OnceCell<std::result::Result<BurstRun, String>>,
    small: OnceCell<std::result::Result<Vec<SmallRun>, String>>,
}

struct Check {
    passed: bool,
    parts: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            parts: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.parts.push(if ok { what } else { format!("FAILED {what}") });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

impl Validator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run(&self, id: u8) -> CriterionOutcome {
        let start = Instant::now();
        let result = match id {
            1 => self.criterion_1(),
            2 => criterion_2(),
            3 => self.criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => self.criterion_7(),
            8 => self.criterion_8(),
            9 => self.criterion_9(),
            _ => Err(DickeError::InvalidParameter {
                name: "criterion",
                reason: format!("no criterion {id}"),
            }),
        };
        let (passed, detail) = match result {
            Ok(c) => (c.passed, c.parts.join("; ")),
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionOutcome {
            id,
            title: title(id),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    pub fn run_all(&self, ids: &[u8]) -> Vec<CriterionOutcome> {
        ids.iter().map(|&id| self.run(id)).collect()
    }

    /// The shared N = 15 run, computed on first use.
    pub fn burst_run(&self) -> Result<&BurstRun> {
        self.burst
            .get_or_init(|| reference_burst(15, BURST_N_MAX).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| DickeError::InvalidState(format!("N = 15 run failed: {e}")))
    }

    fn small_runs(&self) -> Result<&[SmallRun]> {
        self.small
            .get_or_init(|| {
                [2usize, 3]
                    .iter()
                    .map(|&n| small_run(n).map_err(|e| e.to_string()))
                    .collect()
            })
            .as_deref()
            .map_err(|e| DickeError::InvalidState(format!("small-N runs failed: {e}")))
    }

    fn criterion_1(&self) -> Result<Check> {
        let mut check = Check::new();
        for run in self.small_runs()? {
            let (mut dn, mut dz) = (0.0f64, 0.0f64);
            for (b, f) in run.block.iter().zip(&run.full) {
                dn = dn.max((b.photon_number - f.photon_number).abs());
                dz = dz.max((b.sigma_z - f.sigma_z).abs());
            }
            check.require(dn <= 1e-6, format!("N = {}: max |dn| = {dn:.2e} <= 1e-6", run.n));
            check.require(dz <= 1e-6, format!("N = {}: max |d sigma_z| = {dz:.2e} <= 1e-6", run.n));
        }
        Ok(check)
    }

    fn criterion_3(&self) -> Result<Check> {
        let run = self.burst_run()?;
        let mut check = Check::new();
        let (s, c) = (&run.summary, &run.cumulant_summary);
        match (s.peak_value, s.t_d, c.peak_value, c.t_d) {
            (Some(p), Some(t), Some(pc), Some(tc)) => {
                check.require(rel(pc, p) <= 0.10, format!("peak {pc:.4} vs {p:.4} (rel {:.3})", rel(pc, p)));
                check.require(rel(tc, t) <= 0.10, format!("t_d {tc:.3} vs {t:.3} (rel {:.3})", rel(tc, t)));
            }
            _ => check.require(false, "burst peak missing from one of the runs".into()),
        }
        Ok(check)
    }

    fn criterion_7(&self) -> Result<Check> {
        let run = self.burst_run()?;
        let mut check = Check::new();
        let en: Vec<f64> = run.samples.iter().map(|s| s.log_negativity.unwrap_or(f64::NAN)).collect();
        let fano: Vec<Option<f64>> = run.samples.iter().map(Sample::fano).collect();
        check.require(en[0].abs() <= 1e-12, format!("E_N(0) = {:.1e}", en[0]));
        let ie = argmax(&en).ok_or_else(|| DickeError::InsufficientData("no finite E_N".into()))?;
        let peak = en[ie];
        let rivals = (1..en.len() - 1)
            .filter(|&i| i != ie && en[i] > en[i - 1] && en[i] >= en[i + 1])
            .map(|i| en[i])
            .fold(0.0, f64::max);
        check.require(
            rivals < 0.5 * peak,
            format!("E_N peak {peak:.4} at t = {:.1}, largest other local maximum {rivals:.4}", run.times[ie]),
        );
        let fvals: Vec<f64> = fano.iter().map(|f| f.unwrap_or(f64::NAN)).collect();
        let jf = argmax(&fvals).ok_or_else(|| DickeError::InsufficientData("no defined Fano factor".into()))?;
        let (te, tf) = (run.times[ie], run.times[jf]);
        check.require(
            (te - tf).abs() <= 0.15 * tf,
            format!("E_N peak time {te:.1} vs Fano peak time {tf:.1} (rel {:.3}, limit 0.15)", rel(te, tf)),
        );
        let tail = &en[en.len() - en.len() / 10..];
        let late = tail.iter().sum::<f64>() / tail.len() as f64;
        check.require(late < 0.5 * peak, format!("long-time E_N {late:.4} < {:.4}", 0.5 * peak));
        Ok(check)
    }

    fn criterion_8(&self) -> Result<Check> {
        let mut check = Check::new();
        let n_max = 20;
        let mut vac = CMatrix::zeros(n_max + 1, n_max + 1);
        vac[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            for j in 0..41 {
                let a = Complex64::new(-3.0 + 0.15 * i as f64, -3.0 + 0.15 * j as f64);
                let want = 2.0 / PI * (-2.0 * a.norm_sqr()).exp();
                worst = worst.max((wigner_point(&vac, a) - want).abs());
            }
        }
        check.require(worst <= 1e-8, format!("vacuum |W - (2/pi) e^(-2|a|^2)| = {worst:.1e}"));

        let run = self.burst_run()?;
        let fano: Vec<Option<f64>> = run.samples.iter().map(Sample::fano).collect();
        let snaps = snapshot_indices(&fano).ok_or_else(|| DickeError::InsufficientData("no Fano factor".into()))?;
        for (label, &i) in ["peak", "trough", "final"].iter().zip(&snaps) {
            let cav = &run.cavity_states[i];
            let grid = wigner(cav, &default_grid(cav, 81))?;
            let scale = grid.max_abs();
            let asym = [PI / 4.0, PI / 2.0, 0.37, 2.5]
                .iter()
                .map(|&th| rotation_asymmetry(cav, &grid, th) / scale)
                .fold(0.0, f64::max);
            check.require(asym <= 1e-6, format!("{label} (t = {:.0}) rotation asymmetry {asym:.1e}", run.times[i]));
        }
        let trough = &run.cavity_states[snaps[1]];
        let profile = radial_profile(trough, 8.0, 321);
        let (r_ring, _) = profile
            .iter()
            .copied()
            .fold((0.0, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best });
        let r_vac = rms_radius(&vac);
        check.require(
            r_ring > r_vac,
            format!("trough ring radius {r_ring:.3} > vacuum rms radius {r_vac:.3}"),
        );
        Ok(check)
    }

    fn criterion_9(&self) -> Result<Check> {
        let mut check = Check::new();
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for run in self.small_runs()? {
            for s in run.block.iter().chain(&run.full) {
                worst = worst.max(selection_violation(s));
                count += 1;
            }
        }
        for s in &self.burst_run()?.samples {
            worst = worst.max(selection_violation(s));
            count += 1;
        }
        check.require(worst <= 1e-8, format!("max |<a>|, |<aa>|, |<a J+>| = {worst:.1e} over {count} samples"));
        Ok(check)
    }
}

fn selection_violation(s: &Sample) -> f64 {
    [s.a, s.aa, s.a_jplus].iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Block-solver run from the cavity vacuum and detector ground state with
/// the N = 15 burst parameters, plus the fourth-order cumulant run.
pub fn reference_burst(n: usize, n_max: usize) -> Result<BurstRun> {
    let spec = LindbladSpec::rwa(BURST_LAMBDA, BURST_GAMMA, BURST_GAMMA);
    let rho0 = DensityState::Blocks(BlockDensityMatrix::vacuum_ground(n, n_max)?);
    let times = linear_grid(0.0, BURST_T_FINAL, BURST_SAMPLES);
    let opts = EvolveOptions {
        keep_cavity_states: true,
        log_negativity: true,
        ..Default::default()
    };
    let rec = evolve(&spec, &rho0, &times, &opts)?;
    let summary = burst_summary(&times, &rec.photon_numbers())?;
    let model = RwaModel::new(n as f64, BURST_LAMBDA, BURST_GAMMA, BURST_GAMMA);
    let traj = integrate_moments(
        &MomentState::ground(),
        &model,
        Closure::Fourth,
        &times,
        &Tolerances::default(),
        MomentIntegrator::Rosenbrock,
    )?;
    let cumulant_photons = traj.photon_numbers();
    let cumulant_summary = burst_summary(&times, &cumulant_photons)?;
    Ok(BurstRun {
        times,
        samples: rec.samples,
        cavity_states: rec.cavity_states,
        summary,
        cumulant_photons,
        cumulant_summary,
    })
}

fn small_run(n: usize) -> Result<SmallRun> {
    let n_max = 12;
    let spec = LindbladSpec::rwa(BURST_LAMBDA, BURST_GAMMA, BURST_GAMMA);
    let grid = linear_grid(0.0, 400.0, 401);
    let opts = EvolveOptions {
        tol: Tolerances::new(1e-10, 1e-12),
        ..Default::default()
    };
    let block = evolve(
        &spec,
        &DensityState::Blocks(BlockDensityMatrix::vacuum_ground(n, n_max)?),
        &grid,
        &opts,
    )?;
    let full = evolve(
        &spec,
        &DensityState::Full(FullDensityMatrix::vacuum_ground(n, n_max)?),
        &grid,
        &opts,
    )?;
    Ok(SmallRun {
        n,
        block: block.samples,
        full: full.samples,
    })
}

/// Lab-frame parameters for two detectors on the parametric resonance with
/// effective coupling `lambda`: `omega_c = 1`, `Omega_m = 2`, velocity `xi`
/// and `omega_d0` chosen so the renormalized splitting is exactly 1.
pub fn resonant_lab_params(xi: f64, lambda: f64, n_max: usize) -> Result<PhysicalParams> {
    let omega_m = 2.0;
    let (d0, _, _) = lorentz_series(xi, 1e-15);
    let mut p = PhysicalParams {
        omega_c: 1.0,
        omega_d0: 1.0 / d0,
        omega_m,
        amplitude: xi / omega_m,
        c_light: 1.0,
        n_detectors: 2.0,
        n_max,
        lambda_0: 1.0,
        ..Default::default()
    };
    let unit = derive_couplings(&p, 1e-15)?.lambda_eff;
    p.lambda_0 = lambda / unit;
    Ok(p)
}

fn criterion_2() -> Result<Check> {
    let (xi, lambda, n_max) = (1e-3, 1e-3, 5);
    let p = resonant_lab_params(xi, lambda, n_max)?;
    let dc = derive_couplings(&p, 1e-15)?;
    let mut check = Check::new();
    check.require(
        (p.omega_m - p.omega_c - dc.omega_d).abs() < 1e-14 && rel(dc.lambda_eff, lambda) < 1e-12,
        format!("resonance Omega_m - omega_c - omega_d = {:.1e}", p.omega_m - p.omega_c - dc.omega_d),
    );
    // Three-level Rabi problem |0,-1> <-> |1,0> <-> |2,1> with frequency sqrt(6) lambda.
    let rabi = 2.0 * PI / (6f64.sqrt() * lambda);
    // 16 samples per drive period; the envelope is the one-period running mean.
    let per = 16usize;
    let dt = 2.0 * PI / p.omega_m / per as f64;
    let steps = (2.0 * rabi / dt).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let opts = EvolveOptions {
        tol: Tolerances::new(1e-10, 1e-12),
        ..Default::default()
    };
    let rho0 = DensityState::Full(FullDensityMatrix::vacuum_ground(2, n_max)?);
    let lab = evolve(&LindbladSpec::full(p), &rho0, &grid, &opts)?;
    let rwa = evolve(&LindbladSpec::rwa(lambda, 0.0, 0.0), &rho0, &grid, &opts)?;
    let envelope = |v: Vec<f64>| -> Vec<f64> {
        (0..v.len() - per)
            .map(|i| {
                let w = &v[i..=i + per];
                (w[1..per].iter().sum::<f64>() + 0.5 * (w[0] + w[per])) / per as f64
            })
            .collect()
    };
    let el = envelope(lab.photon_numbers());
    let er = envelope(rwa.photon_numbers());
    let (mut running, mut worst, mut at) = (0.0f64, 0.0f64, 0.0);
    for (i, (l, r)) in el.iter().zip(&er).enumerate() {
        running = running.max(*r);
        let d = (l - r).abs() / running;
        if d > worst {
            worst = d;
            at = grid[i] + 0.5 * per as f64 * dt;
        }
    }
    check.require(
        worst <= 0.05,
        format!("max envelope deviation {worst:.4} of running maximum at t = {at:.1} over {:.0}", 2.0 * rabi),
    );
    Ok(check)
}

fn criterion_4() -> Result<Check> {
    let (gc, gd, nc) = (1.0, 0.5, 1e6);
    let mut check = Check::new();
    for ratio in [0.01, 0.1, 10.0, 100.0] {
        let model = RwaModel::with_critical_number(ratio * nc, nc, gc, gd);
        let closed = steady_state_third(&model)?;
        let traj = integrate_moments(
            &MomentState::ground(),
            &model,
            Closure::Third,
            &[0.0, 5000.0],
            &Tolerances::new(1e-12, 1e-14),
            MomentIntegrator::Rosenbrock,
        )?;
        let late = traj.states.last().map_or(f64::NAN, |s| s.n);
        check.require(
            rel(late, closed) <= 1e-6,
            format!("N/N_crit = {ratio}: integrated {late:.6e} vs closed form (rel {:.1e})", rel(late, closed)),
        );
    }
    for (ratio, below) in [(1e-3, true), (1e3, false)] {
        let model = RwaModel::with_critical_number(ratio * nc, nc, gc, gd);
        let n = model.n_detectors;
        let limit = if below { n * gd / (nc * (gc + gd)) } else { n * gd / (2.0 * gc) };
        let closed = steady_state_third(&model)?;
        check.require(
            rel(closed, limit) <= 0.01,
            format!("N/N_crit = {ratio}: {closed:.4e} vs limit {limit:.4e}"),
        );
    }
    Ok(check)
}

/// Peak height and delay of the fourth-order burst at `N = ratio N_crit`
/// on the large-N rates.
pub fn large_n_burst(ratio: f64) -> Result<(f64, BurstSummary)> {
    let model = RwaModel::with_critical_number(ratio * LARGE_N_N_CRIT, LARGE_N_N_CRIT, LARGE_N_GAMMA_C, LARGE_N_GAMMA_D);
    // The burst delay scales as N_crit / N; this horizon holds it and the
    // first relaxation oscillations.
    let horizon = 6e5 / ratio;
    let grid = linear_grid(0.0, horizon, 4001);
    let traj = integrate_moments(
        &MomentState::ground(),
        &model,
        Closure::Fourth,
        &grid,
        &Tolerances::new(1e-10, 1e-14),
        MomentIntegrator::Rosenbrock,
    )?;
    Ok((model.n_detectors, burst_summary(&traj.times, &traj.photon_numbers())?))
}

fn criterion_5() -> Result<Check> {
    let mut check = Check::new();
    let at = |ratio: f64| -> Result<f64> {
        let m = RwaModel::with_critical_number(ratio * LARGE_N_N_CRIT, LARGE_N_N_CRIT, LARGE_N_GAMMA_C, LARGE_N_GAMMA_D);
        Ok(steady_state_fourth(&m)? / m.n_detectors)
    };
    let low = at(1e-3)?;
    let high = at(1e3)?;
    check.require(
        low / 2.5e-26 <= 1.5 && 2.5e-26 / low <= 1.5,
        format!("below threshold n/N = {low:.3e} (2.5e-26 within factor 1.5)"),
    );
    check.require(rel(high, 5e-9) <= 0.10, format!("above threshold n/N = {high:.3e} (5e-9 within 10%)"));
    let mut steady = Vec::new();
    for k in -6..=6 {
        steady.push(at(10f64.powf(0.5 * k as f64))?);
    }
    let monotone = steady.windows(2).all(|w| w[1] >= w[0]);
    check.require(
        monotone && high / low > 1e10,
        format!("n/N rises monotonically across N_crit by {:.1e}", high / low),
    );

    let mut peaks = Vec::new();
    let mut inverse_delay = Vec::new();
    for k in 0..9 {
        let ratio = 10f64.powf(1.0 + 0.25 * k as f64);
        let (n, s) = large_n_burst(ratio)?;
        match (s.peak_value, s.t_d) {
            (Some(p), Some(t)) => {
                peaks.push((n, p));
                inverse_delay.push((n, 1.0 / t));
            }
            _ => check.require(false, format!("no burst at N/N_crit = {ratio:.1}")),
        }
    }
    let fit = scaling_fit(&peaks)?;
    check.require(
        (1.8..=2.2).contains(&fit.alpha),
        format!("peak ~ N^alpha with alpha = {:.4} +- {:.4} (log R^2 {:.5})", fit.alpha, fit.alpha_stderr, fit.log_r_squared),
    );
    let xs: Vec<f64> = inverse_delay.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = inverse_delay.iter().map(|p| p.1).collect();
    let lin = linear_fit(&xs, &ys)?;
    check.require(lin.r_squared >= 0.99, format!("1/t_d linear in N with R^2 = {:.5}", lin.r_squared));
    Ok(check)
}

fn criterion_6() -> Result<Check> {
    let mut check = Check::new();
    let (gc, gd, n) = (0.04, 0.01, 10.0);
    for ratio in [0.1f64, 0.5, 0.9] {
        let lambda = (ratio * gc * gd / (4.0 * n)).sqrt();
        let model = RwaModel::new(n, lambda, gc, gd);
        let target = hp_steady_state(&model)?;
        // slowest relaxation rate of the linear system is at least (gc gd - 4 N lambda^2) / (gc + gd)
        let horizon = 30.0 * (gc + gd) / (gc * gd * (1.0 - ratio));
        let traj = hp_dynamics(&GaussianState::vacuum(), &model, &[0.0, horizon], &Tolerances::default())?;
        let late = traj.states.last().map_or(f64::NAN, |s| s.n_a);
        check.require(
            rel(late, target) <= 0.01 && !traj.above_threshold,
            format!("4N lambda^2/(gc gd) = {ratio}: {late:.6} vs {target:.6}"),
        );
    }
    let instability = |n: f64, lambda: f64| matches!(hp_steady_state(&RwaModel::new(n, lambda, 1.0, 1.0)), Err(DickeError::ParametricInstability { .. }));
    // 4 N lambda^2 = gc gd exactly at N = 1, lambda = 1/2
    let at = instability(1.0, 0.5);
    let above = instability(1.0, 0.5 + 1e-12);
    let below = instability(1.0, 0.5 - 1e-12);
    check.require(at && above && !below, format!("instability at/above/below threshold: {at}/{above}/{below}"));

    let (n, lambda): (f64, f64) = (4.0, 0.5);
    let g = n.sqrt() * lambda;
    let grid = linear_grid(0.0, 3.0 / lambda, 61);
    let traj = hp_dynamics(
        &GaussianState::vacuum(),
        &RwaModel::new(n, lambda, 0.0, 0.0),
        &grid,
        &Tolerances::new(1e-13, 1e-15),
    )?;
    let worst = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| {
            let want = (g * t).sinh().powi(2);
            (s.n_a - want).abs() / want.max(1.0)
        })
        .fold(0.0, f64::max);
    check.require(worst <= 1e-8, format!("undamped n_a vs sinh^2: rel {worst:.1e}"));
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!("default".parse::<Profile>().unwrap().criteria(), &[1, 2, 4, 6]);
        assert_eq!("full".parse::<Profile>().unwrap().criteria().len(), 9);
        assert!("fast".parse::<Profile>().is_err());
    }

    #[test]
    fn unknown_criterion_fails() {
        let out = Validator::new().run(12);
        assert!(!out.passed);
        assert!(out.detail.contains("no criterion 12"));
    }

    #[test]
    fn resonant_parameters() {
        let p = resonant_lab_params(1e-3, 1e-3, 3).unwrap();
        let dc = derive_couplings(&p, 1e-15).unwrap();
        assert!((dc.omega_d - 1.0).abs() < 1e-14);
        assert!((dc.lambda_eff - 1e-3).abs() < 1e-15);
        assert!((p.lambda_0 - 4.0).abs() < 1e-5);
    }

    #[test]
    fn fast_criteria_pass() {
        let v = Validator::new();
        for id in [4, 6] {
            let out = v.run(id);
            assert!(out.passed, "{out}");
        }
    }
}
