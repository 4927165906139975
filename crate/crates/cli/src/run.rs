//! Single runs: integrate the configured solver, then write the trajectory,
//! Wigner snapshots and summary.

use dicke_core::cumulant::{
    integrate_moments, steady_state_fourth, steady_state_third, Closure, MomentIntegrator, MomentState,
};
use dicke_core::dynamics::{evolve, EvolveOptions, LindbladSpec};
use dicke_core::hp::{hp_dynamics, hp_steady_state, GaussianState};
use dicke_core::linalg::CMatrix;
use dicke_core::observables::{burst_summary, snapshot_indices, wigner, BurstSummary};
use dicke_core::operators::{BlockDensityMatrix, DensityState, FullDensityMatrix};
use dicke_core::params::{DerivedCouplings, RwaModel};
use serde::Serialize;

use crate::config::{Resolved, RunConfig, Solver};
use crate::error::{CliError, CliResult};
use crate::output::{trajectory_csv, wigner_csv, OutputDir, Row};

/// Integrated trajectory before anything is written.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub rows: Vec<Row>,
    /// Cavity reduced states aligned with `rows`, kept for Wigner output.
    pub cavity_states: Vec<CMatrix>,
    pub diagnostics: Option<Diagnostics>,
    pub above_threshold: Option<bool>,
}

/// Worst-case checks over a density-matrix trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub max_top_fock: f64,
    /// Largest of `|<a>|`, `|<aa>|`, `|<a J+>|`, `|<J+>|`, `|<J+ J+>|`.
    pub selection_rule_max: f64,
}

impl Simulation {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn photon_numbers(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n.unwrap_or(f64::NAN)).collect()
    }

    pub fn burst(&self) -> CliResult<BurstSummary> {
        Ok(burst_summary(&self.times(), &self.photon_numbers())?)
    }
}

pub fn simulate(r: &Resolved) -> CliResult<Simulation> {
    let obs = r.observables;
    match r.solver {
        Solver::FullTd | Solver::RwaBlock => {
            let n = r.model.n_detectors as usize;
            let (spec, rho0) = if r.solver == Solver::FullTd {
                let p = r.physical.clone().expect("full_td resolves with lab-frame parameters");
                (LindbladSpec::full(p), DensityState::Full(FullDensityMatrix::vacuum_ground(n, r.n_max)?))
            } else {
                (
                    LindbladSpec::rwa(r.model.lambda, r.model.gamma_c, r.model.gamma_d),
                    DensityState::Blocks(BlockDensityMatrix::vacuum_ground(n, r.n_max)?),
                )
            };
            let opts = EvolveOptions {
                tol: r.tol,
                keep_cavity_states: obs.wigner,
                log_negativity: obs.log_negativity,
                ..Default::default()
            };
            let rec = evolve(&spec, &rho0, &r.grid, &opts)?;
            let mut d = Diagnostics {
                max_trace_error: 0.0,
                max_hermiticity_deviation: 0.0,
                min_eigenvalue: f64::INFINITY,
                max_top_fock: 0.0,
                selection_rule_max: 0.0,
            };
            for s in &rec.samples {
                d.max_trace_error = d.max_trace_error.max((s.trace - 1.0).abs());
                d.max_hermiticity_deviation = d.max_hermiticity_deviation.max(s.hermiticity);
                d.min_eigenvalue = d.min_eigenvalue.min(s.min_eigenvalue);
                d.max_top_fock = d.max_top_fock.max(s.top_fock);
                d.selection_rule_max = d.selection_rule_max.max(s.selection_rule_violation());
            }
            let rows = rec
                .samples
                .iter()
                .map(|s| Row {
                    t: s.t,
                    n: obs.n.then_some(s.photon_number),
                    fano: if obs.fano { s.fano() } else { None },
                    z: obs.z.then_some(s.sigma_z),
                    s: if obs.s { s.s } else { None },
                    x: obs.x.then_some(s.x),
                    log_negativity: if obs.log_negativity { s.log_negativity } else { None },
                })
                .collect();
            Ok(Simulation {
                rows,
                cavity_states: rec.cavity_states,
                diagnostics: Some(d),
                above_threshold: None,
            })
        }
        Solver::CumulantThird | Solver::CumulantFourth => {
            let closure = if r.solver == Solver::CumulantThird {
                Closure::Third
            } else {
                Closure::Fourth
            };
            let traj = integrate_moments(
                &MomentState::ground(),
                &r.model,
                closure,
                &r.grid,
                &r.tol,
                MomentIntegrator::Rosenbrock,
            )?;
            let rows = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, m)| Row {
                    t,
                    n: obs.n.then_some(m.n),
                    z: obs.z.then_some(m.z),
                    s: obs.s.then_some(m.s),
                    x: obs.x.then_some(m.x),
                    ..Default::default()
                })
                .collect();
            Ok(Simulation {
                rows,
                cavity_states: Vec::new(),
                diagnostics: None,
                above_threshold: None,
            })
        }
        Solver::Hp => {
            let traj = hp_dynamics(&GaussianState::vacuum(), &r.model, &r.grid, &r.tol)?;
            let rows = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, g)| Row {
                    t,
                    n: obs.n.then_some(g.n_a),
                    ..Default::default()
                })
                .collect();
            Ok(Simulation {
                rows,
                cavity_states: Vec::new(),
                diagnostics: None,
                above_threshold: Some(traj.above_threshold),
            })
        }
    }
}

/// Closed-form steady photon numbers; `None` where a formula does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStates {
    pub cumulant_third: Option<f64>,
    pub cumulant_fourth: Option<f64>,
    pub holstein_primakoff: Option<f64>,
}

pub fn steady_states(model: &RwaModel) -> SteadyStates {
    SteadyStates {
        cumulant_third: steady_state_third(model).ok(),
        cumulant_fourth: steady_state_fourth(model).ok(),
        holstein_primakoff: hp_steady_state(model).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerRecord {
    pub tag: String,
    pub t: f64,
    pub file: String,
    pub normalization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshots {
    pub fano_peak_t: f64,
    pub fano_trough_t: f64,
    pub final_t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub model: RwaModel,
    /// Infinite (serialized as null) without coupling.
    pub n_crit: f64,
    pub derived: Option<DerivedCouplings>,
    pub burst: BurstSummary,
    pub steady_state: SteadyStates,
    pub above_threshold: Option<bool>,
    pub diagnostics: Option<Diagnostics>,
    pub snapshots: Option<Snapshots>,
    pub wigner: Vec<WignerRecord>,
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Run `cfg` and write `trajectory.csv`, Wigner files, `summary.json` and
/// the manifest into `out`.
pub fn run_to(cfg: &RunConfig, out: OutputDir) -> CliResult<()> {
    let r = cfg.resolve()?;
    let sim = simulate(&r)?;
    write_run(cfg, &r, &sim, out)
}

pub fn write_run(cfg: &RunConfig, r: &Resolved, sim: &Simulation, mut out: OutputDir) -> CliResult<()> {
    out.write("trajectory.csv", trajectory_csv(&sim.rows).as_bytes())?;
    let times = sim.times();

    let fano: Vec<Option<f64>> = sim.rows.iter().map(|row| row.fano).collect();
    let snap_idx = if r.solver.is_hilbert() && r.observables.fano {
        snapshot_indices(&fano)
    } else {
        None
    };
    let snapshots = snap_idx.map(|[p, tr, f]| Snapshots {
        fano_peak_t: times[p],
        fano_trough_t: times[tr],
        final_t: times[f],
    });

    let mut records = Vec::new();
    if r.observables.wigner {
        let targets: Vec<(String, usize)> = if r.wigner_times.is_empty() {
            let [p, tr, f] = snap_idx.ok_or_else(|| {
                CliError::config(
                    "wigner_times",
                    "no Fano peak to snapshot; list `fano` in observables or set `wigner_times`",
                )
            })?;
            vec![("peak".into(), p), ("trough".into(), tr), ("final".into(), f)]
        } else {
            r.wigner_times
                .iter()
                .map(|&t| (format!("t{t}"), nearest_index(&times, t)))
                .collect()
        };
        for (tag, i) in targets {
            let cav = &sim.cavity_states[i];
            let grid = wigner(cav, &r.wigner_spec(cav))?;
            let file = format!("wigner_{tag}.csv");
            let meta = [
                ("tag", tag.clone()),
                ("t", format!("{:.16e}", times[i])),
                ("n", format!("{:.16e}", sim.rows[i].n.unwrap_or(f64::NAN))),
                ("normalization", format!("{:.16e}", grid.normalization)),
            ];
            out.write(&file, wigner_csv(&meta, &grid).as_bytes())?;
            records.push(WignerRecord {
                tag,
                t: times[i],
                file,
                normalization: grid.normalization,
            });
        }
    }

    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        model: r.model,
        n_crit: r.model.n_crit(),
        derived: r.derived,
        burst: sim.burst()?,
        steady_state: steady_states(&r.model),
        above_threshold: sim.above_threshold,
        diagnostics: sim.diagnostics,
        snapshots,
        wigner: records,
    };
    out.write_json("summary.json", &summary)?;
    out.finish()?;
    Ok(())
}
