//! Detector-number sweeps: one trajectory per `N`, run in parallel, plus
//! the burst scaling fits.

use dicke_core::observables::{scaling_fit, ScalingFit};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{cell, trajectory_csv, OutputDir};
use crate::run::{simulate, steady_states, SteadyStates};

pub const SWEEP_HEADER: &str = "N,N_over_N_crit,n_ss_third,n_ss_fourth,peak,t_d";

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub n_detectors: f64,
    pub ratio: f64,
    pub t_final: f64,
    pub steady_state: SteadyStates,
    pub peak: Option<f64>,
    pub t_d: Option<f64>,
    pub steady_value: f64,
    pub file: String,
}

/// Fit result, or why it could not be made.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(ScalingFit),
    Unavailable(String),
}

fn fit(points: &[(f64, f64)]) -> FitOutcome {
    match scaling_fit(points) {
        Ok(f) => FitOutcome::Fit(f),
        Err(e) => FitOutcome::Unavailable(e.to_string()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub n_crit: f64,
    /// Log-log fit of the burst peak against `N`.
    pub peak_scaling: FitOutcome,
    /// Fits of `1 / t_d` against `N`; the linear part tests `t_d ~ 1/N`.
    pub inverse_delay: FitOutcome,
    pub entries: Vec<SweepEntry>,
}

pub fn sweep_to(cfg: &RunConfig, mut out: OutputDir) -> CliResult<Vec<SweepEntry>> {
    // Coupling and rates do not depend on N, so any count gives N_crit.
    let n_crit = cfg.resolve_with(Some(1.0), None)?.model.n_crit();
    let values = cfg.sweep_values(n_crit)?;
    let resolved = values
        .iter()
        .map(|&n| cfg.resolve_with(Some(n), Some(cfg.entry_horizon(n, n_crit))))
        .collect::<CliResult<Vec<_>>>()?;

    let results = resolved
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let sim = simulate(r)?;
            let burst = sim.burst()?;
            let n = r.model.n_detectors;
            let entry = SweepEntry {
                index: i,
                n_detectors: n,
                ratio: n / n_crit,
                t_final: *r.grid.last().expect("grids are non-empty"),
                steady_state: steady_states(&r.model),
                peak: burst.peak_value,
                t_d: burst.t_d,
                steady_value: burst.steady_value,
                file: format!("entries/entry_{i}.csv"),
            };
            Ok((entry, trajectory_csv(&sim.rows)))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    let mut entries = Vec::with_capacity(results.len());
    for (entry, csv) in results {
        out.write(&entry.file, csv.as_bytes())?;
        let ratio = entry.ratio.is_finite().then_some(entry.ratio);
        let cells = [
            cell(Some(entry.n_detectors)),
            cell(ratio),
            cell(entry.steady_state.cumulant_third),
            cell(entry.steady_state.cumulant_fourth),
            cell(entry.peak),
            cell(entry.t_d),
        ];
        table.push_str(&cells.join(","));
        table.push('\n');
        entries.push(entry);
    }
    out.write("sweep.csv", table.as_bytes())?;

    let peaks: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.peak.map(|p| (e.n_detectors, p)))
        .collect();
    let delays: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.t_d.map(|t| (e.n_detectors, 1.0 / t)))
        .collect();
    let summary = SweepSummary {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        n_crit,
        peak_scaling: fit(&peaks),
        inverse_delay: fit(&delays),
        entries: entries.clone(),
    };
    out.write_json("sweep_summary.json", &summary)?;
    out.finish()?;
    Ok(entries)
}
