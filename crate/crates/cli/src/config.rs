//! Run configuration: a flat TOML table. Unset optional keys stay `None` so
//! the echo in `summary.json` reproduces the input exactly; defaults are
//! applied by [`RunConfig::resolve`].
//!
//! Coupling is given by exactly one of `lambda` (effective rotating-wave
//! coupling), `n_crit` (critical detector number, with the rates) or
//! `lambda_0` together with the lab-frame keys `omega_c`, `omega_d0`,
//! `omega_m`, `amplitude`, `c_light` and `phases`.

use std::path::Path;

use dicke_core::integrate::{linear_grid, Tolerances};
use dicke_core::observables::GridSpec;
use dicke_core::operators::{MAX_BLOCK_DETECTORS, MAX_FULL_DETECTORS};
use dicke_core::params::{derive_couplings, DerivedCouplings, PhysicalParams, RwaModel, DEFAULT_SERIES_TOL};
use serde::{Deserialize, Serialize};
use serde_with::skip_serializing_none;

use crate::error::{CliError, CliResult};

pub const DEFAULT_BLOCK_CAP: usize = 20;
pub const DEFAULT_SAMPLES: usize = 1001;
pub const DEFAULT_WIGNER_POINTS: usize = 81;

/// Largest detector count the moment and Holstein-Primakoff solvers take.
/// Leaves room for sweeps to 1e3 N_crit at N_crit ~ 4e17.
pub const MAX_MOMENT_DETECTORS: f64 = 1e24;

const OBSERVABLES: [&str; 7] = ["n", "fano", "z", "s", "x", "E_N", "wigner"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Lab-frame time-dependent Hamiltonian on the product space, N <= 4.
    FullTd,
    /// Rotating-wave master equation in the permutation-symmetric blocks.
    RwaBlock,
    CumulantThird,
    CumulantFourth,
    /// Holstein-Primakoff pair amplifier.
    Hp,
}

impl Solver {
    pub fn is_hilbert(self) -> bool {
        matches!(self, Solver::FullTd | Solver::RwaBlock)
    }

    /// Observables written when the config lists none.
    pub fn default_observables(self) -> &'static [&'static str] {
        match self {
            Solver::FullTd | Solver::RwaBlock => &["n", "fano", "z", "s", "x"],
            Solver::CumulantThird | Solver::CumulantFourth => &["n", "z", "s", "x"],
            Solver::Hp => &["n"],
        }
    }
}

/// How a sweep entry's horizon follows from `t_final`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonRule {
    Fixed,
    /// `t_final / (N / N_crit)`, tracking the burst delay.
    InverseRatio,
}

#[skip_serializing_none]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: Solver,
    pub n_detectors: Option<f64>,
    pub lambda: Option<f64>,
    pub n_crit: Option<f64>,
    pub gamma_c: f64,
    pub gamma_d: f64,

    pub lambda_0: Option<f64>,
    pub omega_c: Option<f64>,
    pub omega_d0: Option<f64>,
    pub omega_m: Option<f64>,
    pub amplitude: Option<f64>,
    pub c_light: Option<f64>,
    pub phases: Option<Vec<f64>>,

    pub n_max: Option<usize>,
    pub block_cap: Option<usize>,

    pub t_final: f64,
    pub samples: Option<usize>,
    pub horizon_rule: Option<HorizonRule>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,

    pub observables: Option<Vec<String>>,
    pub wigner_points: Option<usize>,
    pub wigner_half_width: Option<f64>,
    pub wigner_times: Option<Vec<f64>>,

    pub sweep_n: Option<Vec<f64>>,
    pub sweep_ratio_start: Option<f64>,
    pub sweep_ratio_stop: Option<f64>,
    pub sweep_ratio_points: Option<usize>,

    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Observables {
    pub n: bool,
    pub fano: bool,
    pub z: bool,
    pub s: bool,
    pub x: bool,
    pub log_negativity: bool,
    pub wigner: bool,
}

/// A validated run with defaults applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub solver: Solver,
    pub model: RwaModel,
    pub physical: Option<PhysicalParams>,
    pub derived: Option<DerivedCouplings>,
    pub n_max: usize,
    pub grid: Vec<f64>,
    pub tol: Tolerances,
    pub observables: Observables,
    pub wigner_points: usize,
    pub wigner_half_width: Option<f64>,
    pub wigner_times: Vec<f64>,
}

fn positive(field: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> CliResult<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be non-negative and finite, got {v}")))
    }
}

impl RunConfig {
    /// Parse TOML text; errors carry the line and column.
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Read a TOML config, or the `config` echo inside a `summary.json`.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}", path.display()), e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let parse = |message: String| CliError::Parse {
                path: path.to_path_buf(),
                message,
            };
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
            let inner = value.get("config").cloned().unwrap_or(value);
            return serde_json::from_value(inner).map_err(|e| parse(e.to_string()));
        }
        Self::from_toml(&text, path)
    }

    fn physical_keys(&self) -> bool {
        self.lambda_0.is_some()
            || self.omega_c.is_some()
            || self.omega_d0.is_some()
            || self.omega_m.is_some()
            || self.amplitude.is_some()
            || self.c_light.is_some()
            || self.phases.is_some()
    }

    fn physical_params(&self, n: f64, n_max: usize) -> PhysicalParams {
        let d = PhysicalParams::default();
        PhysicalParams {
            omega_c: self.omega_c.unwrap_or(d.omega_c),
            omega_d0: self.omega_d0.unwrap_or(d.omega_d0),
            lambda_0: self.lambda_0.unwrap_or(d.lambda_0),
            omega_m: self.omega_m.unwrap_or(d.omega_m),
            amplitude: self.amplitude.unwrap_or(d.amplitude),
            n_detectors: n,
            phases: self.phases.clone().unwrap_or_default(),
            gamma_c: self.gamma_c,
            gamma_d: self.gamma_d,
            n_max,
            c_light: self.c_light.unwrap_or(d.c_light),
            ..d
        }
    }

    /// Detector counts of a sweep. Ratios need a finite critical number.
    pub fn sweep_values(&self, n_crit: f64) -> CliResult<Vec<f64>> {
        let ratio_keys = [
            self.sweep_ratio_start.is_some(),
            self.sweep_ratio_stop.is_some(),
            self.sweep_ratio_points.is_some(),
        ];
        match (&self.sweep_n, ratio_keys) {
            (Some(_), [false, false, false]) => {}
            (None, [true, true, true]) => {}
            (None, [false, false, false]) => {
                return Err(CliError::config(
                    "sweep_n",
                    "a sweep needs `sweep_n` or all of `sweep_ratio_start`, `sweep_ratio_stop`, `sweep_ratio_points`",
                ))
            }
            (Some(_), _) => {
                return Err(CliError::config("sweep_n", "give either `sweep_n` or the `sweep_ratio_*` keys, not both"))
            }
            (None, _) => {
                return Err(CliError::config(
                    "sweep_ratio_points",
                    "`sweep_ratio_start`, `sweep_ratio_stop` and `sweep_ratio_points` go together",
                ))
            }
        }
        if let Some(list) = &self.sweep_n {
            if list.is_empty() {
                return Err(CliError::config("sweep_n", "the sweep list is empty"));
            }
            for &n in list {
                if !(n >= 1.0 && n.is_finite()) {
                    return Err(CliError::config("sweep_n", format!("detector counts must be >= 1, got {n}")));
                }
            }
            return Ok(list.clone());
        }
        let start = positive("sweep_ratio_start", self.sweep_ratio_start.unwrap_or_default())?;
        let stop = positive("sweep_ratio_stop", self.sweep_ratio_stop.unwrap_or_default())?;
        let points = self.sweep_ratio_points.unwrap_or_default();
        if points == 0 {
            return Err(CliError::config("sweep_ratio_points", "the sweep is empty"));
        }
        if !n_crit.is_finite() {
            return Err(CliError::config("sweep_ratio_start", "ratio sweeps need a nonzero coupling"));
        }
        let (ls, le) = (start.ln(), stop.ln());
        Ok((0..points)
            .map(|i| {
                let f = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
                (ls + f * (le - ls)).exp() * n_crit
            })
            .collect())
    }

    /// Check solver/parameter compatibility and apply defaults. `n_override`
    /// and `t_final_override` replace the detector count and horizon for
    /// sweep entries.
    pub fn resolve_with(&self, n_override: Option<f64>, t_final_override: Option<f64>) -> CliResult<Resolved> {
        let n = n_override
            .or(self.n_detectors)
            .ok_or_else(|| CliError::config("n_detectors", "missing"))?;
        if !(n >= 1.0 && n.is_finite()) {
            return Err(CliError::config("n_detectors", format!("must be >= 1, got {n}")));
        }
        non_negative("gamma_c", self.gamma_c)?;
        non_negative("gamma_d", self.gamma_d)?;

        let n_max = match (self.solver.is_hilbert(), self.n_max) {
            (true, Some(m)) if m >= 1 => m,
            (true, Some(_)) => return Err(CliError::config("n_max", "must be at least 1")),
            (true, None) => return Err(CliError::config("n_max", "required for Hilbert-space solvers")),
            (false, Some(_)) => {
                return Err(CliError::config("n_max", "only the full_td and rwa_block solvers use a Fock cutoff"))
            }
            (false, None) => 0,
        };
        match self.solver {
            Solver::FullTd | Solver::RwaBlock => {
                if n.fract() != 0.0 {
                    return Err(CliError::config("n_detectors", format!("{n} is not an integer")));
                }
                let limit = if self.solver == Solver::FullTd {
                    MAX_FULL_DETECTORS
                } else {
                    let cap = self.block_cap.unwrap_or(DEFAULT_BLOCK_CAP);
                    if cap == 0 || cap > MAX_BLOCK_DETECTORS {
                        return Err(CliError::config(
                            "block_cap",
                            format!("must lie in 1..={MAX_BLOCK_DETECTORS}, got {cap}"),
                        ));
                    }
                    cap
                };
                if n > limit as f64 {
                    return Err(CliError::config(
                        "n_detectors",
                        format!("{n} exceeds the {:?} limit of {limit}", self.solver),
                    ));
                }
            }
            _ => {
                if n > MAX_MOMENT_DETECTORS {
                    return Err(CliError::config("n_detectors", format!("{n:e} exceeds {MAX_MOMENT_DETECTORS:e}")));
                }
            }
        }
        if self.block_cap.is_some() && self.solver != Solver::RwaBlock {
            return Err(CliError::config("block_cap", "only applies to the rwa_block solver"));
        }

        let physical = self.physical_keys();
        let chosen = [self.lambda.is_some(), self.n_crit.is_some(), physical];
        if chosen.iter().filter(|&&c| c).count() != 1 {
            return Err(CliError::config(
                "lambda",
                "give exactly one of `lambda`, `n_crit`, or the lab-frame keys starting with `lambda_0`",
            ));
        }
        let (model, phys, derived) = if physical {
            if self.lambda_0.is_none() {
                return Err(CliError::config("lambda_0", "required with the lab-frame keys"));
            }
            let p = self.physical_params(n, n_max);
            let derived = derive_couplings(&p, DEFAULT_SERIES_TOL)?;
            if self.solver != Solver::FullTd {
                let mismatch = p.omega_m - p.omega_c - derived.omega_d;
                if mismatch.abs() > 1e-9 * p.omega_m {
                    return Err(CliError::config(
                        "omega_m",
                        format!("the rotating-wave solvers need omega_m = omega_c + omega_d; off by {mismatch:e}"),
                    ));
                }
                if self.phases.as_ref().is_some_and(|ph| ph.iter().any(|&x| x != 0.0)) {
                    return Err(CliError::config("phases", "only the full_td solver models detector phases"));
                }
            }
            (RwaModel::from_physical(&p, &derived), Some(p), Some(derived))
        } else if self.solver == Solver::FullTd {
            return Err(CliError::config("lambda_0", "the full_td solver needs the lab-frame keys"));
        } else if let Some(lambda) = self.lambda {
            if !lambda.is_finite() {
                return Err(CliError::config("lambda", "must be finite"));
            }
            (RwaModel::new(n, lambda, self.gamma_c, self.gamma_d), None, None)
        } else {
            let nc = positive("n_crit", self.n_crit.unwrap_or_default())?;
            if self.gamma_c * self.gamma_d == 0.0 {
                return Err(CliError::config("n_crit", "needs both damping rates nonzero"));
            }
            (RwaModel::with_critical_number(n, nc, self.gamma_c, self.gamma_d), None, None)
        };

        let t_final = positive("t_final", t_final_override.unwrap_or(self.t_final))?;
        let samples = self.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 3 {
            return Err(CliError::config("samples", format!("need at least 3 output times, got {samples}")));
        }
        let mut tol = Tolerances::default();
        if let Some(r) = self.rtol {
            tol.rtol = positive("rtol", r)?;
        }
        if let Some(a) = self.atol {
            tol.atol = positive("atol", a)?;
        }

        let mut observables = Observables::default();
        let names: Vec<String> = match &self.observables {
            Some(list) => list.clone(),
            None => self.solver.default_observables().iter().map(|s| s.to_string()).collect(),
        };
        for name in &names {
            match name.as_str() {
                "n" => observables.n = true,
                "fano" => observables.fano = true,
                "z" => observables.z = true,
                "s" => observables.s = true,
                "x" => observables.x = true,
                "E_N" => observables.log_negativity = true,
                "wigner" => observables.wigner = true,
                other => {
                    return Err(CliError::config(
                        "observables",
                        format!("unknown observable {other:?}; expected one of {OBSERVABLES:?}"),
                    ))
                }
            }
        }
        if !self.solver.is_hilbert() {
            for (on, name) in [(observables.log_negativity, "E_N"), (observables.wigner, "wigner"), (observables.fano, "fano")] {
                if on {
                    return Err(CliError::config(
                        "observables",
                        format!("{name} needs a density-matrix solver (full_td or rwa_block)"),
                    ));
                }
            }
        }
        if self.solver == Solver::Hp && (observables.z || observables.s || observables.x) {
            return Err(CliError::config("observables", "the hp solver provides only `n`"));
        }
        let wigner_points = self.wigner_points.unwrap_or(DEFAULT_WIGNER_POINTS);
        if wigner_points < 2 {
            return Err(CliError::config("wigner_points", "need at least 2"));
        }
        if let Some(w) = self.wigner_half_width {
            positive("wigner_half_width", w)?;
        }
        let wigner_times = self.wigner_times.clone().unwrap_or_default();
        if wigner_times.iter().any(|&t| !(0.0..=t_final).contains(&t)) {
            return Err(CliError::config("wigner_times", format!("times must lie in [0, {t_final}]")));
        }

        Ok(Resolved {
            solver: self.solver,
            model,
            physical: phys,
            derived,
            n_max,
            grid: linear_grid(0.0, t_final, samples),
            tol,
            observables,
            wigner_points,
            wigner_half_width: self.wigner_half_width,
            wigner_times,
        })
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        self.resolve_with(None, None)
    }

    /// Horizon of a sweep entry with `N = n`.
    pub fn entry_horizon(&self, n: f64, n_crit: f64) -> f64 {
        match self.horizon_rule.unwrap_or(HorizonRule::Fixed) {
            HorizonRule::Fixed => self.t_final,
            HorizonRule::InverseRatio => self.t_final * n_crit / n,
        }
    }
}

impl Resolved {
    pub fn wigner_spec(&self, cav: &dicke_core::linalg::CMatrix) -> GridSpec {
        match self.wigner_half_width {
            Some(w) => GridSpec::square(w, self.wigner_points),
            None => dicke_core::observables::default_grid(cav, self.wigner_points),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<RunConfig> {
        RunConfig::from_toml(text, Path::new("test.toml"))
    }

    const BASE: &str = "solver = \"rwa_block\"\nn_detectors = 4\nlambda = 0.01\ngamma_c = 0.02\ngamma_d = 0.02\nn_max = 10\nt_final = 50\n";

    fn field(e: CliError) -> String {
        match e {
            CliError::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_block_config() {
        let r = parse(BASE).unwrap().resolve().unwrap();
        assert_eq!(r.solver, Solver::RwaBlock);
        assert_eq!(r.grid.len(), DEFAULT_SAMPLES);
        assert_eq!(*r.grid.last().unwrap(), 50.0);
        assert!(r.observables.fano && !r.observables.log_negativity);
        assert!((r.model.n_crit() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = parse(&format!("{BASE}gamma_x = 1\n")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("gamma_x") && msg.contains("line 8"), "{msg}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn solver_limits() {
        let big = BASE.replace("n_detectors = 4", "n_detectors = 21");
        assert_eq!(field(parse(&big).unwrap().resolve().unwrap_err()), "n_detectors");
        let capped = format!("{big}block_cap = 25\n");
        assert!(parse(&capped).unwrap().resolve().is_ok());
        let frac = BASE.replace("n_detectors = 4", "n_detectors = 4.5");
        assert_eq!(field(parse(&frac).unwrap().resolve().unwrap_err()), "n_detectors");
        let cum = BASE.replace("rwa_block", "cumulant_fourth").replace("n_max = 10\n", "").replace("n_detectors = 4", "n_detectors = 1e17");
        assert!(parse(&cum).unwrap().resolve().is_ok());
        let too_many = cum.replace("1e17", "2e24");
        assert_eq!(field(parse(&too_many).unwrap().resolve().unwrap_err()), "n_detectors");
        let cutoff = format!("{cum}n_max = 4\n");
        assert_eq!(field(parse(&cutoff).unwrap().resolve().unwrap_err()), "n_max");
        let td = BASE.replace("rwa_block", "full_td");
        assert_eq!(field(parse(&td).unwrap().resolve().unwrap_err()), "lambda_0");
    }

    #[test]
    fn coupling_sources_are_exclusive() {
        let both = format!("{BASE}n_crit = 3\n");
        assert_eq!(field(parse(&both).unwrap().resolve().unwrap_err()), "lambda");
        let nc = BASE.replace("lambda = 0.01", "n_crit = 4");
        let r = parse(&nc).unwrap().resolve().unwrap();
        assert!((r.model.lambda - 0.005).abs() < 1e-15);
    }

    #[test]
    fn lab_frame_keys_must_be_resonant() {
        let lab = BASE.replace("lambda = 0.01", "lambda_0 = 4.0\nomega_c = 1.0\nomega_d0 = 1.3\nomega_m = 2.0\namplitude = 5e-4\nc_light = 1.0");
        assert_eq!(field(parse(&lab).unwrap().resolve().unwrap_err()), "omega_m");
        let td = lab.replace("rwa_block", "full_td").replace("n_max = 10", "n_max = 3");
        let r = parse(&td).unwrap().resolve().unwrap();
        assert!(r.physical.is_some() && r.derived.is_some());
    }

    #[test]
    fn observables_are_checked() {
        let bad = format!("{BASE}observables = [\"n\", \"purity\"]\n");
        assert_eq!(field(parse(&bad).unwrap().resolve().unwrap_err()), "observables");
        let cum = BASE.replace("rwa_block", "cumulant_third").replace("n_max = 10\n", "");
        let en = format!("{cum}observables = [\"n\", \"E_N\"]\n");
        assert_eq!(field(parse(&en).unwrap().resolve().unwrap_err()), "observables");
        assert!(parse(&cum).unwrap().resolve().unwrap().observables.x);
        let ok = format!("{cum}observables = [\"n\", \"z\", \"s\", \"x\"]\n");
        assert!(parse(&ok).unwrap().resolve().is_ok());
    }

    #[test]
    fn sweeps() {
        let cfg = parse(&format!("{BASE}sweep_n = []\n")).unwrap();
        assert_eq!(field(cfg.sweep_values(1.0).unwrap_err()), "sweep_n");
        let cfg = parse(BASE).unwrap();
        assert_eq!(field(cfg.sweep_values(1.0).unwrap_err()), "sweep_n");
        let cfg = parse(&format!("{BASE}sweep_ratio_start = 10\nsweep_ratio_stop = 1000\nsweep_ratio_points = 3\n")).unwrap();
        let v = cfg.sweep_values(2.0).unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[0] - 20.0).abs() < 1e-12 && (v[1] - 200.0).abs() < 1e-10 && (v[2] - 2000.0).abs() < 1e-9);
        let partial = parse(&format!("{BASE}sweep_ratio_start = 10\n")).unwrap();
        assert_eq!(field(partial.sweep_values(1.0).unwrap_err()), "sweep_ratio_points");
    }

    proptest::proptest! {
        #[test]
        fn summary_echo_round_trips_bit_exactly(
            lambda in 1e-12f64..1e3,
            gamma_c in 0.0f64..1e5,
            n in 1.0f64..1e20,
            t_final in 1e-3f64..1e7,
            rtol in proptest::option::of(1e-14f64..1e-2),
            times in proptest::option::of(proptest::collection::vec(0.0f64..1.0, 0..4)),
        ) {
            let cfg = RunConfig {
                n_detectors: Some(n),
                lambda: Some(lambda),
                gamma_c,
                t_final,
                rtol,
                wigner_times: times,
                ..parse(BASE).unwrap()
            };
            let text = serde_json::to_string(&serde_json::json!({ "config": &cfg })).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("summary.json");
            std::fs::write(&path, text).unwrap();
            let back = RunConfig::load(&path).unwrap();
            proptest::prop_assert_eq!(back, cfg);
        }
    }

    #[test]
    fn horizon_rules() {
        let cfg = parse(&format!("{BASE}horizon_rule = \"inverse_ratio\"\n")).unwrap();
        assert_eq!(cfg.entry_horizon(10.0, 2.0), 10.0);
        assert_eq!(parse(BASE).unwrap().entry_horizon(10.0, 2.0), 50.0);
    }
}
