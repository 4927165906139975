//! `verify`: golden-file integrity and regeneration, then the acceptance
//! criteria.

use std::path::{Path, PathBuf};

use dicke_core::validation::{CriterionOutcome, Profile, Validator, ALL_CRITERIA};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir, MANIFEST};
use crate::run::run_to;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criteria to run; overrides the profile.
    pub criteria: Option<Vec<u8>>,
    /// Directory holding `manifest.json`, `summary.json` and the outputs of
    /// a reference run. Relative paths resolve against the config file.
    pub golden_dir: Option<String>,
    /// Re-run the golden config and compare checksums (default true).
    pub rerun_golden: Option<bool>,
}

impl VerifyConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}", path.display()), e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(dir) = &cfg.golden_dir {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.golden_dir = Some(base.join(dir).to_string_lossy().into_owned());
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenReport {
    pub dir: PathBuf,
    pub files: usize,
    pub regenerated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub version: &'static str,
    pub golden: Option<GoldenReport>,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
}

fn check_ids(ids: &[u8]) -> CliResult<()> {
    if ids.is_empty() {
        return Err(CliError::config("criteria", "the criterion list is empty"));
    }
    if let Some(bad) = ids.iter().find(|id| !ALL_CRITERIA.contains(id)) {
        return Err(CliError::config("criteria", format!("unknown criterion {bad}; expected 1..=9")));
    }
    Ok(())
}

/// Checksums of the golden files, then a fresh run of the golden config
/// under `scratch` compared file by file.
fn check_golden(dir: &Path, rerun: bool, scratch: &Path) -> CliResult<GoldenReport> {
    let manifest = Manifest::load(dir)?;
    let bad = manifest.mismatches(dir);
    if !bad.is_empty() {
        return Err(CliError::Verification(format!(
            "checksum mismatch in {}: {}",
            dir.display(),
            bad.join(", ")
        )));
    }
    if rerun {
        let cfg = RunConfig::load(&dir.join("summary.json"))?;
        run_to(&cfg, OutputDir::create(scratch)?)?;
        let fresh = Manifest::load(scratch)?;
        let differ: Vec<&str> = manifest
            .files
            .iter()
            .filter(|(name, entry)| name.as_str() != MANIFEST && fresh.files.get(*name) != Some(entry))
            .map(|(name, _)| name.as_str())
            .collect();
        if !differ.is_empty() {
            return Err(CliError::Verification(format!(
                "regenerated golden output differs: {}",
                differ.join(", ")
            )));
        }
    }
    Ok(GoldenReport {
        dir: dir.to_path_buf(),
        files: manifest.files.len(),
        regenerated: rerun,
    })
}

/// Run the verification and write `verify.json`. Criterion lines go to
/// `report` as they finish.
pub fn verify_to(
    cfg: &VerifyConfig,
    profile: Profile,
    override_ids: Option<Vec<u8>>,
    out: OutputDir,
    mut report: impl FnMut(&CriterionOutcome),
) -> CliResult<VerifyReport> {
    let ids = override_ids
        .or_else(|| cfg.criteria.clone())
        .unwrap_or_else(|| profile.criteria().to_vec());
    check_ids(&ids)?;

    let golden = match &cfg.golden_dir {
        Some(dir) => Some(check_golden(
            Path::new(dir),
            cfg.rerun_golden.unwrap_or(true),
            &out.root().join("golden_rerun"),
        )?),
        None => None,
    };

    let validator = Validator::new();
    let mut outcomes = Vec::with_capacity(ids.len());
    for &id in &ids {
        let o = validator.run(id);
        report(&o);
        outcomes.push(o);
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    let result = VerifyReport {
        version: env!("CARGO_PKG_VERSION"),
        golden,
        passed: failed.is_empty(),
        criteria: outcomes,
    };
    let mut out = out;
    out.write_json("verify.json", &result)?;
    out.finish()?;
    if failed.is_empty() {
        Ok(result)
    } else {
        Err(CliError::Verification(format!("failed criteria {}", failed.join(", "))))
    }
}
