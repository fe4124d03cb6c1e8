//! The run manifest: a single TOML document recording the [`ExperimentSpec`]
//! as entered, the derived discretization, the decay report, artifact paths,
//! and timing. Everything except `[timing]` is deterministic for a given
//! input, and the `[spec]` table alone is enough to re-execute the run
//! bit-identically.

use super::{ExperimentSpec, HarnessError};
use crate::analysis::DecayReport;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MANIFEST_FORMAT_VERSION: &str = "1";

/// Quantities derived from the inputs during elaboration and the run itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub dx: f64,
    pub dt: f64,
    pub lambda: f64,
    pub steps: u64,
    /// Effective recording stride in steps.
    pub stride: u64,
    /// Number of rows in the energy CSV.
    pub records: u64,
    /// Energy at the first record.
    pub e_first: f64,
    /// Energy at the final record.
    pub e_last: f64,
    /// Largest |(E^n - E^{n-1}) + damping_sum^n| seen; present only when the
    /// run was executed with per-step dissipation checking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dissipation_residual: Option<f64>,
}

/// Paths of the files written next to the manifest, relative to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub energy_csv: String,
    pub profile_initial_csv: String,
    pub profile_final_csv: String,
}

/// Wall-clock bookkeeping. Excluded from determinism guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// The complete record of one executed experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub spec: ExperimentSpec,
    pub derived: DerivedQuantities,
    pub report: DecayReport,
    pub artifacts: ArtifactPaths,
    pub timing: Timing,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), HarnessError> {
    let text = toml::to_string_pretty(manifest).map_err(|e| HarnessError::BadManifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let manifest: RunManifest =
        toml::from_str(&text).map_err(|e| HarnessError::BadManifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        return Err(HarnessError::BadManifest {
            path: path.to_path_buf(),
            reason: format!(
                "unsupported format_version '{}' (expected '{}')",
                manifest.format_version, MANIFEST_FORMAT_VERSION
            ),
        });
    }
    Ok(manifest)
}
