//! Strict JSON configuration files. Unknown keys are rejected and every
//! key without a documented default is required.

use std::fs;
use std::path::{Path, PathBuf};

use lighttrap_core::{launch_tangential, IndexField, IntegrateOptions, RayState, ScanShape};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Step budget of every integration run from the CLI.
const MAX_STEPS: usize = 2_000_000;

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_tau: f64,
    pub escape_r: f64,
    pub min_r: f64,
    pub sample_interval: f64,
}

impl IntegratorSpec {
    pub fn options(&self) -> CliResult<IntegrateOptions> {
        let opts = IntegrateOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_tau: self.max_tau,
            escape_r: self.escape_r,
            min_r: self.min_r,
            max_steps: MAX_STEPS,
            sample_interval: self.sample_interval,
        };
        opts.validate()
            .map_err(|e| CliError::Config(format!("integrator: {e}")))?;
        Ok(opts)
    }
}

/// Either `{"r0": .., "sense": ..}` for a tangential launch or
/// `{"state": {..}}` for an explicit ray state.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchSpec {
    pub r0: Option<f64>,
    pub sense: Option<f64>,
    pub state: Option<RayState>,
}

impl LaunchSpec {
    pub fn state(&self, field: &IndexField) -> CliResult<RayState> {
        match (self.r0, self.sense, self.state) {
            (Some(r0), Some(sense), None) => Ok(launch_tangential(field, r0, sense)?),
            (None, None, Some(s)) => Ok(s),
            (Some(_), None, None) => Err(CliError::Config("launch: missing field `sense`".into())),
            (None, Some(_), None) => Err(CliError::Config("launch: missing field `r0`".into())),
            (None, None, None) => Err(CliError::Config(
                "launch: needs either `r0` and `sense` or `state`".into(),
            )),
            _ => Err(CliError::Config(
                "launch: `state` cannot be combined with `r0`/`sense`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOutputs {
    pub trajectory_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
    pub plot_svg: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub field: IndexField,
    pub launch: LaunchSpec,
    pub integrator: IntegratorSpec,
    pub outputs: TraceOutputs,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub n_a: f64,
    pub n_c: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    #[serde(rename = "n_c")]
    NC,
    Sigma,
    B,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOutputs {
    pub table_csv: Option<PathBuf>,
    pub plot_svg: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub profile: ProfileSpec,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub integrator: IntegratorSpec,
    pub outputs: SweepOutputs,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbOutputs {
    pub scan_csv: Option<PathBuf>,
    pub scan_json: Option<PathBuf>,
    pub plot_svg: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub field: IndexField,
    pub launch: LaunchSpec,
    pub amplitudes: Vec<f64>,
    pub shape: ScanShape,
    pub integrator: IntegratorSpec,
    pub outputs: PerturbOutputs,
    pub seed: u64,
}

/// Resolves an optional output name against the output directory.
pub fn output_path(out: &Path, name: &Option<PathBuf>, default: &str) -> PathBuf {
    let name = name.clone().unwrap_or_else(|| PathBuf::from(default));
    if name.is_absolute() {
        name
    } else {
        out.join(name)
    }
}

/// Writes every `(path, bytes)` pair in order, creating parent directories.
pub fn write_all(files: &[(PathBuf, Vec<u8>)]) -> CliResult<()> {
    for (path, bytes) in files {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text.into_bytes()
}
