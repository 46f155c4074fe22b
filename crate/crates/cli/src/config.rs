//! Experiment configuration: one JSON document per run, tagged by mode.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stefan_core::mollifier::{Extension, DEFAULT_SAMPLES_PER_RADIUS};
use stefan_core::{StefanSpec1D, StefanSpec3D};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve1d,
    Solve3d,
    Mollify,
    Verify,
    Benchmark,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve1d => "solve1d",
            Mode::Solve3d => "solve3d",
            Mode::Mollify => "mollify",
            Mode::Verify => "verify",
            Mode::Benchmark => "benchmark",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Seed for randomised suites; recorded in every manifest.
    #[serde(default)]
    pub seed: u64,
    /// Output directory, or a `.json` path for a report-only run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Resolution ladder for convergence studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve1d: Option<StefanSpec1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve3d: Option<StefanSpec3D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify: Option<MollifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkConfig>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            seed: 0,
            out: None,
            ladder: None,
            solve1d: None,
            solve3d: None,
            mollify: None,
            verify: None,
            benchmark: None,
        }
    }

    /// Checks that the section named by `mode` is present.
    pub fn check(&self) -> CliResult<()> {
        let present = match self.mode {
            Mode::Solve1d => self.solve1d.is_some(),
            Mode::Solve3d => self.solve3d.is_some(),
            Mode::Mollify => self.mollify.is_some(),
            Mode::Verify | Mode::Benchmark => true,
        };
        if !present {
            let m = self.mode.name();
            return Err(CliError::Usage(format!("{m}: section required for mode {m}")));
        }
        if let Some(l) = &self.ladder {
            if l.len() < 2 || l.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Usage("ladder: needs at least two increasing resolutions".into()));
            }
        }
        Ok(())
    }

    /// Compact JSON of the configuration with `out` removed, so the digest
    /// does not depend on where a run is written.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_string(&c).expect("config serialises")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.canonical_json().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_at<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = match (prefix.is_empty(), path.as_str()) {
            (true, _) => path,
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        CliError::Usage(format!("{path}: {}", e.inner()))
    })
}

/// Parses a configuration for the subcommand `expected`. A document with a
/// `mode` key is a full experiment config whose mode must match; any other
/// object is taken as the bare problem section for that mode.
pub fn parse_config(text: &str, expected: Mode) -> CliResult<ExperimentConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
    let config = if obj.contains_key("mode") {
        let c: ExperimentConfig = parse_at(value, "")?;
        if c.mode != expected {
            return Err(CliError::Usage(format!(
                "mode: config is for {}, command is {}",
                c.mode.name(),
                expected.name()
            )));
        }
        c
    } else {
        let mut c = ExperimentConfig::new(expected);
        let section = expected.name();
        match expected {
            Mode::Solve1d => c.solve1d = Some(parse_at(value, section)?),
            Mode::Solve3d => c.solve3d = Some(parse_at(value, section)?),
            Mode::Mollify => c.mollify = Some(parse_at(value, section)?),
            Mode::Verify => c.verify = Some(parse_at(value, section)?),
            Mode::Benchmark => c.benchmark = Some(parse_at(value, section)?),
        }
        c
    };
    config.check()?;
    Ok(config)
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES_PER_RADIUS
}

fn default_extension() -> Extension {
    Extension::Restrict
}

fn default_order() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    pub epsilon: f64,
    #[serde(default = "default_samples")]
    pub samples_per_radius: usize,
    #[serde(default = "default_extension")]
    pub extension: Extension,
    /// Highest derivative order in the smoothness report.
    #[serde(default = "default_order")]
    pub order: usize,
    pub field: FieldSource,
    /// Strictly decreasing widths for an `L^2` convergence sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    /// A grid CSV; the origin defaults to zero on every axis.
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<f64>>,
    },
    /// A profile sampled at the cell centres of a box.
    Generated { lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>, profile: Profile },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `offset + gradient . x`.
    Linear { gradient: Vec<f64>, offset: f64 },
    /// `1` where `x[axis] > position`, else `0`.
    Step { axis: usize, position: f64 },
    /// `prod_k sin(wavenumber[k] x[k])`.
    Sine { wavenumber: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, x: &[f64; 3], dim: usize) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Linear { gradient, offset } => offset + (0..dim).map(|k| gradient[k] * x[k]).sum::<f64>(),
            Profile::Step { axis, position } => {
                if x[*axis] > *position {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Sine { wavenumber } => (0..dim).map(|k| (wavenumber[k] * x[k]).sin()).product(),
        }
    }

    /// Profiles a unit-mass even kernel reproduces exactly.
    pub fn is_affine(&self) -> bool {
        matches!(self, Profile::Constant { .. } | Profile::Linear { .. })
    }
}

fn default_barrier_spacing() -> f64 {
    1e-2
}

fn default_barrier_dims() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_audit_runs() -> usize {
    50
}

fn default_subcaloric_samples() -> usize {
    100
}

fn default_radii() -> Vec<f64> {
    vec![0.15, 0.2, 0.25, 0.3]
}

/// Parameters of the built-in verification suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Grid spacing of the barrier residual runs; `dt = h^2 / 4`.
    #[serde(default = "default_barrier_spacing")]
    pub barrier_spacing: f64,
    #[serde(default = "default_barrier_dims")]
    pub barrier_dims: Vec<usize>,
    /// Randomised Dirichlet runs for the maximum-principle audit.
    #[serde(default = "default_audit_runs")]
    pub audit_runs: usize,
    /// Randomised subcaloric functions for the ordering check.
    #[serde(default = "default_subcaloric_samples")]
    pub subcaloric_samples: usize,
    /// Radii `R` at which the radial average of `|x|^2` is measured.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialise")
    }
}

fn default_k1() -> f64 {
    1.0
}

fn default_t_start() -> f64 {
    0.25
}

fn default_t_end() -> f64 {
    1.0
}

fn default_cfls() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

fn default_reference_cfl() -> f64 {
    0.0125
}

fn default_space_order() -> f64 {
    1.8
}

fn default_time_order() -> f64 {
    0.9
}

/// Convergence study on the similarity problem (`f = 1`, `D = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Courant fractions of the time-refinement study, run on the
    /// coarsest ladder rung against a run at `reference_cfl`.
    #[serde(default = "default_cfls")]
    pub cfls: Vec<f64>,
    #[serde(default = "default_reference_cfl")]
    pub reference_cfl: f64,
    #[serde(default = "default_space_order")]
    pub min_space_order: f64,
    #[serde(default = "default_time_order")]
    pub min_time_order: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialise")
    }
}
