use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use sharptrace::constants::{ConstantParams, SupremumSearch};
use sharptrace::fields::{Grid, SobolevFlavor, TestFunctionSpec};
use sharptrace::special::WeightSpec;
use sharptrace::symbols::SymbolSpec;
use sharptrace::verify::{DualityOptions, TimeProfile};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Stem of the output files.
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_resolution() -> usize {
    64
}

fn default_u_target() -> f64 {
    200.0
}

fn default_samples() -> usize {
    200
}

fn default_certificate_resolution() -> usize {
    256
}

/// Where trace experiments take their field from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSource {
    /// A closed-form family; restricted through the grid when one is given,
    /// through the radial reduction otherwise.
    ClosedForm {
        test_function: TestFunctionSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Grid>,
    },
    /// Seeded random Gaussian packets on a grid.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Grid>,
        packets: usize,
        band: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Constants {
        n: usize,
        params: ConstantParams,
        #[serde(default)]
        search: SupremumSearch,
    },
    Trace {
        symbol: SymbolSpec,
        field: FieldSource,
        radii: Vec<f64>,
        s: f64,
        flavor: SobolevFlavor,
        #[serde(default = "default_resolution")]
        resolution: usize,
        /// Compare against `C √ρ σ(ρ)` for these weights.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<ConstantParams>,
        #[serde(default)]
        search: SupremumSearch,
    },
    RhoScan {
        n: usize,
        params: ConstantParams,
        radii: Vec<f64>,
        #[serde(default = "default_u_target")]
        u_target: f64,
        #[serde(default)]
        search: SupremumSearch,
    },
    Sharpness {
        n: usize,
        params: ConstantParams,
        truncations: Vec<f64>,
        #[serde(default)]
        search: SupremumSearch,
    },
    Critical {
        symbol: SymbolSpec,
        k: usize,
        truncations: Vec<f64>,
    },
    Duality {
        symbol: SymbolSpec,
        time_profile: TimeProfile,
        test_function: TestFunctionSpec,
        #[serde(default)]
        options: DualityOptions,
    },
    SurfaceChecks {
        symbol: SymbolSpec,
        #[serde(default = "default_resolution")]
        resolution: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_certificate_resolution")]
        certificate_resolution: usize,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constants { .. } => "constants",
            Self::Trace { .. } => "trace",
            Self::RhoScan { .. } => "rho-scan",
            Self::Sharpness { .. } => "sharpness",
            Self::Critical { .. } => "critical",
            Self::Duality { .. } => "duality",
            Self::SurfaceChecks { .. } => "surface-checks",
        }
    }
}

/// Kinds with one-line descriptions, in listing order.
pub const KINDS: [(&str, &str); 7] = [
    ("constants", "sharp trace constant by closed form, Bessel supremum and smoothing conversion"),
    ("trace", "trace norms and ratios of one field over a list of radii"),
    ("rho-scan", "supremal trace ratio against rho with a fitted exponent"),
    ("sharpness", "attainment of the sharp constant by truncated extremizing profiles"),
    ("critical", "plain versus wedge trace ratios at s = 1/2 along a truncation ladder"),
    ("duality", "coarea evaluation of the adjoint norm against the direct grid norm"),
    ("surface-checks", "homogeneity, curvature, quadrature and dual-function checks for a symbol"),
];

/// `(σ, w)` of a parameter set; Sobolev exponents use `σ = ρ^{s-1}`, `w = r^s`.
pub fn weights(params: &ConstantParams) -> (WeightSpec, WeightSpec) {
    match *params {
        ConstantParams::Sobolev { s } => (WeightSpec::power(s - 1.0), WeightSpec::power(s)),
        ConstantParams::Weights { sigma, w } => (sigma, w),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("unsupported config version {found}; this build reads version {CONFIG_VERSION}")]
    Version { found: u32 },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        // the version is checked first so an old file gets a version error
        // instead of a field error
        let probe: serde_json::Value =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == CONFIG_VERSION as u64 => {}
            Some(v) => return Err(ConfigError::Version { found: v as u32 }),
            None => return Err(ConfigError::Invalid("missing integer field `version`".into())),
        }
        let cfg: Self = serde_json::from_value(probe).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let ok_name = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.name.starts_with('.');
        if !ok_name {
            return Err(ConfigError::Invalid(format!("name {:?} must be a plain file stem ([A-Za-z0-9._-])", self.name)));
        }
        let grids: Vec<&Grid> = match &self.experiment {
            Experiment::Trace { field: FieldSource::ClosedForm { grid: Some(g), .. }, .. } => vec![g],
            Experiment::Trace { field: FieldSource::Random { grid: Some(g), .. }, .. } => vec![g],
            Experiment::Duality { options, .. } => vec![&options.grid],
            _ => vec![],
        };
        for g in grids {
            Grid::new(g.n, g.size, g.extent).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}
