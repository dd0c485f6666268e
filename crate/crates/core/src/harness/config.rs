//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackWeights;
use crate::error::{Error, Result};
use crate::zoo::{ZooFamily, DEFAULT_DIM_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ZooFamily,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub assertions: Assertions,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AttackConfig {
    Sequential {
        #[serde(default)]
        j_order: JOrder,
        #[serde(default)]
        weights: WeightSpec,
        #[serde(default = "default_true")]
        outcome_conditioned: bool,
    },
    Partition {
        j1: usize,
        j2: usize,
    },
    TwoSided,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig::Sequential {
            j_order: JOrder::default(),
            weights: WeightSpec::default(),
            outcome_conditioned: true,
        }
    }
}

/// `"all"` or an explicit list of Bob inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JOrder {
    Keyword(Keyword),
    List(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    All,
}

impl Default for JOrder {
    fn default() -> Self {
        JOrder::Keyword(Keyword::All)
    }
}

impl JOrder {
    pub fn resolve(&self, m: usize) -> Vec<usize> {
        match self {
            JOrder::Keyword(Keyword::All) => (0..m).collect(),
            JOrder::List(v) => v.clone(),
        }
    }
}

/// `"uniform"`, `{"partition": [[...], ...]}` or `{"weights": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Uniform(UniformKeyword),
    Partition { partition: Vec<Vec<usize>> },
    Explicit { weights: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniformKeyword {
    Uniform,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Uniform(UniformKeyword::Uniform)
    }
}

impl WeightSpec {
    pub fn resolve(&self, n: usize) -> Result<AttackWeights> {
        match self {
            WeightSpec::Uniform(_) => Ok(AttackWeights::uniform(n)),
            WeightSpec::Partition { partition } => AttackWeights::partitioned(n, partition.clone()),
            WeightSpec::Explicit { weights } => AttackWeights::new(weights.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub theta_leak: Vec<f64>,
    pub theta_meas: Vec<f64>,
}

impl SweepGrid {
    /// Parse `leak=0,0.1,0.2;meas=0,0.05`. A missing axis defaults to `[0]`.
    pub fn parse(spec: &str) -> Result<SweepGrid> {
        let mut grid = SweepGrid {
            theta_leak: vec![0.0],
            theta_meas: vec![0.0],
        };
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid entry `{part}` lacks `=`")))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad grid value `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            match key.trim() {
                "leak" | "theta_leak" => grid.theta_leak = values,
                "meas" | "theta_meas" => grid.theta_meas = values,
                other => return Err(Error::Config(format!("unknown grid axis `{other}`"))),
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_leak.is_empty() || self.theta_meas.is_empty() {
            return Err(Error::Config("sweep axes must be nonempty".into()));
        }
        for &t in self.theta_leak.iter().chain(&self.theta_meas) {
            if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t) {
                return Err(Error::InvalidAngle(t));
            }
        }
        Ok(())
    }

    /// Grid points, leak-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.theta_leak
            .iter()
            .flat_map(|&l| self.theta_meas.iter().map(move |&m| (l, m)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Distance from 0 or 1 within which a step probability counts as
    /// deterministic.
    pub deterministic: f64,
    /// Allowed fraction of atypical inputs in the nine-out-of-ten check.
    pub typical_fraction: f64,
    /// Inputs are sampled above this many.
    pub max_inputs: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            deterministic: 1e-9,
            typical_fraction: 0.1,
            max_inputs: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Checks evaluated after a run; any failure makes the run fail.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_info_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterministic_steps: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nine_of_ten: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fit_residual: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.sweep {
            s.validate()?;
            if self.protocol.is_two_sided() {
                return Err(Error::Config("sweeps need a one-sided family".into()));
            }
        }
        let t = &self.tolerances;
        if !(t.deterministic >= 0.0) || !(0.0..1.0).contains(&t.typical_fraction) {
            return Err(Error::Config("tolerances out of range".into()));
        }
        if t.max_inputs == 0 {
            return Err(Error::Config("max_inputs must be positive".into()));
        }
        if matches!(self.attack, AttackConfig::TwoSided) != self.protocol.is_two_sided() {
            return Err(Error::Config(
                "the two-sided attack needs the two-sided-xor family and vice versa".into(),
            ));
        }
        Ok(())
    }
}
