//! Run configuration, as read from and written to TOML.

use std::path::{Path, PathBuf};

use qtransport::evolution::{DiagonalApprox, Variant};
use qtransport::measure::{Observable, Protocol};
use qtransport::problem::{catalog_with, CatalogEntry, CenterConvention, Oracle, TransportProblem};
use qtransport::reference::WalshKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Built-in problem by name, or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Catalog(String),
    Inline { d: usize, c: Vec<String>, f0: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PrepConfig {
    /// Load the normalized samples directly.
    #[default]
    Exact,
    /// Two-controlled-diagonal protocol, post-selected on the ancilla.
    TwoDiagonal {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Empty means the first moment along every axis.
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_shots() -> u64 {
    8192
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self { observables: Vec::new(), protocol: Protocol::default(), shots: default_shots(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "n")]
    Qubits,
    #[serde(rename = "L")]
    Steps,
    #[serde(rename = "walsh_budget")]
    WalshBudget,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Qubits => "n",
            SweepVariable::Steps => "L",
            SweepVariable::WalshBudget => "walsh_budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
    #[serde(default)]
    pub walsh_kind: WalshKind,
    /// Qubits per axis used to fit `K` for the discretization-bound column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_k: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesConfig {
    /// Diagonal realizations to report; defaults to the run's `walsh`.
    #[serde(default)]
    pub budgets: Vec<DiagonalApprox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Finite-difference order parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<usize>>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub centers: CenterConvention,
    /// Recording times; `T` is always included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    #[serde(default)]
    pub save_states: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub prep: PrepConfig,
    #[serde(default)]
    pub walsh: DiagonalApprox,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<GatesConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Config for a catalog problem with its suggested parameters.
    pub fn for_catalog(name: &str) -> Self {
        Self {
            problem: ProblemSpec::Catalog(name.to_string()),
            p: None,
            qubits: None,
            horizon: None,
            steps: None,
            variant: Variant::default(),
            centers: CenterConvention::default(),
            snapshots: None,
            save_states: false,
            output: default_output(),
            prep: PrepConfig::default(),
            walsh: DiagonalApprox::default(),
            measurement: MeasurementConfig::default(),
            sweep: None,
            gates: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file, or the `config` table of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        match value.get("config") {
            Some(toml::Value::Table(t)) if value.contains_key("version") => {
                t.clone().try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
            }
            _ => Self::from_toml(&text),
        }
    }

    /// Builds the problem and fills every optional field.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        // TOML integers are signed, so larger seeds could not be written back
        if self.measurement.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("seed {} exceeds {}", self.measurement.seed, i64::MAX)));
        }
        let (mut problem, defaults) = match &self.problem {
            ProblemSpec::Catalog(name) => {
                let entry = catalog_with(name, self.centers).map_err(|e| match e {
                    qtransport::Error::InvalidArgument(m) => CliError::Config(m),
                    other => CliError::Core(other),
                })?;
                let CatalogEntry { problem, qubits, steps, snapshots, .. } = entry;
                (problem, Some((qubits, steps, snapshots)))
            }
            ProblemSpec::Inline { d, c, f0 } => {
                if c.len() != *d {
                    return Err(CliError::Config(format!("d = {d} but {} coefficient expressions given", c.len())));
                }
                let cs: Vec<&str> = c.iter().map(String::as_str).collect();
                let order = self.p.ok_or_else(|| CliError::Config("inline problems need `p`".into()))?;
                let horizon = self.horizon.ok_or_else(|| CliError::Config("inline problems need `T`".into()))?;
                let mut p = TransportProblem::from_strings("inline", &cs, f0, order, horizon).map_err(config_error)?;
                if p.coefficients.iter().all(|c| c.is_constant()) {
                    let velocity = p.coefficients.iter().map(|c| c.eval(&[], 0.0)).collect::<Result<Vec<_>, _>>()?;
                    p = p.with_oracle(Oracle::Shift { velocity });
                }
                (p, None)
            }
        };
        if let Some(p) = self.p {
            problem.order = p;
        }
        if let Some(t) = self.horizon {
            problem.horizon = t;
        }
        if !(problem.horizon > 0.0 && problem.horizon.is_finite()) {
            return Err(CliError::Config(format!("T must be positive, got {}", problem.horizon)));
        }
        let qubits = match (&self.qubits, &defaults) {
            (Some(q), _) => q.clone(),
            (None, Some((q, _, _))) => q.clone(),
            (None, None) => return Err(CliError::Config("inline problems need `qubits`".into())),
        };
        if qubits.len() != problem.dims() {
            return Err(CliError::Config(format!("{} qubit widths for a {}-dimensional problem", qubits.len(), problem.dims())));
        }
        let steps = match (self.steps, &defaults) {
            (Some(l), _) => l,
            (None, Some((_, l, _))) => *l,
            (None, None) => return Err(CliError::Config("inline problems need `L`".into())),
        };
        let mut snapshots = match (&self.snapshots, &defaults) {
            (Some(s), _) => s.clone(),
            (None, Some((_, _, s))) if self.horizon.is_none() => s.clone(),
            _ => Vec::new(),
        };
        snapshots.retain(|t| *t <= problem.horizon);
        if !snapshots.iter().any(|t| (t - problem.horizon).abs() <= 1e-12 * problem.horizon) {
            snapshots.push(problem.horizon);
        }
        snapshots.sort_by(f64::total_cmp);
        let mut config = self.clone();
        config.p = Some(problem.order);
        config.qubits = Some(qubits.clone());
        config.horizon = Some(problem.horizon);
        config.steps = Some(steps);
        config.snapshots = Some(snapshots.clone());
        Ok(Resolved { problem, qubits, steps, snapshots, config })
    }
}

fn config_error(e: qtransport::Error) -> CliError {
    match e {
        qtransport::Error::Constraint(_) | qtransport::Error::Capacity { .. } => CliError::Core(e),
        other => CliError::Config(other.to_string()),
    }
}

/// A config with every default filled in, plus the built problem.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: TransportProblem,
    pub qubits: Vec<usize>,
    pub steps: usize,
    pub snapshots: Vec<f64>,
    pub config: RunConfig,
}
