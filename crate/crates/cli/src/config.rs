//! Run configuration: one TOML document describing the scenario, both
//! agents, and the evaluation/sweep settings. Unknown keys are
//! rejected; a missing file is a configuration error, not an I/O one.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ranslice_core::ddqn::AgentHyper;
use ranslice_core::topology::ScenarioConfig;

use crate::CliError;

/// Environment variable overriding the output root; run directories are
/// created underneath it when set.
pub const OUT_ROOT_ENV: &str = "RANSLICE_OUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Resource-block allocation per gNB.
    Comm,
    /// MEC server selection and CPU-core allocation.
    Comp,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Comm => write!(f, "comm"),
            Level::Comp => write!(f, "comp"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Greedy episodes per agent.
    pub episodes: usize,
    /// Rounds per trace file when `--trace` is given.
    pub trace_rounds: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: 100,
            trace_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub device_counts: Vec<usize>,
    pub task_sizes_mb: Vec<f64>,
    /// Minimum offloading rounds evaluated per sweep cell.
    pub eval_rounds: usize,
    /// Half-width of the per-cell task-size band as a fraction of the
    /// nominal size: 0 pins sizes exactly, 0.05 draws from +/-5%.
    /// A little variety keeps per-cell training from collapsing onto a
    /// single repeated round.
    pub size_jitter_frac: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            device_counts: vec![2, 3, 4, 5, 6],
            task_sizes_mb: vec![0.5, 0.7, 1.0],
            eval_rounds: 1000,
            size_jitter_frac: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub level: Level,
    pub seed: u64,
    pub out_dir: String,
    pub scenario: ScenarioConfig,
    pub comm_agent: AgentHyper,
    pub comp_agent: AgentHyper,
    pub eval: EvalSettings,
    pub sweep: SweepSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            level: Level::Comm,
            seed: 0,
            out_dir: "runs/out".into(),
            scenario: ScenarioConfig::default(),
            comm_agent: AgentHyper::comm_default(),
            comp_agent: AgentHyper::comp_default(),
            eval: EvalSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("config file {}: {e}", path.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
            }
        }
    }

    /// Checks every referenced key before any run starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario.validate()?;
        self.comm_agent.validate()?;
        self.comp_agent.validate()?;
        if self.eval.episodes == 0 {
            return Err(CliError::Config("eval.episodes must be >= 1".into()));
        }
        if self.sweep.eval_rounds == 0 {
            return Err(CliError::Config("sweep.eval_rounds must be >= 1".into()));
        }
        if self.sweep.task_sizes_mb.iter().any(|&s| !(s > 0.0)) {
            return Err(CliError::Config(
                "sweep.task_sizes_mb entries must be > 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.sweep.size_jitter_frac) {
            return Err(CliError::Config(
                "sweep.size_jitter_frac must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Output directory, honoring the output-root override variable.
    pub fn resolved_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ROOT_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(&self.out_dir),
            _ => PathBuf::from(&self.out_dir),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
