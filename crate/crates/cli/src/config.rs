//! Experiment configuration, read from JSON and overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use hetnet_core::model::ChannelConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Benders,
    Subgrad,
    Oracle,
    Rba,
    RobustBenders,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Benders => "benders",
            Algorithm::Subgrad => "subgrad",
            Algorithm::Oracle => "oracle",
            Algorithm::Rba => "rba",
            Algorithm::RobustBenders => "robust-benders",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub users: usize,
    pub channel: ChannelConfig,
    pub sinr_targets_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub epsilon: f64,
    /// Iteration cap for both Benders and the subgradient method; each keeps
    /// its own default when unset.
    pub max_iters: Option<usize>,
    /// Cap on conic engine invocations per run.
    pub solve_budget: Option<usize>,
    /// Relative channel error radius for `robust-benders`.
    pub robust_theta: f64,
    /// Number of seeded drops averaged by `sweep`.
    pub drops: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            users: 6,
            channel: ChannelConfig::default(),
            sinr_targets_db: vec![5.0],
            algorithms: vec![Algorithm::Benders, Algorithm::Subgrad, Algorithm::Oracle, Algorithm::Rba],
            epsilon: 1e-4,
            max_iters: None,
            solve_budget: None,
            robust_theta: 0.01,
            drops: 10,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty".into());
        }
        if self.sinr_targets_db.is_empty() {
            return bad("no SINR targets given".into());
        }
        if let Some(t) = self.sinr_targets_db.iter().find(|t| !t.is_finite()) {
            return bad(format!("SINR target {t} is not finite"));
        }
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be finite and nonnegative".into());
        }
        if !(self.robust_theta >= 0.0 && self.robust_theta.is_finite()) {
            return bad("robust_theta must be finite and nonnegative".into());
        }
        if self.drops == 0 {
            return bad("drops must be at least 1".into());
        }
        self.channel.validate().map_err(CliError::Config)
    }

    /// Channel parameters with the SINR target of the generated instance set
    /// to the first configured target.
    pub fn channel_for_generation(&self) -> ChannelConfig {
        ChannelConfig { sinr_db: self.sinr_targets_db[0], ..self.channel.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn algorithm_names_are_kebab_case() {
        let c = ExperimentConfig::from_json(r#"{"algorithms": ["robust-benders", "rba"]}"#).unwrap();
        assert_eq!(c.algorithms, vec![Algorithm::RobustBenders, Algorithm::Rba]);
    }

    #[test]
    fn parse_errors_name_the_field_and_line() {
        let err = ExperimentConfig::from_json("{\n  \"seed\": 1,\n  \"userz\": 3\n}").unwrap_err().to_string();
        assert!(err.contains("userz") && err.contains("line 3"), "{err}");
        let err = ExperimentConfig::from_json("{\n  \"epsilon\": \"x\"\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn empty_algorithm_list_is_rejected() {
        let c = ExperimentConfig { algorithms: vec![], ..ExperimentConfig::default() };
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
