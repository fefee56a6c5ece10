use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mdp::{load_mdp, make_coffee_robot, make_gridworld, Mdp, MdpFileError};
use crate::metrics::{Backend, Method, MetricRunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinMdp {
    Gridworld,
    Coffee,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MdpSource {
    Builtin {
        builtin: BuiltinMdp,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    File {
        file: PathBuf,
    },
}

impl MdpSource {
    /// Builds or reads the MDP; returns a display name alongside it.
    pub fn load(&self) -> Result<(String, Mdp), HarnessError> {
        match self {
            MdpSource::Builtin { builtin: BuiltinMdp::Gridworld, n } => {
                let n = n.unwrap_or(3);
                let mdp = make_gridworld(n).map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok((format!("gridworld-{n}x{n}"), mdp))
            }
            MdpSource::Builtin { builtin: BuiltinMdp::Coffee, .. } => Ok(("coffee-robot".into(), make_coffee_robot())),
            MdpSource::File { file } => {
                let mdp = load_mdp(file).map_err(|e| match e {
                    MdpFileError::Io(io) => MdpFileError::Io(std::io::Error::new(io.kind(), format!("{}: {io}", file.display()))),
                    other => other,
                })?;
                Ok((file.display().to_string(), mdp))
            }
        }
    }
}

fn default_tol() -> f64 {
    1e-4
}
fn default_samples() -> usize {
    10
}
fn default_runs() -> usize {
    30
}
fn default_vi_tol() -> f64 {
    1e-6
}
fn default_budget() -> f64 {
    600.0
}

/// An experiment sweep, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mdp: MdpSource,
    pub methods: Vec<Method>,
    pub c_values: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub k_values: Vec<usize>,
    #[serde(default)]
    pub epsilon_values: Vec<f64>,
    /// Discount for value iteration; when absent each metric is scored with
    /// `gamma = c`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_vi_tol")]
    pub vi_tol: f64,
    /// Wall-clock budget per metric computation.
    #[serde(default = "default_budget")]
    pub time_budget_secs: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the MDP, methods and `c`.
    pub fn new(mdp: MdpSource, methods: Vec<Method>, c_values: Vec<f64>) -> Self {
        Self {
            mdp,
            methods,
            c_values,
            tol: default_tol(),
            samples: default_samples(),
            runs: default_runs(),
            seed: 0,
            k_values: Vec::new(),
            epsilon_values: Vec::new(),
            gamma: None,
            vi_tol: default_vi_tol(),
            time_budget_secs: default_budget(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.c_values.is_empty() {
            return bad("c_values must not be empty".into());
        }
        if let Some(c) = self.c_values.iter().find(|&&c| !(c > 0.0 && c < 1.0)) {
            return bad(format!("c = {c} is outside (0, 1)"));
        }
        if let Some(g) = self.gamma.filter(|&g| !(g > 0.0 && g < 1.0)) {
            return bad(format!("gamma = {g} is outside (0, 1)"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) || !(self.vi_tol > 0.0 && self.vi_tol.is_finite()) {
            return bad("tol and vi_tol must be positive".into());
        }
        if self.samples == 0 || self.runs == 0 {
            return bad("samples and runs must be at least 1".into());
        }
        if self.k_values.contains(&0) {
            return bad("k values must be at least 1".into());
        }
        if let Some(e) = self.epsilon_values.iter().find(|&&e| !(e >= 0.0 && e.is_finite())) {
            return bad(format!("epsilon = {e} must be finite and nonnegative"));
        }
        if !(self.time_budget_secs >= 0.0 && self.time_budget_secs.is_finite()) {
            return bad("time_budget_secs must be finite and nonnegative".into());
        }
        Ok(())
    }

    pub fn metric_config(&self, c: f64) -> MetricRunConfig {
        MetricRunConfig { c, tol: self.tol, backend: Backend::Cold, samples: self.samples, runs: self.runs, seed: self.seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full_configs() {
        let cfg = ExperimentConfig::from_json(r#"{"mdp":{"builtin":"gridworld","n":3},"methods":["tv"],"c_values":[0.5]}"#).unwrap();
        assert_eq!(cfg.mdp, MdpSource::Builtin { builtin: BuiltinMdp::Gridworld, n: Some(3) });
        assert_eq!((cfg.samples, cfg.runs, cfg.time_budget_secs), (10, 30, 600.0));
        let cfg = ExperimentConfig::from_json(
            r#"{"mdp":{"file":"m.json"},"methods":["fix","sample"],"c_values":[0.1,0.9],"k_values":[4],
                "epsilon_values":[0.1],"gamma":0.9,"seed":7,"time_budget_secs":1.5}"#,
        )
        .unwrap();
        assert_eq!(cfg.mdp, MdpSource::File { file: "m.json".into() });
        assert_eq!(cfg.gamma, Some(0.9));
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"mdp":{"builtin":"coffee"},"methods":[],"c_values":[0.5]}"#,
            r#"{"mdp":{"builtin":"coffee"},"methods":["tv"],"c_values":[1.0]}"#,
            r#"{"mdp":{"builtin":"coffee"},"methods":["tv"],"c_values":[0.5],"gamma":1.5}"#,
            r#"{"mdp":{"builtin":"coffee"},"methods":["nope"],"c_values":[0.5]}"#,
            r#"{"mdp":{"builtin":"coffee"},"methods":["tv"],"c_values":[0.5],"extra":1}"#,
            r#"{"mdp":{"builtin":"coffee"},"methods":["tv"],"c_values":[0.5],"k_values":[0]}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(HarnessError::Config(_))), "{text}");
        }
    }
}
