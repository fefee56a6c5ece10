//! JSON file format for MDPs (`"schema": "mdp-v1"`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use super::{Mdp, MdpError};
use crate::numfmt;

pub const MDP_SCHEMA: &str = "mdp-v1";

#[derive(Debug, Error)]
pub enum MdpFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported schema {found:?}, expected {MDP_SCHEMA:?}")]
    SchemaVersion { found: String },
    #[error("invalid MDP: {0}")]
    Invalid(#[from] MdpError),
}

#[derive(Serialize, Deserialize)]
struct MdpFile {
    schema: String,
    n_states: usize,
    n_actions: usize,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

fn json_error(e: serde_json::Error) -> MdpFileError {
    match e.classify() {
        Category::Data => MdpFileError::Schema(e.to_string()),
        Category::Io => MdpFileError::Io(e.into()),
        Category::Syntax | Category::Eof => MdpFileError::Malformed(e.to_string()),
    }
}

pub fn mdp_to_json(mdp: &Mdp) -> String {
    let file = MdpFile {
        schema: MDP_SCHEMA.to_owned(),
        n_states: mdp.n_states(),
        n_actions: mdp.n_actions(),
        rewards: mdp.rewards_nested(),
        transitions: mdp.transitions_nested(),
        labels: mdp.labels().map(<[String]>::to_vec),
    };
    let mut s = numfmt::to_json_string(&file).expect("MDP tables serialize");
    s.push('\n');
    s
}

pub fn mdp_from_json(text: &str) -> Result<Mdp, MdpFileError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    let schema = value
        .get("schema")
        .ok_or_else(|| MdpFileError::Schema("missing field `schema`".into()))?;
    match schema.as_str() {
        Some(MDP_SCHEMA) => {}
        _ => return Err(MdpFileError::SchemaVersion { found: schema.to_string() }),
    }
    let file: MdpFile = serde_json::from_value(value).map_err(json_error)?;
    if file.rewards.len() != file.n_states || file.transitions.len() != file.n_states {
        return Err(MdpFileError::Schema(format!(
            "n_states = {} but tables have {} reward rows and {} transition blocks",
            file.n_states,
            file.rewards.len(),
            file.transitions.len()
        )));
    }
    if file.rewards.iter().any(|r| r.len() != file.n_actions) {
        return Err(MdpFileError::Schema(format!("reward rows must have n_actions = {} entries", file.n_actions)));
    }
    Ok(Mdp::from_nested(&file.rewards, &file.transitions, file.labels)?)
}

pub fn save_mdp(mdp: &Mdp, path: impl AsRef<Path>) -> Result<(), MdpFileError> {
    fs::write(path, mdp_to_json(mdp))?;
    Ok(())
}

pub fn load_mdp(path: impl AsRef<Path>) -> Result<Mdp, MdpFileError> {
    mdp_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{make_coffee_robot, make_gridworld};

    #[test]
    fn round_trip_gridworld_and_coffee() {
        for m in [make_gridworld(3).unwrap(), make_coffee_robot()] {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_mdp(&m, &path).unwrap();
            assert_eq!(load_mdp(&path).unwrap(), m);
        }
    }

    #[test]
    fn awkward_probabilities_are_bit_exact() {
        let p = 1.0 / 3.0;
        let m = Mdp::from_nested(
            &[vec![0.1], vec![-2.5e-7]],
            &[vec![vec![p, 1.0 - p]], vec![vec![0.7, 0.30000000000000004]]],
            None,
        )
        .unwrap();
        assert_eq!(mdp_from_json(&mdp_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn missing_transitions_is_schema_error() {
        let text = r#"{"schema":"mdp-v1","n_states":1,"n_actions":1,"rewards":[[0.0]]}"#;
        let err = mdp_from_json(text).unwrap_err();
        assert!(matches!(err, MdpFileError::Schema(ref m) if m.contains("transitions")), "{err}");
    }

    #[test]
    fn zero_row_is_invariant_error() {
        let text = r#"{"schema":"mdp-v1","n_states":2,"n_actions":1,"rewards":[[0.0],[0.0]],
            "transitions":[[[0.0,0.0]],[[0.0,1.0]]]}"#;
        let err = mdp_from_json(text).unwrap_err();
        assert!(matches!(err, MdpFileError::Invalid(MdpError::NonStochasticRow { state: 0, .. })), "{err}");
    }

    #[test]
    fn schema_version_and_syntax_errors() {
        let err = mdp_from_json(r#"{"schema":"mdp-v2"}"#).unwrap_err();
        assert!(matches!(err, MdpFileError::SchemaVersion { .. }));
        assert!(matches!(mdp_from_json("{not json"), Err(MdpFileError::Malformed(_))));
        let text = r#"{"schema":"mdp-v1","n_states":3,"n_actions":1,"rewards":[[0.0]],"transitions":[[[1.0]]]}"#;
        assert!(matches!(mdp_from_json(text), Err(MdpFileError::Schema(_))));
    }
}
