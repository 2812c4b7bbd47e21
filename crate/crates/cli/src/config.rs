//! Run configuration: error-to-exit-code mapping, scenario grid files, and
//! output plumbing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crowdlab_core::simulate::{Behavior, Scenario};

/// Version stamped into every JSON artifact this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Exit-code contract: 0 success, 1 internal error, 2 invalid input,
/// 3 replication-check failure.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Internal(String),
    ReplicationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
            CliError::ReplicationFailed { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(msg) => write!(f, "invalid input: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
            CliError::ReplicationFailed { failed, total } => {
                write!(
                    f,
                    "replication check failed: {failed} of {total} items out of tolerance"
                )
            }
        }
    }
}

impl From<crowdlab_core::Error> for CliError {
    fn from(e: crowdlab_core::Error) -> Self {
        if e.is_domain() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parse a behavior flag: `equilibrium`, `signal-following`, or
/// `mixture:PSI,LAMBDA`.
pub fn parse_behavior(s: &str) -> CliResult<Behavior> {
    match s {
        "equilibrium" => Ok(Behavior::Equilibrium),
        "signal-following" | "signal_following" => Ok(Behavior::SignalFollowing),
        other => {
            let rest = other.strip_prefix("mixture:").ok_or_else(|| {
                CliError::Invalid(format!(
                    "unknown behavior `{other}`; expected `equilibrium`, `signal-following`, or `mixture:PSI,LAMBDA`"
                ))
            })?;
            let (psi, lambda) = rest.split_once(',').ok_or_else(|| {
                CliError::Invalid(format!("mixture behavior needs two rates, got `{rest}`"))
            })?;
            let parse = |name: &str, v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Invalid(format!("bad {name} in mixture behavior: {e}")))
            };
            Ok(Behavior::Mixture {
                psi: parse("psi", psi)?,
                lambda: parse("lambda", lambda)?,
            })
        }
    }
}

/// Voting cells cannot play the crowdfunding equilibrium; map the requested
/// profile to its voting counterpart.
pub fn voting_counterpart(behavior: Behavior) -> Behavior {
    match behavior {
        Behavior::Equilibrium => Behavior::SignalFollowing,
        other => other,
    }
}

/// Scenario grid file: either a bare JSON array of scenarios or a versioned
/// envelope `{"schema_version": 1, "scenarios": [...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct GridFile {
    schema_version: u32,
    scenarios: Vec<Scenario>,
}

pub fn load_grid(path: &Path) -> CliResult<Vec<Scenario>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let parse_err = |e: serde_json::Error| {
        CliError::Invalid(format!(
            "{}: {e} (line {}, column {})",
            path.display(),
            e.line(),
            e.column()
        ))
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let scenarios: Vec<Scenario> = if value.is_array() {
        serde_json::from_value(value).map_err(parse_err)?
    } else {
        let file: GridFile = serde_json::from_value(value).map_err(parse_err)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        file.scenarios
    };
    if scenarios.is_empty() {
        return Err(CliError::Invalid("scenario grid is empty".to_string()));
    }
    Ok(scenarios)
}

/// Create the output directory when missing and return the joined path.
pub fn output_path(dir: &Path, file: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(file))
}

/// Wrap a serializable payload in the versioned JSON envelope.
pub fn versioned_json<T: Serialize>(payload: &T) -> CliResult<serde_json::Value> {
    let mut value = serde_json::to_value(payload)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    match &mut value {
        serde_json::Value::Object(map) => {
            map.insert(
                "schema_version".to_string(),
                serde_json::Value::from(SCHEMA_VERSION),
            );
        }
        other => {
            let mut map = serde_json::Map::new();
            map.insert(
                "schema_version".to_string(),
                serde_json::Value::from(SCHEMA_VERSION),
            );
            map.insert("result".to_string(), other.take());
            value = serde_json::Value::Object(map);
        }
    }
    Ok(value)
}
