//! Orchestration, file I/O and figure emission around the `bethe-gibbs`
//! library.

pub mod experiment;
pub mod ops;

use std::fs;
use std::path::Path;

use bethe_gibbs::animals::EnumerationLimits;
use bethe_gibbs::tree::TreeLimits;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use experiment::{run_experiment, ExperimentSpec, Manifest};

pub const MAX_VERTICES_ENV: &str = "BETHE_GIBBS_MAX_VERTICES";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: exit code 2.
    #[error("validation error: {0}")]
    Validation(String),
    /// A well-formed task that failed to run or whose check did not hold: exit code 1.
    #[error("task failed: {0}")]
    Task(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Task(_) => 1,
        }
    }
}

impl From<bethe_gibbs::Error> for CliError {
    fn from(err: bethe_gibbs::Error) -> Self {
        use bethe_gibbs::Error as E;
        match err {
            E::InvalidSpec(_)
            | E::InvalidParameter { .. }
            | E::UnknownVertex(_)
            | E::UnknownAddress(_)
            | E::UnknownEdge { .. }
            | E::TreeMismatch { .. }
            | E::NotADimerCover(_) => CliError::Validation(err.to_string()),
            _ => CliError::Task(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Resource guards shared by every command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Context {
    pub tree_limits: TreeLimits,
    pub enumeration: EnumerationLimits,
}

impl Context {
    /// Reads `BETHE_GIBBS_MAX_VERTICES` if set.
    pub fn from_env() -> CliResult<Self> {
        let mut ctx = Self::default();
        if let Ok(raw) = std::env::var(MAX_VERTICES_ENV) {
            let max: u64 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("{MAX_VERTICES_ENV}={raw:?} is not a vertex count")))?;
            ctx.tree_limits.max_vertices = max;
        }
        Ok(ctx)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a number came from: tool, spec hash, operation and parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub spec_hash: String,
    pub operation: String,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<&'static str>,
}

impl Provenance {
    /// Provenance whose spec hash covers the operation and its parameters.
    pub fn for_params(operation: &str, params: Value, rng: Option<&'static str>) -> Self {
        let spec = json!({ "operation": operation, "params": params });
        Self {
            tool: bethe_gibbs::TOOL_VERSION,
            spec_hash: sha256_hex(spec.to_string().as_bytes()),
            operation: operation.to_string(),
            params,
            rng,
        }
    }
}

/// Adds `provenance` to a JSON object body.
pub fn with_provenance(body: Value, provenance: &Provenance) -> Value {
    let mut map = match body {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    map.insert(
        "provenance".into(),
        serde_json::to_value(provenance).expect("provenance serializes"),
    );
    Value::Object(map)
}

pub fn to_json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Task(format!("creating {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Task(format!("writing {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))
}

/// Parses JSON, naming the offending field on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        CliError::Validation(format!("{what}: field `{path}`: {}", err.into_inner()))
    })
}
