use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", summary(.0))]
    Validation(Vec<FieldError>),
    #[error("total dimension {dim} exceeds the guard of {guard}")]
    DimensionGuard { dim: u128, guard: usize },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Library(envlab::Error),
}

fn summary(fields: &[FieldError]) -> String {
    fields.iter().map(|f| format!("{}: {}", f.field, f.message)).collect::<Vec<_>>().join("; ")
}

impl From<envlab::Error> for CliError {
    fn from(e: envlab::Error) -> Self {
        match e {
            envlab::Error::SpaceTooLarge { dim, guard } => CliError::DimensionGuard { dim, guard },
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        CliError::Validation(vec![FieldError::new(field, message)])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::DimensionGuard { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Library(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::DimensionGuard { .. } => "dimension_guard",
            CliError::Io { .. } => "io",
            CliError::Library(_) => "library",
        }
    }

    /// The machine-readable error document written to stderr.
    pub fn to_document(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Validation(fields) => body["fields"] = json!(fields),
            CliError::DimensionGuard { dim, guard } => {
                body["dimension"] = json!(dim.to_string());
                body["guard"] = json!(guard);
            }
            CliError::Io { path, .. } => body["path"] = json!(path.display().to_string()),
            CliError::Library(_) => {}
        }
        json!({ "error": body })
    }
}
