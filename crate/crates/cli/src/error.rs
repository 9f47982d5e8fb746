use serde::Serialize;
use thiserror::Error;

/// Failure of a CLI command or an HTTP request, with a stable `kind` tag.
#[derive(Debug, Error, Serialize)]
#[error("{message}")]
pub struct AppError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl AppError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        AppError {
            kind,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn with_details(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }

    /// `{"error":{...}}` on one line.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::new("io", e.to_string())
    }
}

impl From<space_core::export::ExportError> for AppError {
    fn from(e: space_core::export::ExportError) -> Self {
        use space_core::export::ExportError as E;
        match e {
            E::UnknownColumns(cols) => AppError::new("unknown_columns", format!("unknown column(s): {}", cols.join(", ")))
                .with_details(cols),
            E::NoColumns => AppError::new("no_columns", e.to_string()),
            E::UnknownMode(_) => AppError::new("unknown_mode", e.to_string()),
            E::EmptyBatch => AppError::new("empty_batch", e.to_string()),
            other => AppError::new("export", other.to_string()),
        }
    }
}

impl From<space_core::studysim::SimError> for AppError {
    fn from(e: space_core::studysim::SimError) -> Self {
        AppError::new("simulation", e.to_string())
    }
}

impl From<space_core::studysim::AnalysisError> for AppError {
    fn from(e: space_core::studysim::AnalysisError) -> Self {
        AppError::new("analysis", e.to_string())
    }
}

impl From<space_core::taskgen::TaskError> for AppError {
    fn from(e: space_core::taskgen::TaskError) -> Self {
        AppError::new("task", e.to_string())
    }
}
