//! Turning uploaded bytes into a batch of sessions. Shared by the CLI and
//! the HTTP service so both export from identical inputs.

use serde::Serialize;
use space_core::sessionlog::{ingest_bytes, SessionError, SessionLog};

use crate::error::AppError;

/// What happened to one uploaded file or archive member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryStatus {
    pub name: String,
    /// `ok` or `error`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub participant_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub week: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub entries: Vec<EntryStatus>,
    pub sessions: Vec<SessionLog>,
}

impl Ingested {
    pub fn n_errors(&self) -> usize {
        self.entries.iter().filter(|e| e.status != "ok").count()
    }

    /// Append one upload: a single log or a zip of logs.
    pub fn add(&mut self, name: &str, bytes: &[u8]) {
        let entries = match ingest_bytes(name, bytes) {
            Ok(entries) => entries,
            Err(e) => {
                self.entries.push(EntryStatus {
                    name: name.to_string(),
                    status: "error",
                    participant_id: None,
                    week: None,
                    error_kind: Some("archive"),
                    message: Some(e.to_string()),
                    violations: Vec::new(),
                });
                return;
            }
        };
        for entry in entries {
            match entry.outcome {
                Ok(log) => {
                    self.entries.push(EntryStatus {
                        name: entry.source_name,
                        status: "ok",
                        participant_id: Some(log.participant_id.clone()),
                        week: Some(log.week.number()),
                        error_kind: None,
                        message: None,
                        violations: Vec::new(),
                    });
                    self.sessions.push(log);
                }
                Err(e) => {
                    let violations = match &e {
                        SessionError::Validation(v) => v.iter().map(ToString::to_string).collect(),
                        _ => Vec::new(),
                    };
                    self.entries.push(EntryStatus {
                        name: entry.source_name,
                        status: "error",
                        participant_id: None,
                        week: None,
                        error_kind: Some(e.kind()),
                        message: Some(e.to_string()),
                        violations,
                    });
                }
            }
        }
    }

    /// Error listing every failed entry, if any failed.
    pub fn failure(&self) -> Option<AppError> {
        let failed: Vec<String> = self
            .entries
            .iter()
            .filter(|e| e.status != "ok")
            .map(|e| format!("{}: {}", e.name, e.message.as_deref().unwrap_or("error")))
            .collect();
        (!failed.is_empty()).then(|| {
            AppError::new("invalid_input", format!("{} of {} entries failed", failed.len(), self.entries.len()))
                .with_details(failed)
        })
    }
}
