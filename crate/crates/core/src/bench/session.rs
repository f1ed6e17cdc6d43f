//! Session files: an initial state plus ordered turns with annotated calls.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{DocumentState, StateParseError};
use crate::phrasing::Lang;
use crate::registry::{ApiCall, ExecError};

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// One-based position within the session.
    pub turn_id: u32,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_instructions: Vec<String>,
    pub annotated_apis: Vec<ApiCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_state: Option<DocumentState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_version: u32,
    pub session_id: String,
    pub language: Lang,
    pub initial_state: DocumentState,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("session is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported session_version {0}")]
    Version(u32),
    #[error("invalid session `{session}`: {reason}")]
    Invalid { session: String, reason: String },
    #[error("initial state of `{0}` is invalid: {1}")]
    State(String, StateParseError),
    #[error("session `{session}` turn {turn_id}: annotated call {call} failed: {error}")]
    Replay {
        session: String,
        turn_id: u32,
        call: String,
        error: ExecError,
    },
}

impl SessionRecord {
    /// Structural checks that do not need execution.
    pub fn validate(&self) -> Result<(), SessionError> {
        let invalid = |reason: String| SessionError::Invalid {
            session: self.session_id.clone(),
            reason,
        };
        if self.session_version != SESSION_VERSION {
            return Err(SessionError::Version(self.session_version));
        }
        if self.turns.is_empty() {
            return Err(invalid("no turns".into()));
        }
        self.initial_state
            .validate()
            .map_err(|e| SessionError::State(self.session_id.clone(), e))?;
        for (i, t) in self.turns.iter().enumerate() {
            if t.turn_id as usize != i + 1 {
                return Err(invalid(format!("turn {} has turn_id {}", i + 1, t.turn_id)));
            }
            if t.annotated_apis.is_empty() {
                return Err(invalid(format!(
                    "turn {} has no annotated calls",
                    t.turn_id
                )));
            }
            if t.instruction.trim().is_empty() {
                return Err(invalid(format!(
                    "turn {} has an empty instruction",
                    t.turn_id
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let s: SessionRecord = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sessions always serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        std::fs::write(path, self.to_json()).map_err(|source| SessionError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn api_count(&self) -> usize {
        self.turns.iter().map(|t| t.annotated_apis.len()).sum()
    }
}

/// Load every `*.json` session in a directory, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<SessionRecord>, SessionError> {
    let io = |source| SessionError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| SessionRecord::load(p)).collect()
}

/// Load a single file or every session in a directory.
pub fn load_path(path: &Path) -> Result<Vec<SessionRecord>, SessionError> {
    if path.is_dir() {
        load_dir(path)
    } else {
        Ok(vec![SessionRecord::load(path)?])
    }
}
