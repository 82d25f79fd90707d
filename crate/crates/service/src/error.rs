use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evoform_core::Error as CoreError;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config section [{0}]")]
    UnknownSection(String),
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for {key}")]
    Value { key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// JSON error body: `{"code": "...", "message": "..."}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-request", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl From<CoreError> for ApiError {
    fn from(err: CoreError) -> Self {
        let message = err.to_string();
        let (status, code) = match err {
            CoreError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown-session"),
            CoreError::UnknownRoom(_) => (StatusCode::NOT_FOUND, "unknown-room"),
            CoreError::UnknownIndividual(_) => (StatusCode::NOT_FOUND, "unknown-individual"),
            CoreError::StaleDonor { .. } => (StatusCode::CONFLICT, "stale-donor"),
            CoreError::NotPermitted { .. } | CoreError::NotAMember { .. } => {
                (StatusCode::FORBIDDEN, "not-permitted")
            }
            CoreError::InvalidPick { .. } | CoreError::TooManyPicks { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid-picks")
            }
            CoreError::InvalidSpace(_) | CoreError::InvalidMask => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid-space")
            }
            CoreError::MalformedMesh(_) | CoreError::ObjParse { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid-mesh")
            }
            CoreError::Scenario(_) | CoreError::InvalidEvent(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid-request"),
        };
        Self::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
