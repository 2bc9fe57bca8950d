use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use gim_core::{AnnotationError, ReductionError, ScanError, SnapshotError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown collection {0}")]
    UnknownCollection(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    BadRequest { message: String, at: Option<String> },
    #[error("{message}")]
    Conflict { message: String, ancestor: String },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            message: message.into(),
            at: None,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownCollection(_) | ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownCollection(_) => "unknown_collection",
            ApiError::NotFound(_) => "not_found",
            ApiError::BadRequest { .. } => "bad_request",
            ApiError::Conflict { .. } => "exclusion_conflict",
            ApiError::Internal(_) => "internal",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    at: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ancestor: Option<&'a str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
            at: match &self {
                ApiError::BadRequest { at, .. } => at.as_deref(),
                _ => None,
            },
            ancestor: match &self {
                ApiError::Conflict { ancestor, .. } => Some(ancestor),
                _ => None,
            },
        };
        let json = serde_json::json!({ "error": body });
        (self.status(), axum::Json(json)).into_response()
    }
}

impl From<SnapshotError> for ApiError {
    fn from(e: SnapshotError) -> Self {
        match e {
            SnapshotError::Parse { ref at, .. } => ApiError::BadRequest {
                at: Some(at.clone()),
                message: e.to_string(),
            },
            SnapshotError::Io { .. } => ApiError::NotFound(e.to_string()),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::NotFound(_) | AnnotationError::NoEntry(_) => {
                ApiError::NotFound(e.to_string())
            }
            AnnotationError::ExclusionConflict { ref ancestor, .. } => ApiError::Conflict {
                ancestor: ancestor.clone(),
                message: e.to_string(),
            },
            AnnotationError::Parse { ref at, .. } => ApiError::BadRequest {
                at: Some(at.clone()),
                message: e.to_string(),
            },
            AnnotationError::Io { .. } => ApiError::Internal(e.to_string()),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<ReductionError> for ApiError {
    fn from(e: ReductionError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<ScanError> for ApiError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Cycle { .. } => ApiError::bad_request(e.to_string()),
            _ => ApiError::NotFound(e.to_string()),
        }
    }
}
