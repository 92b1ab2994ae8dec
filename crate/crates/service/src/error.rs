use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use pointwise_core::ledger::LedgerError;
use pointwise_core::session::SessionError;
use serde::{Deserialize, Serialize};

/// Every code the API can return, with its HTTP status.
pub const CODES: &[(&str, u16)] = &[
    ("BAD_REQUEST", 400),
    ("INVALID_CONFIG", 400),
    ("INVALID_INPUT", 400),
    ("MISSING_TOKEN", 401),
    ("UNKNOWN_TOKEN", 401),
    ("NOT_FOUND", 404),
    ("UNKNOWN_SESSION", 404),
    ("UNKNOWN_STORY", 404),
    ("UNKNOWN_PARTICIPANT", 404),
    ("METHOD_NOT_ALLOWED", 405),
    ("SESSION_EXISTS", 409),
    ("DUPLICATE_NAME", 409),
    ("ALREADY_SEALED", 409),
    ("STORY_NOT_ESTIMATING", 409),
    ("NOT_ALL_SUBMITTED", 409),
    ("NO_ESTIMATES", 409),
    ("STORY_NOT_REVEALED", 409),
    ("STORY_NOT_IN_PROGRESS", 409),
    ("NO_ORIGINAL_ESTIMATE", 409),
    ("STORY_NOT_DONE", 409),
    ("ALREADY_SCORED", 409),
    ("INVALID_TRANSITION", 409),
    ("IDEMPOTENCY_CONFLICT", 409),
    ("VALUE_NOT_ON_SCALE", 422),
    ("NON_POSITIVE_ACTUAL", 422),
    ("CORRUPT_LOG", 500),
    ("STORAGE_ERROR", 500),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    /// Panics if `code` is not listed in [`CODES`].
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        let http_status = CODES
            .iter()
            .find(|(c, _)| *c == code)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| panic!("undocumented error code {code}"));
        ApiError { code: code.to_string(), message: message.into(), http_status }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new("BAD_REQUEST", message)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let code = match &e {
            InvalidConfig(_) => "INVALID_CONFIG",
            InvalidInput(_) => "INVALID_INPUT",
            UnknownParticipant(_) => "UNKNOWN_PARTICIPANT",
            UnknownStory(_) => "UNKNOWN_STORY",
            DuplicateName(_) => "DUPLICATE_NAME",
            AlreadySealed => "ALREADY_SEALED",
            StoryNotEstimating => "STORY_NOT_ESTIMATING",
            ValueNotOnScale(_) => "VALUE_NOT_ON_SCALE",
            NotAllSubmitted { .. } => "NOT_ALL_SUBMITTED",
            NoEstimates => "NO_ESTIMATES",
            StoryNotRevealed => "STORY_NOT_REVEALED",
            StoryNotInProgress => "STORY_NOT_IN_PROGRESS",
            NoOriginalEstimate => "NO_ORIGINAL_ESTIMATE",
            NonPositiveActual(_) => "NON_POSITIVE_ACTUAL",
            StoryNotDone => "STORY_NOT_DONE",
            AlreadyScored => "ALREADY_SCORED",
            InvalidTransition { .. } => "INVALID_TRANSITION",
            GapInSequence { .. } | UnknownEventKind(_) | MalformedEvent(_) => "CORRUPT_LOG",
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<LedgerError> for ApiError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Session(inner) => inner.into(),
            LedgerError::SessionNotFound(_) => ApiError::new("UNKNOWN_SESSION", e.to_string()),
            LedgerError::SessionExists(_) => ApiError::new("SESSION_EXISTS", e.to_string()),
            LedgerError::UnknownFormat(_) => ApiError::new("INVALID_INPUT", e.to_string()),
            LedgerError::Io(_) | LedgerError::Csv(_) | LedgerError::Json(_) => {
                ApiError::new("STORAGE_ERROR", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
