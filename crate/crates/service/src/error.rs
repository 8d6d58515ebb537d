use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use needdesk_core::workflow::store::StoreError;
use needdesk_core::workflow::WorkflowError;
use serde::Serialize;

/// An error response: status plus a `{error, message}` body.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub current_version: Option<u64>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    current_version: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            current_version: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let message = e.to_string();
        match e {
            WorkflowError::Conflict { current, .. } => Self {
                current_version: Some(current),
                ..Self::new(StatusCode::CONFLICT, "conflict", message)
            },
            WorkflowError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, "not_found", message),
            WorkflowError::Duplicate(_) => Self::new(StatusCode::CONFLICT, "duplicate", message),
            WorkflowError::IllegalTransition { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "illegal_transition", message)
            }
            WorkflowError::WrongActor { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "wrong_actor", message),
            WorkflowError::Invalid { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Workflow(w) => w.into(),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.kind,
            message: &self.message,
            current_version: self.current_version,
        };
        (self.status, Json(body)).into_response()
    }
}
