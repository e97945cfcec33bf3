use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dor_core::session::SessionError;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detail {
    pub path: String,
    pub message: String,
}

/// Error response: `{code, message, details[]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip, default = "internal")]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Vec<Detail>,
}

fn internal() -> StatusCode {
    StatusCode::INTERNAL_SERVER_ERROR
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not-found", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn with_details(mut self, details: Vec<Detail>) -> Self {
        self.details = details;
        self
    }

    /// Maps a session error; `plan_is_target` makes an unknown plan a 404
    /// instead of a validation failure.
    pub fn from_session(e: SessionError, plan_is_target: bool) -> Self {
        match e {
            SessionError::Converged => ApiError::new(StatusCode::CONFLICT, "converged", e.to_string()),
            SessionError::UnknownPlan(_) if plan_is_target => ApiError::not_found(e.to_string()),
            SessionError::Instance(ref diags) => {
                let details = diags
                    .0
                    .iter()
                    .map(|d| Detail {
                        path: d.path.clone(),
                        message: d.message.clone(),
                    })
                    .collect();
                ApiError::invalid(e.to_string()).with_details(details)
            }
            SessionError::Io(_) | SessionError::Parse { .. } | SessionError::NotStructured => {
                ApiError::internal(e.to_string())
            }
            SessionError::ReplayMismatch { .. } | SessionError::Infeasible { .. } => ApiError::internal(e.to_string()),
            _ => ApiError::invalid(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        (self.status, Json(&self)).into_response()
    }
}
