use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use snuggle_core::{ProfileError, SessionError, SimilarityError, StoreError};

/// JSON error body: `{"code": ..., "message": ..., "http_status": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), http_status: status.as_u16() }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or invalid admin token")
    }

    pub fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", "no such route")
    }

    pub fn method_not_allowed() -> Self {
        Self::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

fn unprocessable(code: &'static str, message: String) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
}

impl From<ProfileError> for ApiError {
    fn from(e: ProfileError) -> Self {
        let code = match e {
            ProfileError::UnknownQuestion(_) => "unknown_question",
            ProfileError::IndexOutOfRange { .. } => "index_out_of_range",
            ProfileError::TooManySelections { .. } => "too_many_selections",
            ProfileError::UnknownOption { .. } => "unknown_option",
        };
        unprocessable(code, e.to_string())
    }
}

impl From<SimilarityError> for ApiError {
    fn from(e: SimilarityError) -> Self {
        let message = e.to_string();
        match e {
            SimilarityError::PageOutOfRange { .. } => unprocessable("page_out_of_range", message),
            SimilarityError::UnknownDimension(_) => unprocessable("unknown_dimension", message),
            SimilarityError::EmptyDimensions => unprocessable("empty_dimensions", message),
            SimilarityError::SchemaMismatch => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "schema_mismatch", message)
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::UnknownRecord(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_record", message),
            StoreError::NotPending(_) => ApiError::new(StatusCode::CONFLICT, "not_pending", message),
            StoreError::NotShared(_) => ApiError::new(StatusCode::CONFLICT, "not_shared", message),
            StoreError::Duplicate(_) | StoreError::Corrupt { .. } | StoreError::Storage(_) => {
                tracing::error!(error = %message, "storage failure");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", message)
            }
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::UnknownSession => ApiError::new(StatusCode::NOT_FOUND, "unknown_session", message),
            SessionError::Expired => ApiError::new(StatusCode::GONE, "session_expired", message),
            SessionError::IllegalTransition { .. } => {
                ApiError::new(StatusCode::CONFLICT, "illegal_transition", message)
            }
            SessionError::EmptyNarrative => unprocessable("empty_narrative", message),
            SessionError::EmptyField(_) => unprocessable("empty_field", message),
            SessionError::TextTooLong { .. } => unprocessable("text_too_long", message),
            SessionError::UnknownCard(_) => unprocessable("unknown_card", message),
            SessionError::UnknownItem(_) => unprocessable("unknown_item", message),
            SessionError::DuplicateItem(_) => unprocessable("duplicate_item", message),
            SessionError::UnplacedItems(_) => unprocessable("unplaced_items", message),
            SessionError::Profile(p) => p.into(),
            SessionError::Recommendation(r) => r.into(),
            SessionError::Store(s) => s.into(),
        }
    }
}
