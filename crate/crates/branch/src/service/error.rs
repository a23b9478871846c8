use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;

use branch_core::Error;

/// JSON error body: `{status, code, message, location?}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    #[serde(rename = "status")]
    status_code: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            status_code: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
            location: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn not_found(what: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("{} not found", what.into()))
    }

    pub fn timeout() -> ApiError {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "Timeout", "request exceeded the configured time limit")
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    /// A body that failed to decode into the expected request shape.
    pub fn body(e: serde_json::Error) -> ApiError {
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, "SchemaViolation", format!("invalid request body: {e}"));
        err.location = Some("$".into());
        err
    }
}

/// HTTP status for each core error: 4xx for caller faults, 5xx for the store.
pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::MalformedCsv(_) | Error::BadClassColumn(_) | Error::BadFraction(_) | Error::SchemaViolation { .. } => {
            StatusCode::BAD_REQUEST
        }
        Error::Unauthorized | Error::InvalidToken => StatusCode::UNAUTHORIZED,
        Error::NotOwner(_) => StatusCode::FORBIDDEN,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::InUse(_) => StatusCode::CONFLICT,
        Error::EmptyDataset(_)
        | Error::TooFewSamples(_)
        | Error::UnresolvableTreeRef(_)
        | Error::UnknownFeature(_)
        | Error::ValidationFailed(_)
        | Error::SignatureMismatch(_)
        | Error::CyclicReference(_)
        | Error::DegenerateData(_)
        | Error::NonFiniteLoss { .. }
        | Error::OneClassOnly
        | Error::BadHyperparameters(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Io(_) | Error::CorruptStore(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> ApiError {
        let mut err = ApiError::new(status_of(&e), e.code(), e.to_string());
        err.location = e.location().map(str::to_owned);
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = branch_core::json::to_canonical_string(&self);
        (self.status, [(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}
