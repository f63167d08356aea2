use std::fmt;

use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use curalens_core::error::ErrorBody;
use curalens_core::{Coded, Error, ErrorClass};

/// An error response: status plus the `{"error": {"code", "message"}}` body.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl fmt::Display) -> Self {
        Self {
            status,
            body: ErrorBody::new(code, message),
        }
    }

    pub fn forbidden(message: impl fmt::Display) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn malformed(message: impl fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

pub fn status_for(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::Malformed => StatusCode::BAD_REQUEST,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Domain => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl<E: Into<Error>> From<E> for ApiError {
    fn from(err: E) -> Self {
        let err = err.into();
        let status = match err {
            Error::Auth(_) => StatusCode::UNAUTHORIZED,
            _ => status_for(err.class()),
        };
        Self {
            status,
            body: ErrorBody::from_coded(&err),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            format!("{}\n", self.body.to_json()),
        )
            .into_response()
    }
}
