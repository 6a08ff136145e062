use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::pool::Submitter;
use crate::protocol::{ErrorBody, Health, QueryRequest};
use crate::service::ServiceError;

pub(crate) struct AppState {
    pub submitter: Submitter,
    pub health: Health,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::MalformedQuery(_) | ServiceError::InvalidSavedState(_) => StatusCode::BAD_REQUEST,
            ServiceError::Overloaded | ServiceError::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
        };
        let body = ErrorBody { error: self.kind().to_owned(), message: self.to_string() };
        (status, Json(body)).into_response()
    }
}

pub(crate) fn router(state: Arc<AppState>) -> Router {
    Router::new().route("/sparql", post(sparql)).route("/health", get(health)).with_state(state)
}

async fn sparql(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ServiceError> {
    let request: QueryRequest =
        serde_json::from_slice(&body).map_err(|e| ServiceError::MalformedQuery(e.to_string()))?;
    let reply = state.submitter.submit(request)?;
    let page = reply.await.map_err(|_| ServiceError::Unavailable)??;
    Ok(Json(page).into_response())
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(state.health.clone())
}
