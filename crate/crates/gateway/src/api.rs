//! The client-facing HTTP API.
//!
//! Every body is JSON. Errors come back as `{"error": <code>, "message": ..}`
//! with 400 for validation failures, 404 for unknown entities, 409 for
//! conflicts and 500 only for store failures. A partially failed federated
//! search is still a 200; failing libraries are listed in `source_errors`.
//!
//! Write endpoints take the acting user from the body's `user` field, falling
//! back to the `X-ScholarLib-User` header.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use scholarlib_core::{Error as CoreError, SearchQuery, UserProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tracing::info;

use crate::db::Db;
use crate::error::GatewayError;
use crate::service::{Gateway, GatewayConfig};

pub const USER_HEADER: &str = "x-scholarlib-user";
pub const DEFAULT_RECOMMENDATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError(GatewayError);

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        ApiError(e)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        ApiError(e.into())
    }
}

fn invalid(msg: impl Into<String>) -> ApiError {
    ApiError(CoreError::InvalidPayload(msg.into()).into())
}

/// HTTP status and error code for a gateway error.
pub fn classify(e: &GatewayError) -> (StatusCode, &'static str) {
    use StatusCode as S;
    match e {
        GatewayError::Domain(d) => match d {
            CoreError::InvalidRecord(_) => (S::BAD_REQUEST, "invalid_record"),
            CoreError::UnknownSource(_) => (S::NOT_FOUND, "unknown_source"),
            CoreError::UnknownUser(_) => (S::NOT_FOUND, "unknown_user"),
            CoreError::UnknownItem(_) => (S::NOT_FOUND, "unknown_item"),
            CoreError::UnknownAlert(_) => (S::NOT_FOUND, "unknown_alert"),
            CoreError::InvalidUser(_) => (S::BAD_REQUEST, "invalid_user"),
            CoreError::InvalidPayload(_) => (S::BAD_REQUEST, "invalid_payload"),
            CoreError::InvalidQuery(_) => (S::BAD_REQUEST, "invalid_query"),
            CoreError::InvalidParams(_) => (S::BAD_REQUEST, "invalid_params"),
            CoreError::SelfEdge(_) => (S::BAD_REQUEST, "self_edge"),
            CoreError::NotContacts { .. } => (S::BAD_REQUEST, "not_contacts"),
            CoreError::BadParent(_) => (S::BAD_REQUEST, "bad_parent"),
            CoreError::DuplicateName(_) => (S::CONFLICT, "duplicate_name"),
            CoreError::NoTerms(_) => (S::BAD_REQUEST, "no_terms"),
            CoreError::Corrupt(_) => (S::INTERNAL_SERVER_ERROR, "store_corruption"),
        },
        GatewayError::Connector(c) => (S::BAD_GATEWAY, c.code()),
        GatewayError::InvalidUrl { .. } => (S::BAD_REQUEST, "invalid_url"),
        GatewayError::NoActiveSources => (S::CONFLICT, "no_active_sources"),
        GatewayError::AlertRunInProgress => (S::CONFLICT, "alert_run_in_progress"),
        GatewayError::StoreCorruption(_) => (S::INTERNAL_SERVER_ERROR, "store_corruption"),
        GatewayError::Io(_) => (S::INTERNAL_SERVER_ERROR, "io"),
        GatewayError::Config(_) => (S::BAD_REQUEST, "invalid_config"),
        GatewayError::CorpusParse(_) => (S::BAD_REQUEST, "corpus_parse"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = classify(&self.0);
        let body = ErrorBody { error: code.into(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<Gateway>>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| invalid(format!("bad request body: {e}")))
}

fn query_map(raw: Option<String>) -> HashMap<String, String> {
    url::form_urlencoded::parse(raw.unwrap_or_default().as_bytes()).into_owned().collect()
}

fn number<T: std::str::FromStr>(params: &HashMap<String, String>, key: &str, default: T) -> ApiResult<T> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| ApiError(CoreError::InvalidParams(format!("{key} must be a non-negative integer")).into())),
    }
}

/// The acting user: explicit body value first, then the header.
fn acting_user(body: Option<String>, headers: &HeaderMap) -> ApiResult<String> {
    body.or_else(|| headers.get(USER_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string))
        .filter(|u| !u.trim().is_empty())
        .ok_or_else(|| ApiError(CoreError::InvalidUser("no user given (body or X-ScholarLib-User)".into()).into()))
}

fn created<T: Serialize>(value: T) -> Response {
    (StatusCode::CREATED, Json(value)).into_response()
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/search", get(search))
        .route("/items/{id}", get(item))
        .route("/items/{id}/annotations", get(annotations))
        .route("/items/{id}/comments", post(comment))
        .route("/items/{id}/ratings", post(rate))
        .route("/items/{id}/library", post(file_item))
        .route("/items/{id}/forwards", post(forward))
        .route("/items/{id}/spread", get(spread))
        .route("/social/search", get(social_search))
        .route("/recommend", get(recommend))
        .route("/users", post(upsert_user))
        .route("/users/{id}", get(user))
        .route("/users/{id}/library", get(library))
        .route("/users/{id}/notifications", get(notifications))
        .route("/contacts", post(add_contact))
        .route("/posts", post(post_item))
        .route("/alerts", post(create_alert).get(list_alerts))
        .route("/alerts/run", post(run_alerts))
        .route("/registry/dls", get(list_dls).post(register_dl))
        .route("/registry/dls/{name}", get(get_dl).delete(remove_dl))
        .route("/registry/dls/{name}/probe", post(probe_dl))
        .route("/admin/export", get(export))
        .route("/admin/import", post(import))
        .with_state(gateway)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn search(State(gw): Shared, headers: HeaderMap, RawQuery(raw): RawQuery) -> ApiResult<Response> {
    let params = query_map(raw);
    let mut q = SearchQuery::new(params.get("q").cloned().unwrap_or_default());
    q.offset = number(&params, "offset", 0)?;
    q.limit = number(&params, "limit", q.limit)?;
    if let Some(s) = params.get("sources") {
        q = q.with_sources(s.split(',').map(str::trim).filter(|s| !s.is_empty()));
    }
    let user = params
        .get("user")
        .cloned()
        .or_else(|| headers.get(USER_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string));
    Ok(Json(gw.search(&q, user.as_deref()).await?).into_response())
}

async fn item(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.item(&id)?).into_response())
}

async fn annotations(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.annotations(&id)?).into_response())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub folder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardRequest {
    /// The sender; `user` is accepted as an alias.
    #[serde(default, alias = "user", skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

async fn comment(State(gw): Shared, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: CommentRequest = parse_body(&body)?;
    let user = acting_user(req.user, &headers)?;
    Ok(created(gw.comment(&id, &user, &req.text)?))
}

async fn rate(State(gw): Shared, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: RatingRequest = parse_body(&body)?;
    let user = acting_user(req.user, &headers)?;
    Ok(created(gw.rate(&id, &user, req.value)?))
}

async fn file_item(State(gw): Shared, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: LibraryRequest = parse_body(&body)?;
    let user = acting_user(req.user, &headers)?;
    Ok(created(gw.add_to_library(&id, &user, &req.folder)?))
}

async fn forward(State(gw): Shared, UrlPath(id): UrlPath<String>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: ForwardRequest = parse_body(&body)?;
    let from = acting_user(req.from, &headers)?;
    Ok(created(gw.forward(&id, &from, &req.to, req.parent.as_deref())?))
}

async fn spread(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.spread(&id)?).into_response())
}

async fn social_search(State(gw): Shared, RawQuery(raw): RawQuery) -> ApiResult<Response> {
    let params = query_map(raw);
    Ok(Json(gw.social_search(params.get("q").map_or("", String::as_str))?).into_response())
}

async fn recommend(State(gw): Shared, RawQuery(raw): RawQuery) -> ApiResult<Response> {
    let params = query_map(raw);
    let k = number(&params, "k", DEFAULT_RECOMMENDATIONS)?;
    Ok(Json(gw.recommend(params.get("term").map_or("", String::as_str), k)?).into_response())
}

async fn upsert_user(State(gw): Shared, body: Bytes) -> ApiResult<Response> {
    let profile: UserProfile = parse_body(&body)?;
    let (user, was_created) = gw.upsert_user(profile)?;
    let status = if was_created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(user)).into_response())
}

async fn user(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.user(&id)?).into_response())
}

async fn library(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.library(&id)?).into_response())
}

async fn notifications(State(gw): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.notifications(&id)?).into_response())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactRequest {
    pub u: String,
    pub v: String,
}

async fn add_contact(State(gw): Shared, body: Bytes) -> ApiResult<Response> {
    let req: ContactRequest = parse_body(&body)?;
    gw.add_contact(&req.u, &req.v)?;
    Ok(created(req))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRequest {
    #[serde(default, alias = "sender", skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub item: String,
    #[serde(default)]
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipients: Option<Vec<String>>,
}

async fn post_item(State(gw): Shared, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: PostRequest = parse_body(&body)?;
    let sender = acting_user(req.user, &headers)?;
    Ok(created(gw.post(&sender, &req.item, &req.message, req.recipients.as_deref())?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    /// Terms added to those derived from the user's interests.
    #[serde(default)]
    pub terms: Vec<String>,
}

async fn create_alert(State(gw): Shared, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: AlertRequest = parse_body(&body)?;
    let user = acting_user(req.user, &headers)?;
    Ok(created(gw.create_alert(&user, &req.terms)?))
}

async fn list_alerts(State(gw): Shared, RawQuery(raw): RawQuery) -> ApiResult<Response> {
    let params = query_map(raw);
    Ok(Json(gw.alerts(params.get("user").map(String::as_str))).into_response())
}

async fn run_alerts(State(gw): Shared) -> ApiResult<Response> {
    Ok(Json(gw.run_alerts().await?).into_response())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub name: String,
    pub base_url: String,
}

async fn list_dls(State(gw): Shared) -> ApiResult<Response> {
    Ok(Json(gw.registrations()).into_response())
}

async fn register_dl(State(gw): Shared, body: Bytes) -> ApiResult<Response> {
    let req: RegisterRequest = parse_body(&body)?;
    Ok(created(gw.federation().register_dl(&req.name, &req.base_url).await?))
}

async fn get_dl(State(gw): Shared, UrlPath(name): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.federation().registration(&name)?).into_response())
}

async fn remove_dl(State(gw): Shared, UrlPath(name): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.federation().remove_dl(&name)?).into_response())
}

async fn probe_dl(State(gw): Shared, UrlPath(name): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(gw.federation().probe_dl(&name).await?).into_response())
}

async fn export(State(gw): Shared) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], gw.db().export()).into_response()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub entities: usize,
}

async fn import(State(gw): Shared, body: Bytes) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body).map_err(|_| invalid("dump is not utf-8"))?;
    // a bad dump is the caller's fault; the running store is untouched
    let entities = gw.db().import(text).map_err(|e| match e {
        GatewayError::StoreCorruption(m) => invalid(format!("bad dump: {m}")),
        other => ApiError(other),
    })?;
    Ok(Json(ImportResponse { entities }).into_response())
}

/// Open the store and serve the API on `bind` until Ctrl-C, then flush the
/// store to disk.
pub async fn serve(bind: SocketAddr, store_path: &Path, config: GatewayConfig) -> crate::Result<()> {
    let db = Arc::new(Db::open(store_path)?);
    let gateway = Arc::new(Gateway::new(db.clone(), config));
    let listener = TcpListener::bind(bind).await?;
    info!(addr = %listener.local_addr()?, store = %store_path.display(), "gateway listening");
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    db.flush()?;
    info!("store flushed, shutting down");
    Ok(())
}
