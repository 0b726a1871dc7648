#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Body;
use axum::extract::OriginalUri;
use axum::http::{Request, StatusCode};
use axum::routing::get;
use axum::{Json, Router};
use scholarlib::api::router;
use scholarlib::fixture::Fixture;
use scholarlib::mock_dl::{spawn, MockDl};
use scholarlib::{Db, Gateway, GatewayConfig, ManualClock};
use scholarlib_core::{DcRecord, Timestamp};
use serde_json::{json, Value};
use tower::ServiceExt;

pub const LOCAL: &str = "127.0.0.1:0";

pub async fn serve(app: Router) -> String {
    let addr = spawn(app, LOCAL.parse::<SocketAddr>().unwrap()).await.unwrap();
    format!("http://{addr}")
}

pub async fn mock_dl(corpus: Vec<DcRecord>) -> (Arc<MockDl>, String) {
    let dl = Arc::new(MockDl::new(corpus));
    let url = serve(dl.clone().router()).await;
    (dl, url)
}

/// Answers 200 with a body that is JSON but not a result page.
pub async fn malformed_dl() -> String {
    serve(Router::new().route("/search", get(|| async { Json(json!({ "hits": [], "count": 0 })) }))).await
}

/// Answers correctly, but only after `delay`.
pub async fn slow_dl(delay: Duration) -> String {
    serve(Router::new().route(
        "/search",
        get(move || async move {
            tokio::time::sleep(delay).await;
            Json(json!({ "total": 0, "items": [] }))
        }),
    ))
    .await
}

/// Records every request URI and answers with an empty page.
pub async fn capturing_dl() -> (Arc<Mutex<Vec<String>>>, String) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let app = Router::new().route(
        "/search",
        get(move |OriginalUri(uri): OriginalUri| {
            let log = log.clone();
            async move {
                log.lock().unwrap().push(uri.to_string());
                Json(json!({ "total": 0, "items": [] }))
            }
        }),
    );
    (seen, serve(app).await)
}

pub fn record(id: &str, title: &str, subjects: &[&str]) -> DcRecord {
    let mut r = DcRecord::new(id, title);
    r.subjects = subjects.iter().map(|s| (*s).to_string()).collect();
    r
}

pub fn gateway_on(db: Arc<Db>, config: GatewayConfig) -> Arc<Gateway> {
    Arc::new(Gateway::with_clock(db, config, Arc::new(ManualClock::new(Timestamp(1_000_000), 1))))
}

pub fn gateway(config: GatewayConfig) -> Arc<Gateway> {
    gateway_on(Arc::new(Db::in_memory()), config)
}

pub async fn register(gw: &Gateway, name: &str, url: &str) {
    gw.federation().register_dl(name, url).await.unwrap();
}

/// A gateway wired to a mock library serving the fixture corpus, with the
/// fixture's graph and scripted annotations loaded.
pub async fn seeded(seed: u64, config: GatewayConfig) -> (Arc<Gateway>, Arc<MockDl>, Fixture) {
    let fixture = Fixture::generate(seed);
    let (dl, url) = mock_dl(fixture.corpus.clone()).await;
    let gw = gateway(config);
    register(&gw, "mock-dl", &url).await;
    gw.db().write(|s| fixture.apply(s, "mock-dl", Timestamp(500_000))).unwrap();
    (gw, dl, fixture)
}

pub struct Reply {
    pub status: StatusCode,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("not json ({e}): {}", self.text))
    }
}

pub async fn send(app: &Router, method: &str, uri: &str, body: Option<String>, user: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    if let Some(u) = user {
        req = req.header("x-scholarlib-user", u);
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    Reply { status, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

pub async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let r = send(app, "GET", uri, None, None).await;
    (r.status, r.json())
}

pub async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let r = send(app, "POST", uri, Some(body.to_string()), None).await;
    (r.status, r.json())
}

pub fn app(gw: &Arc<Gateway>) -> Router {
    router(gw.clone())
}

pub fn enc(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

/// Summary recomputed from the raw annotation list.
pub fn recount(annotations: &[scholarlib_core::Annotation], item: &str) -> scholarlib_core::SocialSummary {
    use scholarlib_core::model::FolderCount;
    use scholarlib_core::AnnotationBody as B;
    let mut sum = scholarlib_core::SocialSummary::empty(item);
    let mut ratings = Vec::new();
    let mut folders = std::collections::BTreeMap::<String, u64>::new();
    for a in annotations.iter().filter(|a| a.item == item) {
        match &a.body {
            B::Comment { .. } => sum.comment_count += 1,
            B::Rating { value } => ratings.push(f64::from(*value)),
            B::LibraryEntry { folder } => {
                sum.library_count += 1;
                *folders.entry(folder.clone()).or_default() += 1;
            }
            B::Forward { .. } => sum.forward_count += 1,
        }
    }
    sum.rating_count = ratings.len() as u64;
    if !ratings.is_empty() {
        sum.avg_rating = Some(ratings.iter().sum::<f64>() / ratings.len() as f64);
    }
    sum.folders = folders.into_iter().map(|(folder, count)| FolderCount { folder, count }).collect();
    sum
}

pub fn words(s: &str) -> std::collections::BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
}

/// Mock library ordering recomputed by scanning every document: count the
/// distinct query words each one contains, sort by that count desc, then id.
pub fn ordering_oracle(corpus: &[DcRecord], q: &str) -> Vec<String> {
    let q = words(q);
    let mut hits: Vec<(usize, &str)> = corpus
        .iter()
        .filter_map(|r| {
            let mut text = format!("{} {}", r.title, r.subjects.join(" "));
            if let Some(d) = &r.description {
                text.push(' ');
                text.push_str(d);
            }
            let doc = words(&text);
            let m = q.iter().filter(|w| doc.contains(*w)).count();
            (m > 0).then_some((m, r.identifier.as_str()))
        })
        .collect();
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    hits.into_iter().map(|(_, id)| id.to_string()).collect()
}
