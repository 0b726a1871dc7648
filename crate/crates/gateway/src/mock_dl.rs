//! Reference digital library implementing the connector protocol over a
//! JSON-lines corpus.
//!
//! Matching is case-folded token containment over title, subjects and
//! description. Hits are ordered by the number of distinct query tokens
//! matched (desc), then identifier (asc). `total` counts every hit, whatever
//! the page size.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use scholarlib_core::query::{DEFAULT_LIMIT, MAX_LIMIT};
use scholarlib_core::text::{match_count, token_set, token_set_of};
use scholarlib_core::{validate_record, DcRecord, RawRecord};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockPage {
    pub total: u64,
    pub items: Vec<DcRecord>,
}

struct Doc {
    record: DcRecord,
    tokens: BTreeSet<String>,
}

impl Doc {
    fn new(record: DcRecord) -> Self {
        let tokens = token_set_of(record.searchable_text());
        Doc { record, tokens }
    }
}

#[derive(Default)]
pub struct MockDl {
    docs: RwLock<Vec<Doc>>,
}

/// Parse a JSON-lines corpus; every line must be a valid record.
pub fn parse_corpus(text: &str) -> Result<Vec<DcRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let raw: RawRecord = serde_json::from_str(l)
                .map_err(|e| GatewayError::CorpusParse(format!("line {}: {e}", n + 1)))?;
            validate_record(raw).map_err(|e| GatewayError::CorpusParse(format!("line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn encode_corpus(records: &[DcRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

impl MockDl {
    pub fn new(corpus: Vec<DcRecord>) -> Self {
        MockDl { docs: RwLock::new(corpus.into_iter().map(Doc::new).collect()) }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::CorpusParse(format!("{}: {e}", path.display())))?;
        Ok(Self::new(parse_corpus(&text)?))
    }

    /// Add a record to the corpus (test harnesses use this to simulate new
    /// publications).
    pub fn push(&self, record: DcRecord) {
        self.docs.write().expect("corpus lock").push(Doc::new(record));
    }

    /// Swap the whole corpus.
    pub fn replace(&self, corpus: Vec<DcRecord>) {
        *self.docs.write().expect("corpus lock") = corpus.into_iter().map(Doc::new).collect();
    }

    pub fn len(&self) -> usize {
        self.docs.read().expect("corpus lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn search(&self, q: &str, offset: usize, limit: usize) -> MockPage {
        let query = token_set(q);
        let docs = self.docs.read().expect("corpus lock");
        let mut hits: Vec<(usize, &DcRecord)> = docs
            .iter()
            .map(|d| (match_count(&query, &d.tokens), &d.record))
            .filter(|(m, _)| *m > 0)
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.identifier.cmp(&b.1.identifier)));
        MockPage {
            total: hits.len() as u64,
            items: hits.into_iter().skip(offset).take(limit).map(|(_, r)| r.clone()).collect(),
        }
    }

    pub fn router(self: Arc<Self>) -> Router {
        Router::new().route("/search", get(search_handler)).with_state(self)
    }
}

fn bad_request(msg: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": msg }))).into_response()
}

async fn search_handler(
    State(dl): State<Arc<MockDl>>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Response {
    let Some(q) = params.get("q") else {
        return bad_request("missing q".into());
    };
    let number = |key: &str, default: u32| -> std::result::Result<u32, String> {
        params.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| format!("{key} must be a non-negative integer"))
        })
    };
    let offset = match number("offset", 0) {
        Ok(v) => v,
        Err(msg) => return bad_request(msg),
    };
    let limit = match number("limit", DEFAULT_LIMIT) {
        Ok(v) if (1..=MAX_LIMIT).contains(&v) => v,
        Ok(_) => return bad_request(format!("limit must be in 1..={MAX_LIMIT}")),
        Err(msg) => return bad_request(msg),
    };
    Json(dl.search(q, offset as usize, limit as usize)).into_response()
}

/// Serve `router` on `addr` in the background; returns the bound address.
pub async fn spawn(router: Router, addr: SocketAddr) -> Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        let _ = axum::serve(listener, router).await;
    });
    Ok(local)
}

/// Run the mock library until the process is stopped.
pub async fn serve(corpus_path: &Path, bind: SocketAddr) -> Result<()> {
    let dl = Arc::new(MockDl::load(corpus_path)?);
    let listener = TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, docs = dl.len(), "mock dl listening");
    axum::serve(listener, dl.router()).await?;
    Ok(())
}
