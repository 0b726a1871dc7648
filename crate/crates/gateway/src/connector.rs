//! HTTP client side of the digital-library connector protocol.
//!
//! Request: `GET {base_url}/search?q=<url-encoded>&offset=<int>&limit=<int>`.
//! Response: `200` with `{"total": <int>, "items": [<DCRecord>...]}`. Any
//! other status, or a body of another shape, is a malformed response.

use std::time::Duration;

use scholarlib_core::{validate_record, DcRecord, RawRecord, SearchQuery};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::GatewayError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(3);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConnectorError {
    /// The library did not answer within its budget or could not be reached.
    #[error("connector timeout: {0}")]
    Timeout(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

impl ConnectorError {
    /// Short code reported in per-source status entries.
    pub fn code(&self) -> &'static str {
        match self {
            ConnectorError::Timeout(_) => "timeout",
            ConnectorError::MalformedResponse(_) => "malformed_response",
        }
    }
}

/// One page as returned by a library, after record validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResultPage {
    pub source: String,
    pub total: u64,
    pub items: Vec<DcRecord>,
    /// Items that failed validation and were dropped.
    pub dropped: u64,
}

#[derive(Debug, Clone)]
pub struct DlClient {
    http: reqwest::Client,
    timeout: Duration,
}

impl Default for DlClient {
    fn default() -> Self {
        Self::new(DEFAULT_TIMEOUT)
    }
}

/// Check that `base_url` can serve as a connector endpoint.
pub fn parse_base_url(base_url: &str) -> Result<Url, GatewayError> {
    let invalid = |reason: &str| GatewayError::InvalidUrl { url: base_url.to_string(), reason: reason.into() };
    let url = Url::parse(base_url.trim()).map_err(|e| invalid(&e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(invalid("scheme must be http or https"));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(invalid("missing host"));
    }
    if url.query().is_some() || url.fragment().is_some() {
        return Err(invalid("base url must not carry a query or fragment"));
    }
    Ok(url)
}

/// The exact request URL for a query against `base_url`.
pub fn search_url(base_url: &str, text: &str, offset: u32, limit: u32) -> Result<Url, GatewayError> {
    let base = parse_base_url(base_url)?;
    let mut url = base.clone();
    url.set_path(&format!("{}/search", base.path().trim_end_matches('/')));
    url.query_pairs_mut()
        .append_pair("q", text)
        .append_pair("offset", &offset.to_string())
        .append_pair("limit", &limit.to_string());
    Ok(url)
}

/// Parse a connector response body. Items failing validation are dropped.
pub fn parse_page(source: &str, body: &[u8], limit: u32) -> Result<RawResultPage, ConnectorError> {
    let malformed = |m: String| ConnectorError::MalformedResponse(m);
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| malformed(format!("body is not json: {e}")))?;
    let obj = value.as_object().ok_or_else(|| malformed("body is not an object".into()))?;
    let total = obj
        .get("total")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| malformed("missing or non-integer \"total\"".into()))?;
    let items = obj
        .get("items")
        .and_then(serde_json::Value::as_array)
        .ok_or_else(|| malformed("missing \"items\" array".into()))?;
    if items.len() > limit as usize {
        return Err(malformed(format!("{} items for limit {limit}", items.len())));
    }
    let mut page = RawResultPage { source: source.to_string(), total, items: Vec::new(), dropped: 0 };
    for raw in items {
        match serde_json::from_value::<RawRecord>(raw.clone()).ok().and_then(|r| validate_record(r).ok()) {
            Some(rec) => page.items.push(rec),
            None => page.dropped += 1,
        }
    }
    Ok(page)
}

impl DlClient {
    pub fn new(timeout: Duration) -> Self {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .connect_timeout(timeout)
            .build()
            .expect("http client");
        DlClient { http, timeout }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Run one query against one library.
    pub async fn search(
        &self,
        source: &str,
        base_url: &str,
        q: &SearchQuery,
    ) -> Result<RawResultPage, ConnectorError> {
        let url = search_url(base_url, &q.text, q.offset, q.limit)
            .map_err(|e| ConnectorError::MalformedResponse(e.to_string()))?;
        let fut = async {
            let resp = self.http.get(url).send().await.map_err(|e| ConnectorError::Timeout(e.to_string()))?;
            let status = resp.status();
            if status != reqwest::StatusCode::OK {
                return Err(ConnectorError::MalformedResponse(format!("status {status}")));
            }
            let body = resp.bytes().await.map_err(|e| ConnectorError::Timeout(e.to_string()))?;
            parse_page(source, &body, q.limit)
        };
        match tokio::time::timeout(self.timeout, fut).await {
            Ok(r) => r,
            Err(_) => Err(ConnectorError::Timeout(format!("no answer within {:?}", self.timeout))),
        }
    }

    /// Probe a library with the query `"test"`, limit 1.
    pub async fn probe(&self, source: &str, base_url: &str) -> Result<RawResultPage, ConnectorError> {
        self.search(source, base_url, &SearchQuery::new("test").with_limit(1)).await
    }
}
