//! Protocol conformance checks that can be pointed at any library endpoint.
//!
//! The checks go over the wire with a plain HTTP client and inspect the raw
//! JSON, so they catch things the tolerant connector would quietly accept
//! (extra keys, nulls, a short page that still parses).

use std::collections::BTreeSet;

use scholarlib_core::record::is_iso_date;
use serde::Serialize;
use serde_json::Value;

use crate::connector::search_url;

pub const DC_FIELDS: [&str; 9] =
    ["identifier", "title", "creators", "date", "subjects", "description", "doc_type", "language", "link"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub base_url: String,
    pub checks: Vec<Check>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, name: impl Into<String>, outcome: Result<(), String>) {
        let (passed, detail) = match outcome {
            Ok(()) => (true, None),
            Err(d) => (false, Some(d)),
        };
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

/// One parsed page, kept as raw JSON.
#[derive(Debug, Clone)]
pub struct WirePage {
    pub total: u64,
    pub items: Vec<serde_json::Map<String, Value>>,
}

impl WirePage {
    pub fn identifiers(&self) -> Vec<String> {
        self.items.iter().filter_map(|i| i.get("identifier")?.as_str().map(str::to_string)).collect()
    }
}

/// Validate one response body against the record schema. Returns the page
/// or a description of the first violation.
pub fn check_body(body: &[u8], limit: u32) -> Result<WirePage, String> {
    let value: Value = serde_json::from_slice(body).map_err(|e| format!("not json: {e}"))?;
    let obj = value.as_object().ok_or("body is not an object")?;
    let keys: BTreeSet<&str> = obj.keys().map(String::as_str).collect();
    if keys != BTreeSet::from(["items", "total"]) {
        return Err(format!("top-level keys {keys:?}, expected exactly total and items"));
    }
    let total = obj["total"].as_u64().ok_or("total is not a non-negative integer")?;
    let items = obj["items"].as_array().ok_or("items is not an array")?;
    if items.len() > limit as usize {
        return Err(format!("{} items exceed limit {limit}", items.len()));
    }
    if (items.len() as u64) > total {
        return Err(format!("{} items but total {total}", items.len()));
    }
    let mut out = Vec::with_capacity(items.len());
    for (n, item) in items.iter().enumerate() {
        let rec = item.as_object().ok_or_else(|| format!("item {n} is not an object"))?;
        check_record(rec).map_err(|e| format!("item {n}: {e}"))?;
        out.push(rec.clone());
    }
    Ok(WirePage { total, items: out })
}

fn check_record(rec: &serde_json::Map<String, Value>) -> Result<(), String> {
    for (k, v) in rec {
        if !DC_FIELDS.contains(&k.as_str()) {
            return Err(format!("unknown field {k:?}"));
        }
        match k.as_str() {
            "creators" | "subjects" => {
                let arr = v.as_array().ok_or_else(|| format!("{k} is not an array"))?;
                if !arr.iter().all(Value::is_string) {
                    return Err(format!("{k} has a non-string entry"));
                }
            }
            _ if !v.is_string() => return Err(format!("{k} is not a string")),
            _ => {}
        }
    }
    for required in ["identifier", "title"] {
        let ok = rec.get(required).and_then(Value::as_str).is_some_and(|s| !s.trim().is_empty());
        if !ok {
            return Err(format!("missing or empty {required}"));
        }
    }
    if let Some(d) = rec.get("date").and_then(Value::as_str) {
        if !is_iso_date(d) {
            return Err(format!("date {d:?} is not ISO-8601"));
        }
    }
    Ok(())
}

/// Runs the suite against one endpoint with the given probe queries.
pub struct Conformance {
    http: reqwest::Client,
    base_url: String,
}

impl Conformance {
    pub fn new(base_url: impl Into<String>) -> Self {
        Conformance { http: reqwest::Client::new(), base_url: base_url.into() }
    }

    /// Fetch a page and check it; the error string describes what went wrong.
    pub async fn fetch(&self, q: &str, offset: u32, limit: u32) -> Result<WirePage, String> {
        let url = search_url(&self.base_url, q, offset, limit).map_err(|e| e.to_string())?;
        let resp = self.http.get(url).send().await.map_err(|e| format!("request failed: {e}"))?;
        if resp.status() != reqwest::StatusCode::OK {
            return Err(format!("status {}", resp.status()));
        }
        let ctype = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        if !ctype.starts_with("application/json") {
            return Err(format!("content-type {ctype:?}"));
        }
        let body = resp.bytes().await.map_err(|e| format!("body: {e}"))?;
        check_body(&body, limit)
    }

    /// `query` should match several documents; `no_match` should match none.
    pub async fn run(&self, query: &str, no_match: &str) -> ConformanceReport {
        let mut report = ConformanceReport { base_url: self.base_url.clone(), checks: Vec::new() };

        let full = self.fetch(query, 0, 100).await;
        report.record("schema", full.as_ref().map(|_| ()).map_err(Clone::clone));
        let Ok(full) = full else { return report };

        let empty = self.fetch(no_match, 0, 10).await;
        report.record(
            "empty result",
            match empty {
                Ok(p) if p.total == 0 && p.items.is_empty() => Ok(()),
                Ok(p) => Err(format!("total {} with {} items", p.total, p.items.len())),
                Err(e) => Err(e),
            },
        );

        let ids = full.identifiers();
        let expected_first_page = ids.len().min(full.total as usize);
        report.record(
            "total counts every hit",
            if full.total <= 100 && ids.len() as u64 != full.total {
                Err(format!("total {} but {} items with limit 100", full.total, ids.len()))
            } else {
                Ok(())
            },
        );

        let mut paged = Vec::new();
        let mut paging = Ok(());
        for offset in (0..expected_first_page as u32).step_by(2) {
            match self.fetch(query, offset, 2).await {
                Ok(p) if p.total != full.total => {
                    paging = Err(format!("total changed from {} to {} at offset {offset}", full.total, p.total));
                    break;
                }
                Ok(p) => paged.extend(p.identifiers()),
                Err(e) => {
                    paging = Err(e);
                    break;
                }
            }
        }
        if paging.is_ok() && paged != ids {
            paging = Err(format!("paged order {paged:?} differs from full page {ids:?}"));
        }
        report.record("limit and offset paging", paging);

        report.record(
            "offset past the end",
            match self.fetch(query, full.total as u32 + 5, 10).await {
                Ok(p) if p.items.is_empty() && p.total == full.total => Ok(()),
                Ok(p) => Err(format!("{} items past the end", p.items.len())),
                Err(e) => Err(e),
            },
        );

        let limit = if full.total > 1 { 1 } else { 10 };
        report.record(
            "limit respected",
            self.fetch(query, 0, limit).await.and_then(|p| {
                if p.items.len() == (full.total as usize).min(limit as usize) {
                    Ok(())
                } else {
                    Err(format!("{} items for limit {limit}", p.items.len()))
                }
            }),
        );
        report
    }
}
