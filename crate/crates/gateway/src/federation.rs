//! The digital-library connector layer: registration with a probe search,
//! and federated search across every registered library.

use std::sync::Arc;

use futures::future::join_all;
use scholarlib_core::{round_robin, DlRegistration, DlStatus, Error as CoreError, SItem, SearchQuery};
use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::clock::Clock;
use crate::connector::{parse_base_url, ConnectorError, DlClient, RawResultPage};
use crate::db::Db;
use crate::error::{GatewayError, Result};

/// Outcome of one library within a federated search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStatus {
    pub source: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<u64>,
    pub returned: u64,
    pub dropped: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederatedHit {
    pub item: SItem,
    /// 1-based position in the merged list.
    pub base_rank: u32,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederatedResult {
    pub hits: Vec<FederatedHit>,
    pub sources: Vec<SourceStatus>,
}

impl FederatedResult {
    pub fn failed_sources(&self) -> impl Iterator<Item = &SourceStatus> {
        self.sources.iter().filter(|s| !s.ok)
    }
}

#[derive(Clone)]
pub struct Federation {
    db: Arc<Db>,
    client: DlClient,
    clock: Arc<dyn Clock>,
}

impl Federation {
    pub fn new(db: Arc<Db>, client: DlClient, clock: Arc<dyn Clock>) -> Self {
        Federation { db, client, clock }
    }

    pub fn client(&self) -> &DlClient {
        &self.client
    }

    /// Connect a library by its search endpoint. The registration is stored
    /// even when the probe fails, with status `unreachable`.
    pub async fn register_dl(&self, name: &str, base_url: &str) -> Result<DlRegistration> {
        let name = name.trim();
        if name.is_empty() {
            return Err(CoreError::InvalidParams("dl name is empty".into()).into());
        }
        let url = parse_base_url(base_url)?;
        if self.db.read(|s| s.registration(name).is_some()) {
            return Err(CoreError::DuplicateName(name.into()).into());
        }
        let status = self.probe_status(name, url.as_str()).await;
        let now = self.clock.now();
        self.db.write(|s| s.register_dl(name, url.as_str(), status, now))
    }

    /// Re-run the probe for a registered library and store the new status.
    pub async fn probe_dl(&self, name: &str) -> Result<DlRegistration> {
        let reg = self.registration(name)?;
        let status = self.probe_status(name, &reg.base_url).await;
        self.db.write(|s| {
            s.set_dl_status(name, status)?;
            s.registration(name).cloned().ok_or_else(|| CoreError::UnknownSource(name.into()))
        })
    }

    async fn probe_status(&self, name: &str, base_url: &str) -> DlStatus {
        match self.client.probe(name, base_url).await {
            Ok(_) => DlStatus::Active,
            Err(e) => {
                debug!(dl = name, "probe failed: {e}");
                DlStatus::Unreachable
            }
        }
    }

    pub fn registration(&self, name: &str) -> Result<DlRegistration> {
        self.db
            .read(|s| s.registration(name).cloned())
            .ok_or_else(|| CoreError::UnknownSource(name.into()).into())
    }

    pub fn remove_dl(&self, name: &str) -> Result<DlRegistration> {
        self.db.write(|s| s.remove_dl(name))
    }

    pub async fn search_dl(
        &self,
        reg: &DlRegistration,
        q: &SearchQuery,
    ) -> std::result::Result<RawResultPage, ConnectorError> {
        self.client.search(&reg.name, &reg.base_url, q).await
    }

    /// Query every targeted library concurrently and merge the pages
    /// round-robin in registration order. A failing library is reported in
    /// `sources` and never fails the whole search.
    pub async fn federated_search(&self, q: &SearchQuery) -> Result<FederatedResult> {
        q.validate()?;
        let registrations = self.db.read(|s| s.registrations().to_vec());
        let targets: Vec<DlRegistration> = match &q.sources {
            Some(names) => {
                if let Some(unknown) = names.iter().find(|n| !registrations.iter().any(|r| &&r.name == n)) {
                    return Err(CoreError::InvalidQuery(format!("unknown source {unknown}")).into());
                }
                registrations.into_iter().filter(|r| names.contains(&r.name)).collect()
            }
            None => registrations,
        };
        if targets.is_empty() {
            return Err(GatewayError::NoActiveSources);
        }

        let outcomes = join_all(targets.iter().map(|r| self.search_dl(r, q))).await;

        let mut sources = Vec::with_capacity(targets.len());
        let mut pages = Vec::with_capacity(targets.len());
        self.db.write(|s| {
            for (reg, outcome) in targets.iter().zip(outcomes) {
                // the registration may have been removed while the search ran
                if s.registration(&reg.name).is_none() {
                    sources.push(SourceStatus {
                        source: reg.name.clone(),
                        ok: false,
                        total: None,
                        returned: 0,
                        dropped: 0,
                        error: Some("unregistered".into()),
                        detail: None,
                    });
                    continue;
                }
                match outcome {
                    Ok(page) => {
                        s.set_dl_status(&reg.name, DlStatus::Active)?;
                        let mut items = Vec::with_capacity(page.items.len());
                        for rec in page.items {
                            items.push((s.intern_item(rec, &reg.name)?, reg.name.clone()));
                        }
                        sources.push(SourceStatus {
                            source: reg.name.clone(),
                            ok: true,
                            total: Some(page.total),
                            returned: items.len() as u64,
                            dropped: page.dropped,
                            error: None,
                            detail: None,
                        });
                        pages.push(items);
                    }
                    Err(e) => {
                        s.set_dl_status(&reg.name, DlStatus::Unreachable)?;
                        sources.push(SourceStatus {
                            source: reg.name.clone(),
                            ok: false,
                            total: None,
                            returned: 0,
                            dropped: 0,
                            error: Some(e.code().into()),
                            detail: Some(e.to_string()),
                        });
                    }
                }
            }
            Ok(())
        })?;

        let hits = round_robin(pages)
            .into_iter()
            .enumerate()
            .map(|(i, (item, source))| FederatedHit { item, base_rank: i as u32 + 1, source })
            .collect();
        Ok(FederatedResult { hits, sources })
    }
}
