//! Core services: everything the client-facing API can ask for, composed
//! from the store, the federation layer and the ranking rules.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use scholarlib_core::search::SocialSearchResult;
use scholarlib_core::{
    rerank, Alert, Annotation, DcRecord, DlRegistration, Error as CoreError, Notification,
    RankWeights, SItem, SearchQuery, SnUser, SocialSummary, SpreadTrace, UserProfile,
};
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::connector::{DlClient, DEFAULT_TIMEOUT};
use crate::db::Db;
use crate::error::Result;
use crate::federation::{Federation, SourceStatus};

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub weights: RankWeights,
    pub dl_timeout: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { weights: RankWeights::default(), dl_timeout: DEFAULT_TIMEOUT }
    }
}

/// One entry of an enriched result page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub item_id: String,
    pub record: DcRecord,
    pub source: String,
    pub base_rank: u32,
    pub final_score: f64,
    pub summary: SocialSummary,
    /// Present when the search was made on behalf of a user.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_library: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library_folders: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceError {
    pub source: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPage {
    pub query: String,
    pub offset: u32,
    pub limit: u32,
    pub results: Vec<SearchEntry>,
    pub sources: Vec<SourceStatus>,
    pub source_errors: Vec<SourceError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub item: SItem,
    pub summary: SocialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFolder {
    pub folder: String,
    pub items: Vec<SItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryView {
    pub user: String,
    pub folders: Vec<LibraryFolder>,
}

pub struct Gateway {
    db: Arc<Db>,
    federation: Federation,
    weights: RankWeights,
    clock: Arc<dyn Clock>,
    pub(crate) alert_run: tokio::sync::Mutex<()>,
}

impl Gateway {
    pub fn new(db: Arc<Db>, config: GatewayConfig) -> Self {
        Self::with_clock(db, config, Arc::new(SystemClock))
    }

    pub fn with_clock(db: Arc<Db>, config: GatewayConfig, clock: Arc<dyn Clock>) -> Self {
        let federation = Federation::new(db.clone(), DlClient::new(config.dl_timeout), clock.clone());
        Gateway { db, federation, weights: config.weights, clock, alert_run: tokio::sync::Mutex::new(()) }
    }

    pub fn db(&self) -> &Arc<Db> {
        &self.db
    }

    pub fn federation(&self) -> &Federation {
        &self.federation
    }

    pub fn weights(&self) -> &RankWeights {
        &self.weights
    }

    pub(crate) fn now(&self) -> scholarlib_core::Timestamp {
        self.clock.now()
    }

    /// Federated search, re-ranked with social signals. When `user` is given
    /// each entry also says whether it is already in that user's library.
    pub async fn search(&self, q: &SearchQuery, user: Option<&str>) -> Result<SearchPage> {
        q.validate()?;
        if let Some(u) = user {
            self.db.read(|s| s.user(u).map(|_| ()))?;
        }
        let fed = self.federation.federated_search(q).await?;
        let (ranked, folders) = self.db.read(|s| {
            let input = fed
                .hits
                .iter()
                .map(|h| {
                    let summary = s.summary_for(&h.item.item_id)?;
                    Ok((h, h.base_rank, summary))
                })
                .collect::<scholarlib_core::Result<Vec<_>>>()?;
            let mut folders: BTreeMap<String, Vec<String>> = BTreeMap::new();
            if let Some(u) = user {
                for a in s.library_of(u)? {
                    if let scholarlib_core::AnnotationBody::LibraryEntry { folder } = &a.body {
                        folders.entry(a.item.clone()).or_default().push(folder.clone());
                    }
                }
            }
            Ok::<_, CoreError>((rerank(input, &self.weights), folders))
        })?;
        let results = ranked
            .into_iter()
            .map(|r| {
                let folders = user.map(|_| folders.get(&r.entry.item.item_id).cloned().unwrap_or_default());
                SearchEntry {
                    item_id: r.entry.item.item_id.clone(),
                    record: r.entry.item.record.clone(),
                    source: r.entry.source.clone(),
                    base_rank: r.base_rank,
                    final_score: r.final_score,
                    summary: r.summary,
                    in_library: folders.as_ref().map(|f| !f.is_empty()),
                    library_folders: folders,
                }
            })
            .collect();
        let source_errors = fed
            .failed_sources()
            .map(|s| SourceError {
                source: s.source.clone(),
                error: s.error.clone().unwrap_or_default(),
                detail: s.detail.clone(),
            })
            .collect();
        Ok(SearchPage {
            query: q.text.clone(),
            offset: q.offset,
            limit: q.limit,
            results,
            sources: fed.sources,
            source_errors,
        })
    }

    // ---- users and contacts ----

    pub fn upsert_user(&self, profile: UserProfile) -> Result<(SnUser, bool)> {
        let existed = self.db.read(|s| s.user(profile.user_id.trim()).is_ok());
        Ok((self.db.write(|s| s.upsert_user(profile))?, !existed))
    }

    pub fn user(&self, user_id: &str) -> Result<SnUser> {
        Ok(self.db.read(|s| s.user(user_id).cloned())?)
    }

    pub fn add_contact(&self, u: &str, v: &str) -> Result<()> {
        self.db.write(|s| s.add_contact(u, v))
    }

    pub fn library(&self, user_id: &str) -> Result<LibraryView> {
        Ok(self.db.read(|s| {
            let mut folders: BTreeMap<String, Vec<SItem>> = BTreeMap::new();
            for a in s.library_of(user_id)? {
                if let scholarlib_core::AnnotationBody::LibraryEntry { folder } = &a.body {
                    folders.entry(folder.clone()).or_default().push(s.item(&a.item)?.clone());
                }
            }
            Ok::<_, CoreError>(LibraryView {
                user: user_id.to_string(),
                folders: folders.into_iter().map(|(folder, items)| LibraryFolder { folder, items }).collect(),
            })
        })?)
    }

    pub fn notifications(&self, user_id: &str) -> Result<Vec<Notification>> {
        Ok(self.db.read(|s| {
            s.user(user_id)?;
            Ok::<_, CoreError>(s.notifications_for(user_id).cloned().collect())
        })?)
    }

    // ---- items and annotations ----

    pub fn item(&self, item_id: &str) -> Result<ItemView> {
        Ok(self.db.read(|s| {
            Ok::<_, CoreError>(ItemView { item: s.item(item_id)?.clone(), summary: s.summary_for(item_id)? })
        })?)
    }

    pub fn annotations(&self, item_id: &str) -> Result<Vec<Annotation>> {
        Ok(self.db.read(|s| {
            s.item(item_id)?;
            Ok::<_, CoreError>(s.annotations_for(item_id).cloned().collect())
        })?)
    }

    pub fn comment(&self, item: &str, user: &str, text: &str) -> Result<Annotation> {
        let now = self.now();
        self.db.write(|s| s.add_comment(user, item, text, now))
    }

    pub fn rate(&self, item: &str, user: &str, value: i64) -> Result<Annotation> {
        let now = self.now();
        self.db.write(|s| s.add_rating(user, item, value, now))
    }

    pub fn add_to_library(&self, item: &str, user: &str, folder: &str) -> Result<Annotation> {
        let now = self.now();
        self.db.write(|s| s.add_to_library(user, item, folder, now))
    }

    pub fn forward(&self, item: &str, from: &str, to: &str, parent: Option<&str>) -> Result<Annotation> {
        let now = self.now();
        self.db.write(|s| s.forward_item(from, to, item, parent, now))
    }

    pub fn spread(&self, item: &str) -> Result<SpreadTrace> {
        Ok(self.db.read(|s| s.trace_spread(item))?)
    }

    pub fn social_search(&self, q: &str) -> Result<SocialSearchResult> {
        Ok(self.db.read(|s| s.social_search(q))?)
    }

    pub fn recommend(&self, term: &str, k: usize) -> Result<Vec<scholarlib_core::recommend::TermCount>> {
        Ok(self.db.read(|s| s.recommend_terms(term, k))?)
    }

    pub fn post(
        &self,
        sender: &str,
        item: &str,
        message: &str,
        recipients: Option<&[String]>,
    ) -> Result<Vec<Notification>> {
        let now = self.now();
        self.db.write(|s| s.post_to_network(sender, item, message, recipients, now))
    }

    // ---- alerts ----

    pub fn create_alert(&self, user: &str, extra_terms: &[String]) -> Result<Alert> {
        self.db.write(|s| s.create_alert(user, extra_terms))
    }

    pub fn alerts(&self, user: Option<&str>) -> Vec<Alert> {
        self.db.read(|s| s.alerts().filter(|a| user.is_none_or(|u| a.user == u)).cloned().collect())
    }

    // ---- registry ----

    pub fn registrations(&self) -> Vec<DlRegistration> {
        self.db.read(|s| s.registrations().to_vec())
    }
}
