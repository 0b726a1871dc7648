//! Alerting: stored searches built from profile interests and recommended
//! vocabulary, re-run against the federation to announce newly seen items.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Alert, Notification, NotifyReason, Timestamp};
use crate::store::{Event, Store};
use crate::text::{dedup_folded, fold};

/// How many recommendations each alert term contributes.
pub const RECOMMENDATIONS_PER_TERM: usize = 3;

impl Store {
    /// Terms and recommended terms an alert for `user` would get right now.
    pub fn alert_terms(&self, user: &str, extra_terms: &[String]) -> Result<(Vec<String>, Vec<String>)> {
        let u = self.user(user)?;
        let terms = dedup_folded(u.interests.iter().chain(extra_terms));
        if terms.is_empty() {
            return Err(Error::NoTerms(user.to_string()));
        }
        let own: BTreeSet<String> = terms.iter().map(|t| fold(t)).collect();
        let mut recommended = Vec::new();
        for t in &terms {
            // terms without a searchable token have nothing to co-occur with
            let Ok(recs) = self.recommend_terms(t, RECOMMENDATIONS_PER_TERM) else {
                continue;
            };
            recommended.extend(recs.into_iter().map(|r| r.term).filter(|r| !own.contains(&fold(r))));
        }
        Ok((terms, dedup_folded(recommended)))
    }

    pub fn create_alert(&mut self, user: &str, extra_terms: &[String]) -> Result<Alert> {
        let (terms, recommended_terms) = self.alert_terms(user, extra_terms)?;
        let alert = Alert {
            alert_id: self.fresh_alert_id(),
            user: user.to_string(),
            terms,
            recommended_terms,
            last_run_seq: self.seq(),
        };
        self.record(Event::AlertCreated { alert: alert.clone() })?;
        Ok(alert)
    }

    pub fn alert(&self, alert_id: &str) -> Result<&Alert> {
        self.alerts.get(alert_id).ok_or_else(|| Error::UnknownAlert(alert_id.to_string()))
    }

    pub fn alerts(&self) -> impl Iterator<Item = &Alert> {
        self.alerts.values()
    }

    /// Close one alert run. `started_seq` is the store sequence observed
    /// before the alert's searches were issued and `found` the items they
    /// returned. Each found item first interned after the alert's previous
    /// run, and not already announced to the user, yields one notification.
    pub fn finish_alert_run(
        &mut self,
        alert_id: &str,
        started_seq: u64,
        found: &[String],
        now: Timestamp,
    ) -> Result<Vec<Notification>> {
        let alert = self.alert(alert_id)?.clone();
        let already: BTreeSet<&str> = self
            .notifications_for(&alert.user)
            .filter(|n| n.reason == NotifyReason::AlertMatch)
            .map(|n| n.item.as_str())
            .collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for item in found {
            let Some(ingested) = self.ingested_seq(item) else {
                continue;
            };
            if ingested > alert.last_run_seq && !already.contains(item.as_str()) && seen.insert(item) {
                out.push(Notification {
                    recipient: alert.user.clone(),
                    item: item.clone(),
                    reason: NotifyReason::AlertMatch,
                    message: None,
                    created_at: now,
                });
            }
        }
        for n in &out {
            self.issue(n.clone())?;
        }
        if started_seq > alert.last_run_seq {
            self.record(Event::AlertAdvanced { alert_id: alert.alert_id, last_run_seq: started_seq })?;
        }
        Ok(out)
    }
}
