//! The alert runner. Only one run may be in progress at a time; searches and
//! annotations carry on concurrently.

use scholarlib_core::query::MAX_LIMIT;
use scholarlib_core::{Notification, SearchQuery};
use tracing::{info, warn};

use crate::error::{GatewayError, Result};
use crate::service::Gateway;

impl Gateway {
    /// Re-run every alert against the federation (each term searched on its
    /// own, results unioned) and notify users about items first seen since
    /// the alert's previous run.
    pub async fn run_alerts(&self) -> Result<Vec<Notification>> {
        let _running = self.alert_run.try_lock().map_err(|_| GatewayError::AlertRunInProgress)?;
        let alerts: Vec<_> = self.db().read(|s| s.alerts().cloned().collect());
        let mut out = Vec::new();
        for alert in alerts {
            let started = self.db().read(|s| s.seq());
            let mut found = Vec::new();
            for term in alert.search_terms() {
                match self.federation().federated_search(&SearchQuery::new(term).with_limit(MAX_LIMIT)).await {
                    Ok(r) => found.extend(r.hits.into_iter().map(|h| h.item.item_id)),
                    Err(e) => warn!(alert = %alert.alert_id, term, "alert search failed: {e}"),
                }
            }
            let now = self.now();
            match self.db().write(|s| s.finish_alert_run(&alert.alert_id, started, &found, now)) {
                Ok(n) => out.extend(n),
                Err(e) => warn!(alert = %alert.alert_id, "alert run failed: {e}"),
            }
        }
        info!(notifications = out.len(), "alert run finished");
        Ok(out)
    }
}
