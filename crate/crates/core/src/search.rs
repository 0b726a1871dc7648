//! Search over the social side of the store: profiles, comments, and items
//! that carry annotations.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Annotation, AnnotationBody, SItem, SnUser, SocialSummary, Timestamp};
use crate::store::Store;
use crate::text::{match_count, token_set, token_set_of};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemHit {
    pub item: SItem,
    pub summary: SocialSummary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SocialSearchResult {
    pub profiles: Vec<SnUser>,
    pub comments: Vec<Annotation>,
    pub items: Vec<ItemHit>,
}

/// Sort key: match count desc, then recency desc, then id asc.
type Key<'a, R> = (Reverse<usize>, Reverse<R>, &'a str);

fn ranked<'a, T, R: Ord>(mut hits: Vec<(Key<'a, R>, T)>) -> Vec<T> {
    hits.sort_by(|a, b| a.0.cmp(&b.0));
    hits.into_iter().map(|(_, t)| t).collect()
}

impl Store {
    /// Case-folded token search over profile interests, comment text, and the
    /// title and subjects of annotated items.
    pub fn social_search(&self, q: &str) -> Result<SocialSearchResult> {
        let query = token_set(q);
        if query.is_empty() {
            return Err(Error::InvalidQuery("query has no searchable tokens".into()));
        }

        let profiles = self
            .users()
            .filter_map(|u| {
                let tokens = token_set_of(u.interests.iter().map(String::as_str));
                let m = match_count(&query, &tokens);
                (m > 0).then(|| {
                    let key = (Reverse(m), Reverse(self.user_updated_seq(&u.user_id)), u.user_id.as_str());
                    (key, u.clone())
                })
            })
            .collect();

        let comments = self
            .annotations()
            .filter_map(|a| {
                let AnnotationBody::Comment { text } = &a.body else {
                    return None;
                };
                let m = match_count(&query, &token_set(text));
                (m > 0).then(|| ((Reverse(m), Reverse(a.created_at), a.annotation_id.as_str()), a.clone()))
            })
            .collect();

        let mut items = Vec::new();
        for (id, ann_ids) in &self.by_item {
            let Some(latest) = ann_ids.iter().map(|a| self.annotations[a].created_at).max() else {
                continue;
            };
            let item = self.item(id)?;
            let tokens = token_set_of(
                core::iter::once(item.record.title.as_str())
                    .chain(item.record.subjects.iter().map(String::as_str)),
            );
            let m = match_count(&query, &tokens);
            if m > 0 {
                let hit = ItemHit { item: item.clone(), summary: self.summary_for(id)? };
                items.push(((Reverse(m), Reverse(latest), id.as_str()), hit));
            }
        }

        Ok(SocialSearchResult {
            profiles: ranked::<_, u64>(profiles),
            comments: ranked::<_, Timestamp>(comments),
            items: ranked::<_, Timestamp>(items),
        })
    }
}

/// Distinct folded tokens of a query string, exposed for callers that want
/// to reproduce the matching rule.
pub fn query_tokens(q: &str) -> BTreeSet<String> {
    token_set(q)
}
