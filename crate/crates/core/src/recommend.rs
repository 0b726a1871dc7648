//! Search-term recommendation from subject co-occurrence.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::DcRecord;
use crate::store::Store;
use crate::text::{fold, token_set, token_set_of};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: u64,
}

/// Subject terms of the documents matching `term`, by document frequency
/// desc then lexicographically. A document matches when any token of `term`
/// occurs in its title, subjects or description. The term itself is never
/// recommended.
pub fn recommend_terms<'a, I>(records: I, term: &str, k: usize) -> Result<Vec<TermCount>>
where
    I: IntoIterator<Item = &'a DcRecord>,
{
    let query = token_set(term);
    if query.is_empty() {
        return Err(Error::InvalidQuery("term is blank".into()));
    }
    if k == 0 {
        return Err(Error::InvalidQuery("k must be at least 1".into()));
    }
    let own = fold(term);
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        let tokens = token_set_of(r.searchable_text());
        if !query.iter().any(|t| tokens.contains(t)) {
            continue;
        }
        for s in &r.subjects {
            if fold(s) != own {
                *counts.entry(s).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<_> = counts.into_iter().collect();
    // BTreeMap iteration is already lexicographic; the sort is stable
    ranked.sort_by_key(|e| core::cmp::Reverse(e.1));
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(term, count)| TermCount { term: term.into(), count })
        .collect())
}

impl Store {
    pub fn recommend_terms(&self, term: &str, k: usize) -> Result<Vec<TermCount>> {
        recommend_terms(self.items().map(|i| &i.record), term, k)
    }
}
