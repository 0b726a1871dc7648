//! Tokenization shared by every matching rule in the gateway: split on
//! non-alphanumeric characters and case-fold. No stemming.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

pub fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

pub fn tokens(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

pub fn token_set(s: &str) -> BTreeSet<String> {
    tokens(s).collect()
}

pub fn token_set_of<'a>(parts: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    parts.into_iter().flat_map(tokens).collect()
}

/// Number of distinct query tokens present in `haystack`.
pub fn match_count(query: &BTreeSet<String>, haystack: &BTreeSet<String>) -> usize {
    query.iter().filter(|t| haystack.contains(*t)).count()
}

/// Trim, drop blanks, and drop case-folded duplicates (first spelling wins).
pub fn dedup_folded<I, S>(terms: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in terms {
        let t = t.as_ref().trim();
        if t.is_empty() {
            continue;
        }
        if seen.insert(t.to_lowercase()) {
            out.push(String::from(t));
        }
    }
    out
}
