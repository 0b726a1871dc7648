//! Contact graph, item forwarding and spread tracing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Annotation, AnnotationBody, Timestamp, UserProfile};
use crate::rng::SplitMix64;
use crate::store::{Event, Store};

/// The forwarding forest of one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadTrace {
    pub item: String,
    /// Forwards without a parent, in creation order.
    pub roots: Vec<String>,
    /// `(parent_forward, child_forward)` pairs, in child creation order.
    pub edges: Vec<(String, String)>,
    /// Distinct users that sent or received a forward of the item.
    pub reach: u64,
    /// Longest root-to-leaf chain; a lone forward has depth 1.
    pub max_depth: u64,
}

impl Store {
    /// Connect two users. Symmetric and idempotent.
    pub fn add_contact(&mut self, u: &str, v: &str) -> Result<()> {
        let contacts = &self.user(u)?.contacts;
        self.user(v)?;
        if u == v {
            return Err(Error::SelfEdge(u.to_string()));
        }
        if contacts.contains(v) {
            return Ok(());
        }
        self.record(Event::ContactAdded { a: u.to_string(), b: v.to_string() })
    }

    pub fn contacts(&self, u: &str) -> Result<&BTreeSet<String>> {
        Ok(&self.user(u)?.contacts)
    }

    pub fn are_contacts(&self, u: &str, v: &str) -> bool {
        self.user(u).is_ok_and(|user| user.contacts.contains(v))
    }

    /// Share `item` from one user to a contact. `parent` names the forward
    /// through which `from` received the item, if any.
    pub fn forward_item(
        &mut self,
        from: &str,
        to: &str,
        item: &str,
        parent: Option<&str>,
        now: Timestamp,
    ) -> Result<Annotation> {
        self.user(from)?;
        self.user(to)?;
        self.item(item)?;
        if !self.are_contacts(from, to) {
            return Err(Error::NotContacts { from: from.into(), to: to.into() });
        }
        if let Some(p) = parent {
            match self.annotation(p) {
                Some(Annotation { item: pi, body: AnnotationBody::Forward { recipient, .. }, .. }) => {
                    if pi != item {
                        return Err(Error::BadParent(format!("{p} forwards a different item")));
                    }
                    if recipient != from {
                        return Err(Error::BadParent(format!("{p} was not received by {from}")));
                    }
                }
                Some(_) => return Err(Error::BadParent(format!("{p} is not a forward"))),
                None => return Err(Error::BadParent(format!("{p} does not exist"))),
            }
        }
        let a = self.new_annotation(
            from,
            item,
            now,
            AnnotationBody::Forward { recipient: to.into(), parent: parent.map(Into::into) },
        );
        self.add_annotation(a)
    }

    pub fn trace_spread(&self, item: &str) -> Result<SpreadTrace> {
        self.item(item)?;
        let mut trace = SpreadTrace {
            item: item.to_string(),
            roots: Vec::new(),
            edges: Vec::new(),
            reach: 0,
            max_depth: 0,
        };
        let mut users = BTreeSet::new();
        let mut depth: BTreeMap<&str, u64> = BTreeMap::new();
        // creation order: a parent is always visited before its children
        for a in self.annotations_for(item) {
            let AnnotationBody::Forward { recipient, parent } = &a.body else {
                continue;
            };
            users.insert(a.author.as_str());
            users.insert(recipient.as_str());
            let d = match parent {
                None => {
                    trace.roots.push(a.annotation_id.clone());
                    1
                }
                Some(p) => {
                    trace.edges.push((p.clone(), a.annotation_id.clone()));
                    depth.get(p.as_str()).copied().unwrap_or(0) + 1
                }
            };
            depth.insert(&a.annotation_id, d);
            trace.max_depth = trace.max_depth.max(d);
        }
        trace.reach = users.len() as u64;
        Ok(trace)
    }

    /// Create users `u0..u{n-1}` (existing profiles are left alone) and connect
    /// each unordered pair `i < j` when the next draw of a SplitMix64 stream
    /// seeded with `seed` falls below `edge_prob`.
    pub fn generate_mock_graph(&mut self, n_users: u32, edge_prob: f64, seed: u64) -> Result<()> {
        if n_users == 0 {
            return Err(Error::InvalidParams("n_users must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::InvalidParams(format!("edge_prob {edge_prob} not in [0, 1]")));
        }
        let names: Vec<String> = (0..n_users).map(|i| format!("u{i}")).collect();
        for name in &names {
            if self.user(name).is_err() {
                self.upsert_user(UserProfile::new(name.as_str()))?;
            }
        }
        let mut rng = SplitMix64::new(seed);
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if rng.chance(edge_prob) {
                    self.add_contact(&names[i], &names[j])?;
                }
            }
        }
        Ok(())
    }

    /// Add every edge, creating missing users on the way.
    pub fn load_edges(&mut self, edges: &[(String, String)]) -> Result<()> {
        for (a, b) in edges {
            if a == b {
                return Err(Error::SelfEdge(a.clone()));
            }
            for u in [a, b] {
                if self.user(u).is_err() {
                    self.upsert_user(UserProfile::new(u.as_str()))?;
                }
            }
            self.add_contact(a, b)?;
        }
        Ok(())
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn contact_edges(&self) -> Vec<(String, String)> {
        self.users()
            .flat_map(|u| {
                u.contacts
                    .iter()
                    .filter(move |c| u.user_id < **c)
                    .map(move |c| (u.user_id.clone(), c.clone()))
            })
            .collect()
    }
}

/// Parse an edge list: one `user_a user_b` pair per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => edges.push((a.to_string(), b.to_string())),
            _ => {
                return Err(Error::InvalidParams(format!(
                    "line {}: expected \"user_a user_b\"",
                    n + 1
                )))
            }
        }
    }
    Ok(edges)
}
