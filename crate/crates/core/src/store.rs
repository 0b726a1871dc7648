//! In-memory state of the social store.
//!
//! Every mutation is validated completely before anything changes, then
//! expressed as one or more [`Event`]s that are applied and appended to an
//! internal journal. A persistence layer drains the journal with
//! [`Store::take_journal`] and replays it with [`Store::apply`] on restart.
//! [`Store::entities`] produces the canonical snapshot used for export and
//! compaction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Alert, Annotation, AnnotationBody, DlRegistration, DlStatus, FolderCount, Notification,
    SItem, SnUser, SocialSummary, Timestamp, UserProfile,
};
use crate::record::{item_id, validate_record, DcRecord};
use crate::text::dedup_folded;

/// A state change, in the form it is logged and replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    UserUpserted { profile: UserProfile },
    ContactAdded { a: String, b: String },
    ItemInterned { item: SItem },
    AnnotationAdded { annotation: Annotation },
    DlRegistered { registration: DlRegistration },
    DlStatusChanged { name: String, status: DlStatus },
    DlRemoved { name: String },
    AlertCreated { alert: Alert },
    AlertAdvanced { alert_id: String, last_run_seq: u64 },
    NotificationIssued { notification: Notification },
}

/// One line of a snapshot dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entity {
    Meta {
        seq: u64,
        next_annotation: u64,
        next_alert: u64,
    },
    User {
        #[serde(flatten)]
        user: SnUser,
        updated_seq: u64,
    },
    Dl {
        #[serde(flatten)]
        registration: DlRegistration,
    },
    Item {
        #[serde(flatten)]
        item: SItem,
        ingested_seq: u64,
    },
    Annotation {
        #[serde(flatten)]
        annotation: Annotation,
    },
    Alert {
        #[serde(flatten)]
        alert: Alert,
    },
    Notification {
        #[serde(flatten)]
        notification: Notification,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct UserEntry {
    pub user: SnUser,
    pub updated_seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ItemEntry {
    pub item: SItem,
    pub ingested_seq: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store {
    seq: u64,
    next_annotation: u64,
    next_alert: u64,
    pub(crate) users: BTreeMap<String, UserEntry>,
    pub(crate) items: BTreeMap<String, ItemEntry>,
    pub(crate) annotations: BTreeMap<String, Annotation>,
    pub(crate) by_item: BTreeMap<String, BTreeSet<String>>,
    ratings: BTreeMap<(String, String), String>,
    library: BTreeMap<(String, String, String), String>,
    registry: Vec<DlRegistration>,
    pub(crate) alerts: BTreeMap<String, Alert>,
    notifications: Vec<Notification>,
    journal: Vec<Event>,
}

fn annotation_key(n: u64) -> String {
    format!("ann-{n:010}")
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of events applied so far. Items remember the sequence number at
    /// which they were first interned.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    /// Events recorded since the last call.
    pub fn take_journal(&mut self) -> Vec<Event> {
        core::mem::take(&mut self.journal)
    }

    pub(crate) fn record(&mut self, event: Event) -> Result<()> {
        self.apply(&event)?;
        self.journal.push(event);
        Ok(())
    }

    pub(crate) fn fresh_annotation_id(&self) -> String {
        annotation_key(self.next_annotation + 1)
    }

    pub(crate) fn fresh_alert_id(&self) -> String {
        format!("alert-{}", self.next_alert + 1)
    }

    /// Apply a logged event. Fails with [`Error::Corrupt`] when the event does
    /// not fit the current state, which only happens for a damaged log.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match event {
            Event::UserUpserted { profile } => {
                let seq = self.seq + 1;
                let entry = self.users.entry(profile.user_id.clone()).or_insert_with(|| UserEntry {
                    user: SnUser {
                        user_id: profile.user_id.clone(),
                        display_name: String::new(),
                        sns_origin: String::new(),
                        interests: Vec::new(),
                        contacts: BTreeSet::new(),
                    },
                    updated_seq: seq,
                });
                entry.user.display_name = profile.display_name.clone();
                entry.user.sns_origin = profile.sns_origin.clone();
                entry.user.interests = profile.interests.clone();
                entry.updated_seq = seq;
            }
            Event::ContactAdded { a, b } => {
                if a == b || !self.users.contains_key(a) || !self.users.contains_key(b) {
                    return Err(corrupt(format!("bad contact edge {a} - {b}")));
                }
                self.users.get_mut(a).unwrap().user.contacts.insert(b.clone());
                self.users.get_mut(b).unwrap().user.contacts.insert(a.clone());
            }
            Event::ItemInterned { item } => {
                let seq = self.seq + 1;
                self.items
                    .entry(item.item_id.clone())
                    .and_modify(|e| e.item = item.clone())
                    .or_insert_with(|| ItemEntry { item: item.clone(), ingested_seq: seq });
            }
            Event::AnnotationAdded { annotation } => {
                self.check_annotation(annotation)?;
                if self.annotations.contains_key(&annotation.annotation_id) {
                    return Err(corrupt(format!(
                        "duplicate annotation id {}",
                        annotation.annotation_id
                    )));
                }
                self.insert_annotation(annotation.clone());
                self.next_annotation += 1;
            }
            Event::DlRegistered { registration } => {
                if self.registration(&registration.name).is_some() {
                    return Err(corrupt(format!("duplicate dl {}", registration.name)));
                }
                self.registry.push(registration.clone());
            }
            Event::DlStatusChanged { name, status } => {
                let reg = self
                    .registry
                    .iter_mut()
                    .find(|r| &r.name == name)
                    .ok_or_else(|| corrupt(format!("status change for unknown dl {name}")))?;
                reg.status = *status;
            }
            Event::DlRemoved { name } => {
                self.registry.retain(|r| &r.name != name);
            }
            Event::AlertCreated { alert } => {
                if !self.users.contains_key(&alert.user) {
                    return Err(corrupt(format!("alert for unknown user {}", alert.user)));
                }
                self.alerts.insert(alert.alert_id.clone(), alert.clone());
                self.next_alert += 1;
            }
            Event::AlertAdvanced { alert_id, last_run_seq } => {
                let alert = self
                    .alerts
                    .get_mut(alert_id)
                    .ok_or_else(|| corrupt(format!("unknown alert {alert_id}")))?;
                alert.last_run_seq = alert.last_run_seq.max(*last_run_seq);
            }
            Event::NotificationIssued { notification } => {
                if !self.users.contains_key(&notification.recipient) {
                    return Err(corrupt(format!(
                        "notification for unknown user {}",
                        notification.recipient
                    )));
                }
                self.notifications.push(notification.clone());
            }
        }
        self.seq += 1;
        Ok(())
    }

    /// Annotation invariants that depend on the rest of the store.
    fn check_annotation(&self, a: &Annotation) -> Result<()> {
        if !self.users.contains_key(&a.author) {
            return Err(corrupt(format!("annotation {} by unknown user", a.annotation_id)));
        }
        if !self.items.contains_key(&a.item) {
            return Err(corrupt(format!("annotation {} on unknown item", a.annotation_id)));
        }
        match &a.body {
            AnnotationBody::Comment { text } if text.trim().is_empty() => {
                Err(corrupt("empty comment"))
            }
            AnnotationBody::Rating { value } if !(1..=5).contains(value) => {
                Err(corrupt("rating out of range"))
            }
            AnnotationBody::LibraryEntry { folder } if folder.trim().is_empty() => {
                Err(corrupt("empty folder"))
            }
            AnnotationBody::Forward { recipient, parent } => {
                if !self.users.contains_key(recipient) {
                    return Err(corrupt("forward to unknown user"));
                }
                if let Some(p) = parent {
                    match self.annotations.get(p) {
                        Some(Annotation {
                            item,
                            body: AnnotationBody::Forward { recipient: pr, .. },
                            ..
                        }) if item == &a.item && pr == &a.author => Ok(()),
                        _ => Err(corrupt(format!("forward {} has a bad parent", a.annotation_id))),
                    }
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn insert_annotation(&mut self, a: Annotation) {
        match &a.body {
            AnnotationBody::Rating { .. } => {
                let key = (a.author.clone(), a.item.clone());
                if let Some(old) = self.ratings.insert(key, a.annotation_id.clone()) {
                    self.annotations.remove(&old);
                    if let Some(ids) = self.by_item.get_mut(&a.item) {
                        ids.remove(&old);
                    }
                }
            }
            AnnotationBody::LibraryEntry { folder } => {
                self.library.insert(
                    (a.author.clone(), a.item.clone(), folder.clone()),
                    a.annotation_id.clone(),
                );
            }
            _ => {}
        }
        self.by_item.entry(a.item.clone()).or_default().insert(a.annotation_id.clone());
        self.annotations.insert(a.annotation_id.clone(), a);
    }

    // ---- users ----

    pub fn upsert_user(&mut self, profile: UserProfile) -> Result<SnUser> {
        let user_id = profile.user_id.trim();
        if user_id.is_empty() {
            return Err(Error::InvalidUser("user_id is empty".into()));
        }
        let profile = UserProfile {
            user_id: user_id.to_string(),
            display_name: profile.display_name.trim().to_string(),
            sns_origin: profile.sns_origin.trim().to_string(),
            interests: dedup_folded(&profile.interests),
        };
        let id = profile.user_id.clone();
        self.record(Event::UserUpserted { profile })?;
        Ok(self.users[&id].user.clone())
    }

    pub fn user(&self, user_id: &str) -> Result<&SnUser> {
        self.users
            .get(user_id)
            .map(|e| &e.user)
            .ok_or_else(|| Error::UnknownUser(user_id.to_string()))
    }

    pub fn users(&self) -> impl Iterator<Item = &SnUser> {
        self.users.values().map(|e| &e.user)
    }

    pub(crate) fn user_updated_seq(&self, user_id: &str) -> u64 {
        self.users.get(user_id).map_or(0, |e| e.updated_seq)
    }

    // ---- items ----

    /// Give a record from `dl_source` its stable identity. Re-interning the
    /// same (source, identifier) returns the same id and refreshes the record.
    pub fn intern_item(&mut self, record: DcRecord, dl_source: &str) -> Result<SItem> {
        let record = validate_record(record.into())?;
        if self.registration(dl_source).is_none() {
            return Err(Error::UnknownSource(dl_source.to_string()));
        }
        let id = item_id(dl_source, &record.identifier);
        if let Some(existing) = self.items.get(&id) {
            if existing.item.record == record {
                return Ok(existing.item.clone());
            }
        }
        let item = SItem { item_id: id, dl_source: dl_source.to_string(), record };
        self.record(Event::ItemInterned { item: item.clone() })?;
        Ok(item)
    }

    pub fn item(&self, item_id: &str) -> Result<&SItem> {
        self.items
            .get(item_id)
            .map(|e| &e.item)
            .ok_or_else(|| Error::UnknownItem(item_id.to_string()))
    }

    pub fn items(&self) -> impl Iterator<Item = &SItem> {
        self.items.values().map(|e| &e.item)
    }

    /// Sequence number at which the item was first interned.
    pub fn ingested_seq(&self, item_id: &str) -> Option<u64> {
        self.items.get(item_id).map(|e| e.ingested_seq)
    }

    // ---- annotations ----

    fn require_author_and_item(&self, author: &str, item: &str) -> Result<()> {
        self.user(author)?;
        self.item(item)?;
        Ok(())
    }

    pub(crate) fn new_annotation(
        &self,
        author: &str,
        item: &str,
        now: Timestamp,
        body: AnnotationBody,
    ) -> Annotation {
        Annotation {
            annotation_id: self.fresh_annotation_id(),
            author: author.to_string(),
            item: item.to_string(),
            created_at: now,
            body,
        }
    }

    pub(crate) fn add_annotation(&mut self, annotation: Annotation) -> Result<Annotation> {
        self.record(Event::AnnotationAdded { annotation: annotation.clone() })?;
        Ok(annotation)
    }

    pub fn add_comment(
        &mut self,
        author: &str,
        item: &str,
        text: &str,
        now: Timestamp,
    ) -> Result<Annotation> {
        self.require_author_and_item(author, item)?;
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::InvalidPayload("comment text is empty".into()));
        }
        let a = self.new_annotation(author, item, now, AnnotationBody::Comment { text: text.into() });
        self.add_annotation(a)
    }

    /// Store a 1..=5 rating, replacing any earlier rating by the same author.
    pub fn add_rating(
        &mut self,
        author: &str,
        item: &str,
        value: i64,
        now: Timestamp,
    ) -> Result<Annotation> {
        self.require_author_and_item(author, item)?;
        if !(1..=5).contains(&value) {
            return Err(Error::InvalidPayload(format!("rating must be in 1..=5, got {value}")));
        }
        let a = self.new_annotation(author, item, now, AnnotationBody::Rating { value: value as u8 });
        self.add_annotation(a)
    }

    /// File an item into one of the author's library folders. Idempotent per
    /// (author, item, folder).
    pub fn add_to_library(
        &mut self,
        author: &str,
        item: &str,
        folder: &str,
        now: Timestamp,
    ) -> Result<Annotation> {
        self.require_author_and_item(author, item)?;
        let folder = folder.trim();
        if folder.is_empty() {
            return Err(Error::InvalidPayload("folder is empty".into()));
        }
        let key = (author.to_string(), item.to_string(), folder.to_string());
        if let Some(id) = self.library.get(&key) {
            return Ok(self.annotations[id].clone());
        }
        let a = self.new_annotation(
            author,
            item,
            now,
            AnnotationBody::LibraryEntry { folder: folder.into() },
        );
        self.add_annotation(a)
    }

    pub fn annotation(&self, annotation_id: &str) -> Option<&Annotation> {
        self.annotations.get(annotation_id)
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values()
    }

    /// Annotations on `item` in creation order.
    pub fn annotations_for<'a>(&'a self, item: &str) -> impl Iterator<Item = &'a Annotation> + 'a {
        self.by_item
            .get(item)
            .into_iter()
            .flatten()
            .map(move |id| &self.annotations[id])
    }

    /// The user's library entries, ordered by folder then creation.
    pub fn library_of(&self, user: &str) -> Result<Vec<&Annotation>> {
        self.user(user)?;
        Ok(self
            .library
            .iter()
            .filter(|((author, _, _), _)| author == user)
            .map(|(_, id)| &self.annotations[id])
            .collect())
    }

    pub fn summary_for(&self, item: &str) -> Result<SocialSummary> {
        self.item(item)?;
        let mut s = SocialSummary::empty(item);
        let mut rating_sum = 0u64;
        let mut folders: BTreeMap<&str, u64> = BTreeMap::new();
        for a in self.annotations_for(item) {
            match &a.body {
                AnnotationBody::Comment { .. } => s.comment_count += 1,
                AnnotationBody::Rating { value } => {
                    s.rating_count += 1;
                    rating_sum += u64::from(*value);
                }
                AnnotationBody::LibraryEntry { folder } => {
                    s.library_count += 1;
                    *folders.entry(folder).or_default() += 1;
                }
                AnnotationBody::Forward { .. } => s.forward_count += 1,
            }
        }
        if s.rating_count > 0 {
            s.avg_rating = Some(rating_sum as f64 / s.rating_count as f64);
        }
        s.folders = folders
            .into_iter()
            .map(|(folder, count)| FolderCount { folder: folder.into(), count })
            .collect();
        Ok(s)
    }

    // ---- registry ----

    pub fn register_dl(
        &mut self,
        name: &str,
        base_url: &str,
        status: DlStatus,
        now: Timestamp,
    ) -> Result<DlRegistration> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::InvalidParams("dl name is empty".into()));
        }
        if self.registration(name).is_some() {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let registration = DlRegistration {
            name: name.to_string(),
            base_url: base_url.to_string(),
            status,
            registered_at: now,
        };
        self.record(Event::DlRegistered { registration: registration.clone() })?;
        Ok(registration)
    }

    pub fn set_dl_status(&mut self, name: &str, status: DlStatus) -> Result<()> {
        let current = self.registration(name).ok_or_else(|| Error::UnknownSource(name.into()))?;
        if current.status != status {
            self.record(Event::DlStatusChanged { name: name.into(), status })?;
        }
        Ok(())
    }

    pub fn remove_dl(&mut self, name: &str) -> Result<DlRegistration> {
        let reg = self.registration(name).cloned().ok_or_else(|| Error::UnknownSource(name.into()))?;
        self.record(Event::DlRemoved { name: name.into() })?;
        Ok(reg)
    }

    pub fn registration(&self, name: &str) -> Option<&DlRegistration> {
        self.registry.iter().find(|r| r.name == name)
    }

    /// Registrations in registration order.
    pub fn registrations(&self) -> &[DlRegistration] {
        &self.registry
    }

    // ---- notifications ----

    pub(crate) fn issue(&mut self, notification: Notification) -> Result<()> {
        self.record(Event::NotificationIssued { notification })
    }

    pub fn notifications(&self) -> &[Notification] {
        &self.notifications
    }

    pub fn notifications_for<'a>(&'a self, user: &'a str) -> impl Iterator<Item = &'a Notification> {
        self.notifications.iter().filter(move |n| n.recipient == user)
    }

    // ---- snapshots ----

    /// Canonical snapshot, in a fixed order: meta, users, registrations,
    /// items, annotations, alerts, notifications.
    pub fn entities(&self) -> Vec<Entity> {
        let mut out = Vec::with_capacity(
            1 + self.users.len() + self.items.len() + self.annotations.len(),
        );
        out.push(Entity::Meta {
            seq: self.seq,
            next_annotation: self.next_annotation,
            next_alert: self.next_alert,
        });
        out.extend(self.users.values().map(|e| Entity::User {
            user: e.user.clone(),
            updated_seq: e.updated_seq,
        }));
        out.extend(self.registry.iter().map(|r| Entity::Dl { registration: r.clone() }));
        out.extend(self.items.values().map(|e| Entity::Item {
            item: e.item.clone(),
            ingested_seq: e.ingested_seq,
        }));
        out.extend(self.annotations.values().map(|a| Entity::Annotation { annotation: a.clone() }));
        out.extend(self.alerts.values().map(|a| Entity::Alert { alert: a.clone() }));
        out.extend(self.notifications.iter().map(|n| Entity::Notification { notification: n.clone() }));
        out
    }

    /// Rebuild a store from a snapshot, checking every cross-reference.
    pub fn from_entities<I: IntoIterator<Item = Entity>>(entities: I) -> Result<Store> {
        let mut store = Store::new();
        let mut annotations = Vec::new();
        let mut meta = None;
        for e in entities {
            match e {
                Entity::Meta { seq, next_annotation, next_alert } => {
                    meta = Some((seq, next_annotation, next_alert));
                }
                Entity::User { user, updated_seq } => {
                    if user.user_id.is_empty() || store.users.contains_key(&user.user_id) {
                        return Err(corrupt(format!("bad or duplicate user {:?}", user.user_id)));
                    }
                    store.users.insert(user.user_id.clone(), UserEntry { user, updated_seq });
                }
                Entity::Dl { registration } => {
                    if store.registration(&registration.name).is_some() {
                        return Err(corrupt(format!("duplicate dl {}", registration.name)));
                    }
                    store.registry.push(registration);
                }
                Entity::Item { item, ingested_seq } => {
                    if item.item_id != item_id(&item.dl_source, &item.record.identifier) {
                        return Err(corrupt(format!("item id mismatch for {}", item.item_id)));
                    }
                    store.items.insert(item.item_id.clone(), ItemEntry { item, ingested_seq });
                }
                Entity::Annotation { annotation } => annotations.push(annotation),
                Entity::Alert { alert } => {
                    store.alerts.insert(alert.alert_id.clone(), alert);
                }
                Entity::Notification { notification } => store.notifications.push(notification),
            }
        }
        // parents always precede children in id order
        annotations.sort_by(|a, b| a.annotation_id.cmp(&b.annotation_id));
        for a in annotations {
            store.check_annotation(&a)?;
            store.insert_annotation(a);
        }
        let (seq, next_annotation, next_alert) = meta.ok_or_else(|| corrupt("missing meta line"))?;
        store.seq = seq;
        store.next_annotation = next_annotation;
        store.next_alert = next_alert;
        store.check_integrity()?;
        Ok(store)
    }

    /// Full O(entities + annotations) scan of the store invariants, independent
    /// of the secondary indexes.
    pub fn check_integrity(&self) -> Result<()> {
        for e in self.users.values() {
            for c in &e.user.contacts {
                let other = self
                    .users
                    .get(c)
                    .ok_or_else(|| corrupt(format!("{} has unknown contact {c}", e.user.user_id)))?;
                if c == &e.user.user_id || !other.user.contacts.contains(&e.user.user_id) {
                    return Err(corrupt(format!("asymmetric contact {} - {c}", e.user.user_id)));
                }
            }
        }
        let mut ratings = BTreeSet::new();
        let mut library = BTreeSet::new();
        for a in self.annotations.values() {
            if !self.users.contains_key(&a.author) || !self.items.contains_key(&a.item) {
                return Err(corrupt(format!("dangling annotation {}", a.annotation_id)));
            }
            match &a.body {
                AnnotationBody::Rating { value } => {
                    if !(1..=5).contains(value) || !ratings.insert((&a.author, &a.item)) {
                        return Err(corrupt(format!("bad rating {}", a.annotation_id)));
                    }
                }
                AnnotationBody::LibraryEntry { folder } => {
                    if !library.insert((&a.author, &a.item, folder)) {
                        return Err(corrupt(format!("duplicate library entry {}", a.annotation_id)));
                    }
                }
                AnnotationBody::Forward { recipient, parent } => {
                    if !self.users.contains_key(recipient) {
                        return Err(corrupt(format!("forward {} to unknown user", a.annotation_id)));
                    }
                    if let Some(p) = parent {
                        let ok = matches!(
                            self.annotations.get(p),
                            Some(Annotation { item, body: AnnotationBody::Forward { recipient: pr, .. }, annotation_id, .. })
                                if item == &a.item && pr == &a.author && annotation_id < &a.annotation_id
                        );
                        if !ok {
                            return Err(corrupt(format!("forward {} has a bad parent", a.annotation_id)));
                        }
                    }
                }
                AnnotationBody::Comment { .. } => {}
            }
        }
        for alert in self.alerts.values() {
            if !self.users.contains_key(&alert.user) {
                return Err(corrupt(format!("alert {} for unknown user", alert.alert_id)));
            }
        }
        for n in &self.notifications {
            if !self.users.contains_key(&n.recipient) || !self.items.contains_key(&n.item) {
                return Err(corrupt("dangling notification"));
            }
        }
        Ok(())
    }
}
