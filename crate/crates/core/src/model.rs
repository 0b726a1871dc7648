//! Entities of the gateway's domain model: social-network users, interned
//! scholarly items, and the annotations that tie one to the other.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::record::DcRecord;

/// Milliseconds since the Unix epoch, UTC. Always assigned by the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

/// A scholarly record with its gateway-wide identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SItem {
    pub item_id: String,
    pub dl_source: String,
    pub record: DcRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnUser {
    pub user_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub sns_origin: String,
    #[serde(default)]
    pub interests: Vec<String>,
    #[serde(default)]
    pub contacts: BTreeSet<String>,
}

/// The mutable part of a user profile. Contacts change only through
/// [`Store::add_contact`](crate::Store::add_contact).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub sns_origin: String,
    #[serde(default)]
    pub interests: Vec<String>,
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        UserProfile { user_id: user_id.into(), ..Default::default() }
    }

    pub fn with_interests<I, S>(mut self, interests: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.interests = interests.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Comment,
    Rating,
    LibraryEntry,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnotationBody {
    Comment {
        text: String,
    },
    Rating {
        value: u8,
    },
    LibraryEntry {
        folder: String,
    },
    Forward {
        recipient: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<String>,
    },
}

impl AnnotationBody {
    pub fn kind(&self) -> AnnotationKind {
        match self {
            AnnotationBody::Comment { .. } => AnnotationKind::Comment,
            AnnotationBody::Rating { .. } => AnnotationKind::Rating,
            AnnotationBody::LibraryEntry { .. } => AnnotationKind::LibraryEntry,
            AnnotationBody::Forward { .. } => AnnotationKind::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotation_id: String,
    pub author: String,
    pub item: String,
    pub created_at: Timestamp,
    #[serde(flatten)]
    pub body: AnnotationBody,
}

impl Annotation {
    pub fn kind(&self) -> AnnotationKind {
        self.body.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolderCount {
    pub folder: String,
    pub count: u64,
}

/// Aggregated annotation counts for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialSummary {
    pub item: String,
    pub comment_count: u64,
    pub rating_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_rating: Option<f64>,
    pub library_count: u64,
    pub forward_count: u64,
    pub folders: Vec<FolderCount>,
}

impl SocialSummary {
    pub fn empty(item: impl Into<String>) -> Self {
        SocialSummary {
            item: item.into(),
            comment_count: 0,
            rating_count: 0,
            avg_rating: None,
            library_count: 0,
            forward_count: 0,
            folders: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlStatus {
    Active,
    Unreachable,
}

/// A digital library connected by registering its search endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlRegistration {
    pub name: String,
    pub base_url: String,
    pub status: DlStatus,
    pub registered_at: Timestamp,
}

/// A stored search derived from a user's profile interests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub alert_id: String,
    pub user: String,
    pub terms: Vec<String>,
    pub recommended_terms: Vec<String>,
    pub last_run_seq: u64,
}

impl Alert {
    /// Every term the alert searches for, with OR semantics.
    pub fn search_terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().chain(&self.recommended_terms).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotifyReason {
    AlertMatch,
    NetworkPost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub recipient: String,
    pub item: String,
    pub reason: NotifyReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub created_at: Timestamp,
}
