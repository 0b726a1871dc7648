//! Core of the ScholarLib gateway: the shared domain model, the in-memory
//! social store with its event journal, spread tracing over the contact
//! graph, social-signal ranking, term recommendation and the alerting /
//! posting logic.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! network, the filesystem or a wall clock lives in the `scholarlib` crate,
//! which feeds timestamps in and persists the [`Event`] journal this crate
//! produces.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alert;
pub mod post;
pub mod error;
pub mod graph;
pub mod model;
pub mod query;
pub mod rank;
pub mod recommend;
pub mod record;
pub mod rng;
pub mod search;
pub mod store;
pub mod text;

pub use error::{Error, RecordError, Result};
pub use graph::SpreadTrace;
pub use model::{
    Alert, Annotation, AnnotationBody, AnnotationKind, DlRegistration, DlStatus, Notification,
    NotifyReason, SItem, SnUser, SocialSummary, Timestamp, UserProfile,
};
pub use query::SearchQuery;
pub use rank::{rerank, round_robin, social_score, RankWeights, Reranked};
pub use record::{item_id, validate_record, DcRecord, RawRecord};
pub use store::{Entity, Event, Store};
