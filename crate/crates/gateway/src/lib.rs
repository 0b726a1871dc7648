//! The ScholarLib gateway.
//!
//! Three loosely coupled layers sit in this crate: the digital-library
//! connector layer ([`connector`], [`federation`]), the core services
//! ([`service`], backed by the file-backed [`db`]), and the client-facing
//! HTTP API ([`api`]). [`mock_dl`] and [`fixture`] provide a reference
//! library and a deterministic data set so the whole system runs locally.

pub mod alerts;
pub mod api;
pub mod clock;
pub mod config;
pub mod conformance;
pub mod connector;
pub mod db;
pub mod dump;
pub mod error;
pub mod federation;
pub mod fixture;
pub mod mock_dl;
pub mod service;

pub use clock::{Clock, ManualClock, SystemClock};
pub use connector::{ConnectorError, DlClient, RawResultPage};
pub use db::Db;
pub use error::{GatewayError, Result};
pub use federation::{FederatedHit, FederatedResult, SourceStatus};
pub use service::{Gateway, GatewayConfig, SearchPage};

pub use scholarlib_core as core;
