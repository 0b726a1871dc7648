use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Why a raw key-value document could not become a [`DcRecord`](crate::DcRecord).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("malformed date: {0:?}")]
    MalformedDate(String),
    #[error("malformed language code: {0:?}")]
    MalformedLanguage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(#[from] RecordError),
    #[error("unknown source: {0}")]
    UnknownSource(String),
    #[error("unknown user: {0}")]
    UnknownUser(String),
    #[error("unknown item: {0}")]
    UnknownItem(String),
    #[error("unknown alert: {0}")]
    UnknownAlert(String),
    #[error("invalid user: {0}")]
    InvalidUser(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("user {0} cannot be their own contact")]
    SelfEdge(String),
    #[error("{from} and {to} are not contacts")]
    NotContacts { from: String, to: String },
    #[error("bad parent forward: {0}")]
    BadParent(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("user {0} has no interests and no extra terms")]
    NoTerms(String),
    #[error("corrupt store state: {0}")]
    Corrupt(String),
}

impl Error {
    /// True for errors caused by a reference to something that does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            Error::UnknownSource(_)
                | Error::UnknownUser(_)
                | Error::UnknownItem(_)
                | Error::UnknownAlert(_)
        )
    }
}
