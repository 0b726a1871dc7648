//! The Dublin Core subset exchanged with digital libraries, its
//! normalization, and the stable identity given to interned records.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RecordError;
use crate::text::dedup_folded;

/// A validated scholarly metadata record.
///
/// Serialized as a flat JSON object; absent optionals are omitted, never
/// `null`. `creators` and `subjects` are always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcRecord {
    pub identifier: String,
    pub title: String,
    #[serde(default)]
    pub creators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default)]
    pub subjects: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

/// An unvalidated record as delivered by a connector. Unknown keys are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RawRecord {
    pub identifier: Option<String>,
    pub title: Option<String>,
    pub creators: Vec<String>,
    pub date: Option<String>,
    pub subjects: Vec<String>,
    pub description: Option<String>,
    pub doc_type: Option<String>,
    pub language: Option<String>,
    pub link: Option<String>,
}

impl From<DcRecord> for RawRecord {
    fn from(r: DcRecord) -> Self {
        RawRecord {
            identifier: Some(r.identifier),
            title: Some(r.title),
            creators: r.creators,
            date: r.date,
            subjects: r.subjects,
            description: r.description,
            doc_type: r.doc_type,
            language: r.language,
            link: r.link,
        }
    }
}

impl DcRecord {
    /// Minimal record with only the required fields set.
    pub fn new(identifier: impl Into<String>, title: impl Into<String>) -> Self {
        DcRecord {
            identifier: identifier.into(),
            title: title.into(),
            creators: Vec::new(),
            date: None,
            subjects: Vec::new(),
            description: None,
            doc_type: None,
            language: None,
            link: None,
        }
    }

    /// Title, subjects and description: the text every matching rule looks at.
    pub fn searchable_text(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.title.as_str())
            .chain(self.subjects.iter().map(String::as_str))
            .chain(self.description.as_deref())
    }
}

fn trimmed(s: Option<String>) -> Option<String> {
    s.map(|s| String::from(s.trim())).filter(|s| !s.is_empty())
}

/// Normalize a raw record: trim every string, drop empty optionals and list
/// entries, and remove subjects that repeat an earlier one after case-folding.
pub fn validate_record(raw: RawRecord) -> Result<DcRecord, RecordError> {
    let identifier = trimmed(raw.identifier).ok_or(RecordError::MissingField("identifier"))?;
    let title = trimmed(raw.title).ok_or(RecordError::MissingField("title"))?;

    let date = trimmed(raw.date);
    if let Some(d) = &date {
        if !is_iso_date(d) {
            return Err(RecordError::MalformedDate(d.clone()));
        }
    }
    let language = match trimmed(raw.language) {
        Some(l) if l.len() == 2 && l.bytes().all(|b| b.is_ascii_alphabetic()) => {
            Some(l.to_ascii_lowercase())
        }
        Some(l) => return Err(RecordError::MalformedLanguage(l)),
        None => None,
    };

    Ok(DcRecord {
        identifier,
        title,
        creators: raw
            .creators
            .iter()
            .map(|c| String::from(c.trim()))
            .filter(|c| !c.is_empty())
            .collect(),
        date,
        subjects: dedup_folded(&raw.subjects),
        description: trimmed(raw.description),
        doc_type: trimmed(raw.doc_type),
        language,
        link: trimmed(raw.link),
    })
}

/// Accepts the ISO-8601 calendar forms `YYYY`, `YYYY-MM` and `YYYY-MM-DD`.
pub fn is_iso_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    let num = |p: &str, len: usize| -> Option<u32> {
        if p.len() == len && p.bytes().all(|b| b.is_ascii_digit()) {
            p.parse().ok()
        } else {
            None
        }
    };
    let Some(year) = parts.first().and_then(|p| num(p, 4)) else {
        return false;
    };
    match parts.len() {
        1 => true,
        2 => matches!(num(parts[1], 2), Some(1..=12)),
        3 => {
            let (Some(month), Some(day)) = (num(parts[1], 2), num(parts[2], 2)) else {
                return false;
            };
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            let days = match month {
                1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
                4 | 6 | 9 | 11 => 30,
                2 if leap => 29,
                2 => 28,
                _ => return false,
            };
            (1..=days).contains(&day)
        }
        _ => false,
    }
}

/// Gateway-wide identity of a record: SHA-256 over `"{dl_source}\n{identifier}"`,
/// truncated to 16 bytes, lowercase hex.
pub fn item_id(dl_source: &str, identifier: &str) -> String {
    let mut h = Sha256::new();
    h.update(dl_source.as_bytes());
    h.update(b"\n");
    h.update(identifier.as_bytes());
    let digest = h.finalize();
    hex::encode(&digest[..16])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn raw(identifier: &str, title: &str) -> RawRecord {
        RawRecord {
            identifier: Some(identifier.into()),
            title: Some(title.into()),
            ..Default::default()
        }
    }

    #[test]
    fn trims_and_dedups_subjects() {
        let mut r = raw("a1", " T ");
        r.subjects = vec!["Men".into(), "men".into()];
        let rec = validate_record(r).unwrap();
        assert_eq!(rec.title, "T");
        assert_eq!(rec.subjects, vec!["Men"]);
    }

    #[test]
    fn missing_identifier() {
        let r = RawRecord { title: Some("T".into()), ..Default::default() };
        assert_eq!(validate_record(r), Err(RecordError::MissingField("identifier")));
        assert_eq!(
            validate_record(raw("  ", "T")),
            Err(RecordError::MissingField("identifier"))
        );
        assert_eq!(validate_record(raw("a", "")), Err(RecordError::MissingField("title")));
    }

    #[test]
    fn dates() {
        let mut r = raw("a1", "T");
        r.date = Some("2012-13-40".into());
        assert!(matches!(validate_record(r.clone()), Err(RecordError::MalformedDate(_))));
        for bad in ["2011-02-29", "12-01-01", "2012-1-01", "2012-00", "2012-06-31", "x"] {
            r.date = Some(bad.into());
            assert!(validate_record(r.clone()).is_err(), "{bad}");
        }
        for good in ["2012", "2012-06", "2012-06-22", "2012-02-29", "2000-02-29"] {
            r.date = Some(good.into());
            assert!(validate_record(r.clone()).is_ok(), "{good}");
        }
    }

    #[test]
    fn languages() {
        let mut r = raw("a1", "T");
        r.language = Some("DE".into());
        assert_eq!(validate_record(r.clone()).unwrap().language.as_deref(), Some("de"));
        r.language = Some("deu".into());
        assert!(matches!(validate_record(r), Err(RecordError::MalformedLanguage(_))));
    }

    #[test]
    fn canonical_json_omits_absent_optionals() {
        let rec = validate_record(raw("a1", "T")).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"identifier":"a1","title":"T","creators":[],"subjects":[]}"#);
    }

    #[test]
    fn item_id_shape() {
        let id = item_id("mock-dl-a", "sowi-123");
        assert_eq!(id.len(), 32);
        assert!(id.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()));
        assert_eq!(id, item_id("mock-dl-a", "sowi-123"));
        // enumerate the key function over both sources
        let ids: Vec<_> = ["mock-dl-a", "mock-dl-b"]
            .iter()
            .map(|s| item_id(s, "sowi-123"))
            .collect();
        assert_ne!(ids[0], ids[1]);
        assert_ne!(item_id("ab", "c"), item_id("a", "bc"));
        // hashlib.sha256(b"mock-dl-a\nsowi-123").hexdigest()[:32]
        assert_eq!(id, "b616d969a99234e9a984f316bfe1762e");
    }
}
