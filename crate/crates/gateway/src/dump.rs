//! JSON-lines encoding of snapshots and log events.
//!
//! Snapshot lines carry a `"type"` tag (`meta`, `user`, `dl`, `item`,
//! `annotation`, `alert`, `notification`); log lines carry an `"event"` tag.

use scholarlib_core::{Entity, Event};

use crate::error::{GatewayError, Result};

pub enum Line {
    Entity(Entity),
    Event(Event),
}

pub fn encode_entities(entities: &[Entity]) -> String {
    let mut out = String::new();
    for e in entities {
        out.push_str(&serde_json::to_string(e).expect("entities serialize"));
        out.push('\n');
    }
    out
}

pub fn encode_event(event: &Event) -> String {
    let mut line = serde_json::to_string(event).expect("events serialize");
    line.push('\n');
    line
}

pub fn parse_line(line: &str) -> Result<Line> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| GatewayError::StoreCorruption(format!("bad json line: {e}")))?;
    let parsed = if value.get("event").is_some() {
        serde_json::from_value(value).map(Line::Event)
    } else {
        serde_json::from_value(value).map(Line::Entity)
    };
    parsed.map_err(|e| GatewayError::StoreCorruption(format!("bad record: {e}")))
}

/// Parse an export dump. Event lines are rejected.
pub fn parse_dump(text: &str) -> Result<Vec<Entity>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| match parse_line(l)? {
            Line::Entity(e) => Ok(e),
            Line::Event(_) => Err(GatewayError::StoreCorruption("event line in a dump".into())),
        })
        .collect()
}
