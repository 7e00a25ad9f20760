//! Line-delimited run trace.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    FaceTracked,
    FaceLost,
    GestureFired,
    PacketDecoded,
    PacketRejected,
    BurstStarted,
    /// A trigger arrived while its tag was already ranging.
    TriggerDropped,
    Bound,
    FastPath,
    StateChanged,
    ValidationRejected,
}

/// One trace record. Attributes are kept in a sorted map so that the
/// serialized form is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_ms: f64,
    pub kind: TraceKind,
    pub attrs: BTreeMap<String, Value>,
}

impl TraceEvent {
    pub fn new(t_ms: f64, kind: TraceKind) -> Self {
        TraceEvent { t_ms, kind, attrs: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }

    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, event: TraceEvent) {
        debug_assert!(self.events.last().is_none_or(|e| e.t_ms <= event.t_ms), "trace must be time ordered");
        self.events.push(event);
    }

    pub fn of_kind(&self, kind: TraceKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: TraceKind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// SHA-256 of the JSON-lines form, lowercase hex.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.events {
            hasher.update(serde_json::to_vec(e).expect("trace events serialize"));
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}
