//! Timestamped action log with per-unit configuration digests.

use serde::Serialize;

/// How much the trace records. Bulk experiment runs keep `Off`; determinism
/// checks use `Digests`; `Full` additionally logs every action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    Off,
    #[default]
    Digests,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: u64,
    pub actor: String,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, t: u64, actor: String, action: &str, info: Option<String>) {
        self.records.push(TraceRecord {
            t,
            actor,
            action: action.to_string(),
            info,
        });
    }

    /// JSON Lines rendering, one record per line, byte-stable.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}
