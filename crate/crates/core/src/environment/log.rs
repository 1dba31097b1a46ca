use serde::{Deserialize, Serialize};
use serde_json::Value;

/// `kind` of records not produced by an agent.
pub const SYSTEM: &str = "system";

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub agent_id: Option<u32>,
    pub kind: String,
    pub event: String,
    pub payload: Value,
}

impl LogRecord {
    pub fn system(tick: u64, event: &str, payload: Value) -> Self {
        Self {
            tick,
            agent_id: None,
            kind: SYSTEM.to_string(),
            event: event.to_string(),
            payload,
        }
    }

    pub fn is_system(&self) -> bool {
        self.agent_id.is_none()
    }

    /// The closing record the scheduler writes after the last tick.
    pub fn is_final(&self) -> bool {
        self.is_system()
            && self.event == "clock"
            && self.payload.get("final") == Some(&Value::Bool(true))
    }
}

/// Serialises records as JSON lines. Payload object keys come out sorted.
pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log record serialises"));
        out.push('\n');
    }
    out
}

/// A parsed log; `complete` is false if a line was unreadable or the final
/// clock record is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub records: Vec<LogRecord>,
    pub complete: bool,
}

/// Parses JSON lines, stopping at the first malformed line.
pub fn parse_jsonl(text: &str) -> ParsedLog {
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<LogRecord>(line) {
            Ok(r) => records.push(r),
            Err(_) => {
                return ParsedLog {
                    records,
                    complete: false,
                }
            }
        }
    }
    let complete = records.last().is_some_and(LogRecord::is_final);
    ParsedLog { records, complete }
}
