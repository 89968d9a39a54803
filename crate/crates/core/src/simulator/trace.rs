use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Emitted,
    Delivered,
    Dropped,
    RuleFired,
    StateChanged,
    CandidateSelected,
    WindowOpened,
    WindowVetoed,
    WindowCommitted,
    InstructionFollowed,
    InstructionIgnored,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Emitted => "emitted",
            TraceKind::Delivered => "delivered",
            TraceKind::Dropped => "dropped",
            TraceKind::RuleFired => "rule_fired",
            TraceKind::StateChanged => "state_changed",
            TraceKind::CandidateSelected => "candidate_selected",
            TraceKind::WindowOpened => "window_opened",
            TraceKind::WindowVetoed => "window_vetoed",
            TraceKind::WindowCommitted => "window_committed",
            TraceKind::InstructionFollowed => "instruction_followed",
            TraceKind::InstructionIgnored => "instruction_ignored",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of a trace.
///
/// `subject` is the acting instance. `object` depends on the kind: the
/// channel label for emitted/delivered/dropped, the rule name, state name,
/// candidate id or window id otherwise. `detail` is a JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub seq: u64,
    pub kind: TraceKind,
    pub subject: String,
    pub object: String,
    pub detail: Value,
}

impl TraceEvent {
    pub fn channel(&self) -> Option<usize> {
        self.detail.get("channel")?.as_u64().map(|c| c as usize)
    }

    /// Event object written as `spec/quant`, when the event concerns one.
    pub fn spec(&self) -> Option<&str> {
        self.detail.get("spec")?.as_str()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace events always serialize")
    }
}

/// Result of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    /// Tick at which the run stopped.
    pub end_tick: u64,
    /// True when the run stopped because nothing was left to do.
    pub quiescent: bool,
    /// Objects still in flight per channel, in canonical connection order.
    pub in_flight: Vec<usize>,
}

impl Trace {
    /// JSON Lines, one event per line.
    pub fn to_jsonl(&self) -> String {
        events_to_jsonl(&self.events)
    }
}

pub fn events_to_jsonl(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json());
        out.push('\n');
    }
    out
}

pub fn events_from_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
