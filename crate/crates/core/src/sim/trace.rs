use std::fmt;

use crate::protocol::{Action, Message, ProcessId, Role, Tick, TimerId};

use super::FaultEvent;

/// One processed event.
///
/// `cause` is the `seq` of the event whose handling scheduled this one, and
/// `depth` the number of message hops on that causal chain. Neither appears
/// in the textual form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: Tick,
    pub seq: u64,
    pub cause: Option<u64>,
    pub depth: u32,
    pub entry: TraceEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEntry {
    Deliver(Message),
    /// Delivery to a crashed node.
    Drop(Message),
    Fault(FaultEvent),
    Timer(ProcessId, TimerId),
}

impl TraceEntry {
    pub fn message(&self) -> Option<&Message> {
        match self {
            TraceEntry::Deliver(m) | TraceEntry::Drop(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} seq={} ", self.time, self.seq)?;
        match &self.entry {
            TraceEntry::Deliver(m) => write!(f, "{}->{} {}", m.from, m.to, m.kind),
            TraceEntry::Drop(m) => write!(f, "DROP {}->{} {}", m.from, m.to, m.kind),
            TraceEntry::Fault(e) => write!(f, "FAULT {e}"),
            TraceEntry::Timer(node, timer) => write!(f, "TIMER {node} {timer}"),
        }
    }
}

/// Renders a trace one record per line, newline-terminated.
pub fn render_trace(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in trace {
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// State deltas of one call into a node's transition function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRecord {
    pub time: Tick,
    /// Sequence number of the event that triggered the transition.
    pub seq: u64,
    pub node: ProcessId,
    pub role_before: Role,
    pub role_after: Role,
    pub flag_before: bool,
    pub flag_after: bool,
    pub var_before: Option<ProcessId>,
    pub var_after: Option<ProcessId>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteRecord {
    pub time: Tick,
    pub node: ProcessId,
    pub text: String,
}
