use std::fmt;

use crate::protocol::{MessageKind, ProcessId};

use super::{SimResult, TraceEntry};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct KindCounts {
    pub election: u64,
    pub ok: u64,
    pub inform: u64,
    pub crosscheck: u64,
    pub coordinator: u64,
}

impl KindCounts {
    pub fn get(&self, kind: MessageKind) -> u64 {
        match kind {
            MessageKind::Election => self.election,
            MessageKind::Ok => self.ok,
            MessageKind::InformCoordinator => self.inform,
            MessageKind::CrossCheck => self.crosscheck,
            MessageKind::Coordinator => self.coordinator,
        }
    }

    pub fn bump(&mut self, kind: MessageKind) {
        let slot = match kind {
            MessageKind::Election => &mut self.election,
            MessageKind::Ok => &mut self.ok,
            MessageKind::InformCoordinator => &mut self.inform,
            MessageKind::CrossCheck => &mut self.crosscheck,
            MessageKind::Coordinator => &mut self.coordinator,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        MessageKind::ALL.iter().map(|k| self.get(*k)).sum()
    }

    fn minus(&self, other: &KindCounts) -> KindCounts {
        KindCounts {
            election: self.election - other.election,
            ok: self.ok - other.ok,
            inform: self.inform - other.inform,
            crosscheck: self.crosscheck - other.crosscheck,
            coordinator: self.coordinator - other.coordinator,
        }
    }
}

/// Message accounting for one run.
///
/// The headline figure counts protocol messages that reached a live process,
/// excluding cross-check probes: messages addressed to a crashed process are
/// sent (and appear in `sent`) but never take part in the exchange the
/// closed-form counts describe. Cross-check probes are tallied on their own,
/// delivered or not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct MessageStats {
    pub sent: KindCounts,
    pub dropped: KindCounts,
    pub headline_total: u64,
    pub crosscheck: u64,
    pub total_with_crosscheck: u64,
    pub critical_path_depth: Option<u32>,
}

impl MessageStats {
    pub fn delivered(&self) -> KindCounts {
        self.sent.minus(&self.dropped)
    }
}

impl fmt::Display for MessageStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.delivered();
        write!(
            f,
            "election={} ok={} inform={} coordinator={} crosscheck={} dropped={} headline={} total={}",
            d.election,
            d.ok,
            d.inform,
            d.coordinator,
            self.crosscheck,
            self.dropped.total(),
            self.headline_total,
            self.total_with_crosscheck
        )
    }
}

/// Recounts every send from the trace: each send ends as exactly one
/// delivery or drop record.
pub fn message_stats(result: &SimResult) -> MessageStats {
    let mut sent = KindCounts::default();
    let mut dropped = KindCounts::default();
    for record in &result.trace {
        match &record.entry {
            TraceEntry::Deliver(m) => sent.bump(m.kind),
            TraceEntry::Drop(m) => {
                sent.bump(m.kind);
                dropped.bump(m.kind);
            }
            _ => {}
        }
    }
    let delivered = sent.minus(&dropped);
    let headline_total =
        delivered.election + delivered.ok + delivered.inform + delivered.coordinator;
    MessageStats {
        sent,
        dropped,
        headline_total,
        crosscheck: sent.crosscheck,
        total_with_crosscheck: headline_total + sent.crosscheck,
        critical_path_depth: critical_path_depth(result),
    }
}

/// Longest chain of message hops ending in a delivered `Coordinator`
/// message, where a send made while handling a delivery extends the chain
/// and a timer inherits the depth of the event that armed it.
///
/// `None` for a run that did not quiesce.
pub fn critical_path_depth(result: &SimResult) -> Option<u32> {
    if !result.is_quiescent() {
        return None;
    }
    Some(
        result
            .trace
            .iter()
            .filter(
                |r| matches!(r.entry, TraceEntry::Deliver(m) if m.kind == MessageKind::Coordinator),
            )
            .map(|r| r.depth)
            .max()
            .unwrap_or(0),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub pass: bool,
    pub coordinator: Option<ProcessId>,
    pub reason: Option<String>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = self
            .coordinator
            .map_or("none".to_string(), |c| c.to_string());
        match (&self.pass, &self.reason) {
            (true, _) => write!(f, "agreement on {who}"),
            (false, Some(reason)) => write!(f, "no agreement: {reason}"),
            (false, None) => write!(f, "no agreement"),
        }
    }
}

/// Passes iff the run quiesced and every up node names the highest up id.
pub fn check_agreement(result: &SimResult) -> Verdict {
    let fail = |reason: String| Verdict {
        pass: false,
        coordinator: result.agreed_coordinator,
        reason: Some(reason),
    };
    if !result.is_quiescent() {
        return fail("run did not quiesce (NonQuiescent)".into());
    }
    let Some(highest) = result.up_nodes().map(|n| n.id).max() else {
        return fail("no live nodes".into());
    };
    if let Some(dissenter) = result
        .up_nodes()
        .find(|n| n.known_coordinator != Some(highest))
    {
        let view = dissenter
            .known_coordinator
            .map_or("none".to_string(), |c| c.to_string());
        return fail(format!(
            "node {} believes coordinator is {view}, highest live is {highest}",
            dissenter.id
        ));
    }
    Verdict {
        pass: true,
        coordinator: Some(highest),
        reason: None,
    }
}
