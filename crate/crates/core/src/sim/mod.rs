//! Deterministic virtual-time engine.
//!
//! Events live in an ordered map keyed by `(time, source id, seq)`, which is
//! a total order: two runs of the same [`Scenario`] process the same events
//! in the same order and produce byte-identical traces. Faults use source 0
//! so they precede any message or timer scheduled for the same tick.
//!
//! Cancelled timers are removed from the queue, so an empty queue means no
//! messages in flight and no timers armed.

mod scenario;
mod stats;
mod trace;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::protocol::{
    init_node, Action, Algorithm, Message, NodeState, ProcessId, Status, Tick, TimerId, Transition,
};

pub use scenario::{FaultEvent, Scenario, ScenarioError, ScheduledFault};
pub use stats::{
    check_agreement, critical_path_depth, message_stats, KindCounts, MessageStats, Verdict,
};
pub use trace::{render_trace, NoteRecord, TraceEntry, TraceRecord, TransitionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EventKey {
    time: Tick,
    source: u32,
    seq: u64,
}

#[derive(Debug, Clone)]
struct Event {
    cause: Option<u64>,
    depth: u32,
    payload: Payload,
}

#[derive(Debug, Clone)]
enum Payload {
    Delivery(Message),
    TimerFire(ProcessId, TimerId),
    Fault(FaultEvent),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Record(TraceRecord),
    Quiescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Quiescent,
    /// `max_ticks` passed with events still queued.
    NonQuiescent,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub scenario: Scenario,
    pub outcome: RunOutcome,
    pub final_states: BTreeMap<ProcessId, NodeState>,
    pub trace: Vec<TraceRecord>,
    pub transitions: Vec<TransitionRecord>,
    pub notes: Vec<NoteRecord>,
    /// Sends counted as they were emitted, by kind.
    pub sent: KindCounts,
    pub stats: MessageStats,
    /// Time of the last processed event.
    pub quiescence_time: Tick,
    pub agreed_coordinator: Option<ProcessId>,
}

impl SimResult {
    pub fn is_quiescent(&self) -> bool {
        self.outcome == RunOutcome::Quiescent
    }

    pub fn trace_text(&self) -> String {
        render_trace(&self.trace)
    }

    pub fn up_nodes(&self) -> impl Iterator<Item = &NodeState> {
        self.final_states
            .values()
            .filter(|n| n.status == Status::Up)
    }
}

pub struct Sim {
    scenario: Scenario,
    nodes: BTreeMap<ProcessId, NodeState>,
    queue: BTreeMap<EventKey, Event>,
    armed: HashMap<(ProcessId, TimerId), EventKey>,
    now: Tick,
    next_seq: u64,
    trace: Vec<TraceRecord>,
    transitions: Vec<TransitionRecord>,
    notes: Vec<NoteRecord>,
    sent: KindCounts,
}

/// Validates the scenario and builds every node, with the schedule queued.
pub fn build_sim(scenario: &Scenario) -> Result<Sim, ScenarioError> {
    Sim::new(scenario)
}

impl Sim {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let ids: Vec<ProcessId> = scenario.ids().collect();
        let top = *ids.last().expect("at least one node");
        let mut nodes = BTreeMap::new();
        for &id in &ids {
            let peers = ids.iter().copied().filter(|p| *p != id);
            let mut node = init_node(id, peers, scenario.algorithm, scenario.timing())
                .expect("scenario ids are unique");
            // Everyone starts out believing the top process leads.
            node.known_coordinator = Some(top);
            nodes.insert(id, node);
        }
        if scenario.extra_crashed_coordinator {
            let ex = nodes.get_mut(&top).expect("ex-coordinator node");
            ex.status = Status::Crashed;
        }
        let mut sim = Self {
            scenario: scenario.clone(),
            nodes,
            queue: BTreeMap::new(),
            armed: HashMap::new(),
            now: 0,
            next_seq: 0,
            trace: Vec::new(),
            transitions: Vec::new(),
            notes: Vec::new(),
            sent: KindCounts::default(),
        };
        for fault in &scenario.schedule {
            sim.enqueue(fault.at, 0, None, 0, Payload::Fault(fault.event));
        }
        Ok(sim)
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn node(&self, id: ProcessId) -> Option<&NodeState> {
        self.nodes.get(&id)
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn next_event_time(&self) -> Option<Tick> {
        self.queue.keys().next().map(|k| k.time)
    }

    fn enqueue(
        &mut self,
        time: Tick,
        source: u32,
        cause: Option<u64>,
        depth: u32,
        payload: Payload,
    ) -> EventKey {
        let key = EventKey {
            time,
            source,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.queue.insert(
            key,
            Event {
                cause,
                depth,
                payload,
            },
        );
        key
    }

    fn disarm(&mut self, node: ProcessId, timer: TimerId) {
        if let Some(key) = self.armed.remove(&(node, timer)) {
            self.queue.remove(&key);
        }
    }

    /// Processes the least pending event.
    pub fn step(&mut self) -> StepOutcome {
        let Some((key, event)) = self.queue.pop_first() else {
            return StepOutcome::Quiescent;
        };
        self.now = key.time;
        let record = |entry| TraceRecord {
            time: key.time,
            seq: key.seq,
            cause: event.cause,
            depth: event.depth,
            entry,
        };
        let record = match event.payload {
            Payload::Fault(fault) => {
                let id = fault.target();
                let node = &self.nodes[&id];
                let transition = match fault {
                    FaultEvent::Crash(_) => node.on_crash(),
                    FaultEvent::Recover(_) => node.on_recovery(self.now),
                    FaultEvent::Detect(_) => node.on_detect(self.now),
                };
                if matches!(fault, FaultEvent::Crash(_)) {
                    for timer in [
                        TimerId::AwaitOk,
                        TimerId::AwaitCoordinator,
                        TimerId::AwaitCrossCheck,
                        TimerId::FlagLease,
                    ] {
                        self.disarm(id, timer);
                    }
                }
                self.apply(id, key.seq, 0, transition);
                record(TraceEntry::Fault(fault))
            }
            Payload::Delivery(msg) => {
                let node = &self.nodes[&msg.to];
                if node.status == Status::Crashed {
                    record(TraceEntry::Drop(msg))
                } else {
                    let transition = node.on_message(&msg, self.now);
                    self.apply(msg.to, key.seq, event.depth, transition);
                    record(TraceEntry::Deliver(msg))
                }
            }
            Payload::TimerFire(id, timer) => {
                self.armed.remove(&(id, timer));
                let transition = self.nodes[&id].on_timeout(timer, self.now);
                self.apply(id, key.seq, event.depth, transition);
                record(TraceEntry::Timer(id, timer))
            }
        };
        self.trace.push(record.clone());
        StepOutcome::Record(record)
    }

    /// Installs the new state and turns actions into future events. Sends made
    /// here extend the causal chain by one; timers inherit `depth` unchanged.
    fn apply(&mut self, id: ProcessId, seq: u64, depth: u32, (next, actions): Transition) {
        let before = self.nodes.insert(id, next).expect("known node");
        let after = &self.nodes[&id];
        self.transitions.push(TransitionRecord {
            time: self.now,
            seq,
            node: id,
            role_before: before.role,
            role_after: after.role,
            flag_before: before.election_flag,
            flag_after: after.election_flag,
            var_before: before.coordinator_var,
            var_after: after.coordinator_var,
            actions: actions.clone(),
        });
        for action in actions {
            match action {
                Action::Send(msg) => {
                    self.sent.bump(msg.kind);
                    let at = self.now + self.scenario.latency;
                    self.enqueue(
                        at,
                        msg.from.get(),
                        Some(seq),
                        depth + 1,
                        Payload::Delivery(msg),
                    );
                }
                Action::SetTimer(timer, duration) => {
                    self.disarm(id, timer);
                    let key = self.enqueue(
                        self.now + duration,
                        id.get(),
                        Some(seq),
                        depth,
                        Payload::TimerFire(id, timer),
                    );
                    self.armed.insert((id, timer), key);
                }
                Action::CancelTimer(timer) => self.disarm(id, timer),
                Action::Note(text) => self.notes.push(NoteRecord {
                    time: self.now,
                    node: id,
                    text,
                }),
                Action::DeclareCoordinator(_) | Action::SetFlag(_) => {}
            }
        }
    }

    /// Steps until the queue drains or the next event lies beyond `max_ticks`.
    pub fn run_to_quiescence(mut self, max_ticks: Tick) -> SimResult {
        let mut quiescence_time = 0;
        let outcome = loop {
            match self.next_event_time() {
                None => break RunOutcome::Quiescent,
                Some(t) if t > max_ticks => break RunOutcome::NonQuiescent,
                Some(_) => {
                    self.step();
                    quiescence_time = self.now;
                }
            }
        };
        let mut result = SimResult {
            scenario: self.scenario,
            outcome,
            final_states: self.nodes,
            trace: self.trace,
            transitions: self.transitions,
            notes: self.notes,
            sent: self.sent,
            stats: MessageStats::default(),
            quiescence_time,
            agreed_coordinator: None,
        };
        result.agreed_coordinator = agreed_coordinator(&result);
        result.stats = message_stats(&result);
        result
    }
}

/// The single coordinator every up node believes in, if there is one.
fn agreed_coordinator(result: &SimResult) -> Option<ProcessId> {
    let mut views = result.up_nodes().map(|n| n.known_coordinator);
    let first = views.next()??;
    views.all(|v| v == Some(first)).then_some(first)
}

/// Builds and runs a scenario with its default tick budget.
pub fn simulate(scenario: &Scenario) -> Result<SimResult, ScenarioError> {
    let sim = Sim::new(scenario)?;
    Ok(sim.run_to_quiescence(scenario.default_max_ticks()))
}

/// Runs independent scenarios in parallel. Output order matches input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<SimResult, ScenarioError>> {
    scenarios.par_iter().map(simulate).collect()
}

/// Nodes that entered [`crate::protocol::Role::Initiator`] at least once.
pub fn initiators(result: &SimResult) -> Vec<ProcessId> {
    use crate::protocol::Role;
    let mut ids: Vec<ProcessId> = result
        .transitions
        .iter()
        .filter(|t| t.role_after == Role::Initiator && t.role_before != Role::Initiator)
        .map(|t| t.node)
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

/// Worst-case single-detector setup: `nodes` live processes, the dead
/// ex-coordinator above them, and process `detector` noticing at t=0.
pub fn single_detector(nodes: u32, detector: u32, algorithm: Algorithm) -> Scenario {
    Scenario::new(nodes, algorithm)
        .with_ex_coordinator()
        .detect(0, detector)
}
