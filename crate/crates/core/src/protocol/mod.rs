//! Transport-free state machines for the classic Bully protocol and its
//! single-initiator variant.
//!
//! Every handler is a pure function of `(NodeState, input, now)`: it returns
//! the successor state together with the list of [`Action`]s the caller must
//! perform. Nothing here touches a clock, a socket, or a queue.
//!
//! Node ids double as election priority: the highest live id wins.

pub mod classic;
pub mod modified;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Virtual time, in ticks.
pub type Tick = u64;

/// Identity and priority of a process. Always `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(u32);

impl ProcessId {
    pub fn new(value: u32) -> Result<Self, ConfigError> {
        if value == 0 {
            return Err(ConfigError::ZeroProcessId);
        }
        Ok(Self(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("process id must be a positive integer")]
    ZeroProcessId,
    #[error("process {0} appears in its own peer set")]
    SelfInPeers(ProcessId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Classic,
    Modified,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Classic, Algorithm::Modified];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Classic => "classic",
            Algorithm::Modified => "modified",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(Algorithm::Classic),
            "modified" => Ok(Algorithm::Modified),
            other => Err(format!(
                "unknown algorithm `{other}` (expected classic|modified)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Election,
    Ok,
    InformCoordinator,
    CrossCheck,
    Coordinator,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::Election,
        MessageKind::Ok,
        MessageKind::InformCoordinator,
        MessageKind::CrossCheck,
        MessageKind::Coordinator,
    ];

    /// Name used in the textual trace.
    pub fn trace_name(self) -> &'static str {
        match self {
            MessageKind::Election => "ELECTION",
            MessageKind::Ok => "OK",
            MessageKind::InformCoordinator => "INFORM",
            MessageKind::CrossCheck => "CROSSCHECK",
            MessageKind::Coordinator => "COORDINATOR",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.trace_name())
    }
}

/// A protocol message. A `Coordinator` message announces its sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub kind: MessageKind,
    pub from: ProcessId,
    pub to: ProcessId,
    pub sent_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimerId {
    /// Initiator waiting for `Ok` replies to its `Election` messages.
    AwaitOk,
    /// Stopped initiator waiting for the winner's announcement.
    AwaitCoordinator,
    /// Candidate waiting for replies to its cross-check probes.
    AwaitCrossCheck,
    /// Upper bound on how long an election flag may stay raised.
    FlagLease,
}

impl TimerId {
    pub fn trace_name(self) -> &'static str {
        match self {
            TimerId::AwaitOk => "AWAIT_OK",
            TimerId::AwaitCoordinator => "AWAIT_COORDINATOR",
            TimerId::AwaitCrossCheck => "AWAIT_CROSSCHECK",
            TimerId::FlagLease => "FLAG_LEASE",
        }
    }
}

impl fmt::Display for TimerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.trace_name())
    }
}

/// Network and failure-detection constants shared by every node of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Timing {
    pub latency: Tick,
    pub timeout: Tick,
}

impl Timing {
    pub const DEFAULT: Timing = Timing {
        latency: 1,
        timeout: 3,
    };

    /// Duration a node arms for `timer`.
    pub fn duration(&self, timer: TimerId) -> Tick {
        match timer {
            TimerId::AwaitOk | TimerId::AwaitCrossCheck => self.timeout,
            TimerId::AwaitCoordinator => 2 * self.timeout,
            TimerId::FlagLease => 4 * self.timeout,
        }
    }
}

impl Default for Timing {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Up,
    Crashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Idle,
    Initiator,
    AwaitingTakeover,
    CandidateCoordinator,
    CoordinatorKnown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Send(Message),
    SetTimer(TimerId, Tick),
    CancelTimer(TimerId),
    DeclareCoordinator(ProcessId),
    SetFlag(bool),
    Note(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub id: ProcessId,
    pub peers: BTreeSet<ProcessId>,
    pub algorithm: Algorithm,
    pub timing: Timing,
    pub status: Status,
    pub role: Role,
    /// Only meaningful for [`Algorithm::Modified`].
    pub election_flag: bool,
    /// Highest responder seen in the current election; `None` is "zero".
    /// Only meaningful for [`Algorithm::Modified`].
    pub coordinator_var: Option<ProcessId>,
    pub known_coordinator: Option<ProcessId>,
    pub pending_timers: BTreeSet<TimerId>,
    /// When this node last broadcast a `Coordinator` message.
    pub announced_at: Option<Tick>,
}

/// Builds a fresh, idle node.
///
/// An empty peer set is accepted and models a singleton cluster.
pub fn init_node(
    id: ProcessId,
    peers: impl IntoIterator<Item = ProcessId>,
    algorithm: Algorithm,
    timing: Timing,
) -> Result<NodeState, ConfigError> {
    let peers: BTreeSet<ProcessId> = peers.into_iter().collect();
    if peers.contains(&id) {
        return Err(ConfigError::SelfInPeers(id));
    }
    Ok(NodeState {
        id,
        peers,
        algorithm,
        timing,
        status: Status::Up,
        role: Role::Idle,
        election_flag: false,
        coordinator_var: None,
        known_coordinator: None,
        pending_timers: BTreeSet::new(),
        announced_at: None,
    })
}

/// Output of one transition.
pub type Transition = (NodeState, Vec<Action>);

impl NodeState {
    pub fn is_up(&self) -> bool {
        self.status == Status::Up
    }

    pub fn higher_peers(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.peers
            .range(self.id..)
            .copied()
            .filter(move |p| *p > self.id)
    }

    pub fn has_higher_peer(&self) -> bool {
        self.higher_peers().next().is_some()
    }

    /// Whether this node is already running an election of its own.
    pub fn holding_election(&self) -> bool {
        matches!(self.role, Role::Initiator | Role::AwaitingTakeover)
    }

    /// The node noticed that the coordinator is gone.
    pub fn on_detect(&self, now: Tick) -> Transition {
        match self.algorithm {
            Algorithm::Classic => classic::on_detect(self, now),
            Algorithm::Modified => modified::on_detect(self, now),
        }
    }

    pub fn on_message(&self, msg: &Message, now: Tick) -> Transition {
        match self.algorithm {
            Algorithm::Classic => classic::on_message(self, msg, now),
            Algorithm::Modified => modified::on_message(self, msg, now),
        }
    }

    pub fn on_timeout(&self, timer: TimerId, now: Tick) -> Transition {
        match self.algorithm {
            Algorithm::Classic => classic::on_timeout(self, timer, now),
            Algorithm::Modified => modified::on_timeout(self, timer, now),
        }
    }

    /// Crash-stop. Timers are discarded and the node goes silent.
    pub fn on_crash(&self) -> Transition {
        let mut next = self.clone();
        if !self.is_up() {
            return (
                next,
                vec![Action::Note(format!(
                    "crash of {} ignored: already crashed",
                    self.id
                ))],
            );
        }
        next.status = Status::Crashed;
        next.role = Role::Idle;
        next.pending_timers.clear();
        (next, Vec::new())
    }

    /// Brings a crashed node back. A node that outranks the coordinator it
    /// remembers (or remembers none, or remembers itself) runs an election
    /// straight away; a lower node waits to hear the next announcement.
    pub fn on_recovery(&self, now: Tick) -> Transition {
        if self.is_up() {
            return (
                self.clone(),
                vec![Action::Note(format!(
                    "recovery of {} ignored: already up",
                    self.id
                ))],
            );
        }
        let mut next = self.clone();
        let mut actions = Vec::new();
        next.status = Status::Up;
        next.role = Role::Idle;
        next.pending_timers.clear();
        next.coordinator_var = None;
        if next.election_flag {
            next.election_flag = false;
            actions.push(Action::SetFlag(false));
        }
        let outranks = match next.known_coordinator {
            None => true,
            Some(c) => next.id >= c,
        };
        if outranks {
            let (after, more) = next.on_detect(now);
            next = after;
            actions.extend(more);
        }
        (next, actions)
    }
}

/// Mutable scratchpad used by the handlers; turned back into a
/// [`Transition`] with [`Step::finish`].
pub(crate) struct Step {
    pub state: NodeState,
    pub actions: Vec<Action>,
}

impl Step {
    pub fn new(state: &NodeState) -> Self {
        Self {
            state: state.clone(),
            actions: Vec::new(),
        }
    }

    pub fn finish(self) -> Transition {
        (self.state, self.actions)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.actions.push(Action::Note(text.into()));
    }

    pub fn send(&mut self, kind: MessageKind, to: ProcessId, now: Tick) {
        self.actions.push(Action::Send(Message {
            kind,
            from: self.state.id,
            to,
            sent_at: now,
        }));
    }

    pub fn set_timer(&mut self, timer: TimerId) {
        let duration = self.state.timing.duration(timer);
        self.state.pending_timers.insert(timer);
        self.actions.push(Action::SetTimer(timer, duration));
    }

    pub fn cancel_timer(&mut self, timer: TimerId) {
        if self.state.pending_timers.remove(&timer) {
            self.actions.push(Action::CancelTimer(timer));
        }
    }

    pub fn cancel_all_timers(&mut self) {
        let timers: Vec<TimerId> = self.state.pending_timers.iter().copied().collect();
        for timer in timers {
            self.cancel_timer(timer);
        }
    }

    pub fn set_flag(&mut self, value: bool) {
        if self.state.election_flag != value {
            self.state.election_flag = value;
            self.actions.push(Action::SetFlag(value));
        }
    }

    /// Win: announce to every peer, dead or alive.
    pub fn declare(&mut self, now: Tick) {
        let id = self.state.id;
        self.cancel_all_timers();
        self.state.role = Role::CoordinatorKnown;
        self.state.known_coordinator = Some(id);
        self.state.announced_at = Some(now);
        if self.state.algorithm == Algorithm::Modified {
            self.state.coordinator_var = Some(id);
            self.set_flag(false);
        }
        self.actions.push(Action::DeclareCoordinator(id));
        let peers: Vec<ProcessId> = self.state.peers.iter().copied().collect();
        for peer in peers {
            self.send(MessageKind::Coordinator, peer, now);
        }
    }

    /// True when `msg` was sent before our latest announcement could have
    /// reached its sender, i.e. the sender will hear of us anyway.
    pub fn announcement_in_flight_to_sender(&self, msg: &Message) -> bool {
        match self.state.announced_at {
            Some(at) if self.state.known_coordinator == Some(self.state.id) => {
                msg.sent_at < at + self.state.timing.latency
            }
            _ => false,
        }
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn zero_id_is_rejected() {
        assert_eq!(ProcessId::new(0), Err(ConfigError::ZeroProcessId));
    }

    #[test]
    fn init_classic_node_is_idle() {
        let n = node(4, 1..=7, Algorithm::Classic);
        assert_eq!(n.status, Status::Up);
        assert_eq!(n.role, Role::Idle);
        assert!(n.pending_timers.is_empty());
        assert_eq!(n.peers.len(), 6);
    }

    #[test]
    fn init_modified_node_has_lowered_flag_and_zero_var() {
        let n = node(4, 1..=7, Algorithm::Modified);
        assert!(!n.election_flag);
        assert_eq!(n.coordinator_var, None);
        assert_eq!(n.role, Role::Idle);
    }

    #[test]
    fn init_rejects_self_in_peers() {
        let err = init_node(
            pid(3),
            [pid(3), pid(5)],
            Algorithm::Classic,
            Timing::DEFAULT,
        );
        assert_eq!(err, Err(ConfigError::SelfInPeers(pid(3))));
    }

    #[test]
    fn higher_peers_are_strictly_higher() {
        let n = node(4, 1..=7, Algorithm::Classic);
        let higher: Vec<u32> = n.higher_peers().map(ProcessId::get).collect();
        assert_eq!(higher, vec![5, 6, 7]);
    }

    #[test]
    fn recovery_of_up_node_is_noop() {
        let n = node(2, 1..=6, Algorithm::Classic);
        let (after, actions) = n.on_recovery(10);
        assert_eq!(after, n);
        assert!(matches!(actions.as_slice(), [Action::Note(_)]));
    }

    #[test]
    fn highest_node_recovering_takes_over() {
        for algorithm in Algorithm::ALL {
            let mut n = node(7, 1..=7, algorithm);
            n.known_coordinator = Some(pid(6));
            let (crashed, _) = n.on_crash();
            let (after, actions) = crashed.on_recovery(20);
            assert_eq!(after.status, Status::Up);
            assert!(
                actions.contains(&Action::DeclareCoordinator(pid(7))),
                "{algorithm}"
            );
            assert_eq!(
                sends_of(&actions, MessageKind::Coordinator),
                vec![1, 2, 3, 4, 5, 6]
            );
        }
    }

    #[test]
    fn lower_node_recovering_stays_quiet() {
        let mut n = node(2, 1..=7, Algorithm::Classic);
        n.known_coordinator = Some(pid(6));
        let (crashed, _) = n.on_crash();
        let (after, actions) = crashed.on_recovery(20);
        assert_eq!(after.status, Status::Up);
        assert_eq!(after.role, Role::Idle);
        assert!(actions.is_empty());
    }

    #[test]
    fn crash_clears_timers() {
        let n = node(4, 1..=7, Algorithm::Classic);
        let (electing, _) = n.on_detect(0);
        assert!(!electing.pending_timers.is_empty());
        let (crashed, actions) = electing.on_crash();
        assert_eq!(crashed.status, Status::Crashed);
        assert!(crashed.pending_timers.is_empty());
        assert!(actions.is_empty());
    }
}
