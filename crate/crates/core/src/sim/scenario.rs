use std::fmt;

use thiserror::Error;

use crate::protocol::{Algorithm, ProcessId, Tick, Timing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultEvent {
    Crash(ProcessId),
    Recover(ProcessId),
    /// The node notices that the coordinator is gone.
    Detect(ProcessId),
}

impl FaultEvent {
    pub fn target(self) -> ProcessId {
        match self {
            FaultEvent::Crash(id) | FaultEvent::Recover(id) | FaultEvent::Detect(id) => id,
        }
    }

    pub fn trace_name(self) -> &'static str {
        match self {
            FaultEvent::Crash(_) => "CRASH",
            FaultEvent::Recover(_) => "RECOVER",
            FaultEvent::Detect(_) => "DETECT",
        }
    }
}

impl fmt::Display for FaultEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.trace_name(), self.target())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScheduledFault {
    pub at: Tick,
    pub event: FaultEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scenario field `{field}`: {reason}")]
pub struct ScenarioError {
    pub field: &'static str,
    pub reason: String,
}

impl ScenarioError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// A declarative experiment.
///
/// Nodes `1..=node_count` start up. With `extra_crashed_coordinator` the
/// previous coordinator is modelled as node `node_count + 1`, already
/// crashed at time zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub node_count: u32,
    pub extra_crashed_coordinator: bool,
    pub algorithm: Algorithm,
    pub latency: Tick,
    pub timeout: Tick,
    /// Sorted by time; equal times keep insertion order.
    pub schedule: Vec<ScheduledFault>,
    /// Carried for schema stability. The constant-latency network never
    /// draws from it.
    pub seed: u64,
}

impl Scenario {
    pub fn new(node_count: u32, algorithm: Algorithm) -> Self {
        Self {
            node_count,
            extra_crashed_coordinator: false,
            algorithm,
            latency: Timing::DEFAULT.latency,
            timeout: Timing::DEFAULT.timeout,
            schedule: Vec::new(),
            seed: 0,
        }
    }

    pub fn with_ex_coordinator(mut self) -> Self {
        self.extra_crashed_coordinator = true;
        self
    }

    /// Appends a fault, keeping the schedule sorted (stable on ties).
    pub fn at(mut self, at: Tick, event: FaultEvent) -> Self {
        self.push(at, event);
        self
    }

    pub fn push(&mut self, at: Tick, event: FaultEvent) {
        let index = self.schedule.partition_point(|f| f.at <= at);
        self.schedule.insert(index, ScheduledFault { at, event });
    }

    pub fn detect(self, at: Tick, id: u32) -> Self {
        self.at(at, FaultEvent::Detect(pid(id)))
    }

    pub fn crash(self, at: Tick, id: u32) -> Self {
        self.at(at, FaultEvent::Crash(pid(id)))
    }

    pub fn recover(self, at: Tick, id: u32) -> Self {
        self.at(at, FaultEvent::Recover(pid(id)))
    }

    pub fn timing(&self) -> Timing {
        Timing {
            latency: self.latency,
            timeout: self.timeout,
        }
    }

    /// Highest id in the run, counting the pre-crashed ex-coordinator.
    pub fn max_id(&self) -> u32 {
        self.node_count + u32::from(self.extra_crashed_coordinator)
    }

    pub fn total_nodes(&self) -> u32 {
        self.max_id()
    }

    pub fn ids(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.max_id()).map(pid)
    }

    pub fn last_fault_time(&self) -> Tick {
        self.schedule.last().map_or(0, |f| f.at)
    }

    /// `50 x timeout x nodes`, counted from the last scheduled fault.
    pub fn default_max_ticks(&self) -> Tick {
        self.last_fault_time() + 50 * self.timeout * Tick::from(self.total_nodes())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.node_count == 0 {
            return Err(ScenarioError::new("nodes", "must be at least 1"));
        }
        if self.latency == 0 {
            return Err(ScenarioError::new("latency", "must be at least 1 tick"));
        }
        if self.timeout <= 2 * self.latency {
            return Err(ScenarioError::new(
                "timeout",
                format!(
                    "must exceed twice the latency ({} <= 2 x {})",
                    self.timeout, self.latency
                ),
            ));
        }
        if self.schedule.windows(2).any(|w| w[0].at > w[1].at) {
            return Err(ScenarioError::new(
                "schedule",
                "faults must be sorted by time",
            ));
        }
        let max_id = self.max_id();
        if let Some(bad) = self
            .schedule
            .iter()
            .find(|f| f.event.target().get() > max_id)
        {
            return Err(ScenarioError::new(
                "schedule",
                format!(
                    "process id {} out of range 1..={max_id}",
                    bad.event.target()
                ),
            ));
        }
        Ok(())
    }
}

pub(crate) fn pid(id: u32) -> ProcessId {
    ProcessId::new(id).expect("process ids in scenarios start at 1")
}
