#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use election_arena::sim::{FaultEvent, SimResult, TraceEntry};
use election_arena::{Algorithm, ProcessId, Scenario};
use proptest::prelude::*;
use rand::Rng;

pub fn pid(v: u32) -> ProcessId {
    ProcessId::new(v).unwrap()
}

fn fault(kind: u8, id: u32) -> FaultEvent {
    match kind % 3 {
        0 => FaultEvent::Crash(pid(id)),
        1 => FaultEvent::Recover(pid(id)),
        _ => FaultEvent::Detect(pid(id)),
    }
}

/// Random cluster with a random crash/recover/detect schedule.
pub fn random_scenario(rng: &mut impl Rng) -> Scenario {
    let nodes = rng.gen_range(1..=15);
    let algorithm = Algorithm::ALL[rng.gen_range(0..2)];
    let mut s = Scenario::new(nodes, algorithm);
    s.extra_crashed_coordinator = rng.gen_bool(0.7);
    s.timeout = rng.gen_range(3..=6);
    s.seed = rng.gen();
    let max_id = s.max_id();
    for _ in 0..rng.gen_range(1..=10) {
        let at = rng.gen_range(0..60);
        s.push(at, fault(rng.gen(), rng.gen_range(1..=max_id)));
    }
    s
}

pub fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        1u32..=12,
        any::<bool>(),
        any::<bool>(),
        3u64..=6,
        any::<u64>(),
    )
        .prop_flat_map(|(nodes, modified, ex, timeout, seed)| {
            let max_id = nodes + u32::from(ex);
            let events = prop::collection::vec((0u64..50, 0u8..3, 1..=max_id), 0..10);
            events.prop_map(move |events| {
                let algorithm = if modified {
                    Algorithm::Modified
                } else {
                    Algorithm::Classic
                };
                let mut s = Scenario::new(nodes, algorithm);
                s.extra_crashed_coordinator = ex;
                s.timeout = timeout;
                s.seed = seed;
                for (at, kind, id) in events {
                    s.push(at, fault(kind, id));
                }
                s
            })
        })
}

/// Replays the trace in order and records which nodes were down once each
/// event had been handled, keyed by the event's sequence number.
pub fn down_after_each(result: &SimResult) -> HashMap<u64, BTreeSet<ProcessId>> {
    let mut down = BTreeSet::new();
    if result.scenario.extra_crashed_coordinator {
        down.insert(pid(result.scenario.max_id()));
    }
    let mut snapshots = HashMap::new();
    for record in &result.trace {
        match record.entry {
            TraceEntry::Fault(FaultEvent::Crash(id)) => {
                down.insert(id);
            }
            TraceEntry::Fault(FaultEvent::Recover(id)) => {
                down.remove(&id);
            }
            _ => {}
        }
        snapshots.insert(record.seq, down.clone());
    }
    snapshots
}
