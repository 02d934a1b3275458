//! Classic Bully election.
//!
//! The detector sends `Election` to every higher id. Each live receiver
//! answers `Ok` and, unless it is already electing, starts its own election
//! toward its higher ids. Whoever hears no `Ok` before `AwaitOk` expires wins
//! and announces itself with `Coordinator` to every peer.

use super::{Message, MessageKind, NodeState, Role, Step, Tick, TimerId, Transition};

pub fn on_detect(state: &NodeState, now: Tick) -> Transition {
    let mut step = Step::new(state);
    if !state.is_up() {
        step.note(format!("detect at crashed node {} ignored", state.id));
    } else if state.holding_election() {
        step.note(format!("node {} already holding an election", state.id));
    } else {
        start_election(&mut step, now);
    }
    step.finish()
}

fn start_election(step: &mut Step, now: Tick) {
    step.cancel_all_timers();
    let higher: Vec<_> = step.state.higher_peers().collect();
    if higher.is_empty() {
        step.declare(now);
        return;
    }
    for peer in higher {
        step.send(MessageKind::Election, peer, now);
    }
    step.state.role = Role::Initiator;
    step.set_timer(TimerId::AwaitOk);
}

pub fn on_message(state: &NodeState, msg: &Message, now: Tick) -> Transition {
    let mut step = Step::new(state);
    if !state.is_up() {
        step.note(format!("message to crashed node {} ignored", state.id));
        return step.finish();
    }
    match msg.kind {
        MessageKind::Election if msg.from < state.id => {
            step.send(MessageKind::Ok, msg.from, now);
            if state.holding_election() {
                // unless it is already holding one
            } else if step.announcement_in_flight_to_sender(msg) {
                step.note(format!(
                    "{} already announced; {} will hear it",
                    state.id, msg.from
                ));
            } else {
                start_election(&mut step, now);
            }
        }
        MessageKind::Ok if msg.from > state.id => {
            if state.role == Role::Initiator {
                step.cancel_timer(TimerId::AwaitOk);
                step.state.role = Role::AwaitingTakeover;
                step.set_timer(TimerId::AwaitCoordinator);
            }
        }
        MessageKind::Coordinator => {
            if msg.from < state.id {
                // A lower process claimed victory while we are alive: bully it.
                if !state.holding_election() {
                    start_election(&mut step, now);
                }
            } else {
                step.cancel_all_timers();
                step.state.known_coordinator = Some(msg.from);
                step.state.role = Role::CoordinatorKnown;
            }
        }
        _ => step.note(format!(
            "node {} ignores {} from {}",
            state.id, msg.kind, msg.from
        )),
    }
    step.finish()
}

pub fn on_timeout(state: &NodeState, timer: TimerId, now: Tick) -> Transition {
    let mut step = Step::new(state);
    if !state.is_up() || !state.pending_timers.contains(&timer) {
        step.note(format!("stale timer {timer} at node {}", state.id));
        return step.finish();
    }
    step.state.pending_timers.remove(&timer);
    match timer {
        TimerId::AwaitOk if state.role == Role::Initiator => step.declare(now),
        TimerId::AwaitCoordinator if state.role == Role::AwaitingTakeover => {
            // The process that told us to stop never announced. Try again.
            step.state.role = Role::Idle;
            start_election(&mut step, now);
        }
        _ => step.note(format!(
            "timer {timer} at node {} in role {:?}",
            state.id, state.role
        )),
    }
    step.finish()
}
