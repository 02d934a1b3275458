//! Single-initiator Bully variant.
//!
//! Only the detector runs an election. Higher processes answer `Ok` and raise
//! their election flag but never cascade. The detector keeps the highest
//! responder in its coordinator variable and, once `AwaitOk` expires, sends
//! `InformCoordinator` to it. The informed candidate probes its own higher
//! peers with `CrossCheck`; a live one answers `Ok` and takes over the
//! candidacy, otherwise the candidate announces itself.
//!
//! A raised flag blocks new initiations. Every raise arms a `FlagLease`
//! timer so that a dead initiator cannot block elections forever.

use super::{Message, MessageKind, NodeState, Role, Step, Tick, TimerId, Transition};

pub fn on_detect(state: &NodeState, now: Tick) -> Transition {
    let mut step = Step::new(state);
    if !state.is_up() {
        step.note(format!("detect at crashed node {} ignored", state.id));
    } else if state.election_flag {
        step.note(format!(
            "node {}: election flag raised, initiation suppressed",
            state.id
        ));
    } else {
        start_election(&mut step, now);
    }
    step.finish()
}

fn start_election(step: &mut Step, now: Tick) {
    step.cancel_all_timers();
    step.state.coordinator_var = None;
    let higher: Vec<_> = step.state.higher_peers().collect();
    if higher.is_empty() {
        step.declare(now);
        return;
    }
    for peer in higher {
        step.send(MessageKind::Election, peer, now);
    }
    raise_flag(step);
    step.state.role = Role::Initiator;
    step.set_timer(TimerId::AwaitOk);
}

fn raise_flag(step: &mut Step) {
    if !step.state.election_flag {
        step.set_flag(true);
        step.set_timer(TimerId::FlagLease);
    }
}

fn lower_flag(step: &mut Step) {
    step.cancel_timer(TimerId::FlagLease);
    step.set_flag(false);
}

/// Take the candidacy: probe every higher peer, or win outright if none.
fn become_candidate(step: &mut Step, now: Tick) {
    step.cancel_timer(TimerId::AwaitOk);
    step.cancel_timer(TimerId::AwaitCoordinator);
    raise_flag(step);
    let higher: Vec<_> = step.state.higher_peers().collect();
    if higher.is_empty() {
        step.declare(now);
        return;
    }
    step.state.role = Role::CandidateCoordinator;
    for peer in higher {
        step.send(MessageKind::CrossCheck, peer, now);
    }
    step.set_timer(TimerId::AwaitCrossCheck);
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
            raise_flag(&mut step);
        }
        MessageKind::Ok if msg.from > state.id => match state.role {
            Role::Initiator if state.pending_timers.contains(&TimerId::AwaitOk) => {
                if step.state.coordinator_var.is_none_or(|c| msg.from > c) {
                    step.state.coordinator_var = Some(msg.from);
                }
            }
            Role::CandidateCoordinator => {
                // A higher process is alive and takes over; stand down silently.
                step.cancel_timer(TimerId::AwaitCrossCheck);
                step.state.role = Role::AwaitingTakeover;
                step.set_timer(TimerId::AwaitCoordinator);
            }
            _ => step.note(format!(
                "node {} ignores late Ok from {}",
                state.id, msg.from
            )),
        },
        MessageKind::InformCoordinator if msg.from < state.id => {
            if state.role == Role::CandidateCoordinator {
                step.note(format!("node {} already candidate", state.id));
            } else if step.announcement_in_flight_to_sender(msg) {
                step.note(format!(
                    "{} already announced; {} will hear it",
                    state.id, msg.from
                ));
            } else {
                become_candidate(&mut step, now);
            }
        }
        MessageKind::CrossCheck if msg.from < state.id => {
            step.send(MessageKind::Ok, msg.from, now);
            if state.role != Role::CandidateCoordinator {
                become_candidate(&mut step, now);
            }
        }
        MessageKind::Coordinator => {
            if msg.from < state.id {
                // Bully the lower claimant with a fresh election of our own.
                lower_flag(&mut step);
                step.state.role = Role::Idle;
                start_election(&mut step, now);
            } else {
                step.cancel_all_timers();
                step.state.known_coordinator = Some(msg.from);
                step.state.coordinator_var = Some(msg.from);
                step.state.role = Role::CoordinatorKnown;
                step.set_flag(false);
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
    match (timer, state.role) {
        (TimerId::AwaitOk, Role::Initiator) => match state.coordinator_var {
            None => step.declare(now),
            Some(candidate) => {
                step.send(MessageKind::InformCoordinator, candidate, now);
                step.state.role = Role::AwaitingTakeover;
                step.set_timer(TimerId::AwaitCoordinator);
            }
        },
        (TimerId::AwaitCrossCheck, Role::CandidateCoordinator) => step.declare(now),
        (TimerId::AwaitCoordinator, Role::AwaitingTakeover) => {
            // Our candidate died before announcing; we still own this election.
            lower_flag(&mut step);
            step.state.role = Role::Idle;
            start_election(&mut step, now);
        }
        (TimerId::FlagLease, _) => step.set_flag(false),
        _ => step.note(format!(
            "timer {timer} at node {} in role {:?}",
            state.id, state.role
        )),
    }
    step.finish()
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{Action, Algorithm, MessageKind::*};
    use super::*;

    fn modified(id: u32, all: std::ops::RangeInclusive<u32>) -> NodeState {
        node(id, all, Algorithm::Modified)
    }

    #[test]
    fn detector_raises_flag_and_elects_upward() {
        let (s, actions) = on_detect(&modified(4, 1..=7), 0);
        assert_eq!(sends_of(&actions, Election), vec![5, 6, 7]);
        assert!(s.election_flag);
        assert_eq!(s.coordinator_var, None);
        assert_eq!(s.role, Role::Initiator);
        assert!(s.pending_timers.contains(&TimerId::AwaitOk));
        assert!(s.pending_timers.contains(&TimerId::FlagLease));
    }

    #[test]
    fn raised_flag_suppresses_initiation() {
        let mut n = modified(4, 1..=7);
        n.election_flag = true;
        let (after, actions) = on_detect(&n, 0);
        assert_eq!(after, n);
        assert!(actions.iter().all(|a| matches!(a, Action::Note(_))));
    }

    #[test]
    fn highest_detector_declares_at_once() {
        let (s, actions) = on_detect(&modified(7, 1..=7), 0);
        assert!(actions.contains(&Action::DeclareCoordinator(pid(7))));
        assert_eq!(sends_of(&actions, Coordinator), vec![1, 2, 3, 4, 5, 6]);
        assert!(!s.election_flag);
    }

    #[test]
    fn receiver_answers_without_cascading() {
        let (s, actions) = on_message(&modified(6, 1..=7), &msg(Election, 4, 6, 0), 1);
        assert_eq!(sends(&actions), vec![(Ok, 4)]);
        assert!(s.election_flag);
        assert_eq!(s.role, Role::Idle);
    }

    #[test]
    fn coordinator_var_keeps_highest_responder() {
        let (s, _) = on_detect(&modified(4, 1..=7), 0);
        let (s, _) = on_message(&s, &msg(Ok, 5, 4, 1), 2);
        assert_eq!(s.coordinator_var, Some(pid(5)));
        let (s, _) = on_message(&s, &msg(Ok, 6, 4, 1), 2);
        assert_eq!(s.coordinator_var, Some(pid(6)));
        let (s, _) = on_message(&s, &msg(Ok, 5, 4, 1), 2);
        assert_eq!(s.coordinator_var, Some(pid(6)));
    }

    #[test]
    fn informed_candidate_cross_checks_higher_peers() {
        let (s, actions) = on_message(&modified(6, 1..=7), &msg(InformCoordinator, 4, 6, 3), 4);
        assert_eq!(sends(&actions), vec![(CrossCheck, 7)]);
        assert_eq!(s.role, Role::CandidateCoordinator);
        assert!(s.pending_timers.contains(&TimerId::AwaitCrossCheck));
    }

    #[test]
    fn initiator_informs_highest_responder_on_timeout() {
        let (s, _) = on_detect(&modified(4, 1..=7), 0);
        let (s, _) = on_message(&s, &msg(Ok, 5, 4, 1), 2);
        let (s, _) = on_message(&s, &msg(Ok, 6, 4, 1), 2);
        let (s, actions) = on_timeout(&s, TimerId::AwaitOk, 3);
        assert_eq!(sends(&actions), vec![(InformCoordinator, 6)]);
        assert_eq!(s.role, Role::AwaitingTakeover);
    }

    #[test]
    fn unanswered_cross_check_wins() {
        let (s, _) = on_message(&modified(6, 1..=7), &msg(InformCoordinator, 4, 6, 3), 4);
        let (s, actions) = on_timeout(&s, TimerId::AwaitCrossCheck, 7);
        assert_eq!(sends_of(&actions, Coordinator), vec![1, 2, 3, 4, 5, 7]);
        assert_eq!(s.known_coordinator, Some(pid(6)));
        assert!(!s.election_flag);
        assert!(s.pending_timers.is_empty());
    }

    #[test]
    fn unanswered_initiator_wins() {
        let (s, _) = on_detect(&modified(6, 1..=7), 0);
        let (s, actions) = on_timeout(&s, TimerId::AwaitOk, 3);
        assert!(actions.contains(&Action::DeclareCoordinator(pid(6))));
        assert_eq!(s.role, Role::CoordinatorKnown);
    }

    #[test]
    fn alive_higher_process_takes_over_candidacy() {
        let (cand, _) = on_message(&modified(6, 1..=7), &msg(InformCoordinator, 4, 6, 3), 4);
        let (s7, actions7) = on_message(&modified(7, 1..=7), &msg(CrossCheck, 6, 7, 4), 5);
        assert_eq!(sends_of(&actions7, Ok), vec![6]);
        assert!(actions7.contains(&Action::DeclareCoordinator(pid(7))));
        assert_eq!(s7.known_coordinator, Some(pid(7)));
        let (stood_down, actions6) = on_message(&cand, &msg(Ok, 7, 6, 5), 6);
        assert!(sends(&actions6).is_empty());
        assert_eq!(stood_down.role, Role::AwaitingTakeover);
    }

    #[test]
    fn coordinator_message_resets_flag_and_var() {
        let (s, _) = on_message(&modified(5, 1..=7), &msg(Election, 4, 5, 0), 1);
        let (s, actions) = on_message(&s, &msg(Coordinator, 6, 5, 7), 8);
        assert!(!s.election_flag);
        assert_eq!(s.coordinator_var, Some(pid(6)));
        assert_eq!(s.known_coordinator, Some(pid(6)));
        assert!(actions.contains(&Action::SetFlag(false)));
        assert!(s.pending_timers.is_empty());
    }

    #[test]
    fn flag_lease_lowers_flag() {
        let (s, _) = on_message(&modified(5, 1..=7), &msg(Election, 4, 5, 0), 1);
        let (s, actions) = on_timeout(&s, TimerId::FlagLease, 13);
        assert!(!s.election_flag);
        assert_eq!(actions, vec![Action::SetFlag(false)]);
        let (_, actions) = on_detect(&s, 14);
        assert_eq!(sends_of(&actions, Election), vec![6, 7]);
    }

    #[test]
    fn stale_timer_is_noted() {
        let n = modified(4, 1..=7);
        let (after, actions) = on_timeout(&n, TimerId::AwaitCrossCheck, 3);
        assert_eq!(after, n);
        assert!(matches!(actions.as_slice(), [Action::Note(_)]));
    }
}
