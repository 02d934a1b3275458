use election_arena::analysis::formula_value;
use election_arena::protocol::{MessageKind, Role};
use election_arena::sim::{initiators, message_stats, single_detector, TraceEntry};
use election_arena::{simulate, Algorithm, ProcessId, Scenario};

fn pid(v: u32) -> ProcessId {
    ProcessId::new(v).unwrap()
}

fn seven_node(algorithm: Algorithm) -> Scenario {
    Scenario::new(7, algorithm).crash(0, 7).detect(0, 4)
}

#[test]
fn classic_seven_node_trace_is_exact() {
    let r = simulate(&seven_node(Algorithm::Classic)).unwrap();
    let expected = "\
t=0 seq=0 FAULT CRASH 7
t=0 seq=1 FAULT DETECT 4
t=1 seq=2 4->5 ELECTION
t=1 seq=3 4->6 ELECTION
t=1 seq=4 DROP 4->7 ELECTION
t=2 seq=6 5->4 OK
t=2 seq=7 5->6 ELECTION
t=2 seq=8 DROP 5->7 ELECTION
t=2 seq=10 6->4 OK
t=2 seq=11 DROP 6->7 ELECTION
t=3 seq=14 6->5 OK
t=4 seq=12 TIMER 6 AWAIT_OK
t=5 seq=16 6->1 COORDINATOR
t=5 seq=17 6->2 COORDINATOR
t=5 seq=18 6->3 COORDINATOR
t=5 seq=19 6->4 COORDINATOR
t=5 seq=20 6->5 COORDINATOR
t=5 seq=21 DROP 6->7 COORDINATOR
";
    assert_eq!(r.trace_text(), expected);
    assert_eq!(r.agreed_coordinator, Some(pid(6)));
    assert_eq!(initiators(&r), vec![pid(4), pid(5), pid(6)]);
}

#[test]
fn modified_seven_node_trace_is_exact() {
    let r = simulate(&seven_node(Algorithm::Modified)).unwrap();
    let expected = "\
t=0 seq=0 FAULT CRASH 7
t=0 seq=1 FAULT DETECT 4
t=1 seq=2 4->5 ELECTION
t=1 seq=3 4->6 ELECTION
t=1 seq=4 DROP 4->7 ELECTION
t=2 seq=7 5->4 OK
t=2 seq=9 6->4 OK
t=3 seq=6 TIMER 4 AWAIT_OK
t=4 seq=11 4->6 INFORM
t=5 seq=13 DROP 6->7 CROSSCHECK
t=7 seq=14 TIMER 6 AWAIT_CROSSCHECK
t=8 seq=15 6->1 COORDINATOR
t=8 seq=16 6->2 COORDINATOR
t=8 seq=17 6->3 COORDINATOR
t=8 seq=18 6->4 COORDINATOR
t=8 seq=19 6->5 COORDINATOR
t=8 seq=20 DROP 6->7 COORDINATOR
";
    assert_eq!(r.trace_text(), expected);
    assert_eq!(r.agreed_coordinator, Some(pid(6)));
    assert_eq!(initiators(&r), vec![pid(4)]);
    assert_eq!(r.sent.crosscheck, 1);
    assert_eq!(r.stats.crosscheck, 1);
}

#[test]
fn ten_live_nodes_detect_at_four() {
    for (algorithm, expected) in [(Algorithm::Classic, 51), (Algorithm::Modified, 22)] {
        let r = simulate(&single_detector(10, 4, algorithm)).unwrap();
        assert_eq!(r.agreed_coordinator, Some(pid(10)), "{algorithm}");
        assert_eq!(r.stats.headline_total, expected, "{algorithm}");
    }
}

#[test]
fn winner_crashing_mid_election_hands_over_to_next() {
    for algorithm in Algorithm::ALL {
        let r = simulate(&seven_node(algorithm).crash(3, 6)).unwrap();
        assert!(r.is_quiescent(), "{algorithm}");
        assert_eq!(r.agreed_coordinator, Some(pid(5)), "{algorithm}");
    }
}

#[test]
fn recovered_top_process_bullies_its_way_back() {
    for algorithm in Algorithm::ALL {
        let r = simulate(&seven_node(algorithm).recover(30, 7)).unwrap();
        assert_eq!(r.agreed_coordinator, Some(pid(7)), "{algorithm}");
        let final_7 = &r.final_states[&pid(7)];
        assert_eq!(final_7.role, Role::CoordinatorKnown);
    }
}

#[test]
fn emitted_sends_match_trace_recount() {
    for n in 2..=9 {
        for p in 1..=n {
            for algorithm in Algorithm::ALL {
                let r = simulate(&single_detector(n, p, algorithm)).unwrap();
                let recount = message_stats(&r);
                assert_eq!(r.sent, recount.sent, "{algorithm} N={n} P={p}");
                let deliveries = r
                    .trace
                    .iter()
                    .filter(|t| matches!(t.entry, TraceEntry::Deliver(_)))
                    .count() as u64;
                assert_eq!(deliveries + recount.dropped.total(), r.sent.total());
            }
        }
    }
}

#[test]
fn small_sweep_matches_closed_forms() {
    for n in 2..=12u32 {
        for p in 1..n {
            for algorithm in Algorithm::ALL {
                let r = simulate(&single_detector(n, p, algorithm)).unwrap();
                let f = formula_value(algorithm, n.into(), p.into()).unwrap();
                assert_eq!(r.stats.headline_total, f, "{algorithm} N={n} P={p}");
            }
        }
    }
}

#[test]
fn top_detector_under_modified_skips_inform() {
    // The formula at P = N counts one message more than the run sends.
    for n in 2..=8u32 {
        let r = simulate(&single_detector(n, n, Algorithm::Modified)).unwrap();
        assert_eq!(r.stats.headline_total, u64::from(n) - 1);
        assert_eq!(
            formula_value(Algorithm::Modified, n.into(), n.into()).unwrap(),
            u64::from(n)
        );
        assert_eq!(r.sent.inform, 0);
    }
}

#[test]
fn identical_scenarios_give_identical_traces() {
    let s = seven_node(Algorithm::Modified)
        .crash(2, 5)
        .recover(9, 5)
        .detect(12, 1);
    assert_eq!(
        simulate(&s).unwrap().trace_text(),
        simulate(&s).unwrap().trace_text()
    );
}

#[test]
fn crashed_node_never_sends() {
    let r = simulate(&seven_node(Algorithm::Classic).crash(1, 5)).unwrap();
    let late_sends_from_5 = r
        .trace
        .iter()
        .filter_map(|t| t.entry.message())
        .filter(|m| m.from == pid(5) && m.sent_at >= 1)
        .count();
    assert_eq!(late_sends_from_5, 0);
    assert!(r
        .trace
        .iter()
        .filter_map(|t| t.entry.message())
        .any(|m| m.kind == MessageKind::Election && m.to == pid(5)));
}
