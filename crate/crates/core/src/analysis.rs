//! Closed-form message counts and simulation-versus-formula reports.
//!
//! `N` is the number of live processes taking part, `P` the rank of the
//! detecting process among them (1 = lowest), and `n` the number of
//! processes that detect the crash concurrently.

use std::fmt;

use thiserror::Error;

use crate::protocol::Algorithm;
use crate::sim::{self, FaultEvent, Scenario, SimResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("N must be at least 1")]
    NoProcesses,
    #[error("detector rank P={p} outside 1..={n}")]
    DetectorOutOfRange { n: u64, p: u64 },
    #[error("concurrent detector count n={k} outside 1..={n}")]
    ConcurrentOutOfRange { n: u64, k: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormulaInputs {
    pub nodes: u64,
    pub detector: u64,
    pub concurrent: u64,
}

impl FormulaInputs {
    pub fn new(nodes: u64, detector: u64, concurrent: u64) -> Result<Self, DomainError> {
        check_rank(nodes, detector)?;
        if concurrent == 0 || concurrent > nodes {
            return Err(DomainError::ConcurrentOutOfRange {
                n: nodes,
                k: concurrent,
            });
        }
        Ok(Self {
            nodes,
            detector,
            concurrent,
        })
    }

    pub fn single(nodes: u64, detector: u64) -> Result<Self, DomainError> {
        Self::new(nodes, detector, 1)
    }
}

fn check_rank(n: u64, p: u64) -> Result<(), DomainError> {
    if n == 0 {
        return Err(DomainError::NoProcesses);
    }
    if p == 0 || p > n {
        return Err(DomainError::DetectorOutOfRange { n, p });
    }
    Ok(())
}

/// `(N - P + 1)(N - P) + N - 1`
pub fn classic_messages(n: u64, p: u64) -> Result<u64, DomainError> {
    check_rank(n, p)?;
    Ok((n - p + 1) * (n - p) + n - 1)
}

/// `2(N - P) + N`, excluding cross-check probes.
pub fn modified_messages(n: u64, p: u64) -> Result<u64, DomainError> {
    check_rank(n, p)?;
    Ok(2 * (n - p) + n)
}

/// `N^2 - 1`, the classic count when the lowest process detects.
pub fn classic_worst(n: u64) -> u64 {
    (n * n).saturating_sub(1)
}

/// Worst case of the modified protocol, both as stated in closed form and as
/// the single-detector formula actually evaluates at `P = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorstCase {
    /// `3N - 1`
    pub as_published: u64,
    /// `3N - 2`
    pub as_derived: u64,
}

pub fn modified_worst(n: u64) -> WorstCase {
    WorstCase {
        as_published: (3 * n).saturating_sub(1),
        as_derived: modified_messages(n.max(1), 1).expect("P = 1 is always in range"),
    }
}

/// `n(n + 1) / 2`, verbatim.
pub fn classic_concurrent(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// The itemised count for concurrent classic detection: each of the `n`
/// detectors elects toward its higher peers and is answered, then the top
/// one announces: `sum (n - i) * 2 + (n - 1) = n^2 - 1`.
pub fn classic_concurrent_itemised(n: u64) -> u64 {
    classic_worst(n)
}

/// `3n - 1` (the lower of the two stated figures; the alternative is `3n`).
pub fn modified_concurrent(n: u64) -> u64 {
    (3 * n).saturating_sub(1)
}

pub const CONCURRENT_CLASSIC_NOTE: &str = "closed form n(n+1)/2 disagrees with its own itemised \
sum (n-1)+(n-1)+(n-2)+(n-2)+...+(n-1) = n^2-1; the simulated count is authoritative";

pub const CONCURRENT_MODIFIED_NOTE: &str = "closed form 3n-1 (or 3n) assumes a single initiator; \
simultaneous detectors all pass the flag check before any Election arrives, so the simulated \
count is authoritative";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub nodes: u64,
    pub classic: u64,
    pub modified: u64,
}

/// Worst-case (`P = 1`) message counts for each cluster size.
pub fn comparison_table(sizes: &[u64]) -> Vec<TableRow> {
    sizes
        .iter()
        .map(|&n| TableRow {
            nodes: n,
            classic: classic_worst(n),
            modified: modified_messages(n.max(1), 1).expect("P = 1 is always in range"),
        })
        .collect()
}

pub fn formula_value(algorithm: Algorithm, n: u64, p: u64) -> Result<u64, DomainError> {
    match algorithm {
        Algorithm::Classic => classic_messages(n, p),
        Algorithm::Modified => modified_messages(n, p),
    }
}

/// Derives `(N, P)` from a scenario the single-detector formulas describe:
/// exactly one detection, crashes only before it, and no recoveries.
pub fn formula_inputs(scenario: &Scenario) -> Result<FormulaInputs, String> {
    let detects: Vec<usize> = scenario
        .schedule
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f.event, FaultEvent::Detect(_)))
        .map(|(i, _)| i)
        .collect();
    let [detect_index] = detects.as_slice() else {
        return Err(format!(
            "formula preconditions unmet: need exactly one detect event, found {}",
            detects.len()
        ));
    };
    let detect = scenario.schedule[*detect_index];
    let mut crashed: Vec<u32> = Vec::new();
    if scenario.extra_crashed_coordinator {
        crashed.push(scenario.max_id());
    }
    for (i, fault) in scenario.schedule.iter().enumerate() {
        match fault.event {
            FaultEvent::Recover(id) => {
                return Err(format!(
                    "formula preconditions unmet: recovery of {id} at t={}",
                    fault.at
                ))
            }
            FaultEvent::Crash(id) if i > *detect_index => {
                return Err(format!(
                    "formula preconditions unmet: crash of {id} at t={} after the detection",
                    fault.at
                ))
            }
            FaultEvent::Crash(id) => crashed.push(id.get()),
            FaultEvent::Detect(_) => {}
        }
    }
    let detector = detect.event.target().get();
    if crashed.contains(&detector) {
        return Err(format!(
            "formula preconditions unmet: detector {detector} is crashed"
        ));
    }
    let live: Vec<u32> = (1..=scenario.max_id())
        .filter(|id| !crashed.contains(id))
        .collect();
    let rank = live
        .iter()
        .position(|&id| id == detector)
        .expect("detector is live")
        + 1;
    FormulaInputs::single(live.len() as u64, rank as u64).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub summary: String,
    pub algorithm: Algorithm,
    pub inputs: FormulaInputs,
    pub simulated: u64,
    pub analytic: u64,
    pub crosscheck: u64,
    pub critical_path_depth: Option<u32>,
    pub matched: bool,
    pub notes: Vec<String>,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.summary)?;
        writeln!(f, "simulated messages: {}", self.simulated)?;
        writeln!(f, "closed-form messages: {}", self.analytic)?;
        writeln!(f, "crosscheck: {}", self.crosscheck)?;
        match self.critical_path_depth {
            Some(d) => writeln!(f, "critical path depth: {d}")?,
            None => writeln!(f, "critical path depth: undefined")?,
        }
        writeln!(f, "match: {}", self.matched)?;
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

/// Compares a run's headline count with the closed form for its algorithm.
pub fn verify(
    result: &SimResult,
    inputs: FormulaInputs,
    algorithm: Algorithm,
) -> VerificationReport {
    let analytic = formula_value(algorithm, inputs.nodes, inputs.detector)
        .expect("FormulaInputs are range-checked");
    let simulated = result.stats.headline_total;
    let mut notes = Vec::new();
    let mut matched = simulated == analytic;
    if !result.is_quiescent() {
        matched = false;
        notes.push("NonQuiescent: run exceeded its tick budget".to_string());
    }
    if algorithm == Algorithm::Modified && inputs.detector == inputs.nodes {
        notes.push(format!(
            "P = N: the detector declares itself without an inform message, so the run sends \
             N - 1 = {} while the closed form counts N = {}",
            inputs.nodes - 1,
            inputs.nodes
        ));
    }
    if !matched && result.is_quiescent() {
        notes.push(format!(
            "discrepancy: simulated {simulated} vs closed form {analytic}"
        ));
    }
    VerificationReport {
        summary: format!(
            "{algorithm} N={} P={} (single detector)",
            inputs.nodes, inputs.detector
        ),
        algorithm,
        inputs,
        simulated,
        analytic,
        crosscheck: result.stats.crosscheck,
        critical_path_depth: result.stats.critical_path_depth,
        matched,
        notes,
    }
}

/// Concurrent-detection scenario: processes `1..=n` all detect at t=0 with
/// the dead ex-coordinator above them.
pub fn concurrent_scenario(n: u32, algorithm: Algorithm) -> Scenario {
    let mut scenario = Scenario::new(n, algorithm).with_ex_coordinator();
    for id in 1..=n {
        scenario = scenario.detect(0, id);
    }
    scenario
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcurrentReport {
    pub concurrent: u64,
    pub algorithm: Algorithm,
    pub published: u64,
    pub itemised: u64,
    pub simulated: u64,
    pub note: &'static str,
}

impl fmt::Display for ConcurrentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} n={}: closed form {} | itemised {} | simulated {} ({})",
            self.algorithm,
            self.concurrent,
            self.published,
            self.itemised,
            self.simulated,
            self.note
        )
    }
}

pub fn concurrent_report(n: u32, algorithm: Algorithm) -> ConcurrentReport {
    let result = sim::simulate(&concurrent_scenario(n, algorithm)).expect("valid scenario");
    let k = u64::from(n);
    let (published, itemised, note) = match algorithm {
        Algorithm::Classic => (
            classic_concurrent(k),
            classic_concurrent_itemised(k),
            CONCURRENT_CLASSIC_NOTE,
        ),
        Algorithm::Modified => (
            modified_concurrent(k),
            // (n-1) elections + (n-1) replies + inform + probe + (n-1) announcements
            3 * k.saturating_sub(1) + 2,
            CONCURRENT_MODIFIED_NOTE,
        ),
    };
    ConcurrentReport {
        concurrent: k,
        algorithm,
        published,
        itemised,
        simulated: result.stats.headline_total,
        note,
    }
}

/// Side-by-side listing of the stated worst-case and concurrent figures
/// against what the formulas and the simulator actually give.
pub fn audit(sizes: &[u64]) -> String {
    let mut out = String::new();
    out.push_str("worst case, modified: stated 3N-1 vs single-detector formula at P=1 (3N-2)\n");
    for &n in sizes {
        let w = modified_worst(n);
        out.push_str(&format!(
            "  N={n}: stated {} | formula {} (table value)\n",
            w.as_published, w.as_derived
        ));
    }
    out.push_str("concurrent detection (closed forms reported verbatim):\n");
    for &n in sizes {
        let Ok(n32) = u32::try_from(n) else { continue };
        for algorithm in Algorithm::ALL {
            out.push_str(&format!("  {}\n", concurrent_report(n32, algorithm)));
        }
    }
    out
}
