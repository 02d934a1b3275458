//! Scenario files and the `election-arena` subcommands.
//!
//! A scenario file is line oriented:
//!
//! ```text
//! # ten processes, process 4 notices first
//! nodes = 10
//! algorithm = classic
//! latency = 1
//! timeout = 3
//! seed = 0
//! ex_coordinator = true
//! crash 7 at 0
//! detect 4 at 0
//! ```
//!
//! `nodes` and `algorithm` are required; the rest default to the values
//! shown. Commands write to caller-supplied sinks and return the process
//! exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::analysis::{self, comparison_table};
use crate::protocol::{Algorithm, ProcessId, Tick};
use crate::sim::{self, check_agreement, FaultEvent, Scenario, ScenarioError, SimResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

fn parse_error(line: usize, message: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number<T: std::str::FromStr>(
    line: usize,
    what: &str,
    raw: &str,
) -> Result<T, ScenarioFileError> {
    raw.parse().map_err(|_| {
        parse_error(
            line,
            format!("{what} must be a non-negative integer, got `{raw}`"),
        )
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let mut nodes: Option<u32> = None;
    let mut algorithm: Option<Algorithm> = None;
    let mut latency: Option<Tick> = None;
    let mut timeout: Option<Tick> = None;
    let mut seed: Option<u64> = None;
    let mut ex: Option<bool> = None;
    let mut events: Vec<(Tick, FaultEvent)> = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some((key, value)) = content.split_once('=') {
            let (key, value) = (key.trim(), value.trim());
            let duplicate = match key {
                "nodes" => nodes.replace(parse_number(line, key, value)?).is_some(),
                "algorithm" => algorithm
                    .replace(value.parse().map_err(|e: String| parse_error(line, e))?)
                    .is_some(),
                "latency" => latency.replace(parse_number(line, key, value)?).is_some(),
                "timeout" => timeout.replace(parse_number(line, key, value)?).is_some(),
                "seed" => seed.replace(parse_number(line, key, value)?).is_some(),
                "ex_coordinator" => {
                    let flag = match value {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(parse_error(
                                line,
                                format!("ex_coordinator must be true|false, got `{other}`"),
                            ))
                        }
                    };
                    ex.replace(flag).is_some()
                }
                other => return Err(parse_error(line, format!("unknown key `{other}`"))),
            };
            if duplicate {
                return Err(parse_error(line, format!("duplicate key `{key}`")));
            }
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let [verb, id, "at", at] = words.as_slice() else {
            return Err(parse_error(
                line,
                format!("expected `<crash|recover|detect> <id> at <t>`, got `{content}`"),
            ));
        };
        let id: u32 = parse_number(line, "process id", id)?;
        let id = ProcessId::new(id).map_err(|e| parse_error(line, e.to_string()))?;
        let at: Tick = parse_number(line, "time", at)?;
        let event = match *verb {
            "crash" => FaultEvent::Crash(id),
            "recover" => FaultEvent::Recover(id),
            "detect" => FaultEvent::Detect(id),
            other => return Err(parse_error(line, format!("unknown event `{other}`"))),
        };
        events.push((at, event));
    }

    let mut scenario = Scenario::new(
        nodes.ok_or(ScenarioFileError::Missing("nodes"))?,
        algorithm.ok_or(ScenarioFileError::Missing("algorithm"))?,
    );
    scenario.latency = latency.unwrap_or(scenario.latency);
    scenario.timeout = timeout.unwrap_or(scenario.timeout);
    scenario.seed = seed.unwrap_or(0);
    scenario.extra_crashed_coordinator = ex.unwrap_or(true);
    for (at, event) in events {
        scenario.push(at, event);
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Inverse of [`parse_scenario`].
pub fn render_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes = {}", scenario.node_count);
    let _ = writeln!(out, "algorithm = {}", scenario.algorithm);
    let _ = writeln!(out, "latency = {}", scenario.latency);
    let _ = writeln!(out, "timeout = {}", scenario.timeout);
    let _ = writeln!(out, "seed = {}", scenario.seed);
    let _ = writeln!(
        out,
        "ex_coordinator = {}",
        scenario.extra_crashed_coordinator
    );
    for fault in &scenario.schedule {
        let verb = match fault.event {
            FaultEvent::Crash(_) => "crash",
            FaultEvent::Recover(_) => "recover",
            FaultEvent::Detect(_) => "detect",
        };
        let _ = writeln!(out, "{verb} {} at {}", fault.event.target(), fault.at);
    }
    out
}

pub fn load_scenario(path: &Path) -> Result<Scenario, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn depth_text(depth: Option<u32>) -> String {
    depth.map_or("none".to_string(), |d| d.to_string())
}

/// One-line run summary.
pub fn summary_line(result: &SimResult) -> String {
    let coordinator = result
        .agreed_coordinator
        .map_or("none".to_string(), |c| c.to_string());
    format!(
        "coordinator={coordinator} messages={} crosscheck={} depth={} quiescent_at={}",
        result.stats.headline_total,
        result.stats.crosscheck,
        depth_text(result.stats.critical_path_depth),
        if result.is_quiescent() {
            result.quiescence_time.to_string()
        } else {
            "none".into()
        },
    )
}

/// `run <file> [--trace <path>]`: exit 0 on quiescent agreement, 2 otherwise,
/// 1 on unreadable input.
pub fn cmd_run(path: &Path, trace: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let result = sim::simulate(&scenario).expect("validated while parsing");
    if let Some(trace_path) = trace {
        if let Err(e) = fs::write(trace_path, result.trace_text()) {
            let _ = writeln!(err, "error: cannot write {}: {e}", trace_path.display());
            return 1;
        }
    }
    let verdict = check_agreement(&result);
    let _ = writeln!(out, "{}", summary_line(&result));
    let _ = writeln!(out, "{}", result.stats);
    let _ = writeln!(out, "{verdict}");
    if verdict.pass {
        0
    } else {
        2
    }
}

/// One CSV row; also one cell pair of the printed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvRow {
    pub nodes: u64,
    pub detector: u64,
    pub algorithm: Algorithm,
    pub simulated: u64,
    pub analytic: u64,
    pub crosscheck: u64,
    pub matched: bool,
    pub critical_path_depth: Option<u32>,
}

pub const CSV_HEADER: &str =
    "N,P,algorithm,simulated,analytic,crosscheck,match,critical_path_depth";

impl CsvRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.nodes,
            self.detector,
            self.algorithm,
            self.simulated,
            self.analytic,
            self.crosscheck,
            self.matched,
            depth_text(self.critical_path_depth)
        )
    }
}

pub fn parse_sizes(raw: &str) -> Result<Vec<u64>, String> {
    let sizes: Vec<u64> = raw
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(u64::from(n)),
                _ => Err(format!("size `{s}` is not a positive integer")),
            }
        })
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        return Err("no sizes given".into());
    }
    Ok(sizes)
}

/// Worst case (`P = 1`, dead ex-coordinator above) for every size, both
/// algorithms, simulated in parallel. Ordered by size, classic first.
pub fn table_rows(sizes: &[u64]) -> Vec<CsvRow> {
    let plan: Vec<(u64, Algorithm)> = sizes
        .iter()
        .flat_map(|&n| Algorithm::ALL.map(|a| (n, a)))
        .collect();
    let scenarios: Vec<Scenario> = plan
        .iter()
        .map(|&(n, a)| sim::single_detector(n as u32, 1, a))
        .collect();
    sim::run_batch(&scenarios)
        .into_iter()
        .zip(plan)
        .map(|(result, (n, algorithm))| {
            let result = result.expect("worst-case scenarios are valid");
            let analytic = analysis::formula_value(algorithm, n, 1).expect("P = 1 is in range");
            CsvRow {
                nodes: n,
                detector: 1,
                algorithm,
                simulated: result.stats.headline_total,
                analytic,
                crosscheck: result.stats.crosscheck,
                matched: result.stats.headline_total == analytic,
                critical_path_depth: result.stats.critical_path_depth,
            }
        })
        .collect()
}

pub fn render_table(rows: &[CsvRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} | {:>11} {:>15} | {:>12} {:>16} {:>10}",
        "N", "classic sim", "classic formula", "modified sim", "modified formula", "crosscheck"
    );
    let _ = writeln!(out, "{}", "-".repeat(84));
    for pair in rows.chunks(2) {
        let [classic, modified] = pair else { continue };
        let _ = writeln!(
            out,
            "{:>5} | {:>11} {:>15} | {:>12} {:>16} {:>10}",
            classic.nodes,
            classic.simulated,
            classic.analytic,
            modified.simulated,
            modified.analytic,
            modified.crosscheck
        );
    }
    for row in rows.iter().filter(|r| !r.matched) {
        let _ = writeln!(
            out,
            "mismatch: {} N={}: simulated {} vs formula {} (formula counts an inform message the lone top detector never sends)",
            row.algorithm, row.nodes, row.simulated, row.analytic
        );
    }
    out
}

/// `table --sizes <ints> [--csv <path>]`
pub fn cmd_table(sizes: &str, csv: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let sizes = match parse_sizes(sizes) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let rows = table_rows(&sizes);
    let _ = write!(out, "{}", render_table(&rows));
    let formula_only: Vec<String> = comparison_table(&sizes)
        .iter()
        .map(|r| format!("{}:{}/{}", r.nodes, r.classic, r.modified))
        .collect();
    let _ = writeln!(
        out,
        "closed-form worst case (N:classic/modified): {}",
        formula_only.join(" ")
    );
    let _ = write!(out, "{}", analysis::audit(&sizes));
    if let Some(path) = csv {
        if let Err(e) = write_csv(path, &rows) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return 1;
        }
    }
    0
}

pub fn csv_text(rows: &[CsvRow]) -> String {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    text
}

fn write_csv(path: &Path, rows: &[CsvRow]) -> io::Result<()> {
    fs::write(path, csv_text(rows))
}

/// `verify <file>`: exit 0 iff the run matches its closed form and agrees,
/// 1 if the scenario is outside what the formulas describe, 2 otherwise.
pub fn cmd_verify(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let inputs = match analysis::formula_inputs(&scenario) {
        Ok(inputs) => inputs,
        Err(why) => {
            let _ = writeln!(err, "error: {why}");
            return 1;
        }
    };
    let result = sim::simulate(&scenario).expect("validated while parsing");
    let report = analysis::verify(&result, inputs, scenario.algorithm);
    let verdict = check_agreement(&result);
    let _ = write!(out, "{report}");
    let _ = writeln!(out, "{verdict}");
    if report.matched && verdict.pass {
        0
    } else {
        2
    }
}
