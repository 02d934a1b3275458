//! Deterministic simulation and message-complexity analysis of Bully-style
//! leader election.
//!
//! * [`protocol`]: pure state machines for the classic and modified variants.
//! * [`sim`]: virtual-time engine with fault injection and full traces.
//! * [`analysis`]: closed-form message counts and simulation cross-checks.
//! * [`cli`]: scenario files, reports, and the `election-arena` commands.

pub mod analysis;
pub mod cli;
pub mod protocol;
pub mod sim;

pub use protocol::{Algorithm, MessageKind, ProcessId, Tick};
pub use sim::{simulate, Scenario, SimResult};
