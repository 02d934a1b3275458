//! Prints the seven-process walkthrough under both algorithms.
//!
//! ```text
//! cargo run --example walkthrough
//! ```

use election_arena::{simulate, Algorithm, Scenario};

fn main() {
    for algorithm in Algorithm::ALL {
        let scenario = Scenario::new(7, algorithm).crash(0, 7).detect(0, 4);
        let result = simulate(&scenario).expect("valid scenario");
        println!("== {algorithm} ==");
        print!("{}", result.trace_text());
        println!("{}\n", result.stats);
    }
}
