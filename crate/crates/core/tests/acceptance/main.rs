//! Acceptance suite: each criterion runs in isolation and reports one line.
//!
//! `cargo test --test acceptance` runs everything; pass substrings as
//! arguments (e.g. `-- ehrenfest`) to select criteria by name.

mod examples;
mod laws;
mod terms;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Outcome detail on success, failure description otherwise.
pub type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "fibonacci", budget: Duration::from_secs(1), run: examples::fibonacci },
    Criterion { id: 2, name: "random-walk-exact", budget: Duration::from_secs(5), run: examples::random_walk },
    Criterion { id: 3, name: "ehrenfest", budget: Duration::from_secs(10), run: examples::ehrenfest },
    Criterion { id: 4, name: "feedback-axioms", budget: Duration::from_secs(300), run: terms::feedback_axioms },
    Criterion { id: 5, name: "monoidal-laws", budget: Duration::from_secs(300), run: terms::monoidal_laws },
    Criterion { id: 6, name: "markov-laws", budget: Duration::from_secs(300), run: laws::markov_laws },
    Criterion { id: 7, name: "copy-witness", budget: Duration::from_secs(60), run: laws::copy_witness },
    Criterion { id: 8, name: "causality-marginalization", budget: Duration::from_secs(300), run: terms::marginalization },
    Criterion { id: 9, name: "evaluator-oracles", budget: Duration::from_secs(300), run: terms::evaluator_oracles },
    Criterion { id: 10, name: "front-end", budget: Duration::from_secs(30), run: examples::front_end },
];

fn main() -> ExitCode {
    // libtest flags such as `--nocapture` may be forwarded; only plain words filter.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<&Criterion> = CRITERIA
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str())))
        .collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &selected {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; took {elapsed:.2?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {:<26} {:>9.2?}  {detail}", c.id, c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {:<26} {:>9.2?}  {why}", c.id, c.name, elapsed);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", selected.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// `Err` with a message unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
