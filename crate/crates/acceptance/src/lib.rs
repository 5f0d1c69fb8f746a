//! Runner for the acceptance suite in `tests/acceptance.rs`: each check
//! runs in isolation and reports one PASS or FAIL line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass(String),
    Fail(String),
}

pub struct Report {
    pub name: &'static str,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

impl Report {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Outcome::Pass(_))
    }

    pub fn line(&self) -> String {
        let (tag, detail) = match &self.outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
        };
        format!("{tag} {} ({:.1} s): {detail}", self.name, self.elapsed.as_secs_f64())
    }
}

/// Runs `check`, turning panics into failures and enforcing `budget`.
pub fn run(name: &'static str, budget: Duration, check: impl FnOnce() -> Result<String, String>) -> Report {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check));
    let elapsed = started.elapsed();
    let outcome = match result {
        Ok(Ok(detail)) if elapsed <= budget => Outcome::Pass(detail),
        Ok(Ok(detail)) => Outcome::Fail(format!("{detail}; over the {:.0} s budget", budget.as_secs_f64())),
        Ok(Err(why)) => Outcome::Fail(why),
        Err(panic) => Outcome::Fail(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    let report = Report { name, outcome, elapsed };
    println!("{}", report.line());
    report
}

/// `Err(message)` unless `cond` holds.
pub fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}
