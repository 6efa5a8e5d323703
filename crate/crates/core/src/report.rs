//! Pass/fail bookkeeping shared by the law suites.

use std::fmt;

use serde::Serialize;

/// Outcome of one named property, evaluated on many cases.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLog {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    /// The first failing case, if any.
    pub counterexample: Option<String>,
    /// Set when the property does not apply to the configuration.
    pub skipped: Option<String>,
}

impl CheckLog {
    pub fn new(name: impl Into<String>) -> Self {
        CheckLog { name: name.into(), cases: 0, failures: 0, counterexample: None, skipped: None }
    }

    pub fn skipped(name: impl Into<String>, why: impl Into<String>) -> Self {
        let mut c = CheckLog::new(name);
        c.skipped = Some(why.into());
        c
    }

    /// Records one case; `describe` is only evaluated for the first failure.
    pub fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }

    pub fn fail(&mut self, why: String) {
        self.record(false, || why);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for CheckLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(why) = &self.skipped {
            return write!(f, "SKIP  {} ({})", self.name, why);
        }
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{}  {} [{} cases", tag, self.name, self.cases)?;
        if self.failures > 0 {
            write!(f, ", {} failures", self.failures)?;
        }
        write!(f, "]")?;
        if let Some(c) = &self.counterexample {
            write!(f, " counterexample: {}", c)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub suite: String,
    pub checks: Vec<CheckLog>,
}

impl LawReport {
    pub fn new(suite: impl Into<String>) -> Self {
        LawReport { suite: suite.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: CheckLog) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: LawReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckLog::passed)
    }

    pub fn total_cases(&self) -> u64 {
        self.checks.iter().map(|c| c.cases).sum()
    }

    pub fn find(&self, name_prefix: &str) -> Option<&CheckLog> {
        self.checks.iter().find(|c| c.name.starts_with(name_prefix))
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.suite)?;
        for c in &self.checks {
            writeln!(f, "{}", c)?;
        }
        Ok(())
    }
}
