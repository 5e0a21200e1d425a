//! Pass/fail outcomes of the checking operations.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// A list of named checks; passes when every check passes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn new() -> Verdict {
        Verdict::default()
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
        pass
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn merge(&mut self, other: Verdict) {
        self.checks.extend(other.checks);
    }
}
