use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use stratbundle::bundle::SCHEMA;
use stratbundle::config::Tolerances;
use stratbundle::report::Verdict;

/// One verdict with its numbers.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// One-line summary for text output.
    pub summary: String,
    pub details: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, verdict: Verdict, summary: impl Into<String>, details: impl Serialize) -> Self {
        Self {
            name: name.into(),
            verdict,
            summary: summary.into(),
            details: serde_json::to_value(details).expect("report values serialize"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub config: Tolerances,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn new(command: &str, config: Tolerances) -> Self {
        Self {
            schema: SCHEMA,
            tool: "svb",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: BTreeMap::new(),
            config,
            verdict: Verdict::Pass,
            checks: Vec::new(),
            outputs: BTreeMap::new(),
            timestamp: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.verdict = overall(self.checks.iter().map(|c| c.verdict));
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("svb {} {}\n", self.version, self.command);
        for c in &self.checks {
            let _ = writeln!(s, "{:<13} {}  {}", c.verdict.to_string(), c.name, c.summary);
        }
        let _ = writeln!(s, "overall: {}", self.verdict);
        s
    }
}

/// FAIL beats INCONCLUSIVE beats PASS.
pub fn overall(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let mut r = Report::new("check bundle", Tolerances::default());
        assert_eq!(r.exit_code(), 0);
        r.push(Check::new("a", Verdict::Pass, "", ()));
        assert_eq!(r.exit_code(), 0);
        r.push(Check::new("b", Verdict::Inconclusive, "", ()));
        assert_eq!(r.exit_code(), 3);
        r.push(Check::new("c", Verdict::Fail, "", ()));
        assert_eq!(r.exit_code(), 2);
        r.push(Check::new("d", Verdict::Inconclusive, "", ()));
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn text_lists_every_check() {
        let mut r = Report::new("check frontier", Tolerances::default());
        r.push(Check::new("frontier", Verdict::Pass, "3 strata", ()));
        let t = r.to_text();
        assert!(t.contains("PASS"));
        assert!(t.contains("frontier  3 strata"));
        assert!(t.ends_with("overall: PASS\n"));
    }
}
