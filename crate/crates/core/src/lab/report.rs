use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One trial: its seed, the quantities it computed and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub suite: String,
    pub trial: usize,
    pub seed: u64,
    pub quantities: BTreeMap<String, f64>,
    pub pass: bool,
}

impl TrialRecord {
    pub fn new(suite: &str, trial: usize, seed: u64) -> Self {
        TrialRecord { suite: suite.into(), trial, seed, quantities: BTreeMap::new(), pass: true }
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.quantities.insert(key.into(), value);
        self
    }

    /// Records `ok` under `key` (1 or 0) and folds it into the verdict.
    pub fn check(&mut self, key: &str, ok: bool) -> &mut Self {
        self.quantities.insert(key.into(), if ok { 1.0 } else { 0.0 });
        self.pass &= ok;
        self
    }

    pub fn get(&self, key: &str) -> f64 {
        self.quantities.get(key).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub failures: usize,
    /// All trials passed and every suite-level check held.
    pub pass: bool,
    pub summary: BTreeMap<String, f64>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, records: Vec<TrialRecord>) -> Self {
        let failures = records.iter().filter(|r| !r.pass).count();
        SuiteReport {
            suite: suite.into(),
            seed,
            trials: records.len(),
            failures,
            pass: failures == 0,
            summary: BTreeMap::new(),
            records,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.summary.insert(key.into(), value);
        self
    }

    /// Suite-level check, folded into `pass`.
    pub fn check(&mut self, key: &str, ok: bool) -> &mut Self {
        self.summary.insert(key.into(), if ok { 1.0 } else { 0.0 });
        self.pass &= ok;
        self
    }

    /// Minimum of a trial quantity.
    pub fn min_of(&self, key: &str) -> f64 {
        self.records.iter().map(|r| r.get(key)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_of(&self, key: &str) -> f64 {
        self.records.iter().map(|r| r.get(key)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// One JSON object per trial.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// `|a − b| / max(|a|, |b|, scale)`.
pub fn rel_diff(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_fold() {
        let mut a = TrialRecord::new("s", 0, 1);
        a.set("x", 2.0).check("ok", true);
        let mut b = TrialRecord::new("s", 1, 2);
        b.check("ok", false);
        let mut rep = SuiteReport::new("s", 9, vec![a, b]);
        assert_eq!(rep.failures, 1);
        assert!(!rep.pass);
        rep.set("y", 1.0);
        let mut out = Vec::new();
        rep.write_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(r#"{"suite":"s","trial":0,"seed":1,"quantities":{"ok":1.0,"x":2.0},"pass":true}"#));
    }

    #[test]
    fn relative_difference() {
        assert_eq!(rel_diff(1.0, 1.0, 0.0), 0.0);
        assert!((rel_diff(1.0, 1.1, 0.0) - 0.1 / 1.1).abs() < 1e-15);
        assert!((rel_diff(1e-12, 0.0, 1.0) - 1e-12).abs() < 1e-20);
    }
}
