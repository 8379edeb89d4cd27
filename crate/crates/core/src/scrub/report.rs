use std::collections::BTreeMap;

use serde::Serialize;

use crate::dicom::Tag;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub tag: Tag,
    /// Location including enclosing sequence items, e.g. `(0008,1140)[0].(0010,0010)`.
    pub path: String,
    pub reason: String,
}

impl Finding {
    pub fn new(tag: Tag, path: &str, reason: &str) -> Self {
        Finding {
            tag,
            path: path.to_string(),
            reason: reason.to_string(),
        }
    }
}

/// Per-file outcome. `passed` is true exactly when `findings` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScrubReport {
    counts: BTreeMap<String, usize>,
    /// Date values that could not be parsed and were blanked.
    blanked: Vec<Finding>,
    findings: Vec<Finding>,
    passed: bool,
}

impl ScrubReport {
    pub fn new(counts: BTreeMap<String, usize>, blanked: Vec<Finding>, findings: Vec<Finding>) -> Self {
        let passed = findings.is_empty();
        ScrubReport {
            counts,
            blanked,
            findings,
            passed,
        }
    }

    pub fn counts(&self) -> &BTreeMap<String, usize> {
        &self.counts
    }

    pub fn count(&self, key: &str) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn blanked(&self) -> &[Finding] {
        &self.blanked
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn passed(&self) -> bool {
        self.passed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_findings() {
        assert!(ScrubReport::new(BTreeMap::new(), vec![], vec![]).passed());
        let f = Finding::new(Tag::new(0x0010, 0x0010), "(0010,0010)", "raw value");
        let r = ScrubReport::new(BTreeMap::new(), vec![], vec![f]);
        assert!(!r.passed());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"tag\":\"(0010,0010)\""), "{json}");
        assert!(json.contains("\"passed\":false"));
    }
}
