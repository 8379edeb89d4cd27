//! Tag policy table: ordered `(pattern, action, category)` entries plus the
//! generalization map and extra PHI value patterns.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;

use super::patterns::{default_patterns, PhiPattern};
use super::ScrubError;
use crate::dicom::{Dictionary, Tag, Vr};

const DEFAULT_POLICY: &str = include_str!("../../data/default_policy.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HipaaCategory {
    Names,
    Geographic,
    Dates,
    Phone,
    Fax,
    Email,
    Ssn,
    Mrn,
    HealthPlan,
    Account,
    License,
    Vehicle,
    Device,
    Url,
    Ip,
    Biometric,
    Photo,
    Other,
}

impl HipaaCategory {
    pub const ALL: [HipaaCategory; 18] = [
        HipaaCategory::Names,
        HipaaCategory::Geographic,
        HipaaCategory::Dates,
        HipaaCategory::Phone,
        HipaaCategory::Fax,
        HipaaCategory::Email,
        HipaaCategory::Ssn,
        HipaaCategory::Mrn,
        HipaaCategory::HealthPlan,
        HipaaCategory::Account,
        HipaaCategory::License,
        HipaaCategory::Vehicle,
        HipaaCategory::Device,
        HipaaCategory::Url,
        HipaaCategory::Ip,
        HipaaCategory::Biometric,
        HipaaCategory::Photo,
        HipaaCategory::Other,
    ];

    /// Label used in policy files.
    pub fn label(self) -> &'static str {
        match self {
            HipaaCategory::Names => "names",
            HipaaCategory::Geographic => "geographic",
            HipaaCategory::Dates => "dates",
            HipaaCategory::Phone => "phone",
            HipaaCategory::Fax => "fax",
            HipaaCategory::Email => "email",
            HipaaCategory::Ssn => "ssn",
            HipaaCategory::Mrn => "mrn",
            HipaaCategory::HealthPlan => "health_plan",
            HipaaCategory::Account => "account",
            HipaaCategory::License => "license",
            HipaaCategory::Vehicle => "vehicle",
            HipaaCategory::Device => "device",
            HipaaCategory::Url => "url",
            HipaaCategory::Ip => "ip",
            HipaaCategory::Biometric => "biometric",
            HipaaCategory::Photo => "photo",
            HipaaCategory::Other => "other",
        }
    }

    /// Token embedded in pseudonyms.
    pub fn token(self) -> String {
        self.label().replace('_', "").to_ascii_uppercase()
    }
}

impl FromStr for HipaaCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        HipaaCategory::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

impl fmt::Display for HipaaCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagAction {
    Remove,
    NullOut,
    Pseudonym,
    DateShift,
    Generalize,
    ScanPattern,
    Keep,
}

impl TagAction {
    pub fn name(self) -> &'static str {
        match self {
            TagAction::Remove => "REMOVE",
            TagAction::NullOut => "NULL_OUT",
            TagAction::Pseudonym => "PSEUDONYM",
            TagAction::DateShift => "DATE_SHIFT",
            TagAction::Generalize => "GENERALIZE",
            TagAction::ScanPattern => "SCAN_PATTERN",
            TagAction::Keep => "KEEP",
        }
    }
}

impl FromStr for TagAction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "REMOVE" => TagAction::Remove,
            "NULL_OUT" => TagAction::NullOut,
            "PSEUDONYM" => TagAction::Pseudonym,
            "DATE_SHIFT" => TagAction::DateShift,
            "GENERALIZE" => TagAction::Generalize,
            "SCAN_PATTERN" => TagAction::ScanPattern,
            "KEEP" => TagAction::Keep,
            _ => return Err(format!("unknown action {s:?}")),
        })
    }
}

/// Left-hand side of a policy entry.
#[derive(Debug, Clone)]
pub enum TagPattern {
    Exact(Tag),
    /// `(50xx,xxxx)`: `x` nibbles match anything.
    Wildcard { value: u32, care: u32 },
    /// Full match against the dictionary keyword.
    Keyword(Regex),
    Vr(Vr),
    /// Any odd-group element except group lengths.
    Private,
}

impl TagPattern {
    pub fn parse(s: &str, dict: &Dictionary) -> Result<Self, String> {
        if s == "PRIVATE" {
            return Ok(TagPattern::Private);
        }
        if let Some(code) = s.strip_prefix("vr:") {
            let code: [u8; 2] = code.as_bytes().try_into().map_err(|_| format!("bad VR {code:?}"))?;
            return Vr::from_code(code).map(TagPattern::Vr).ok_or_else(|| format!("bad VR in {s:?}"));
        }
        if let Some(re) = s.strip_prefix("re:") {
            return Regex::new(&format!("^(?:{re})$"))
                .map(TagPattern::Keyword)
                .map_err(|e| e.to_string());
        }
        if s.starts_with('(') {
            let body = s.trim_start_matches('(').trim_end_matches(')').replace(',', "");
            if body.len() != 8 {
                return Err(format!("bad tag {s:?}"));
            }
            if !body.contains(['x', 'X']) {
                return s.parse().map(TagPattern::Exact).map_err(|e| e.to_string());
            }
            let (mut value, mut care) = (0u32, 0u32);
            for ch in body.chars() {
                value <<= 4;
                care <<= 4;
                if ch == 'x' || ch == 'X' {
                    continue;
                }
                value |= ch.to_digit(16).ok_or_else(|| format!("bad tag {s:?}"))?;
                care |= 0xF;
            }
            return Ok(TagPattern::Wildcard { value, care });
        }
        dict.tag_for(s)
            .map(TagPattern::Exact)
            .ok_or_else(|| format!("unknown keyword {s:?}"))
    }

    pub fn matches(&self, tag: Tag, vr: Vr, dict: &Dictionary) -> bool {
        match self {
            TagPattern::Exact(t) => *t == tag,
            TagPattern::Wildcard { value, care } => {
                ((tag.group as u32) << 16 | tag.element as u32) & care == *value
            }
            TagPattern::Keyword(re) => dict.keyword(tag).is_some_and(|k| re.is_match(k)),
            TagPattern::Vr(v) => *v == vr,
            TagPattern::Private => tag.is_private() && !tag.is_group_length(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyEntry {
    pub pattern: TagPattern,
    pub action: TagAction,
    pub category: HipaaCategory,
    pub line: usize,
}

/// One `@category` row: values of matching tags that fully match `value`
/// become `label` (capture references such as `$0` are expanded).
#[derive(Debug, Clone)]
pub struct GeneralizeRule {
    pub pattern: TagPattern,
    pub value: Regex,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct PolicyTable {
    entries: Vec<PolicyEntry>,
    generalize: Vec<GeneralizeRule>,
    patterns: Vec<PhiPattern>,
}

impl PolicyTable {
    /// Parses and checks that all 18 identifier categories are covered.
    pub fn parse(text: &str) -> Result<Self, ScrubError> {
        let table = Self::parse_unchecked(text)?;
        let gaps = table.coverage_gaps();
        if !gaps.is_empty() {
            let names: Vec<&str> = gaps.iter().map(|c| c.label()).collect();
            return Err(ScrubError::Policy(format!("categories without entries: {}", names.join(", "))));
        }
        Ok(table)
    }

    /// Syntax-only parse.
    pub fn parse_unchecked(text: &str) -> Result<Self, ScrubError> {
        let dict = Dictionary::standard();
        let mut entries = Vec::new();
        let mut generalize = Vec::new();
        let mut patterns = default_patterns();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |m: String| ScrubError::Policy(format!("line {}: {m}", n + 1));
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            match cols[0] {
                "@category" => {
                    let [_, pat, value, label] = cols[..] else {
                        return Err(err("@category needs pattern, value regex and label".into()));
                    };
                    generalize.push(GeneralizeRule {
                        pattern: TagPattern::parse(pat, dict).map_err(err)?,
                        value: Regex::new(&format!("^(?:{value})$")).map_err(|e| err(e.to_string()))?,
                        label: label.to_string(),
                    });
                }
                "@pattern" => {
                    let [_, class, re] = cols[..] else {
                        return Err(err("@pattern needs class and regex".into()));
                    };
                    patterns.push(PhiPattern::new(class, re).map_err(|e| err(e.to_string()))?);
                }
                _ => {
                    let [pat, action, category] = cols[..] else {
                        return Err(err(format!("expected 3 tab-separated columns, got {}", cols.len())));
                    };
                    entries.push(PolicyEntry {
                        pattern: TagPattern::parse(pat, dict).map_err(err)?,
                        action: action.parse().map_err(err)?,
                        category: category.parse().map_err(err)?,
                        line: n + 1,
                    });
                }
            }
        }
        Ok(PolicyTable {
            entries,
            generalize,
            patterns,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScrubError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScrubError::Policy(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The bundled table.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_POLICY).expect("bundled policy is valid")
    }

    pub fn coverage_gaps(&self) -> Vec<HipaaCategory> {
        HipaaCategory::ALL
            .into_iter()
            .filter(|c| !self.entries.iter().any(|e| e.category == *c))
            .collect()
    }

    pub fn entries(&self) -> &[PolicyEntry] {
        &self.entries
    }

    pub fn patterns(&self) -> &[PhiPattern] {
        &self.patterns
    }

    /// First matching entry.
    pub fn lookup(&self, tag: Tag, vr: Vr) -> Option<&PolicyEntry> {
        let dict = Dictionary::standard();
        self.entries.iter().find(|e| e.pattern.matches(tag, vr, dict))
    }

    /// Generalized form of `value`, or `None` when no rule applies.
    pub fn generalize(&self, tag: Tag, vr: Vr, value: &str) -> Option<String> {
        let dict = Dictionary::standard();
        self.generalize
            .iter()
            .filter(|r| r.pattern.matches(tag, vr, dict))
            .find_map(|r| {
                let caps = r.value.captures(value)?;
                let mut out = String::new();
                caps.expand(&r.label, &mut out);
                Some(out)
            })
    }
}
