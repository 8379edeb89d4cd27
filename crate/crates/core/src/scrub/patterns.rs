//! Value patterns that look like PHI, and the private-element scan.

use regex::Regex;

use super::report::Finding;
use crate::dicom::{DataElement, DataSet, Value};

#[derive(Debug, Clone)]
pub struct PhiPattern {
    pub class: String,
    pub regex: Regex,
}

impl PhiPattern {
    pub fn new(class: &str, re: &str) -> Result<Self, regex::Error> {
        Ok(PhiPattern {
            class: class.to_string(),
            regex: Regex::new(re)?,
        })
    }
}

const DEFAULTS: &[(&str, &str)] = &[
    ("person_name", r"\b[A-Za-z][A-Za-z'\-]*\^[A-Za-z][A-Za-z'\-]*"),
    ("person_name", r"\b(?:Dr|Mr|Mrs|Ms)\.?\s+[A-Z][a-z]+"),
    ("date", r"\b(?:19|20)\d{2}[-/.](?:0[1-9]|1[0-2])[-/.](?:0[1-9]|[12]\d|3[01])\b"),
    ("date", r"\b(?:0?[1-9]|1[0-2])/(?:0?[1-9]|[12]\d|3[01])/(?:19|20)?\d{2}\b"),
    ("date", r"\b(?:19|20)\d{2}(?:0[1-9]|1[0-2])(?:0[1-9]|[12]\d|3[01])\b"),
    ("mrn", r"(?i)\b(?:MRN|MR#|medical record(?: number)?)[\s:#]*\d[\w-]*"),
    ("mrn", r"\b[A-Z]{1,3}\d{6,10}\b"),
    ("ssn", r"\b\d{3}-\d{2}-\d{4}\b"),
    ("phone", r"\(?\b\d{3}\)?[-. ]\d{3}[-. ]\d{4}\b"),
    ("email", r"[\w.+-]+@[\w-]+\.[\w.]+"),
];

pub fn default_patterns() -> Vec<PhiPattern> {
    DEFAULTS
        .iter()
        .map(|(class, re)| PhiPattern::new(class, re).expect("built-in pattern compiles"))
        .collect()
}

/// Class of the first pattern matching `text`.
pub fn classify<'a>(text: &str, patterns: &'a [PhiPattern]) -> Option<&'a str> {
    patterns
        .iter()
        .find(|p| p.regex.is_match(text))
        .map(|p| p.class.as_str())
}

/// Outcome of scanning one element's value.
pub(crate) enum ScanHit<'a> {
    Clean,
    Opaque,
    Match(&'a str),
}

pub(crate) fn scan_element<'a>(el: &DataElement, patterns: &'a [PhiPattern]) -> ScanHit<'a> {
    match el.text_value() {
        Some(text) => classify(&text, patterns).map_or(ScanHit::Clean, ScanHit::Match),
        None if matches!(el.value, Value::Bytes(_)) && !el.is_empty() => ScanHit::Opaque,
        None => ScanHit::Clean,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrivateScan {
    pub findings: Vec<Finding>,
    /// Private values that could not be decoded as text.
    pub opaque: usize,
}

/// Reports private elements (at any nesting depth) whose text matches a
/// pattern. The dataset is not modified.
pub fn scan_private(ds: &DataSet, patterns: &[PhiPattern]) -> PrivateScan {
    let mut out = PrivateScan::default();
    walk(ds, "", patterns, &mut out);
    out
}

fn walk(ds: &DataSet, prefix: &str, patterns: &[PhiPattern], out: &mut PrivateScan) {
    for el in ds.iter() {
        let path = format!("{prefix}{}", el.tag);
        if el.tag.is_private() && !el.tag.is_group_length() {
            match scan_element(el, patterns) {
                ScanHit::Match(class) => out.findings.push(Finding::new(el.tag, &path, class)),
                ScanHit::Opaque => out.opaque += 1,
                ScanHit::Clean => {}
            }
        }
        if let Some(items) = el.items() {
            for (i, item) in items.iter().enumerate() {
                walk(&item.dataset, &format!("{path}[{i}]."), patterns, out);
            }
        }
    }
}
