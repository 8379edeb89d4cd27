//! Metadata de-identification: policy-driven element actions, keyed
//! pseudonyms and date jitter, private-tag scanning and revalidation.

pub mod dates;
pub mod keys;
pub mod patterns;
pub mod policy;
pub mod report;

use std::collections::BTreeMap;

use thiserror::Error;

pub use dates::shift_dates;
pub use keys::{derive_offset, is_pseudonym, is_uid_pseudonym, pseudonymize, pseudonymize_uid, JitterKey};
pub use patterns::{default_patterns, scan_private, PhiPattern, PrivateScan};
pub use policy::{HipaaCategory, PolicyEntry, PolicyTable, TagAction, TagPattern};
pub use report::{Finding, ScrubReport};

use crate::dicom::{tags, DataElement, DataSet, Tag, Value, Vr};
use dates::{is_valid_date_value, shift_element, ShiftOutcome};
use patterns::{scan_element, ScanHit};

pub const IDENTITY_REMOVED: &str = "YES";
/// Written to DeidentificationMethod. A dataset carrying it has had its dates
/// shifted already, so date shifting is skipped on later passes.
pub const METHOD_MARKER: &str = "DEID POLICY SCRUB; DATES JITTERED";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScrubError {
    #[error("PatientID is missing or empty; cannot derive a date offset")]
    MissingPatientId,
    #[error("policy: {0}")]
    Policy(String),
    #[error("key: {0}")]
    Key(String),
}

pub fn is_marked(ds: &DataSet) -> bool {
    ds.text(tags::DEIDENTIFICATION_METHOD).as_deref() == Some(METHOD_MARKER)
}

/// Elements the engine owns: file meta, group lengths, and the marker pair.
fn engine_owned(tag: Tag, top: bool) -> bool {
    tag.is_group_length()
        || tag.is_delimiter()
        || (top && (tag.is_file_meta() || tag == tags::PATIENT_IDENTITY_REMOVED || tag == tags::DEIDENTIFICATION_METHOD))
}

/// Policy action for an element; unmatched private elements are scanned.
fn resolve(policy: &PolicyTable, el: &DataElement) -> Option<(TagAction, HipaaCategory)> {
    policy
        .lookup(el.tag, el.vr)
        .map(|e| (e.action, e.category))
        .or_else(|| el.tag.is_private().then_some((TagAction::ScanPattern, HipaaCategory::Other)))
}

struct Scrubber<'a> {
    policy: &'a PolicyTable,
    key: &'a JitterKey,
    offset: Option<i32>,
    counts: BTreeMap<String, usize>,
    blanked: Vec<Finding>,
}

impl Scrubber<'_> {
    fn bump(&mut self, key: &str) {
        *self.counts.entry(key.to_string()).or_default() += 1;
    }

    fn apply(&mut self, ds: &mut DataSet, prefix: &str, top: bool) {
        let tag_list: Vec<Tag> = ds.iter().map(|e| e.tag).collect();
        for tag in tag_list {
            if engine_owned(tag, top) {
                continue;
            }
            let path = format!("{prefix}{tag}");
            let el = ds.get_mut(tag).expect("tag listed above");
            let action = resolve(self.policy, el);
            if let Some((action, _)) = action {
                self.bump(action.name());
            }
            if matches!(el.value, Value::Sequence(_)) {
                match action {
                    Some((TagAction::Remove, _)) => {
                        ds.remove(tag);
                    }
                    Some((TagAction::NullOut, _)) => null_out(el),
                    _ => {
                        for (i, item) in el.items_mut().unwrap().iter_mut().enumerate() {
                            self.apply(&mut item.dataset, &format!("{path}[{i}]."), false);
                        }
                    }
                }
                continue;
            }
            let Some((action, category)) = action else {
                continue;
            };
            match action {
                TagAction::Keep => {}
                TagAction::Remove => {
                    ds.remove(tag);
                }
                TagAction::NullOut => null_out(el),
                TagAction::Pseudonym => self.pseudonym(el, category),
                TagAction::DateShift => self.date_shift(el, &path),
                TagAction::Generalize => {
                    let (policy, vr) = (self.policy, el.vr);
                    map_text(el, |v| policy.generalize(tag, vr, v).unwrap_or_default());
                }
                TagAction::ScanPattern => match scan_element(el, self.policy.patterns()) {
                    ScanHit::Match(_) => {
                        null_out(el);
                        self.bump("scan_hit");
                    }
                    ScanHit::Opaque => self.bump("opaque"),
                    ScanHit::Clean => {}
                },
            }
        }
    }

    fn pseudonym(&mut self, el: &mut DataElement, category: HipaaCategory) {
        let key = self.key;
        if el.vr == Vr::UI {
            map_text(el, |v| {
                if v.is_empty() || is_uid_pseudonym(v) {
                    v.to_string()
                } else {
                    pseudonymize_uid(key, v)
                }
            });
        } else {
            map_text(el, |v| {
                if v.is_empty() || is_pseudonym(v) {
                    v.to_string()
                } else {
                    pseudonymize(key, v, category)
                }
            });
        }
    }

    fn date_shift(&mut self, el: &mut DataElement, path: &str) {
        if !el.vr.is_date_like() {
            return;
        }
        let outcome = match self.offset {
            Some(off) => shift_element(el, off),
            None if el.text_values().iter().all(|v| is_valid_date_value(el.vr, v)) => ShiftOutcome::Unchanged,
            None => {
                null_out(el);
                ShiftOutcome::Blanked
            }
        };
        if outcome == ShiftOutcome::Blanked {
            self.bump("date_blanked");
            self.blanked.push(Finding::new(el.tag, path, "unparseable date blanked"));
        }
    }
}

fn null_out(el: &mut DataElement) {
    if el.is_empty() {
        return;
    }
    el.value = match el.value {
        Value::Sequence(ref s) => Value::Sequence(crate::dicom::Sequence {
            items: Vec::new(),
            undefined_length: s.undefined_length,
        }),
        _ => Value::Bytes(Vec::new()),
    };
}

/// Rewrites each backslash-separated value; the element is only re-encoded
/// when something changed. Non-text values are emptied.
fn map_text(el: &mut DataElement, mut f: impl FnMut(&str) -> String) {
    if el.is_empty() {
        return;
    }
    if el.text_value().is_none() {
        null_out(el);
        return;
    }
    let values = el.text_values();
    let mapped: Vec<String> = values.iter().map(|v| f(v)).collect();
    if mapped != values {
        *el = DataElement::text(el.tag, el.vr, &mapped.join("\\"));
    }
}

/// Applies the policy to a copy of `ds`. The date offset is derived from the
/// original PatientID before it is pseudonymized.
pub fn scrub(ds: &DataSet, policy: &PolicyTable, key: &JitterKey) -> Result<(DataSet, ScrubReport), ScrubError> {
    let offset = if is_marked(ds) {
        None
    } else {
        Some(derive_offset(key, &ds.text(tags::PATIENT_ID).unwrap_or_default())?)
    };
    let mut out = ds.clone();
    let mut s = Scrubber {
        policy,
        key,
        offset,
        counts: BTreeMap::new(),
        blanked: Vec::new(),
    };
    s.apply(&mut out, "", true);

    if let (Some(sop), true) = (
        out.get(tags::SOP_INSTANCE_UID).cloned(),
        out.contains(tags::MEDIA_STORAGE_SOP_INSTANCE_UID),
    ) {
        let mut meta = sop;
        meta.tag = tags::MEDIA_STORAGE_SOP_INSTANCE_UID;
        meta.vr = Vr::UI;
        if out.get(meta.tag) != Some(&meta) {
            out.insert(meta);
        }
    }
    set_if_changed(&mut out, DataElement::text(tags::PATIENT_IDENTITY_REMOVED, Vr::CS, IDENTITY_REMOVED));
    set_if_changed(&mut out, DataElement::text(tags::DEIDENTIFICATION_METHOD, Vr::LO, METHOD_MARKER));
    out.refresh_group_lengths();

    let check = revalidate(&out, policy);
    let report = ScrubReport::new(s.counts, s.blanked, check.findings().to_vec());
    Ok((out, report))
}

fn set_if_changed(ds: &mut DataSet, el: DataElement) {
    if ds.text(el.tag) != el.text_value().map(|t| t.into_owned()) {
        ds.insert(el);
    }
}

/// Second-pass audit. Pure: lists every policy-governed element whose value
/// is neither empty, a pseudonym, a parseable date nor a generalized label,
/// plus scanned elements whose text still looks like PHI.
pub fn revalidate(ds: &DataSet, policy: &PolicyTable) -> ScrubReport {
    let mut findings = Vec::new();
    audit(ds, policy, "", true, &mut findings);
    ScrubReport::new(BTreeMap::new(), Vec::new(), findings)
}

fn audit(ds: &DataSet, policy: &PolicyTable, prefix: &str, top: bool, out: &mut Vec<Finding>) {
    for el in ds.iter() {
        if engine_owned(el.tag, top) {
            continue;
        }
        let path = format!("{prefix}{}", el.tag);
        let action = resolve(policy, el);
        let mut flag = |reason: &str| out.push(Finding::new(el.tag, &path, reason));
        if let Some(items) = el.items() {
            match action {
                Some((TagAction::Remove, _)) if !el.is_empty() => flag("sequence present; policy removes it"),
                Some((TagAction::NullOut, _)) if !el.is_empty() => flag("sequence not emptied"),
                _ => {
                    for (i, item) in items.iter().enumerate() {
                        audit(&item.dataset, policy, &format!("{path}[{i}]."), false, out);
                    }
                }
            }
            continue;
        }
        let Some((action, _)) = action else {
            continue;
        };
        if el.is_empty() {
            continue;
        }
        let texts = el.text_value().is_some().then(|| el.text_values());
        match action {
            TagAction::Keep => {}
            TagAction::Remove => flag("value present; policy removes it"),
            TagAction::NullOut => flag("value present; policy nulls it"),
            TagAction::Pseudonym => {
                let ok = texts.is_some_and(|vs| {
                    vs.iter().all(|v| {
                        v.is_empty() || if el.vr == Vr::UI { is_uid_pseudonym(v) } else { is_pseudonym(v) }
                    })
                });
                if !ok {
                    flag("identifier not pseudonymized");
                }
            }
            TagAction::DateShift => {
                if el.vr.is_date_like() && !texts.is_some_and(|vs| vs.iter().all(|v| is_valid_date_value(el.vr, v))) {
                    flag("unparseable date");
                }
            }
            TagAction::Generalize => {
                let ok = texts.is_some_and(|vs| {
                    vs.iter()
                        .all(|v| v.is_empty() || policy.generalize(el.tag, el.vr, v).as_deref() == Some(v.as_str()))
                });
                if !ok {
                    flag("value not generalized");
                }
            }
            TagAction::ScanPattern => {
                if let ScanHit::Match(class) = scan_element(el, policy.patterns()) {
                    flag(&format!("value matches {class} pattern"));
                }
            }
        }
    }
}
