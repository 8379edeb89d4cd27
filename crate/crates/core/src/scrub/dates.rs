//! Whole-day shifting of DA and DT values.

use chrono::{Duration, NaiveDate};

use super::report::Finding;
use crate::dicom::{DataElement, DataSet, Vr};

pub fn parse_da(s: &str) -> Option<NaiveDate> {
    if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y%m%d").ok()
}

fn format_da(d: NaiveDate) -> Option<String> {
    (1..=9999).contains(&chrono::Datelike::year(&d)).then(|| d.format("%Y%m%d").to_string())
}

/// DT values need at least a full date; the time part and UTC offset are kept.
fn split_dt(s: &str) -> Option<(NaiveDate, &str)> {
    if s.len() < 8 {
        return None;
    }
    let (date, rest) = s.split_at(8);
    let valid_rest = rest.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'+' | b'-'));
    valid_rest.then_some((parse_da(date)?, rest))
}

/// True when a DA/DT value is empty or parses as a date.
pub fn is_valid_date_value(vr: Vr, value: &str) -> bool {
    value.is_empty()
        || match vr {
            Vr::DA => parse_da(value).is_some(),
            Vr::DT => split_dt(value).is_some(),
            _ => true,
        }
}

/// Shifts one value, `None` when it cannot be parsed or leaves the calendar.
pub fn shift_value(vr: Vr, value: &str, offset: i32) -> Option<String> {
    if value.is_empty() {
        return Some(String::new());
    }
    let delta = Duration::days(offset as i64);
    match vr {
        Vr::DA => format_da(parse_da(value)?.checked_add_signed(delta)?),
        Vr::DT => {
            let (d, rest) = split_dt(value)?;
            Some(format_da(d.checked_add_signed(delta)?)? + rest)
        }
        _ => Some(value.to_string()),
    }
}

/// Shifts every element's values; returns whether the element was blanked.
pub(crate) fn shift_element(el: &mut DataElement, offset: i32) -> ShiftOutcome {
    if !el.vr.is_date_like() || el.is_empty() {
        return ShiftOutcome::Unchanged;
    }
    let values = el.text_values();
    let shifted: Option<Vec<String>> = values.iter().map(|v| shift_value(el.vr, v, offset)).collect();
    match shifted {
        Some(vals) => {
            *el = DataElement::text(el.tag, el.vr, &vals.join("\\"));
            ShiftOutcome::Shifted
        }
        None => {
            *el = DataElement::text(el.tag, el.vr, "");
            ShiftOutcome::Blanked
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ShiftOutcome {
    Unchanged,
    Shifted,
    Blanked,
}

/// Shifts all DA/DT elements at any depth. Unparseable values are blanked and
/// reported. TM and everything else is untouched.
pub fn shift_dates(ds: &DataSet, offset: i32) -> (DataSet, Vec<Finding>) {
    let mut out = ds.clone();
    let mut blanked = Vec::new();
    walk(&mut out, "", offset, &mut blanked);
    (out, blanked)
}

fn walk(ds: &mut DataSet, prefix: &str, offset: i32, blanked: &mut Vec<Finding>) {
    for el in ds.iter_mut() {
        let path = format!("{prefix}{}", el.tag);
        if shift_element(el, offset) == ShiftOutcome::Blanked {
            blanked.push(Finding::new(el.tag, &path, "unparseable date blanked"));
        }
        if let Some(items) = el.items_mut() {
            for (i, item) in items.iter_mut().enumerate() {
                walk(&mut item.dataset, &format!("{path}[{i}]."), offset, blanked);
            }
        }
    }
}
