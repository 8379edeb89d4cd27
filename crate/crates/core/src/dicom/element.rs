use std::borrow::Cow;

use super::{DataSet, Tag, Vr};

/// Raw value of an element. Sequences and encapsulated pixel data keep the
/// length form they were read with so re-encoding is byte-exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bytes(Vec<u8>),
    Sequence(Sequence),
    /// Encapsulated pixel data; the first fragment is the basic offset table.
    Fragments(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequence {
    pub items: Vec<Item>,
    pub undefined_length: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub dataset: DataSet,
    pub undefined_length: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataElement {
    pub tag: Tag,
    pub vr: Vr,
    pub value: Value,
}

impl DataElement {
    pub fn new(tag: Tag, vr: Vr, value: Value) -> Self {
        DataElement { tag, vr, value }
    }

    /// Text element, padded to even length with the VR's padding byte.
    pub fn text(tag: Tag, vr: Vr, s: &str) -> Self {
        let mut bytes = s.as_bytes().to_vec();
        if bytes.len() % 2 == 1 {
            bytes.push(vr.padding());
        }
        DataElement::new(tag, vr, Value::Bytes(bytes))
    }

    pub fn u16(tag: Tag, v: u16) -> Self {
        DataElement::new(tag, Vr::US, Value::Bytes(v.to_le_bytes().to_vec()))
    }

    pub fn u32(tag: Tag, v: u32) -> Self {
        DataElement::new(tag, Vr::UL, Value::Bytes(v.to_le_bytes().to_vec()))
    }

    pub fn sequence(tag: Tag, items: Vec<DataSet>) -> Self {
        DataElement::new(
            tag,
            Vr::SQ,
            Value::Sequence(Sequence {
                items: items
                    .into_iter()
                    .map(|dataset| Item {
                        dataset,
                        undefined_length: true,
                    })
                    .collect(),
                undefined_length: true,
            }),
        )
    }

    pub fn bytes(&self) -> Option<&[u8]> {
        match &self.value {
            Value::Bytes(b) => Some(b),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&[Item]> {
        match &self.value {
            Value::Sequence(s) => Some(&s.items),
            _ => None,
        }
    }

    pub fn items_mut(&mut self) -> Option<&mut Vec<Item>> {
        match &mut self.value {
            Value::Sequence(s) => Some(&mut s.items),
            _ => None,
        }
    }

    /// True when the element carries no data (zero bytes or no items).
    pub fn is_empty(&self) -> bool {
        match &self.value {
            Value::Bytes(b) => b.is_empty(),
            Value::Sequence(s) => s.items.is_empty(),
            Value::Fragments(f) => f.iter().all(|x| x.is_empty()),
        }
    }

    /// Decoded text view. Text VRs always decode; opaque VRs decode only
    /// when every byte is printable ASCII (or trailing padding).
    pub fn text_value(&self) -> Option<Cow<'_, str>> {
        let bytes = self.bytes()?;
        let decodable = self.vr.is_text()
            || (matches!(self.vr, Vr::UN | Vr::Unknown(_) | Vr::OB) && is_printable(bytes));
        if !decodable {
            return None;
        }
        let end = bytes
            .iter()
            .rposition(|&b| b != 0 && b != b' ')
            .map_or(0, |i| i + 1);
        Some(String::from_utf8_lossy(&bytes[..end]))
    }

    /// Backslash-separated values of a text element.
    pub fn text_values(&self) -> Vec<String> {
        self.text_value()
            .map(|t| t.split('\\').map(|v| v.trim().to_string()).collect())
            .unwrap_or_default()
    }

    pub fn u16_value(&self) -> Option<u16> {
        match self.vr {
            Vr::US | Vr::OW | Vr::UN => {
                let b = self.bytes()?;
                (b.len() >= 2).then(|| u16::from_le_bytes([b[0], b[1]]))
            }
            _ => self.int_value().and_then(|v| u16::try_from(v).ok()),
        }
    }

    /// Integer view of IS/US/UL/SS/SL elements (first value).
    pub fn int_value(&self) -> Option<i64> {
        let b = self.bytes()?;
        match self.vr {
            Vr::US if b.len() >= 2 => Some(u16::from_le_bytes([b[0], b[1]]) as i64),
            Vr::SS if b.len() >= 2 => Some(i16::from_le_bytes([b[0], b[1]]) as i64),
            Vr::UL if b.len() >= 4 => Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as i64),
            Vr::SL if b.len() >= 4 => Some(i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as i64),
            Vr::IS | Vr::DS => self.text_values().first()?.parse::<f64>().ok().map(|v| v as i64),
            _ => None,
        }
    }
}

fn is_printable(bytes: &[u8]) -> bool {
    let trimmed = match bytes.iter().rposition(|&b| b != 0) {
        Some(i) => &bytes[..=i],
        None => return true,
    };
    trimmed
            .iter()
            .all(|&b| (0x20..0x7F).contains(&b) || b == b'\t' || b == b'\r' || b == b'\n')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::tags;

    #[test]
    fn text_padding_and_views() {
        let e = DataElement::text(tags::PATIENT_NAME, Vr::PN, "DOE^JANE\\SMITH");
        assert_eq!(e.bytes().unwrap().len() % 2, 0);
        assert_eq!(e.text_value().unwrap(), "DOE^JANE\\SMITH");
        assert_eq!(e.text_values(), vec!["DOE^JANE", "SMITH"]);
        let uid = DataElement::text(tags::SOP_INSTANCE_UID, Vr::UI, "1.2.3");
        assert_eq!(uid.bytes().unwrap(), b"1.2.3\0");
        assert_eq!(uid.text_value().unwrap(), "1.2.3");
    }

    #[test]
    fn numeric_views() {
        assert_eq!(DataElement::u16(tags::ROWS, 512).u16_value(), Some(512));
        let frames = DataElement::text(tags::NUMBER_OF_FRAMES, Vr::IS, "3");
        assert_eq!(frames.int_value(), Some(3));
        let opaque = DataElement::new(Tag::new(0x0009, 0x1001), Vr::UN, Value::Bytes(vec![1, 2, 0xFF, 0]));
        assert!(opaque.text_value().is_none());
        let printable = DataElement::new(Tag::new(0x0009, 0x1001), Vr::UN, Value::Bytes(b"MRN 1234".to_vec()));
        assert_eq!(printable.text_value().unwrap(), "MRN 1234");
    }
}
