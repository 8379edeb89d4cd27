use super::codec;
use super::{DataElement, DicomError, Tag, Vr};
use super::tags;

pub const IMPLICIT_VR_LE: &str = "1.2.840.10008.1.2";
pub const EXPLICIT_VR_LE: &str = "1.2.840.10008.1.2.1";
pub const DEFLATED_EXPLICIT_VR_LE: &str = "1.2.840.10008.1.2.1.99";
pub const EXPLICIT_VR_BE: &str = "1.2.840.10008.1.2.2";

/// Transfer syntax of the dataset body. Encapsulated (compressed) syntaxes
/// are readable as element streams but their pixel data is never decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransferSyntax {
    ImplicitVrLittleEndian,
    ExplicitVrLittleEndian,
    Encapsulated(String),
}

impl TransferSyntax {
    pub fn from_uid(uid: &str) -> Result<Self, DicomError> {
        let uid = uid.trim_end_matches(['\0', ' ']);
        match uid {
            IMPLICIT_VR_LE => Ok(TransferSyntax::ImplicitVrLittleEndian),
            EXPLICIT_VR_LE => Ok(TransferSyntax::ExplicitVrLittleEndian),
            EXPLICIT_VR_BE | DEFLATED_EXPLICIT_VR_LE => {
                Err(DicomError::UnsupportedTransferSyntax(uid.to_string()))
            }
            other => Ok(TransferSyntax::Encapsulated(other.to_string())),
        }
    }

    pub fn uid(&self) -> &str {
        match self {
            TransferSyntax::ImplicitVrLittleEndian => IMPLICIT_VR_LE,
            TransferSyntax::ExplicitVrLittleEndian => EXPLICIT_VR_LE,
            TransferSyntax::Encapsulated(uid) => uid,
        }
    }

    pub fn is_explicit(&self) -> bool {
        !matches!(self, TransferSyntax::ImplicitVrLittleEndian)
    }

    pub fn is_encapsulated(&self) -> bool {
        matches!(self, TransferSyntax::Encapsulated(_))
    }
}

/// Ordered collection of data elements, strictly ascending by tag.
///
/// Top-level datasets carry the 128-byte preamble they were read with (if
/// any); file meta elements (group 0002) live in the same list and are always
/// encoded explicit VR little endian.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    elements: Vec<DataElement>,
    transfer_syntax: TransferSyntax,
    preamble: Option<Vec<u8>>,
}

impl DataSet {
    /// Empty Part 10 dataset with a zero preamble.
    pub fn new(transfer_syntax: TransferSyntax) -> Self {
        DataSet {
            elements: Vec::new(),
            transfer_syntax,
            preamble: Some(vec![0; 128]),
        }
    }

    /// Dataset without preamble (sequence items, raw streams).
    pub fn bare(transfer_syntax: TransferSyntax) -> Self {
        DataSet {
            elements: Vec::new(),
            transfer_syntax,
            preamble: None,
        }
    }

    /// Builds a dataset, rejecting elements that are not strictly ascending.
    pub fn from_elements(
        elements: Vec<DataElement>,
        transfer_syntax: TransferSyntax,
        preamble: Option<Vec<u8>>,
    ) -> Result<Self, DicomError> {
        for pair in elements.windows(2) {
            if pair[0].tag >= pair[1].tag {
                return Err(DicomError::OutOfOrder {
                    tag: pair[1].tag,
                    offset: 0,
                });
            }
        }
        Ok(DataSet {
            elements,
            transfer_syntax,
            preamble,
        })
    }

    /// Part 10 dataset with a populated file meta group.
    pub fn with_file_meta(transfer_syntax: TransferSyntax, sop_class: &str, sop_instance: &str) -> Self {
        let mut ds = DataSet::new(transfer_syntax.clone());
        ds.insert(DataElement::u32(tags::FILE_META_GROUP_LENGTH, 0));
        ds.insert(DataElement::new(
            tags::FILE_META_VERSION,
            Vr::OB,
            super::Value::Bytes(vec![0, 1]),
        ));
        ds.insert(DataElement::text(tags::MEDIA_STORAGE_SOP_CLASS_UID, Vr::UI, sop_class));
        ds.insert(DataElement::text(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, Vr::UI, sop_instance));
        ds.insert(DataElement::text(tags::TRANSFER_SYNTAX_UID, Vr::UI, transfer_syntax.uid()));
        ds.insert(DataElement::text(tags::IMPLEMENTATION_CLASS_UID, Vr::UI, "1.2.826.0.1.3680043.10.1"));
        ds.insert(DataElement::text(tags::SOP_CLASS_UID, Vr::UI, sop_class));
        ds.insert(DataElement::text(tags::SOP_INSTANCE_UID, Vr::UI, sop_instance));
        ds.refresh_group_lengths();
        ds
    }

    pub fn transfer_syntax(&self) -> &TransferSyntax {
        &self.transfer_syntax
    }

    pub fn preamble(&self) -> Option<&[u8]> {
        self.preamble.as_deref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[DataElement] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataElement> {
        self.elements.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, DataElement> {
        self.elements.iter_mut()
    }

    fn position(&self, tag: Tag) -> Result<usize, usize> {
        self.elements.binary_search_by(|e| e.tag.cmp(&tag))
    }

    pub fn get(&self, tag: Tag) -> Option<&DataElement> {
        self.position(tag).ok().map(|i| &self.elements[i])
    }

    pub fn get_mut(&mut self, tag: Tag) -> Option<&mut DataElement> {
        self.position(tag).ok().map(move |i| &mut self.elements[i])
    }

    pub fn contains(&self, tag: Tag) -> bool {
        self.position(tag).is_ok()
    }

    /// Inserts or replaces, keeping tags ascending. Returns the replaced element.
    pub fn insert(&mut self, element: DataElement) -> Option<DataElement> {
        match self.position(element.tag) {
            Ok(i) => Some(std::mem::replace(&mut self.elements[i], element)),
            Err(i) => {
                self.elements.insert(i, element);
                None
            }
        }
    }

    pub fn remove(&mut self, tag: Tag) -> Option<DataElement> {
        self.position(tag).ok().map(|i| self.elements.remove(i))
    }

    pub fn retain(&mut self, f: impl FnMut(&DataElement) -> bool) {
        self.elements.retain(f);
    }

    pub fn text(&self, tag: Tag) -> Option<String> {
        self.get(tag)?.text_value().map(|s| s.into_owned())
    }

    pub fn u16(&self, tag: Tag) -> Option<u16> {
        self.get(tag)?.u16_value()
    }

    pub fn int(&self, tag: Tag) -> Option<i64> {
        self.get(tag)?.int_value()
    }

    /// Recomputes every group-length element `(gggg,0000)` present at the top
    /// level. Correct inputs are left byte-identical.
    pub fn refresh_group_lengths(&mut self) {
        let groups: Vec<u16> = self
            .elements
            .iter()
            .filter(|e| e.tag.is_group_length())
            .map(|e| e.tag.group)
            .collect();
        for group in groups {
            let explicit = group == 0x0002 || self.transfer_syntax.is_explicit();
            let len: usize = self
                .elements
                .iter()
                .filter(|e| e.tag.group == group && !e.tag.is_group_length())
                .map(|e| codec::encoded_len(e, explicit))
                .sum();
            self.insert(DataElement::u32(Tag::new(group, 0), len as u32));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_keeps_order() {
        let mut ds = DataSet::new(TransferSyntax::ExplicitVrLittleEndian);
        for (g, e) in [(0x0010, 0x0020), (0x0008, 0x0060), (0x0010, 0x0010), (0x0028, 0x0010)] {
            ds.insert(DataElement::text(Tag::new(g, e), Vr::LO, "x"));
        }
        let tags: Vec<Tag> = ds.iter().map(|e| e.tag).collect();
        let mut sorted = tags.clone();
        sorted.sort();
        assert_eq!(tags, sorted);
        assert!(ds.remove(Tag::new(0x0010, 0x0010)).is_some());
        assert_eq!(ds.len(), 3);
        assert!(ds.insert(DataElement::text(Tag::new(0x0010, 0x0020), Vr::LO, "y")).is_some());
        assert_eq!(ds.text(Tag::new(0x0010, 0x0020)).as_deref(), Some("y"));
    }

    #[test]
    fn from_elements_rejects_disorder() {
        let a = DataElement::text(Tag::new(0x0010, 0x0020), Vr::LO, "a");
        let b = DataElement::text(Tag::new(0x0010, 0x0010), Vr::PN, "b");
        assert!(DataSet::from_elements(vec![a, b], TransferSyntax::ExplicitVrLittleEndian, None).is_err());
    }

    #[test]
    fn syntax_uids() {
        assert_eq!(TransferSyntax::from_uid("1.2.840.10008.1.2\0").unwrap(), TransferSyntax::ImplicitVrLittleEndian);
        assert!(TransferSyntax::from_uid(EXPLICIT_VR_BE).is_err());
        assert!(TransferSyntax::from_uid("1.2.840.10008.1.2.4.50").unwrap().is_encapsulated());
    }
}
