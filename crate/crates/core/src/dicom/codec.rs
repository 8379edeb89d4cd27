//! Part 10 byte-stream decoding and encoding (little endian, implicit and
//! explicit VR).

use super::dictionary::Dictionary;
use super::{tags, DataElement, DataSet, DicomError, Item, Sequence, Tag, TransferSyntax, Value, Vr};

const UNDEFINED: u32 = 0xFFFF_FFFF;

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept a stream without the 128-byte preamble and `DICM` magic. The
    /// body syntax is then taken from the file meta group if present, or
    /// sniffed from the first element header.
    pub allow_raw: bool,
}

pub fn parse_dicom(bytes: &[u8]) -> Result<DataSet, DicomError> {
    parse_dicom_with(bytes, ParseOptions::default())
}

pub fn parse_dicom_with(bytes: &[u8], opts: ParseOptions) -> Result<DataSet, DicomError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let preamble = if bytes.len() >= 132 && &bytes[128..132] == b"DICM" {
        r.pos = 132;
        Some(bytes[..128].to_vec())
    } else if opts.allow_raw {
        None
    } else {
        return Err(DicomError::MissingMagic);
    };

    let mut elements = Vec::new();
    while r.peek_tag().is_some_and(|t| t.is_file_meta()) {
        let start = r.pos;
        let tag = r.tag()?;
        let element = read_element(&mut r, tag, true, &TransferSyntax::ExplicitVrLittleEndian)?;
        push_ordered(&mut elements, element, start)?;
    }

    let syntax = match elements.iter().find(|e| e.tag == tags::TRANSFER_SYNTAX_UID) {
        Some(e) => TransferSyntax::from_uid(&e.text_value().unwrap_or_default())?,
        None if preamble.is_none() && sniff_explicit(&r) => TransferSyntax::ExplicitVrLittleEndian,
        None => TransferSyntax::ImplicitVrLittleEndian,
    };

    let body = read_body(&mut r, syntax.is_explicit(), Stop::Eof, &syntax)?;
    if let (Some(last), Some(first)) = (elements.last(), body.first()) {
        if last.tag >= first.tag {
            return Err(DicomError::OutOfOrder {
                tag: first.tag,
                offset: r.pos,
            });
        }
    }
    elements.extend(body);
    DataSet::from_elements(elements, syntax, preamble)
}

pub fn serialize_dicom(ds: &DataSet) -> Result<Vec<u8>, DicomError> {
    let mut out = Vec::new();
    if let Some(preamble) = ds.preamble() {
        out.extend_from_slice(preamble);
        out.extend_from_slice(b"DICM");
    }
    let explicit = ds.transfer_syntax().is_explicit();
    for e in ds.iter() {
        write_element(&mut out, e, explicit || e.tag.is_file_meta())?;
    }
    Ok(out)
}

/// Encoded size of an element including its header.
pub(crate) fn encoded_len(e: &DataElement, explicit: bool) -> usize {
    let mut buf = Vec::new();
    let _ = write_element(&mut buf, e, explicit);
    buf.len()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DicomError> {
        if self.buf.len() - self.pos.min(self.buf.len()) < n {
            return Err(DicomError::Truncated {
                offset: self.pos,
                needed: n,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, DicomError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DicomError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self) -> Result<Tag, DicomError> {
        let group = self.u16()?;
        let element = self.u16()?;
        Ok(Tag::new(group, element))
    }

    fn peek_tag(&self) -> Option<Tag> {
        let b = self.buf.get(self.pos..self.pos + 4)?;
        Some(Tag::new(
            u16::from_le_bytes([b[0], b[1]]),
            u16::from_le_bytes([b[2], b[3]]),
        ))
    }
}

fn sniff_explicit(r: &Reader<'_>) -> bool {
    r.buf
        .get(r.pos + 4..r.pos + 6)
        .and_then(|c| Vr::from_code([c[0], c[1]]))
        .is_some()
}

#[derive(Clone, Copy)]
enum Stop {
    Eof,
    At(usize),
    ItemDelimiter,
}

fn push_ordered(list: &mut Vec<DataElement>, e: DataElement, offset: usize) -> Result<(), DicomError> {
    if list.last().is_some_and(|last| last.tag >= e.tag) {
        return Err(DicomError::OutOfOrder { tag: e.tag, offset });
    }
    list.push(e);
    Ok(())
}

fn read_body(
    r: &mut Reader<'_>,
    explicit: bool,
    stop: Stop,
    syntax: &TransferSyntax,
) -> Result<Vec<DataElement>, DicomError> {
    let mut elements = Vec::new();
    loop {
        match stop {
            Stop::Eof if r.at_end() => break,
            Stop::At(end) if r.pos >= end => {
                if r.pos > end {
                    return Err(DicomError::LengthOverrun { offset: r.pos });
                }
                break;
            }
            _ => {}
        }
        let start = r.pos;
        let tag = r.tag()?;
        if tag == tags::ITEM_DELIMITATION && matches!(stop, Stop::ItemDelimiter) {
            r.u32()?;
            return Ok(elements);
        }
        if tag.is_delimiter() {
            return Err(DicomError::UnexpectedDelimiter { tag, offset: start });
        }
        let element = read_element(r, tag, explicit, syntax)?;
        push_ordered(&mut elements, element, start)?;
    }
    if matches!(stop, Stop::ItemDelimiter) {
        return Err(DicomError::Truncated {
            offset: r.pos,
            needed: 8,
        });
    }
    Ok(elements)
}

fn read_element(
    r: &mut Reader<'_>,
    tag: Tag,
    explicit: bool,
    syntax: &TransferSyntax,
) -> Result<DataElement, DicomError> {
    let header_at = r.pos;
    let (vr, len) = if explicit {
        let code = r.take(2)?;
        let vr = Vr::from_code_or_unknown([code[0], code[1]]);
        if vr.has_long_header() {
            r.take(2)?;
            (vr, r.u32()?)
        } else {
            (vr, r.u16()? as u32)
        }
    } else {
        (Dictionary::standard().vr_of(tag), r.u32()?)
    };

    let value = if len == UNDEFINED {
        if tag == tags::PIXEL_DATA {
            Value::Fragments(read_fragments(r)?)
        } else if vr == Vr::SQ || vr.is_unknown() {
            let nested_explicit = explicit && vr == Vr::SQ;
            Value::Sequence(Sequence {
                items: read_items(r, nested_explicit, Stop::ItemDelimiter, syntax)?,
                undefined_length: true,
            })
        } else {
            return Err(DicomError::UndefinedLength { tag, offset: header_at });
        }
    } else if vr == Vr::SQ {
        let end = r.pos + len as usize;
        if end > r.buf.len() {
            return Err(DicomError::Truncated {
                offset: r.pos,
                needed: len as usize,
            });
        }
        Value::Sequence(Sequence {
            items: read_items(r, explicit, Stop::At(end), syntax)?,
            undefined_length: false,
        })
    } else {
        Value::Bytes(r.take(len as usize)?.to_vec())
    };
    Ok(DataElement { tag, vr, value })
}

/// Reads sequence items. `Stop::ItemDelimiter` here means "until the
/// sequence delimitation item".
fn read_items(
    r: &mut Reader<'_>,
    explicit: bool,
    stop: Stop,
    syntax: &TransferSyntax,
) -> Result<Vec<Item>, DicomError> {
    let item_syntax = if explicit {
        syntax.clone()
    } else {
        TransferSyntax::ImplicitVrLittleEndian
    };
    let mut items = Vec::new();
    loop {
        if let Stop::At(end) = stop {
            if r.pos >= end {
                if r.pos > end {
                    return Err(DicomError::LengthOverrun { offset: r.pos });
                }
                break;
            }
        }
        let start = r.pos;
        let tag = r.tag()?;
        if tag == tags::SEQUENCE_DELIMITATION && matches!(stop, Stop::ItemDelimiter) {
            r.u32()?;
            break;
        }
        if tag != tags::ITEM {
            return Err(DicomError::UnexpectedDelimiter { tag, offset: start });
        }
        let len = r.u32()?;
        let (elements, undefined_length) = if len == UNDEFINED {
            (read_body(r, explicit, Stop::ItemDelimiter, &item_syntax)?, true)
        } else {
            let end = r.pos + len as usize;
            if end > r.buf.len() {
                return Err(DicomError::Truncated {
                    offset: r.pos,
                    needed: len as usize,
                });
            }
            (read_body(r, explicit, Stop::At(end), &item_syntax)?, false)
        };
        items.push(Item {
            dataset: DataSet::from_elements(elements, item_syntax.clone(), None)?,
            undefined_length,
        });
    }
    Ok(items)
}

fn read_fragments(r: &mut Reader<'_>) -> Result<Vec<Vec<u8>>, DicomError> {
    let mut fragments = Vec::new();
    loop {
        let start = r.pos;
        let tag = r.tag()?;
        let len = r.u32()?;
        match tag {
            tags::ITEM => fragments.push(r.take(len as usize)?.to_vec()),
            tags::SEQUENCE_DELIMITATION => return Ok(fragments),
            _ => return Err(DicomError::UnexpectedDelimiter { tag, offset: start }),
        }
    }
}

fn put_tag(out: &mut Vec<u8>, tag: Tag) {
    out.extend_from_slice(&tag.group.to_le_bytes());
    out.extend_from_slice(&tag.element.to_le_bytes());
}

fn put_header(out: &mut Vec<u8>, tag: Tag, vr: Vr, len: u32, explicit: bool) -> Result<(), DicomError> {
    put_tag(out, tag);
    if !explicit {
        out.extend_from_slice(&len.to_le_bytes());
        return Ok(());
    }
    out.extend_from_slice(&vr.code());
    if vr.has_long_header() {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&len.to_le_bytes());
    } else {
        let short = u16::try_from(len).map_err(|_| DicomError::ValueTooLong { tag, len: len as usize })?;
        out.extend_from_slice(&short.to_le_bytes());
    }
    Ok(())
}

fn write_element(out: &mut Vec<u8>, e: &DataElement, explicit: bool) -> Result<(), DicomError> {
    match &e.value {
        Value::Bytes(bytes) => {
            if bytes.len() % 2 == 1 {
                return Err(DicomError::OddLength(e.tag));
            }
            let len = u32::try_from(bytes.len()).map_err(|_| DicomError::ValueTooLong {
                tag: e.tag,
                len: bytes.len(),
            })?;
            put_header(out, e.tag, e.vr, len, explicit)?;
            out.extend_from_slice(bytes);
        }
        Value::Sequence(seq) => {
            let nested_explicit = explicit && e.vr == Vr::SQ;
            let mut body = Vec::new();
            for item in &seq.items {
                write_item(&mut body, item, nested_explicit)?;
            }
            if seq.undefined_length {
                put_header(out, e.tag, e.vr, UNDEFINED, explicit)?;
                out.extend_from_slice(&body);
                put_tag(out, tags::SEQUENCE_DELIMITATION);
                out.extend_from_slice(&0u32.to_le_bytes());
            } else {
                put_header(out, e.tag, e.vr, body.len() as u32, explicit)?;
                out.extend_from_slice(&body);
            }
        }
        Value::Fragments(fragments) => {
            put_header(out, e.tag, e.vr, UNDEFINED, explicit)?;
            for f in fragments {
                if f.len() % 2 == 1 {
                    return Err(DicomError::OddLength(e.tag));
                }
                put_tag(out, tags::ITEM);
                out.extend_from_slice(&(f.len() as u32).to_le_bytes());
                out.extend_from_slice(f);
            }
            put_tag(out, tags::SEQUENCE_DELIMITATION);
            out.extend_from_slice(&0u32.to_le_bytes());
        }
    }
    Ok(())
}

fn write_item(out: &mut Vec<u8>, item: &Item, explicit: bool) -> Result<(), DicomError> {
    let mut body = Vec::new();
    for e in item.dataset.iter() {
        write_element(&mut body, e, explicit)?;
    }
    put_tag(out, tags::ITEM);
    if item.undefined_length {
        out.extend_from_slice(&UNDEFINED.to_le_bytes());
        out.extend_from_slice(&body);
        put_tag(out, tags::ITEM_DELIMITATION);
        out.extend_from_slice(&0u32.to_le_bytes());
    } else {
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
    }
    Ok(())
}
