//! Tag dictionary loaded from the bundled `dictionary.tsv` resource.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{Tag, Vr};

const RESOURCE: &str = include_str!("../../data/dictionary.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictEntry {
    pub tag: Tag,
    pub vr: Vr,
    pub keyword: String,
}

#[derive(Debug, Default)]
pub struct Dictionary {
    by_tag: HashMap<Tag, DictEntry>,
    by_keyword: HashMap<String, Tag>,
}

impl Dictionary {
    /// Parses `tag<TAB>VR<TAB>keyword` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut dict = Dictionary::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [tag, vr, keyword] = cols[..] else {
                return Err(format!("line {}: expected 3 columns", n + 1));
            };
            let tag: Tag = tag.parse().map_err(|e| format!("line {}: {e}", n + 1))?;
            let code: [u8; 2] = vr
                .as_bytes()
                .try_into()
                .map_err(|_| format!("line {}: bad VR {vr:?}", n + 1))?;
            let vr = Vr::from_code(code).ok_or_else(|| format!("line {}: bad VR {vr:?}", n + 1))?;
            dict.by_keyword.insert(keyword.to_string(), tag);
            dict.by_tag.insert(
                tag,
                DictEntry {
                    tag,
                    vr,
                    keyword: keyword.to_string(),
                },
            );
        }
        Ok(dict)
    }

    pub fn standard() -> &'static Dictionary {
        static DICT: OnceLock<Dictionary> = OnceLock::new();
        DICT.get_or_init(|| Dictionary::parse(RESOURCE).expect("bundled dictionary is well formed"))
    }

    pub fn entry(&self, tag: Tag) -> Option<&DictEntry> {
        self.by_tag.get(&tag)
    }

    /// Standard VR, or UN for unknown and private tags. Group lengths are UL.
    pub fn vr_of(&self, tag: Tag) -> Vr {
        if tag.is_group_length() {
            return Vr::UL;
        }
        if tag.is_private_creator() {
            return Vr::LO;
        }
        self.entry(tag).map_or(Vr::UN, |e| e.vr)
    }

    pub fn keyword(&self, tag: Tag) -> Option<&str> {
        self.entry(tag).map(|e| e.keyword.as_str())
    }

    pub fn tag_for(&self, keyword: &str) -> Option<Tag> {
        self.by_keyword.get(keyword).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = &DictEntry> {
        self.by_tag.values()
    }
}
