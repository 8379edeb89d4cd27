use std::fmt;

/// DICOM value representation.
///
/// `Unknown` keeps a code that is not in the standard table; it is handled
/// with UN semantics but written back with its original two bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vr {
    AE, AS, AT, CS, DA, DS, DT, FD, FL, IS, LO, LT, OB, OD, OF, OL, OV, OW,
    PN, SH, SL, SQ, SS, ST, SV, TM, UC, UI, UL, UN, UR, US, UT, UV,
    Unknown([u8; 2]),
}

const TABLE: [(Vr, &[u8; 2]); 34] = [
    (Vr::AE, b"AE"), (Vr::AS, b"AS"), (Vr::AT, b"AT"), (Vr::CS, b"CS"),
    (Vr::DA, b"DA"), (Vr::DS, b"DS"), (Vr::DT, b"DT"), (Vr::FD, b"FD"),
    (Vr::FL, b"FL"), (Vr::IS, b"IS"), (Vr::LO, b"LO"), (Vr::LT, b"LT"),
    (Vr::OB, b"OB"), (Vr::OD, b"OD"), (Vr::OF, b"OF"), (Vr::OL, b"OL"),
    (Vr::OV, b"OV"), (Vr::OW, b"OW"), (Vr::PN, b"PN"), (Vr::SH, b"SH"),
    (Vr::SL, b"SL"), (Vr::SQ, b"SQ"), (Vr::SS, b"SS"), (Vr::ST, b"ST"),
    (Vr::SV, b"SV"), (Vr::TM, b"TM"), (Vr::UC, b"UC"), (Vr::UI, b"UI"),
    (Vr::UL, b"UL"), (Vr::UN, b"UN"), (Vr::UR, b"UR"), (Vr::US, b"US"),
    (Vr::UT, b"UT"), (Vr::UV, b"UV"),
];

impl Vr {
    /// Standard VR for a code, `None` if not in the table.
    pub fn from_code(code: [u8; 2]) -> Option<Vr> {
        TABLE.iter().find(|(_, c)| **c == code).map(|(vr, _)| *vr)
    }

    pub fn from_code_or_unknown(code: [u8; 2]) -> Vr {
        Self::from_code(code).unwrap_or(Vr::Unknown(code))
    }

    pub fn code(&self) -> [u8; 2] {
        match self {
            Vr::Unknown(c) => *c,
            vr => *TABLE.iter().find(|(v, _)| v == vr).map(|(_, c)| *c).unwrap(),
        }
    }

    /// Explicit-VR header uses 2 reserved bytes and a 32-bit length.
    pub fn has_long_header(&self) -> bool {
        matches!(
            self,
            Vr::OB | Vr::OD | Vr::OF | Vr::OL | Vr::OV | Vr::OW | Vr::SQ | Vr::UC
                | Vr::UN | Vr::UR | Vr::UT | Vr::UV | Vr::Unknown(_)
        )
    }

    pub fn is_text(&self) -> bool {
        matches!(
            self,
            Vr::AE | Vr::AS | Vr::CS | Vr::DA | Vr::DS | Vr::DT | Vr::IS | Vr::LO
                | Vr::LT | Vr::PN | Vr::SH | Vr::ST | Vr::TM | Vr::UC | Vr::UI
                | Vr::UR | Vr::UT
        )
    }

    pub fn is_date_like(&self) -> bool {
        matches!(self, Vr::DA | Vr::DT)
    }

    /// Byte appended to reach even length.
    pub fn padding(&self) -> u8 {
        if self.is_text() && *self != Vr::UI {
            b' '
        } else {
            0
        }
    }

    /// Opaque (UN-like) representation.
    pub fn is_unknown(&self) -> bool {
        matches!(self, Vr::UN | Vr::Unknown(_))
    }
}

impl fmt::Debug for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.code();
        write!(f, "{}{}", c[0] as char, c[1] as char)
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for (vr, code) in TABLE {
            assert_eq!(Vr::from_code(*code), Some(vr));
            assert_eq!(vr.code(), *code);
        }
        assert_eq!(Vr::from_code_or_unknown(*b"ZZ"), Vr::Unknown(*b"ZZ"));
        assert!(Vr::Unknown(*b"ZZ").has_long_header());
        assert!(!Vr::PN.has_long_header());
    }
}
