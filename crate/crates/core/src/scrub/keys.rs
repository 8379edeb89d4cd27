//! Keyed hashing: per-patient date offsets and pseudonyms.

use std::fmt;
use std::path::Path;

use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

use super::policy::HipaaCategory;
use super::ScrubError;

pub const MIN_KEY_LEN: usize = 16;
/// Offsets lie in `-365..=-31` or `31..=365`.
pub const OFFSET_SPAN: u64 = 670;

/// Secret for offsets and pseudonyms. Has no `Display` and no serde impls;
/// `Debug` prints a placeholder.
#[derive(Clone)]
pub struct JitterKey(Vec<u8>);

impl JitterKey {
    pub fn new(secret: impl Into<Vec<u8>>) -> Result<Self, ScrubError> {
        let secret = secret.into();
        if secret.len() < MIN_KEY_LEN {
            return Err(ScrubError::Key(format!(
                "key must be at least {MIN_KEY_LEN} bytes, got {}",
                secret.len()
            )));
        }
        Ok(JitterKey(secret))
    }

    pub fn from_env(var: &str) -> Result<Self, ScrubError> {
        let value = std::env::var_os(var)
            .ok_or_else(|| ScrubError::Key(format!("environment variable {var} is not set")))?;
        Self::new(value.into_encoded_bytes())
    }

    /// Reads the whole file; one trailing newline is ignored.
    pub fn from_file(path: &Path) -> Result<Self, ScrubError> {
        let mut bytes = std::fs::read(path)
            .map_err(|e| ScrubError::Key(format!("cannot read key file {}: {e}", path.display())))?;
        if bytes.last() == Some(&b'\n') {
            bytes.pop();
            if bytes.last() == Some(&b'\r') {
                bytes.pop();
            }
        }
        Self::new(bytes)
    }

    fn mac(&self, domain: &[u8], parts: &[&[u8]]) -> [u8; 32] {
        let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(&self.0).expect("hmac accepts any key length");
        mac.update(domain);
        for p in parts {
            mac.update(&(p.len() as u64).to_be_bytes());
            mac.update(p);
        }
        mac.finalize().into_bytes().into()
    }
}

impl fmt::Debug for JitterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("JitterKey(<redacted>)")
    }
}

/// Signed day offset for a patient, never zero, magnitude in `[31, 365]`.
pub fn derive_offset(key: &JitterKey, patient_id: &str) -> Result<i32, ScrubError> {
    if patient_id.trim().is_empty() {
        return Err(ScrubError::MissingPatientId);
    }
    let h = key.mac(b"deid/date-offset", &[patient_id.as_bytes()]);
    let r = u64::from_be_bytes(h[..8].try_into().unwrap()) % OFFSET_SPAN;
    let half = OFFSET_SPAN / 2;
    Ok(if r < half {
        -(31 + r as i32)
    } else {
        31 + (r - half) as i32
    })
}

/// `ANON-<TOKEN>-<12 hex>`; empty input stays empty.
pub fn pseudonymize(key: &JitterKey, original: &str, category: HipaaCategory) -> String {
    if original.is_empty() {
        return String::new();
    }
    let token = category.token();
    let h = key.mac(b"deid/pseudonym", &[token.as_bytes(), original.as_bytes()]);
    let hex: String = h[..6].iter().map(|b| format!("{b:02X}")).collect();
    format!("ANON-{token}-{hex}")
}

/// UID-shaped pseudonym under the `2.25` root (a 128-bit decimal).
pub fn pseudonymize_uid(key: &JitterKey, original: &str) -> String {
    if original.is_empty() {
        return String::new();
    }
    let h = key.mac(b"deid/uid", &[original.as_bytes()]);
    let n = u128::from_be_bytes(h[..16].try_into().unwrap());
    format!("2.25.{n}")
}

pub fn is_pseudonym(value: &str) -> bool {
    let Some(rest) = value.strip_prefix("ANON-") else {
        return false;
    };
    let Some((token, hex)) = rest.rsplit_once('-') else {
        return false;
    };
    !token.is_empty()
        && token.bytes().all(|b| b.is_ascii_uppercase())
        && hex.len() == 12
        && hex.bytes().all(|b| b.is_ascii_digit() || (b'A'..=b'F').contains(&b))
}

pub fn is_uid_pseudonym(value: &str) -> bool {
    value.strip_prefix("2.25.").is_some_and(|n| {
        !n.is_empty() && n.len() <= 39 && n.bytes().all(|b| b.is_ascii_digit()) && (n == "0" || !n.starts_with('0'))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> JitterKey {
        JitterKey::new(b"0123456789abcdef-test-key".to_vec()).unwrap()
    }

    /// Reduction written out longhand. The pinned value below was also
    /// reproduced with Python's hmac module.
    fn oracle_offset(patient_id: &str) -> i32 {
        let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(b"0123456789abcdef-test-key").unwrap();
        mac.update(b"deid/date-offset");
        mac.update(&(patient_id.len() as u64).to_be_bytes());
        mac.update(patient_id.as_bytes());
        let h = mac.finalize().into_bytes();
        let v = u64::from_be_bytes(h[..8].try_into().unwrap()) as u128 % 670;
        let v = v as i32;
        if v < 335 {
            -31 - v
        } else {
            v - 335 + 31
        }
    }

    #[test]
    fn short_keys_rejected_and_debug_redacts() {
        assert!(JitterKey::new(b"short".to_vec()).is_err());
        assert_eq!(format!("{:?}", key()), "JitterKey(<redacted>)");
    }

    #[test]
    fn offset_regression_value() {
        assert_eq!(derive_offset(&key(), "P001").unwrap(), oracle_offset("P001"));
        assert_eq!(derive_offset(&key(), "P001").unwrap(), P001_OFFSET);
    }

    const P001_OFFSET: i32 = 303;

    #[test]
    fn offsets_in_range_and_deterministic() {
        for i in 0..2000 {
            let id = format!("PID{i}");
            let o = derive_offset(&key(), &id).unwrap();
            assert!((31..=365).contains(&o.abs()), "{o}");
            assert_eq!(o, derive_offset(&key(), &id).unwrap());
            assert_eq!(o, oracle_offset(&id));
        }
        assert!(matches!(derive_offset(&key(), ""), Err(ScrubError::MissingPatientId)));
    }

    #[test]
    fn pseudonym_format() {
        let a = pseudonymize(&key(), "SMITH^JOHN", HipaaCategory::Names);
        let b = pseudonymize(&key(), "SMITH^JANE", HipaaCategory::Names);
        assert!(is_pseudonym(&a), "{a}");
        assert!(a.starts_with("ANON-NAMES-"));
        assert_ne!(a, b);
        assert_eq!(a, pseudonymize(&key(), "SMITH^JOHN", HipaaCategory::Names));
        assert_ne!(a, pseudonymize(&key(), "SMITH^JOHN", HipaaCategory::Mrn));
        assert_eq!(pseudonymize(&key(), "", HipaaCategory::Names), "");
        assert!(is_pseudonym(&pseudonymize(&key(), "x", HipaaCategory::HealthPlan)));
        assert!(!is_pseudonym("ANON-NAMES-12345"));
        assert!(!is_pseudonym("SMITH^JOHN"));
    }

    #[test]
    fn uid_pseudonyms() {
        let u = pseudonymize_uid(&key(), "1.2.840.113619.2.55.3");
        assert!(is_uid_pseudonym(&u), "{u}");
        assert!(u.len() <= 64);
        assert!(!is_uid_pseudonym("1.2.840.1"));
    }
}
