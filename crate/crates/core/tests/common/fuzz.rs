//! Seeded generator for DICOM datasets carrying planted PHI.

use deid_core::dicom::{tags, DataElement, DataSet, Tag, TransferSyntax, Value, Vr};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SURNAMES: &[&str] = &["SMITH", "NGUYEN", "GARCIA", "OKAFOR", "MULLER", "ROSSI", "TANAKA"];
const GIVEN: &[&str] = &["JOHN", "MARIA", "WEI", "AMARA", "LUCA", "SOFIA", "KENJI"];
const BENIGN: &[&str] = &[
    "CHEST PA", "AXIAL 5MM", "SOFT TISSUE", "v2.1.4", "PROTOCOL B", "LUNG WINDOW", "CALIBRATED", "NONE", "1.5",
    "STANDARD",
];

pub const MRN_PREFIX: &str = "MRN";

pub fn patient_id(p: usize) -> String {
    format!("{MRN_PREFIX}{:05}", 1000 + p)
}

fn name(rng: &mut ChaCha8Rng) -> String {
    format!("{}^{}", SURNAMES.choose(rng).unwrap(), GIVEN.choose(rng).unwrap())
}

fn date(rng: &mut ChaCha8Rng) -> String {
    format!("{}{:02}{:02}", rng.random_range(1950..2024), rng.random_range(1..=12), rng.random_range(1..=28))
}

fn planted(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => name(rng),
        1 => format!("MRN {}", rng.random_range(10_000_000..99_999_999)),
        2 => format!("({}) {}-{}", rng.random_range(200..999), rng.random_range(200..999), rng.random_range(1000..9999)),
        3 => date(rng),
        _ => format!("seen {}-0{}-1{}", rng.random_range(1990..2020), rng.random_range(1..9), rng.random_range(0..9)),
    }
}

fn uid(rng: &mut ChaCha8Rng) -> String {
    format!("1.2.826.0.1.3680043.{}.{}", rng.random_range(1..99999), rng.random_range(1..999999))
}

/// One file for patient `p`. Files of the same patient share PatientID,
/// name and birth date.
pub fn fuzz_dataset(seed: u64, p: usize, file: usize) -> DataSet {
    let mut prng = ChaCha8Rng::seed_from_u64(seed ^ (p as u64) << 20);
    let patient_name = name(&mut prng);
    let birth = date(&mut prng);
    let rng = &mut ChaCha8Rng::seed_from_u64(seed ^ (p as u64) << 20 ^ (file as u64 + 1) << 40);

    let ts = if rng.random_bool(0.5) {
        TransferSyntax::ExplicitVrLittleEndian
    } else {
        TransferSyntax::ImplicitVrLittleEndian
    };
    let sop = uid(rng);
    let mut ds = DataSet::with_file_meta(ts.clone(), "1.2.840.10008.5.1.4.1.1.7", &sop);
    let t = |g, e| Tag::new(g, e);
    ds.insert(DataElement::text(tags::SOP_CLASS_UID, Vr::UI, "1.2.840.10008.5.1.4.1.1.7"));
    ds.insert(DataElement::text(tags::SOP_INSTANCE_UID, Vr::UI, &sop));
    ds.insert(DataElement::text(tags::STUDY_DATE, Vr::DA, &date(rng)));
    ds.insert(DataElement::text(t(0x0008, 0x0021), Vr::DA, &date(rng)));
    ds.insert(DataElement::text(t(0x0008, 0x0030), Vr::TM, "101500.25"));
    ds.insert(DataElement::text(t(0x0008, 0x002A), Vr::DT, &format!("{}093000", date(rng))));
    ds.insert(DataElement::text(t(0x0008, 0x0050), Vr::SH, &format!("ACC{}", rng.random_range(1000..9999))));
    ds.insert(DataElement::text(tags::MODALITY, Vr::CS, ["CT", "MR", "CR", "US"].choose(rng).unwrap()));
    ds.insert(DataElement::text(tags::INSTITUTION_NAME, Vr::LO, "MERCY GENERAL HOSPITAL"));
    ds.insert(DataElement::text(t(0x0008, 0x0081), Vr::ST, "12 ELM STREET SPRINGFIELD"));
    ds.insert(DataElement::text(t(0x0008, 0x0090), Vr::PN, &name(rng)));
    ds.insert(DataElement::text(t(0x0008, 0x1010), Vr::SH, "CT-ROOM-3"));
    ds.insert(DataElement::text(t(0x0008, 0x1030), Vr::LO, if rng.random_bool(0.3) { "FOLLOW UP DOE^JOHN" } else { "CT HEAD" }));
    ds.insert(DataElement::text(tags::PATIENT_NAME, Vr::PN, &patient_name));
    ds.insert(DataElement::text(tags::PATIENT_ID, Vr::LO, &patient_id(p)));
    ds.insert(DataElement::text(tags::PATIENT_BIRTH_DATE, Vr::DA, &birth));
    ds.insert(DataElement::text(t(0x0010, 0x0040), Vr::CS, "F"));
    ds.insert(DataElement::text(t(0x0010, 0x1010), Vr::AS, &format!("{:03}Y", rng.random_range(1..104))));
    ds.insert(DataElement::text(t(0x0010, 0x1040), Vr::LO, "44 OAK AVE"));
    ds.insert(DataElement::text(t(0x0010, 0x2154), Vr::SH, "555-201-3344"));
    ds.insert(DataElement::text(t(0x0018, 0x1000), Vr::LO, &format!("SN{}", rng.random_range(1000..9999))));
    ds.insert(DataElement::text(tags::STUDY_INSTANCE_UID, Vr::UI, &uid(rng)));
    ds.insert(DataElement::text(tags::SERIES_INSTANCE_UID, Vr::UI, &uid(rng)));
    ds.insert(DataElement::text(t(0x0020, 0x4000), Vr::LT, &if rng.random_bool(0.5) { planted(rng) } else { "NO COMMENT".into() }));
    ds.insert(DataElement::u16(tags::ROWS, 4));
    ds.insert(DataElement::u16(tags::COLUMNS, 4));
    if rng.random_bool(0.2) {
        ds.insert(DataElement::text(t(0x0008, 0x0023), Vr::DA, "2020-01-15"));
    }

    // private block, some values planted
    ds.insert(DataElement::text(t(0x0009, 0x0010), Vr::LO, "ACME PRIVATE"));
    for e in 0..rng.random_range(1..6u16) {
        let v = if rng.random_bool(0.4) { planted(rng) } else { BENIGN.choose(rng).unwrap().to_string() };
        ds.insert(DataElement::text(t(0x0009, 0x1001 + e), Vr::LO, &v));
    }
    ds.insert(DataElement::new(t(0x0009, 0x10F0), Vr::OB, Value::Bytes(vec![0x00, 0xFF, 0x13, 0x07])));

    // nested item with its own identifiers
    let mut item = DataSet::bare(ts.clone());
    item.insert(DataElement::text(t(0x0008, 0x1150), Vr::UI, "1.2.840.10008.5.1.4.1.1.7"));
    item.insert(DataElement::text(t(0x0008, 0x1155), Vr::UI, &uid(rng)));
    item.insert(DataElement::text(t(0x0040, 0xA123), Vr::PN, &name(rng)));
    item.insert(DataElement::text(t(0x0011, 0x1001), Vr::LO, &planted(rng)));
    ds.insert(DataElement::sequence(t(0x0008, 0x1140), vec![item]));
    ds.refresh_group_lengths();
    ds
}

/// `n` files spread over `n / 4` patients.
pub fn fuzz_corpus(seed: u64, n: usize) -> Vec<(usize, DataSet)> {
    let patients = (n / 4).max(1);
    (0..n).map(|i| (i % patients, fuzz_dataset(seed, i % patients, i))).collect()
}
