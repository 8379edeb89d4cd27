use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const KEY: &str = "cli-test-key-0123456789abcdef0123";

fn deid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deid"))
        .args(args)
        .env("DEID_CLI_TEST_KEY", KEY)
        .env_remove("DEID_JITTER_KEY")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

#[test]
fn synth_run_verify_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let out = tmp.path().join("out");
    let r = deid(&["synth", "--out", s(&corpus), "--n", "6", "--seed", "3", "--width", "96", "--height", "96"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let r = deid(&["run", "--input", s(&corpus.join("images")), "--output", s(&out), "--seed", "3", "--workers", "2"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(summary["clean"], 6);
    assert_eq!(code(&deid(&["verify", s(&out)])), 0);
    let reports = tmp.path().join("reports");
    let r = deid(&["eval", "--corpus", s(&corpus), "--outputs", s(&out), "--report-dir", s(&reports)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(reports.join("summary.txt").is_file());

    // unredacted overlays are findings
    assert_eq!(code(&deid(&["verify", s(&corpus.join("images"))])), 2);
}

#[test]
fn dicom_run_takes_the_key_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fs::create_dir_all(&input).unwrap();
    for name in ["explicit_8bit_odd.dcm", "implicit_16bit_2frames.dcm"] {
        fs::copy(fixture(name), input.join(name)).unwrap();
    }
    let out = tmp.path().join("out");
    let r = deid(&["run", "--input", s(&input), "--output", s(&out)]);
    assert_eq!(code(&r), 3, "default key variable is unset");
    assert!(!out.join("images").exists());

    let r = deid(&["run", "--input", s(&input), "--output", s(&out), "--key-env", "DEID_CLI_TEST_KEY"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for o in [&r.stdout, &r.stderr] {
        assert!(!String::from_utf8_lossy(o).contains(KEY));
    }
    for entry in walk(&out) {
        let bytes = fs::read(&entry).unwrap();
        assert!(!bytes.windows(KEY.len()).any(|w| w == KEY.as_bytes()), "{}", entry.display());
    }
    assert_eq!(code(&deid(&["verify", s(&out)])), 0);

    let key_file = tmp.path().join("key");
    fs::write(&key_file, KEY).unwrap();
    let out2 = tmp.path().join("out2");
    let r = deid(&["run", "--input", s(&input), "--output", s(&out2), "--key-file", s(&key_file)]);
    assert_eq!(code(&r), 0);
    assert_eq!(
        fs::read(out.join("images/explicit_8bit_odd.dcm")).unwrap(),
        fs::read(out2.join("images/explicit_8bit_odd.dcm")).unwrap()
    );
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn configuration_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = s(tmp.path());
    assert_eq!(code(&deid(&["run", "--input", d, "--output", d])), 3);
    assert_eq!(code(&deid(&["run", "--input", d, "--output", "/tmp/x", "--key", KEY])), 3);
    assert_eq!(code(&deid(&["run", "--input", d, "--output", "/tmp/x", "--backend", "magic"])), 3);
    assert_eq!(code(&deid(&["run", "--input", d, "--output", &format!("{d}/sub"), "--radius", "0"])), 3);
    assert_eq!(code(&deid(&["verify", &format!("{d}/missing")])), 3);
    assert_eq!(code(&deid(&["frobnicate"])), 3);
    assert_eq!(code(&deid(&["--help"])), 0);
}

#[test]
fn policy_check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&deid(&["policy", "check"])), 0);
    let p = tmp.path().join("p.tsv");
    fs::write(&p, "PatientName\tPSEUDONYM\tnames\n").unwrap();
    let r = deid(&["policy", "check", "--policy", s(&p)]);
    assert_eq!(code(&r), 2);
    let check: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(check["gaps"].as_array().unwrap().len(), 17);
    fs::write(&p, "garbage line\n").unwrap();
    assert_eq!(code(&deid(&["policy", "check", "--policy", s(&p)])), 3);
}
