use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{}", env!("CARGO_MANIFEST_DIR"), name)
}

fn kanto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kanto")).args(args).output().expect("run kanto")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn distance_methods() {
    let o = kanto(&["distance", "--model", &fixture("transport.json"), "--method", "lp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("21/10  [exact]"), "{}", stdout(&o));

    let o = kanto(&["distance", "--model", &fixture("exceptions.json"), "--pair", "{x0,y0}|{z0}", "--method", "kleene"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1/4  [exact]"), "{}", stdout(&o));

    let o = kanto(&["distance", "--model", &fixture("probchain.json"), "--pair", "y|x", "--method", "trace", "--max-words", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("15/32  [lower bound]"), "{}", stdout(&o));
}

#[test]
fn certify_exit_codes() {
    let ok = kanto(&["certify", "--model", &fixture("exceptions.json"), "--cert", &fixture("exceptions.cert.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("verdict: accepted"));

    let tampered = std::env::temp_dir().join(format!("kanto-tampered-{}.json", std::process::id()));
    let text = std::fs::read_to_string(fixture("exceptions.cert.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut doc = doc;
    doc["entries"][0]["value"] = serde_json::json!("1/5");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    let bad = kanto(&["certify", "--model", &fixture("exceptions.json"), "--cert", tampered.to_str().unwrap()]);
    std::fs::remove_file(&tampered).ok();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("rejected at ({x0,y0}, {z0})"), "{}", stdout(&bad));
}

#[test]
fn usage_parse_and_budget_errors() {
    assert_eq!(kanto(&["distance", "--model", "/nonexistent.json", "--pair", "a|b"]).status.code(), Some(2));
    assert_eq!(kanto(&["distance", "--model", &fixture("exceptions.json"), "--pair", "{x0}"]).status.code(), Some(2));
    assert_eq!(kanto(&["frobnicate"]).status.code(), Some(2));
    let o = kanto(&["distance", "--model", &fixture("exceptions.json"), "--pair", "{x0}|{z0}", "--method", "trace", "--max-words", "40"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn laws_and_mutant() {
    assert_eq!(kanto(&["laws", "distlaw"]).status.code(), Some(0));
    let o = kanto(&["laws", "distlaw", "--mutant"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("g compatible with η"));
}

#[test]
fn repro_all_and_json_reports_are_deterministic() {
    for ex in ["transport", "pp", "pd", "dp", "dd", "probchain", "exceptions"] {
        let a = kanto(&["repro", ex, "--json"]);
        let b = kanto(&["repro", ex, "--json"]);
        assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
        assert_eq!(a.stdout, b.stdout, "{} is not deterministic", ex);
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(v["exit_code"], 0);
    }
}
