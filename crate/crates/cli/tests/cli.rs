use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const LE: &str = r#"{"k":2,"relations":[{"name":"le","arity":2,"tuples":[[0,0],[0,1],[1,1]]}]}"#;
const XOR: &str = r#"{"k":2,"relations":[{"name":"xor","arity":3,"tuples":[[0,0,0],[0,1,1],[1,0,1],[1,1,0]]}]}"#;

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn nucheck(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_nucheck")).args(args).output().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json)
}

#[test]
fn decide_order_and_parity() {
    let dir = TempDir::new().unwrap();
    let le = write(&dir, "le.json", LE);
    let (code, v) = nucheck(&["decide", &le]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "Yes");
    assert_eq!(v["arity"], 3);

    let xor = write(&dir, "xor.json", XOR);
    let (code, v) = nucheck(&["decide", &xor]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "No");
    assert_eq!(v["certificate"]["variant"], "EquationFailure");

    let cert = write(&dir, "cert.json", &v["certificate"].to_string());
    let (code, v) = nucheck(&["verify-cert", &xor, &cert]);
    assert_eq!((code, &v["valid"]), (0, &Value::Bool(true)));
    // the same certificate says nothing about the order
    let (code, v) = nucheck(&["verify-cert", &le, &cert]);
    assert_eq!((code, &v["valid"]), (1, &Value::Bool(false)));
}

#[test]
fn zero_budget_is_unknown_with_bound() {
    let dir = TempDir::new().unwrap();
    let xor = write(&dir, "xor.json", XOR);
    let (code, v) = nucheck(&["decide", &xor, "--budget-nodes", "0"]);
    assert_eq!(code, 2);
    assert_eq!(v["verdict"], "Unknown");
    assert_eq!(v["bound"]["base"], 6);
    assert_eq!(v["bound"]["exponent"], "258");
}

#[test]
fn exhaustive_needs_acknowledgment() {
    let dir = TempDir::new().unwrap();
    let le = write(&dir, "le.json", LE);
    let (code, _) = nucheck(&["decide", &le, "--exhaustive"]);
    assert_eq!(code, 1);
    let (code, _) = nucheck(&["decide", &le, "--exhaustive", "--i-know"]);
    assert_eq!(code, 1);
}

#[test]
fn check_bound_and_census() {
    let dir = TempDir::new().unwrap();
    let le = write(&dir, "le.json", LE);
    let (code, v) = nucheck(&["check", &le, "--arity", "3"]);
    assert_eq!((code, v["result"].as_str()), (0, Some("found")));
    let xor = write(&dir, "xor.json", XOR);
    let (code, v) = nucheck(&["check", &xor, "--arity", "4"]);
    assert_eq!((code, v["result"].as_str()), (0, Some("none")));

    let (code, v) = nucheck(&["bound", "--k", "2", "--q", "2", "--digits"]);
    assert_eq!(code, 0);
    let expected = num_string_pow2(516);
    assert_eq!(v["value"].as_str(), Some(expected.as_str()));
    let (code, _) = nucheck(&["bound", "--k", "1", "--q", "2"]);
    assert_eq!(code, 1);

    let (code, v) = nucheck(&["census", &le, "--arity", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["partial"], false);
    assert!(v["relations"].as_array().unwrap().len() > 1);
}

/// 2^e in decimal by repeated doubling of a digit vector.
fn num_string_pow2(e: u32) -> String {
    let mut digits = vec![1u8];
    for _ in 0..e {
        let mut carry = 0;
        for d in digits.iter_mut() {
            let v = *d * 2 + carry;
            *d = v % 10;
            carry = v / 10;
        }
        if carry > 0 {
            digits.push(carry);
        }
    }
    digits.iter().rev().map(|d| char::from(b'0' + d)).collect()
}

#[test]
fn essential_and_equation() {
    let dir = TempDir::new().unwrap();
    let rel = write(&dir, "xor.json", r#"{"k":2,"arity":3,"tuples":[[0,0,0],[0,1,1],[1,0,1],[1,1,0]]}"#);
    let (code, v) = nucheck(&["essential", &rel]);
    assert_eq!(code, 0);
    assert_eq!(v["essential"], true);
    assert!(v["tuple"].is_object());
    let (code, v) = nucheck(&["equation", &rel]);
    assert_eq!(code, 0);
    assert_eq!(v["holds"], false);
    assert_eq!(v["witness"], serde_json::json!([1]));
}

#[test]
fn bad_input_is_an_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"k":2,"relations":[{"name":"r","arity":2,"tuples":[[0,5]]}]}"#);
    let (code, _) = nucheck(&["decide", &bad]);
    assert_eq!(code, 1);
    let missing = Path::new("/nonexistent/structure.json").to_str().unwrap();
    let (code, _) = nucheck(&["decide", missing]);
    assert_eq!(code, 1);
}
