// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! End-to-end runs of the `dsm-swap` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsm-swap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn gen_route_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("c.json");
    let routed = dir.path().join("r.json");
    let braid = dir.path().join("b.svg");

    let out = run(&["gen", "--family", "qv", "--qubits", "6", "--layers", "5", "--seed", "4", "--out", path(&circuit)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "route", "--circuit", path(&circuit), "--coupling", "ring:6", "--horizon", "2", "--seed", "9",
        "--out", path(&routed), "--emit-braid", path(&braid),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&routed).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["qubits"], 6);
    assert_eq!(value["program"].as_array().unwrap().len(), 5);
    assert_eq!(value["config"]["horizon"], 2);
    assert_eq!(value["config"]["knitter"]["seed"], 9);
    let swaps = value["metrics"]["swaps"].as_u64().unwrap();
    let svg = std::fs::read_to_string(&braid).unwrap();
    assert_eq!(svg.matches("class=\"swap\"").count() as u64, 2 * swaps);

    let out = run(&["verify", "--routed", path(&routed), "--coupling", "ring:6", "--original", path(&circuit)]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["feasible"], true);
}

#[test]
fn coupling_from_json_file_and_undo() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("c.json");
    let coupling = dir.path().join("t.json");
    std::fs::write(&circuit, r#"{"qubits": 4, "gates": [[0, 3], [1, 2], [0, 2]]}"#).unwrap();
    std::fs::write(&coupling, r#"{"qubits": 4, "edges": [[0, 1], [1, 2], [2, 3]]}"#).unwrap();
    let out = run(&["route", "--circuit", path(&circuit), "--coupling", path(&coupling), "--undo-final-permutation"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["final_permutation"], serde_json::json!([0, 1, 2, 3]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"qubits": 2, "gates": [[0, 0]]}"#).unwrap();
    assert_eq!(run(&["route", "--circuit", path(&bad), "--coupling", "line:3"]).status.code(), Some(3));
    assert_eq!(run(&["route", "--circuit", "/nonexistent.json", "--coupling", "line:3"]).status.code(), Some(3));
    assert_eq!(run(&["route", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(run(&["gen", "--family", "qv", "--qubits", "1", "--layers", "2"]).status.code(), Some(3));

    let circuit = dir.path().join("c.json");
    std::fs::write(&circuit, r#"{"qubits": 4, "gates": [[0, 3]]}"#).unwrap();
    assert_eq!(run(&["route", "--circuit", path(&circuit), "--coupling", "ring:5"]).status.code(), Some(3));

    // two disjoint gates can never share a star's center
    let star = dir.path().join("star.json");
    std::fs::write(&star, r#"{"qubits": 5, "edges": [[0, 1], [0, 2], [0, 3], [0, 4]]}"#).unwrap();
    let pair = dir.path().join("pair.json");
    std::fs::write(&pair, r#"{"qubits": 5, "gates": [[1, 2], [3, 4]]}"#).unwrap();
    assert_eq!(run(&["route", "--circuit", path(&pair), "--coupling", path(&star)]).status.code(), Some(2));

    // a valid routing checked against the wrong coupling fails verification
    let routed = dir.path().join("r.json");
    let out = run(&["route", "--circuit", path(&circuit), "--coupling", "ring:4", "--out", path(&routed)]);
    assert!(out.status.success());
    let code = run(&["verify", "--routed", path(&routed), "--coupling", "line:4", "--original", path(&circuit)])
        .status
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn bench_quick_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let out = run(&["bench", "--protocol", "quick", "--out-csv", path(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("family,topology,qubits"));
    assert_eq!(lines.count(), 48);
    assert!(String::from_utf8_lossy(&out.stderr).contains("merit"));
}
