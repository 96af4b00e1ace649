use std::path::Path;
use std::process::{Command, Output};

fn doall(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doall"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn simulate_minimal_config() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"p": 4, "t": 8, "algorithm": "balance_load", "f": 0}"#,
    );
    let o = doall(
        &["simulate", "--config", "c.json", "--out", "run"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("run/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["metrics"]["tasks_completed"], true);
    assert_eq!(metrics["config"]["p"], 4);
    assert_eq!(metrics["code_version"], doall_cli::CODE_VERSION);
    for f in ["config.json", "trace.ndjson"] {
        let text = std::fs::read_to_string(d.path().join("run").join(f)).unwrap();
        assert!(text.contains(doall_cli::CODE_VERSION), "{f}");
    }
}

#[test]
fn invalid_config_exits_2() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"p": 4, "t": 8, "algorithm": "balance_load", "f": 4}"#,
    );
    let o = doall(&["simulate", "--config", "c.json"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["issues"][0]["field"], "f");
    write(d.path(), "broken.json", "{\"p\": 4,");
    assert_eq!(
        doall(&["simulate", "--config", "broken.json"], d.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn round_cap_exits_4() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"p": 4, "t": 8, "algorithm": "balance_load"}"#,
    );
    let o = doall(
        &[
            "simulate",
            "--config",
            "c.json",
            "--round-cap",
            "3",
            "--out",
            "x",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"p": 8, "t": 40, "algorithm": "effort_priority", "adversary": {"kind": "random"}, "trace": "full"}"#,
    );
    for out in ["a", "b"] {
        assert_eq!(
            doall(
                &["simulate", "--config", "c.json", "--seed", "9", "--out", out],
                d.path()
            )
            .status
            .code(),
            Some(0)
        );
    }
    for f in ["config.json", "trace.ndjson", "metrics.json"] {
        assert_eq!(
            std::fs::read(d.path().join("a").join(f)).unwrap(),
            std::fs::read(d.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn sweep_rows_and_resume() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "g.json",
        r#"{"algorithms": ["balance_load"], "p": [4, 8], "t": ["p", 20], "seeds": 1}"#,
    );
    assert_eq!(
        doall(&["sweep", "--grid", "g.json", "--out", "s"], d.path())
            .status
            .code(),
        Some(0)
    );
    let rows = || {
        std::fs::read_to_string(d.path().join("s/sweep.csv"))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert_eq!(rows(), 4);
    // drop the last row as if the sweep had been killed, then resume
    let text = std::fs::read_to_string(d.path().join("s/sweep.csv")).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    std::fs::write(
        d.path().join("s/sweep.csv"),
        cut[..cut.len() - 1].join("\n") + "\n",
    )
    .unwrap();
    let o = doall(
        &["sweep", "--grid", "g.json", "--out", "s", "--jobs", "2"],
        d.path(),
    );
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (summary["skipped"].as_u64(), summary["ran"].as_u64()),
        (Some(3), Some(1))
    );
    assert_eq!(rows(), 4);
    let o = doall(
        &["analyze", "--sweep", "s/sweep.csv", "--out", "rep"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(d.path().join("rep/bounds.csv"))
        .unwrap()
        .starts_with("algorithm,p,ratio"));
}

#[test]
fn graph_build_and_verify() {
    let d = tempfile::tempdir().unwrap();
    let o = doall(
        &[
            "graph", "build", "--mode", "lps", "--q", "5", "--nodes", "300", "--out", "l.txt",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let head = std::fs::read_to_string(d.path().join("l.txt")).unwrap();
    assert!(head.starts_with("336 1008\n"));
    write(d.path(), "k4.txt", "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let o = doall(
        &["graph", "verify", "--input", "k4.txt", "--samples", "50"],
        d.path(),
    );
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["spectral"]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["tanner"]["violations"], 0);
    write(d.path(), "split.txt", "4 2\n0 1\n2 3\n");
    assert_eq!(
        doall(&["graph", "verify", "--input", "split.txt"], d.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn analyze_trace_writes_reports() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"p": 8, "t": 400, "algorithm": "deterministic_permutations", "adversary": {"kind": "random"}}"#,
    );
    assert_eq!(
        doall(&["simulate", "--config", "c.json", "--out", "r"], d.path())
            .status
            .code(),
        Some(0)
    );
    let o = doall(
        &["analyze", "--trace", "r/trace.ndjson", "--out", "an"],
        d.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let epochs = std::fs::read_to_string(d.path().join("an/epochs.csv")).unwrap();
    assert!(epochs.lines().count() >= 2);
}

#[test]
fn perms_dump_round_trips() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        doall(&["perms", "dump", "--p", "4", "--out", "t.txt"], d.path())
            .status
            .code(),
        Some(0)
    );
    let table = doall::rules::PermutationTable::parse(
        std::io::BufReader::new(std::fs::File::open(d.path().join("t.txt")).unwrap()),
        4,
    )
    .unwrap();
    let mut again = Vec::new();
    table.write(&mut again).unwrap();
    assert_eq!(again, std::fs::read(d.path().join("t.txt")).unwrap());
}
