use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn gaseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaseq")).args(args).output().expect("binary runs")
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_prints_the_monopoly_equilibrium() {
    let o = gaseq(&["solve", path(&fixture("monopoly.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("status: solved"));
    assert!(text.contains("node N: lambda=500.000 s=66.667"), "{text}");
    assert!(text.contains("trader F1: production=66.667"), "{text}");
}

#[test]
fn solve_period_detail_lists_sales() {
    let o = gaseq(&["solve", "--period-detail", path(&fixture("duopoly.json"))]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches(" sells ").count(), 2);
}

#[test]
fn plan_lists_every_run() {
    let o = gaseq(&["plan", path(&fixture("two_node.json")), path(&fixture("updates_ky2.json"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 7, "{text}");
    assert!(rows[0].split_whitespace().collect::<Vec<_>>() == ["2014", "0", "REF", "-"], "{}", rows[0]);
    assert!(rows[6].contains("RSA") && rows[6].contains("R:B") && rows[6].contains("A:A-B"), "{}", rows[6]);
}

#[test]
fn run_is_reproducible_and_report_checks_it() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let model = fixture("two_node.json");
    let updates = fixture("updates_ky2.json");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = gaseq(&["run", path(&model), path(&updates), "--out", path(out), "--parallel", threads, "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());

    let o = gaseq(&["report", path(&a)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1 + 7);

    // tamper with an aggregate cell of the first delta row
    let text = String::from_utf8(first).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let col = header.split(',').position(|c| c == "dSW").unwrap();
    let tampered: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with("1,") {
                let mut cells: Vec<String> = l.split(',').map(String::from).collect();
                let v: f64 = cells[col].parse().unwrap();
                cells[col] = (v + 1.0).to_string();
                cells.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, tampered.join("\n") + "\n").unwrap();
    assert_eq!(gaseq(&["report", path(&bad)]).status.code(), Some(1));
}

#[test]
fn calibrate_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("calibrated.json");
    let calib = fixture("calib5.json");
    let o = gaseq(&["calibrate", path(&calib), path(&calib), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("consumption: max rel"));
    let o = gaseq(&["solve", path(&out)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("node ")).count(), 4);
}

#[test]
fn exit_codes() {
    let o = gaseq(&["solve", path(&fixture("invalid_theta.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("θ ∈ [0,1]"));
    assert_eq!(gaseq(&["solve", "/nonexistent/model.json"]).status.code(), Some(3));
    assert_eq!(gaseq(&["report", "/nonexistent/results.csv"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(gaseq(&["solve", path(&garbage)]).status.code(), Some(1));
}
