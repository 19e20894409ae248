use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gimli-sifa");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn kat_file() -> String {
    format!(
        "{}/tests/data/LWC_AEAD_KAT_256_128.txt",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn kat_file_passes() {
    let o = run(&["kat", &kat_file()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    assert!(out.contains("# vectors=1089 passed=1089 failed=0"));
    assert!(out.lines().any(|l| l == "count,encrypt,decrypt,result"));
}

#[test]
fn kat_empty_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["kat", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "Count = 1\nKey = zz\n").unwrap();
    assert_eq!(run(&["kat", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["kat", "/nonexistent/kat.txt"]).status.code(), Some(2));
}

#[test]
fn ineff_rate_quotes_model_names() {
    let o = run(&[
        "ineff-rate",
        "--width",
        "1,4",
        "--target",
        "50",
        "--model",
        "prob-bitflip",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("model,w,analytic_rate,empirical_rate,trials,n_ineff"));
    assert!(out.contains("\"prob-bitflip:0.6666666666666666,0.3333333333333333\",1,0.5,"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn ineff_rate_leaves_capped_rates_empty() {
    let o = run(&[
        "ineff-rate",
        "--width",
        "32",
        "--target",
        "10",
        "--cap",
        "100",
        "--model",
        "stuck-at-0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("stuck-at-0,32,0.00000000023283064365386963,,100,0"));
}

#[test]
fn histogram_bins() {
    let o = run(&[
        "histogram",
        "--width",
        "2",
        "--model",
        "stuck-at-0",
        "--trials",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "bin,count_nofault,count_ineffective");
    assert_eq!(rows.len(), 5);
    assert!(rows[2].ends_with(",0"));
}

#[test]
fn collect_then_attack_with_files() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces.txt");
    let o = run(&[
        "collect",
        "--round",
        "23",
        "--target",
        "60",
        "--seed",
        "4",
        "--out",
        traces.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_ineff=60"));

    let ranking = dir.path().join("rank.csv");
    let o = run(&[
        "attack",
        traces.to_str().unwrap(),
        "--key",
        "random",
        "--bias-hint",
        "zero",
        "--out",
        ranking.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rank = std::fs::read_to_string(&ranking).unwrap();
    assert!(rank.contains("bit,rank,hypothesis_index,sei,in_best_set,params"));
    assert!(rank.contains("# bit=7 parameters=2"));
    let adv = std::fs::read_to_string(dir.path().join("rank.advantage.csv")).unwrap();
    assert!(adv.contains("bit,n_used,advantage,top_index,tie_size,truth_in_tie"));
    assert!(adv.lines().any(|l| l.starts_with("7,60,")));
    let sei = std::fs::read_to_string(dir.path().join("rank.sei.csv")).unwrap();
    assert!(sei.contains("bit,n_used,sei_correct,sei_best_wrong"));
}

#[test]
fn attack_rejects_mismatched_targets_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces.txt");
    let o = run(&[
        "collect",
        "--target",
        "5",
        "--out",
        traces.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["attack", traces.to_str().unwrap(), "--round", "21"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(
        err.contains("boundary=23") && err.contains("b^21_0,0"),
        "{err}"
    );

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "not a header\n").unwrap();
    let o = run(&["attack", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn collect_cap_writes_partial_file_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("partial.txt");
    let o = run(&[
        "collect",
        "--model",
        "stuck-at-0",
        "--width",
        "16",
        "--target",
        "5",
        "--cap",
        "300",
        "--out",
        traces.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&traces).unwrap();
    assert!(text.lines().next().unwrap().ends_with("trials=300"));
}

#[test]
fn depmap_outputs() {
    let o = run(&["depmap", "--round", "22"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("n_keybits=11 parameters=6 unique=3 groups=3"));
    assert!(out.contains("unique: k1.2 k1.3 k4.29"));
    let grid: Vec<&str> = out
        .lines()
        .filter(|l| l.starts_with("a ") || l.starts_with("b ") || l.starts_with("c "))
        .collect();
    assert_eq!(grid.len(), 3);

    let o = run(&["depmap", "--round", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("enumeration refused"));

    assert_eq!(run(&["depmap", "--round", "19"]).status.code(), Some(2));
    assert_eq!(run(&["depmap", "--spbox", "weird"]).status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(
        run(&["histogram", "--model", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["collect", "--col", "4"]).status.code(), Some(2));
    assert_eq!(run(&["collect", "--offset", "30"]).status.code(), Some(2));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert!(!Path::new("--out").exists());
}
