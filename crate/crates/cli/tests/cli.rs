use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slmakespan"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// CSV records as string fields, header dropped.
fn records(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    r.records().map(|x| x.unwrap()[k].to_string()).collect()
}

#[test]
fn run_chain_with_every_method() {
    let path = fixture("chain.json");
    let o = run(&["run", path.to_str().unwrap(), "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("instance_id,method,status,makespan,wall_time_ms,J,I,level,seed\n"));
    assert_eq!(column(&out, "method"), ["approx5", "equid", "ed-fcfs", "bg", "oracle"]);
    assert!(column(&out, "makespan").iter().all(|m| m == "6"));
    assert!(column(&out, "wall_time_ms").iter().all(|t| t.split_once('.').is_some_and(|(_, d)| d.len() == 1)));
}

#[test]
fn run_reports_bg_failure_with_exit_one() {
    let path = fixture("bg_failure.json");
    let o = run(&["run", path.to_str().unwrap(), "--methods", "bg,equid"]);
    assert_eq!(o.status.code(), Some(1));
    let rows = records(&stdout(&o));
    assert_eq!(rows[0][1..4], ["bg".to_string(), "assignment-failed".into(), String::new()]);
    assert_eq!(rows[1][1..3], ["equid".to_string(), "ok".into()]);
}

#[test]
fn run_straggler_schedulers_differ() {
    let path = fixture("straggler.json");
    let o = run(&["run", path.to_str().unwrap(), "--methods", "equid,ed-fcfs"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "makespan"), ["7", "8"]);
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let chain = fixture("chain.json");
    assert_eq!(run(&["run", chain.to_str().unwrap(), "--methods", "greedy"]).status.code(), Some(2));
    assert_eq!(run(&["run", "/nonexistent/instance.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"clients\": 1,").unwrap();
    let o = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn emitted_schedules_validate_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixture("sparse.json");
    let o = run(&[
        "run",
        inst.to_str().unwrap(),
        "--oracle",
        "--schedules",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for m in ["approx5", "equid", "ed-fcfs", "bg", "oracle"] {
        let s = dir.path().join(format!("sparse.{m}.json"));
        let v = run(&["validate", inst.to_str().unwrap(), "--schedule", s.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "{m}: {}", stdout(&v));
        assert!(stdout(&v).contains("schedule ok"));
    }
    let path = dir.path().join("sparse.equid.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let iv = &mut doc["intervals"][0];
    let start = iv["start"].as_u64().unwrap();
    iv["start"] = (start + 1).into();
    iv["end"] = (iv["end"].as_u64().unwrap() + 1).into();
    std::fs::write(&path, doc.to_string()).unwrap();
    let v = run(&["validate", inst.to_str().unwrap(), "--schedule", path.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).contains("violation"));
}

fn sweep(args: &[&str]) -> (tempfile::TempDir, String, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut full = vec!["sweep"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", dir.path().to_str().unwrap()]);
    let o = run(&full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    let (runs, cmp, summary) = (read("runs.csv"), read("comparisons.csv"), read("summary.csv"));
    (dir, runs, cmp, summary)
}

#[test]
fn sweep_suboptimality_is_never_negative() {
    let cfg = fixture("sweep_small.toml");
    let (_d, runs, cmp, summary) = sweep(&[cfg.to_str().unwrap(), "--methods", "equid,oracle"]);
    assert_eq!(records(&runs).len(), 40);
    let sub = column(&cmp, "suboptimality");
    assert!(sub.iter().filter(|s| !s.is_empty()).count() >= 20);
    assert!(sub.iter().filter(|s| !s.is_empty()).all(|s| s.parse::<f64>().unwrap() >= 0.0));
    assert_eq!(records(&summary).len(), 4);
}

#[test]
fn sweep_approx5_ratio_at_most_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "clients = [4, 6]\nhelpers = [2]\nlevels = [2]\nseeds = 10\nunit_demand = true\n").unwrap();
    let (_d, _runs, _cmp, summary) = sweep(&[cfg.to_str().unwrap(), "--methods", "approx5", "--oracle"]);
    let ratios: Vec<f64> = column(&summary, "max_ratio_to_oracle")
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.iter().all(|&r| (1.0..=5.0).contains(&r)));
}

#[test]
fn sweep_single_client_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "clients = [1]\nhelpers = [1]\nlevels = [1, 2, 3, 4]\nseeds = 3\n").unwrap();
    let (_d, runs, _, _) = sweep(&[cfg.to_str().unwrap(), "--methods", "equid,ed-fcfs,bg", "--oracle"]);
    let rows = records(&runs);
    for chunk in rows.chunks(4) {
        assert!(chunk.iter().all(|r| r[0] == chunk[0][0] && r[3] == chunk[0][3] && r[2] == "ok"), "{chunk:?}");
    }
}

#[test]
fn sweep_output_order_is_independent_of_workers() {
    let cfg = fixture("sweep_small.toml");
    let strip = |runs: &str| -> Vec<Vec<String>> {
        records(runs)
            .into_iter()
            .map(|mut r| {
                r.remove(4);
                r
            })
            .collect()
    };
    let (_a, one, _, _) = sweep(&[cfg.to_str().unwrap(), "--jobs", "1", "--budget-nodes", "100000"]);
    let (_b, many, _, _) = sweep(&[cfg.to_str().unwrap(), "--jobs", "4", "--budget-nodes", "100000"]);
    assert_eq!(strip(&one), strip(&many));
}

fn plot(csv: &Path, kind: &str, out: &Path) -> Output {
    run(&["plot", csv.to_str().unwrap(), "--kind", kind, "--out", out.to_str().unwrap()])
}

#[test]
fn plots_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["makespan-bars", "relative-diff", "helpers-curve"] {
        let out = dir.path().join(format!("{kind}.svg"));
        let o = plot(&golden("runs.csv"), kind, &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let got = std::fs::read_to_string(&out).unwrap();
        let expected_path = golden(&format!("{kind}.svg"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&expected_path, &got).unwrap();
        }
        assert_eq!(got, std::fs::read_to_string(&expected_path).unwrap(), "{kind}");
    }
}

#[test]
fn plot_structure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bars.svg");
    assert_eq!(plot(&golden("runs.csv"), "makespan-bars", &out).status.code(), Some(0));
    let svg = std::fs::read_to_string(&out).unwrap();
    assert_eq!(svg.matches(r#"<g class="series""#).count(), 2);
    // 4 groups for each method, minus the legend swatches
    assert_eq!(svg.matches("<rect x=").count() - 2, 8);

    let curve = dir.path().join("curve.svg");
    assert_eq!(plot(&golden("runs.csv"), "helpers-curve", &curve).status.code(), Some(0));
    let svg = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(r#"data-name="I=2""#) && svg.contains(r#"data-name="I=5""#));
}

#[test]
fn plot_rejects_empty_and_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "instance_id,method,status,makespan,wall_time_ms,J,I,level,seed\n").unwrap();
    let out = dir.path().join("out.svg");
    let o = plot(&empty, "makespan-bars", &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "instance_id,method,status,makespan,J,I\na,equid,ok,3,1,1\n").unwrap();
    let o = plot(&bad, "makespan-bars", &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wall_time_ms"));
    assert!(!out.exists());
}

#[test]
fn gen_is_deterministic_and_runnable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        run(&[
            "gen", "--level", "3", "--clients", "8", "--helpers", "2", "--seed", "5", "--count", "2", "--out",
            d.to_str().unwrap(),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(args(&a).status.code(), Some(0));
    assert_eq!(args(&b).status.code(), Some(0));
    for name in ["L3-J8-I2-s5.json", "L3-J8-I2-s6.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
    let o = run(&["run", a.join("L3-J8-I2-s5.json").to_str().unwrap(), "--methods", "equid,bg"]);
    assert_eq!(o.status.code(), Some(0));

    let cfg = fixture("generator_level3.toml");
    let o = run(&["gen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"clients\": 12"));
    assert_eq!(run(&["gen", "--level", "3"]).status.code(), Some(2));
}
