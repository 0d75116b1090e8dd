use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langevin-bounce"))
        .args(args)
        .env_remove("LANGEVIN_BOUNCE_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn manifest(dir: &Path, stem: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}_manifest.json"))).unwrap()).unwrap()
}

#[test]
fn kc_at_reference_point() {
    let o = run(&["kc", "--c", "0.0901699"]);
    assert!(o.status.success());
    let k: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("k = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((k - 0.1).abs() < 1e-6, "{k}");
}

#[test]
fn kc_rejects_supercritical() {
    let o = run(&["kc", "--c", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("(0, 0.163"), "{err}");
}

#[test]
fn kc_curve_is_decreasing() {
    let o = run(&["kc", "--curve", "0.01", "0.15", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("c,k\n"));
    let k = column(&text, "k");
    assert_eq!(k.len(), 50);
    assert!(k.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn simulate_requires_seed() {
    assert_eq!(run(&["simulate", "chain", "--n", "10"]).status.code(), Some(2));
}

#[test]
fn chain_output_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&[
            "simulate", "chain", "--n", "10000", "--c", "0.09017", "--seed", "7", "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let csv_a = std::fs::read(a.path().join("chain.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.path().join("chain.csv")).unwrap());
    let zeta = column(std::str::from_utf8(&csv_a).unwrap(), "zeta");
    assert_eq!(zeta.len(), 10_000);
    assert!(zeta.iter().all(|&z| z > 0.0));

    let m = manifest(a.path(), "chain");
    assert_eq!(m["outputs"][0]["file"], "chain.csv");
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let k = m["params"]["model"]["k"].as_f64().unwrap();
    assert!((k - 0.1).abs() < 1e-5);
}

#[test]
fn thread_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&[
            "--threads", threads, "simulate", "tilted", "--n", "50", "--seed", "3", "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(
        std::fs::read(a.path().join("tilted.csv")).unwrap(),
        std::fs::read(b.path().join("tilted.csv")).unwrap()
    );
}

#[test]
fn resurrect_writes_excursions_and_path() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "resurrect", "--eps", "0.01", "--seed", "1", "--out", d.path().to_str().unwrap()]);
    assert!(o.status.success());
    let exc = std::fs::read_to_string(d.path().join("excursions.csv")).unwrap();
    assert!(exc.starts_with("start,length,first_bounce_time,max_speed\n"));
    assert!(!column(&exc, "length").is_empty());
    let path = std::fs::read_to_string(d.path().join("resurrect_path.csv")).unwrap();
    assert!(column(&path, "x").iter().all(|&x| x >= -1e-9));
    let files: Vec<String> = manifest(d.path(), "resurrect")["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["file"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(files, ["resurrect_path.csv", "excursions.csv"]);
}

#[test]
fn invalid_path_start_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "path", "--x0", "0", "--u0", "-1", "--seed", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(manifest(d.path(), "path")["error"].is_string());
}

#[test]
fn verify_negative_control_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify", "--seed", "1", "--n", "2000", "--inject-k", "0.12", "--out", d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 10);
    for r in results {
        for key in ["id", "name", "anchor", "measured", "tolerance", "passed"] {
            assert!(!r[key].is_null(), "{key} missing");
        }
    }
    assert_eq!(results[0]["passed"], false);
    assert_eq!(report["all_passed"], false);
    assert!(d.path().join("verify_report.json").exists());
}
