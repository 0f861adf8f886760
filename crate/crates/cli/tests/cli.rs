use std::path::Path;
use std::process::{Command, Output};

fn plp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plp")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(command: &str, config: &str, out: &Path) -> Output {
    plp(&[command, "--config", config, "--out", out.to_str().unwrap()])
}

#[test]
fn inadmissible_matrix_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[0.5,0,0,1],"grid":{"n":2,"L":16,"N":32},"symbol":{"id":"heat"}}"#,
    );
    let o = run("validate", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("admissible"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":32},"symbol":{"id":"heat"},"colour":"red"}"#,
    );
    let o = run("rho-table", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rho_table_matches_quadratic_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":32},"symbol":{"id":"heat"},"points":[[3,4]]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run("rho-table", &cfg, &out).status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("rho_table.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["x1", "x2", "rho", "rho_star", "symbol", "b", "window", "grid"]
    );
    let row = rdr.records().next().unwrap().unwrap();
    let rho: f64 = row[2].parse().unwrap();
    let exact = ((9.0 + 145f64.sqrt()) / 2.0).sqrt();
    assert!((rho - exact).abs() < 1e-10, "{rho}");
    assert!((rho - 3.2436).abs() < 1e-4);
}

#[test]
fn equivalence_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":32},"symbol":{"id":"heat"},"seed":11}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run("equivalence", &cfg, &a);
    let o = plp(&["equivalence", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(3));
    for name in ["equivalence.csv", "equivalence.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let ma: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let mb: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    assert_eq!(ma["seed"], 11);
    assert!(ma["wall_time_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":32},"symbol":{"id":"heat"},"seed":1}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run("rho-table", &cfg, &a);
    plp(&["rho-table", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "2"]);
    assert_ne!(
        std::fs::read(a.join("rho_table.csv")).unwrap(),
        std::fs::read(b.join("rho_table.csv")).unwrap()
    );
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 2);
}

#[test]
fn under_resolved_equivalence_reports_tolerance_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":8},"symbol":{"id":"heat"}}"#,
    );
    let o = run("equivalence", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drift"));
}

#[test]
fn pipeline_commands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"matrix":[1,0,0,2],"grid":{"n":2,"L":16,"N":64},"symbol":{"id":"heat"},"count":3,"exponents":{"p":1}}"#,
    );
    let expect = [
        ("validate", vec!["validate.json"]),
        ("partition", vec!["partition.json", "partition_sum.gfa", "partition_sum.json"]),
        ("transform", vec!["transform.json", "input.gfa", "input.json"]),
        ("reconstruct", vec!["reconstruct.json", "reconstructed.gfa"]),
        ("gfunc", vec!["gfunc.csv", "gfunc.json"]),
        ("maximal", vec!["maximal.json", "peetre.gfa", "hardy_littlewood.gfa", "grand.gfa"]),
        ("atoms", vec!["atoms.csv", "atoms.json"]),
        ("constants", vec!["constants.csv", "constants.json"]),
    ];
    for (command, files) in expect {
        let out = dir.path().join(command);
        let o = run(command, &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files.iter().chain(&["manifest.json"]) {
            assert!(out.join(f).exists(), "{command} missing {f}");
        }
    }

    let back = plp_core::gfa::read_file(&dir.path().join("reconstruct/reconstructed.gfa")).unwrap();
    assert_eq!(back.grid().samples_per_axis(), 64);
    let rep: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("reconstruct/reconstruct.json")).unwrap()).unwrap();
    assert!(rep["relative_l2_error"].as_f64().unwrap() < 1e-6);

    let mut rdr = csv::Reader::from_path(dir.path().join("constants/constants.csv")).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&headers[..4], ["j", "C_psi_j_L", "b_pow_neg_j", "product"]);
    for row in rdr.records() {
        let row = row.unwrap();
        assert!(row[3].parse::<f64>().unwrap().is_finite());
        assert_eq!(&row[4], "heat");
    }

    let mut rdr = csv::Reader::from_path(dir.path().join("gfunc/gfunc.csv")).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&headers[..3], ["point_id", "g_discrete", "g_continuous"]);
    assert_eq!(rdr.records().count(), 64 * 64);
}
