//! End-to-end checks of the scnet binary: exit codes, config precedence,
//! determinism across reruns and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn scnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scnet"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = scnet().args(args).output().expect("spawn scnet");
    assert!(
        out.status.success(),
        "scnet {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_fixture(dir: &Path) -> (String, String) {
    let nodes = dir.join("nodes.csv");
    let edges = dir.join("edges.csv");
    std::fs::write(
        &nodes,
        "firm_id,name,country,sic,employees,is_msf\n\
         m1,M One,US,5047,120,1\n\
         m2,M Two,DE,5047,80,1\n\
         a,Alpha,US,3841,40,0\n\
         b,Beta,,3841,30,0\n\
         c,Gamma,JP,,25,0\n\
         d,Delta,JP,3845,,0\n\
         e,Epsilon,GB,3845,10,0\n",
    )
    .unwrap();
    std::fs::write(
        &edges,
        "customer_id,supplier_id\nm1,a\nm1,b\nm2,b\na,c\nb,d\nb,e\n",
    )
    .unwrap();
    (
        nodes.to_str().unwrap().to_string(),
        edges.to_str().unwrap().to_string(),
    )
}

#[test]
fn ingest_prints_census() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let out = run_ok(&["ingest", "--nodes", &nodes, "--edges", &edges]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nodes               7"), "{text}");
    assert!(text.contains("edges               6"), "{text}");
    assert!(text.contains("msfs                2"), "{text}");
    assert!(text.contains("terminal suppliers  3"), "{text}");
}

#[test]
fn tiers_prints_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let out = run_ok(&["tiers", "--nodes", &nodes, "--edges", &edges]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "tier,firms\n0,2\n1,2\n2,3\n");
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, edges) = write_fixture(dir.path());
    let out = scnet()
        .args(["ingest", "--nodes", "/nonexistent.csv", "--edges", &edges])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_nodes_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, edges) = write_fixture(dir.path());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "firm_id,name\nx,y\n").unwrap();
    let out = scnet()
        .args(["ingest", "--nodes", bad.to_str().unwrap(), "--edges", &edges])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = scnet().args(["ingest", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_strategy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let out = scnet()
        .args([
            "attack", "--nodes", &nodes, "--edges", &edges, "--strategy", "voodoo", "--out", "o",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_threads_env_is_a_usage_error() {
    let out = scnet()
        .env("SCNET_THREADS", "lots")
        .args(["ingest", "--nodes", "x", "--edges", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = scnet().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn attack_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    for out in [&out1, &out2] {
        run_ok(&[
            "attack",
            "--nodes",
            &nodes,
            "--edges",
            &edges,
            "--realizations",
            "6",
            "--seed",
            "7",
            "--svg",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    for name in ["attack.csv", "attack.json", "attack.svg"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let nodes_path = dir.path().join("n.csv");
    let edges_path = dir.path().join("e.csv");
    run_ok(&[
        "generate",
        "--kind",
        "er",
        "--size",
        "300",
        "--mean-degree",
        "3",
        "--seed",
        "1",
        "--out-nodes",
        nodes_path.to_str().unwrap(),
        "--out-edges",
        edges_path.to_str().unwrap(),
    ]);
    let nodes = nodes_path.to_str().unwrap().to_string();
    let edges = edges_path.to_str().unwrap().to_string();
    let mut payloads = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = scnet()
            .env("SCNET_THREADS", threads)
            .args([
                "report",
                "--nodes",
                &nodes,
                "--edges",
                &edges,
                "--scales",
                "firm",
                "--strategies",
                "random,pagerank",
                "--tiers",
                "3",
                "--realizations",
                "5",
                "--frag-realizations",
                "8",
                "--seed",
                "11",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        payloads.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn breakdown_emits_one_row_per_limit() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let out = dir.path().join("bd");
    run_ok(&[
        "breakdown",
        "--nodes",
        &nodes,
        "--edges",
        &edges,
        "--scales",
        "firm",
        "--strategies",
        "random",
        "--tiers",
        "3",
        "--realizations",
        "5",
        "--limits",
        "0.2,0.01",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("breakdown.json")).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["thresholds"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let config = dir.path().join("scnet.toml");
    std::fs::write(&config, "seed = 5\nrealizations = 4\ntiers = 3\n").unwrap();

    // File-configured run equals the explicit-flag run with the same values.
    let from_file = dir.path().join("file");
    run_ok(&[
        "attack",
        "--config",
        config.to_str().unwrap(),
        "--nodes",
        &nodes,
        "--edges",
        &edges,
        "--out",
        from_file.to_str().unwrap(),
    ]);
    let from_flags = dir.path().join("flags");
    run_ok(&[
        "attack",
        "--nodes",
        &nodes,
        "--edges",
        &edges,
        "--seed",
        "5",
        "--realizations",
        "4",
        "--tiers",
        "3",
        "--out",
        from_flags.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(from_file.join("attack.csv")).unwrap(),
        std::fs::read(from_flags.join("attack.csv")).unwrap()
    );

    // A flag overrides the same key from the file.
    let overridden = dir.path().join("override");
    run_ok(&[
        "attack",
        "--config",
        config.to_str().unwrap(),
        "--nodes",
        &nodes,
        "--edges",
        &edges,
        "--seed",
        "9",
        "--out",
        overridden.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(overridden.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 9);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges) = write_fixture(dir.path());
    let config = dir.path().join("scnet.toml");
    std::fs::write(&config, "sede = 5\n").unwrap();
    let out = scnet()
        .args([
            "ingest",
            "--config",
            config.to_str().unwrap(),
            "--nodes",
            &nodes,
            "--edges",
            &edges,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_roundtrips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("n.csv");
    let edges = dir.path().join("e.csv");
    run_ok(&[
        "generate",
        "--kind",
        "er",
        "--size",
        "200",
        "--mean-degree",
        "3",
        "--seed",
        "4",
        "--out-nodes",
        nodes.to_str().unwrap(),
        "--out-edges",
        edges.to_str().unwrap(),
    ]);
    let out = run_ok(&[
        "ingest",
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nodes               200"), "{text}");
}
