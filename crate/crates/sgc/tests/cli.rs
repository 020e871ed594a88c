//! End-to-end tests of the `sgc` binary: output contracts, exit codes,
//! deterministic reports, and the plot/vote file formats.

use std::path::{Path, PathBuf};
use std::process::Command;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sgc(args: &[&str]) -> Output {
    sgc_env(args, &[])
}

fn sgc_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sgc"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("no signal"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes the balanced K5 fixture into `dir` and returns its path.
fn k5_file(dir: &Path) -> PathBuf {
    let path = dir.join("k5.tsv");
    let out = sgc(&[
        "generate",
        "balanced-complete",
        "--n",
        "5",
        "--split",
        "2",
        "--out",
        path_str(&path),
    ]);
    assert_eq!(out.code, 0, "generate failed: {}", out.stderr);
    path
}

fn pentagon_file(dir: &Path) -> PathBuf {
    let path = dir.join("pentagon.tsv");
    let out = sgc(&["generate", "pentagon", "--out", path_str(&path)]);
    assert_eq!(out.code, 0, "generate failed: {}", out.stderr);
    path
}

#[test]
fn generate_then_adjacency_matrix_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());

    let text = std::fs::read_to_string(&graph).unwrap();
    assert_eq!(text.lines().count(), 10, "K5 has 10 edges");
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3, "line {line:?}");
        assert!(fields[2] == "+1" || fields[2] == "-1");
    }

    let out = sgc(&["matrix", path_str(&graph), "--what", "adjacency"]);
    assert_eq!(out.code, 0);
    let rows: Vec<Vec<f64>> = out
        .stdout
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 5);
        assert_eq!(row[i], 0.0, "zero diagonal");
        for (j, v) in row.iter().enumerate() {
            assert!([-1.0, 0.0, 1.0].contains(v));
            assert_eq!(*v, rows[j][i], "symmetry at ({i},{j})");
        }
    }
    // Factions {1,2,3} / {4,5}: negative edges exactly across.
    assert_eq!(rows[0][1], 1.0);
    assert_eq!(rows[0][3], -1.0);
    assert_eq!(rows[3][4], 1.0);
}

#[test]
fn matrix_json_carries_labels() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());
    let json_path = dir.path().join("gamma.json");
    let out = sgc(&[
        "matrix",
        path_str(&graph),
        "--what",
        "gamma",
        "--format",
        "json",
        "--out",
        path_str(&json_path),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let labels: Vec<&str> = value["labels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(labels, ["1", "2", "3", "4", "5"]);
    assert_eq!(value["rows"], 5);
    assert_eq!(value["cols"], 5);
    let matrix = value["data"].as_array().unwrap();
    assert_eq!(matrix.len(), 5);
    assert_eq!(matrix[0].as_array().unwrap().len(), 5);
    // Gamma_12 is positive (allies), Gamma_14 negative (enemies).
    assert!(matrix[0][1].as_f64().unwrap() > 0.0);
    assert!(matrix[0][3].as_f64().unwrap() < 0.0);
}

#[test]
fn matrix_stdout_and_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());
    let to_stdout = sgc(&["matrix", path_str(&graph), "--what", "gamma"]);
    let file = dir.path().join("gamma.csv");
    let to_file = sgc(&[
        "matrix",
        path_str(&graph),
        "--what",
        "gamma",
        "--out",
        path_str(&file),
    ]);
    assert_eq!(to_stdout.code, 0);
    assert_eq!(to_file.code, 0);
    assert_eq!(to_stdout.stdout, std::fs::read_to_string(&file).unwrap());
}

#[test]
fn balance_prints_coloring_or_witness_cycle() {
    let dir = tempfile::tempdir().unwrap();

    let balanced = sgc(&["balance", path_str(&k5_file(dir.path()))]);
    assert_eq!(balanced.code, 0);
    let lines: Vec<&str> = balanced.stdout.lines().collect();
    assert_eq!(lines[0], "balanced");
    assert_eq!(lines.len(), 6, "one coloring line per node");
    let signs: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(signs, ["+1", "+1", "+1", "-1", "-1"]);

    let frustrated = sgc(&["balance", path_str(&pentagon_file(dir.path()))]);
    assert_eq!(frustrated.code, 0);
    let lines: Vec<&str> = frustrated.stdout.lines().collect();
    assert_eq!(lines[0], "unbalanced");
    let witness: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(witness[0], "cycle");
    assert!(witness.len() >= 4, "a cycle has at least 3 nodes: {lines:?}");
}

#[test]
fn analyze_report_is_byte_deterministic_with_stable_keys() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.tsv");
    let out = sgc(&[
        "generate",
        "random-balanced",
        "--n",
        "12",
        "--p",
        "0.6",
        "--sign-flip",
        "0.4",
        "--seed",
        "3",
        "--out",
        path_str(&graph),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);

    let (r1, r2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    for r in [&r1, &r2] {
        let out = sgc(&[
            "analyze",
            path_str(&graph),
            "--seed",
            "11",
            "--out",
            path_str(r),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    let text1 = std::fs::read_to_string(&r1).unwrap();
    let text2 = std::fs::read_to_string(&r2).unwrap();
    assert_eq!(text1, text2, "same seed must give identical bytes");

    // Stable top-level keys, in declaration order on the raw text.
    let expected = [
        "config",
        "balance",
        "gamma_summary",
        "embedding",
        "silhouette_curve",
        "labels",
        "dendrogram",
        "polarization",
        "warnings",
        "timings_ms",
    ];
    let value: serde_json::Value = serde_json::from_str(&text1).unwrap();
    let object = value.as_object().unwrap();
    assert_eq!(object.len(), expected.len());
    let mut last = 0;
    for key in expected {
        assert!(object.contains_key(key), "missing key {key}");
        let pos = text1.find(&format!("\"{key}\"")).unwrap_or_else(|| {
            panic!("key {key} not in raw text");
        });
        assert!(pos > last, "key {key} out of order");
        last = pos;
    }

    // Timings are opt-in because they break byte determinism.
    assert_eq!(value["timings_ms"].as_object().unwrap().len(), 0);
    let out = sgc(&[
        "analyze",
        path_str(&graph),
        "--seed",
        "11",
        "--timings",
    ]);
    assert_eq!(out.code, 0);
    let timed: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(!timed["timings_ms"].as_object().unwrap().is_empty());
}

#[test]
fn analyze_plot_dir_writes_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());

    // Hierarchical route: all five files, including the Newick tree.
    let plots = dir.path().join("plots");
    let out = sgc(&[
        "analyze",
        path_str(&graph),
        "--seed",
        "4",
        "--clusterer",
        "ward",
        "--out",
        path_str(&dir.path().join("r.json")),
        "--plot-dir",
        path_str(&plots),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let embedding = std::fs::read_to_string(plots.join("embedding.csv")).unwrap();
    let mut lines = embedding.lines();
    assert_eq!(lines.next(), Some("label,x,y,cluster"));
    assert_eq!(lines.count(), 5);
    let newick = std::fs::read_to_string(plots.join("dendrogram.nwk")).unwrap();
    assert!(newick.trim_end().ends_with(';'));
    for file in ["silhouette.csv", "polarization.csv", "kde.csv"] {
        assert!(plots.join(file).exists(), "{file} missing");
    }

    // k-means route has no dendrogram; the gap is noted, not fatal.
    let plots2 = dir.path().join("plots2");
    let out = sgc(&[
        "analyze",
        path_str(&graph),
        "--seed",
        "4",
        "--out",
        path_str(&dir.path().join("r2.json")),
        "--plot-dir",
        path_str(&plots2),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(!plots2.join("dendrogram.nwk").exists());
    assert!(out.stderr.contains("dendrogram"), "stderr: {}", out.stderr);
    assert!(plots2.join("embedding.csv").exists());
}

#[test]
fn exit_codes_distinguish_usage_io_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();

    let usage = sgc(&["--nope"]);
    assert_eq!(usage.code, 1);

    let help = sgc(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("Usage"));

    let version = sgc(&["--version"]);
    assert_eq!(version.code, 0);

    let missing = sgc(&["balance", path_str(&dir.path().join("absent.tsv"))]);
    assert_eq!(missing.code, 1, "I/O error: {}", missing.stderr);
    assert!(missing.stderr.starts_with("error:"));

    let malformed = dir.path().join("bad.tsv");
    std::fs::write(&malformed, "a\tb\t2\n").unwrap();
    let data = sgc(&["balance", path_str(&malformed)]);
    assert_eq!(data.code, 2, "data error: {}", data.stderr);

    let graph = k5_file(dir.path());
    let bad_flag_value = sgc(&["matrix", path_str(&graph), "--what", "bogus"]);
    assert_eq!(bad_flag_value.code, 1);

    let missing_seed = sgc(&["cluster", path_str(&graph)]);
    assert_eq!(missing_seed.code, 1, "--seed is mandatory");
}

#[test]
fn cluster_splits_balanced_factions() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());
    let out = sgc(&[
        "cluster",
        path_str(&graph),
        "--seed",
        "2",
        "--kmax",
        "2",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut by_label = std::collections::HashMap::new();
    for line in out.stdout.lines().skip(1) {
        let (label, cluster) = line.split_once(',').unwrap();
        by_label.insert(label.to_string(), cluster.to_string());
    }
    assert_eq!(by_label.len(), 5);
    assert_eq!(by_label["1"], by_label["2"]);
    assert_eq!(by_label["1"], by_label["3"]);
    assert_eq!(by_label["4"], by_label["5"]);
    assert_ne!(by_label["1"], by_label["4"]);
    assert!(out.stderr.contains("selected k = 2"), "{}", out.stderr);
}

#[test]
fn ingest_votes_builds_signed_graph() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    std::fs::write(
        &votes,
        "voter,b1,b2,b3,b4\nalice,1,1,1,0\nbob,1,1,-1,1\ncarol,-1,-1,1,-1\n",
    )
    .unwrap();

    // Similarities (all-ballots): alice/bob +0.25, alice/carol -0.25,
    // bob/carol -1. A 0.2 threshold keeps all three edges.
    let graph = dir.path().join("votes.tsv");
    let out = sgc(&[
        "ingest-votes",
        path_str(&votes),
        "--threshold",
        "0.2",
        "--out",
        path_str(&graph),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = std::fs::read_to_string(&graph).unwrap();
    let mut edges: Vec<&str> = text.lines().collect();
    edges.sort_unstable();
    assert_eq!(
        edges,
        ["alice\tbob\t+1", "alice\tcarol\t-1", "bob\tcarol\t-1"]
    );
    // The (+,-,-) triangle is balanced.
    let balance = sgc(&["balance", path_str(&graph)]);
    assert_eq!(balance.stdout.lines().next(), Some("balanced"));

    // A 0.3 threshold keeps only bob/carol; alice becomes isolated, which
    // the edge-list text cannot carry, so she only shows up in the warning.
    let out = sgc(&["ingest-votes", path_str(&votes), "--threshold", "0.3"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().count(), 1, "single surviving edge");
    assert!(
        out.stderr.contains("disconnected") && out.stderr.contains("2 components"),
        "{}",
        out.stderr
    );

    // Under the both-voted denominator alice/bob rises to 1/3 > 0.3.
    let out = sgc(&[
        "ingest-votes",
        path_str(&votes),
        "--threshold",
        "0.3",
        "--denominator",
        "both-voted",
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("alice\tbob\t+1"), "{}", out.stdout);
}

#[test]
fn polarize_scores_and_kde_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());
    let kde = dir.path().join("kde.csv");
    let out = sgc(&[
        "polarize",
        path_str(&graph),
        "--kde",
        path_str(&kde),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "label,score");
    assert_eq!(lines.len(), 6);
    let scores: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(scores.iter().all(|s| (-1.0..=1.0).contains(s)));
    // The two factions sit on opposite sides of the axis.
    assert!(scores[0] > 0.0 && scores[1] > 0.0 && scores[2] > 0.0);
    assert!(scores[3] < 0.0 && scores[4] < 0.0);

    let kde_text = std::fs::read_to_string(&kde).unwrap();
    let mut kde_lines = kde_text.lines();
    assert_eq!(kde_lines.next(), Some("x,density"));
    assert_eq!(kde_lines.count(), 512);

    // Grouped KDE switches to the long format with one block per group.
    let groups = dir.path().join("groups.csv");
    std::fs::write(&groups, "label,group\n1,a\n2,a\n3,a\n4,b\n5,b\n").unwrap();
    let out = sgc(&[
        "polarize",
        path_str(&graph),
        "--kde",
        path_str(&kde),
        "--groups",
        path_str(&groups),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let kde_text = std::fs::read_to_string(&kde).unwrap();
    let mut kde_lines = kde_text.lines();
    assert_eq!(kde_lines.next(), Some("x,group,density"));
    assert_eq!(kde_lines.count(), 1024);
}

#[test]
fn oracle_frustration_confirms_pentagon() {
    let dir = tempfile::tempdir().unwrap();
    let graph = pentagon_file(dir.path());
    let out = sgc(&["oracle", path_str(&graph), "--what", "frustration"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "min_frustration\t1");
    assert_eq!(lines[1], "minimizers\t5");
    assert_eq!(lines.len(), 7, "header lines plus one row per minimizer");
}

#[test]
fn thread_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let graph = k5_file(dir.path());
    let out = sgc_env(
        &["analyze", path_str(&graph), "--seed", "1"],
        &[("SGC_THREADS", "2")],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    serde_json::from_str::<serde_json::Value>(&out.stdout).expect("valid report JSON");
}
