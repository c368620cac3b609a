//! End-to-end checks of the `emergence` binary and the trajectory runner.

use std::path::Path;
use std::process::Command;

use emergence_cli::config::{RunConfig, ScalePoint};
use emergence_cli::trajectory::run_trajectory;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emergence"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn curve_command_is_byte_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = binary()
            .args(["curve", "--out"])
            .arg(out)
            .status()
            .expect("spawn");
        assert!(status.success());
    }
    for name in [
        "curve_theta0.1_k2.csv",
        "curve_theta0.1_k8.csv",
        "curves_index.json",
    ] {
        assert_eq!(read(&out_a, name), read(&out_b, name), "{name} differs");
    }
    // Fig. 2 left: the k = 2 file holds the header only.
    let k2 = read(&out_a, "curve_theta0.1_k2.csv");
    assert_eq!(
        std::str::from_utf8(&k2).unwrap(),
        "alpha,beta,one_minus_alpha,beta_theta,lhs_residual\n"
    );
}

#[test]
fn missing_config_file_exits_with_validation_code() {
    let status = binary()
        .args(["scaling", "--config", "/nonexistent/config.json"])
        .status()
        .expect("spawn");
    assert_eq!(status.code(), Some(3), "unreadable path is an I/O error");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, b"{\"trials\": 0}").unwrap();
    let status = binary()
        .args(["scaling", "--config"])
        .arg(&bad)
        .status()
        .expect("spawn");
    assert_eq!(status.code(), Some(1), "invalid config is a validation error");
}

#[test]
fn unknown_flag_exits_with_validation_code() {
    let status = binary().args(["curve", "--bogus"]).status().expect("spawn");
    assert_eq!(status.code(), Some(1));
}

#[test]
fn scaling_json_output_parses() {
    let output = binary()
        .args(["scaling", "--format", "json"])
        .output()
        .expect("spawn");
    assert!(output.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let loss = row["loss"].as_f64().unwrap();
        let excess = row["excess_entropy"].as_f64().unwrap();
        assert!((loss - excess - 1.61).abs() < 1e-12);
    }
}

#[test]
fn paucity_output_matches_log_space_accounting() {
    let output = binary().arg("paucity").output().expect("spawn");
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["log10_seen_bound"].as_f64().unwrap(), 18.0);
    assert_eq!(value["log10_tuple_count"].as_f64().unwrap(), 32.0);
    assert_eq!(value["paucity"], serde_json::json!(true));
}

fn small_cluster_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.cluster.num_skills = 30;
    config.cluster.num_pieces = 3_000;
    config.cluster.k = 8;
    config.trials = 2;
    config.tuple_samples = 40;
    config.alpha_grid.points = 60;
    config
}

/// Halving the loss while doubling the tuple size reproduces the same
/// theoretical curve file, byte for byte.
#[test]
fn trajectory_tuple_curves_reproduce_across_scales() {
    let mut config = small_cluster_config();
    config.tuple_sizes = vec![1, 2, 4];
    config.schedule = vec![
        ScalePoint {
            params: 1e12,
            tokens: 1e12,
            delta_override: Some(0.05),
        },
        ScalePoint {
            params: 1e13,
            tokens: 1e13,
            delta_override: Some(0.025),
        },
        ScalePoint {
            params: 1e14,
            tokens: 1e14,
            delta_override: Some(0.0125),
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let (_, report) = run_trajectory(&config, dir.path()).unwrap();
    assert!(report.points.iter().all(|p| p.applicable));

    let skills_at_0 = read(dir.path(), "point0_curve_kprime1.csv");
    let pairs_at_1 = read(dir.path(), "point1_curve_kprime2.csv");
    let quads_at_2 = read(dir.path(), "point2_curve_kprime4.csv");
    assert!(!skills_at_0.is_empty());
    assert_eq!(skills_at_0, pairs_at_1);
    assert_eq!(skills_at_0, quads_at_2);
}

/// A point whose θ reaches 1 is reported as inapplicable and emits no
/// curve files.
#[test]
fn trajectory_marks_saturated_theta_inapplicable() {
    let mut config = small_cluster_config();
    config.tuple_sizes = vec![1];
    config.schedule = vec![ScalePoint {
        params: 1e9,
        tokens: 1e9,
        delta_override: Some(0.7),
    }];
    let dir = tempfile::tempdir().unwrap();
    let (manifest, report) = run_trajectory(&config, dir.path()).unwrap();
    assert!(!report.points[0].applicable);
    assert!(report.points[0].kprime_reports.iter().all(|r| r.curve_file.is_none()));
    assert!(manifest.outputs.iter().all(|o| !o.path.contains("curve")));
    assert!(manifest.warnings.iter().any(|w| w.contains("inapplicable")));
}

/// Mean skill competence is non-decreasing along a schedule of shrinking θ
/// in at least 99 of 100 seeded runs.
#[test]
fn trajectory_competence_tracks_falling_theta() {
    let mut improving = 0;
    for seed in 0..100u64 {
        let mut config = small_cluster_config();
        config.cluster.num_pieces = 1_500;
        config.trials = 1;
        config.tuple_sizes = vec![1];
        config.seed = seed;
        config.schedule = vec![
            ScalePoint {
                params: 1e12,
                tokens: 1e12,
                delta_override: Some(0.15),
            },
            ScalePoint {
                params: 1e13,
                tokens: 1e13,
                delta_override: Some(0.10),
            },
            ScalePoint {
                params: 1e14,
                tokens: 1e14,
                delta_override: Some(0.05),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let (_, report) = run_trajectory(&config, dir.path()).unwrap();
        let means: Vec<f64> = report
            .points
            .iter()
            .map(|p| p.kprime_reports[0].pooled.mean)
            .collect();
        if means.windows(2).all(|w| w[1] >= w[0]) {
            improving += 1;
        }
    }
    assert!(improving >= 99, "only {improving}/100 runs monotone");
}

/// The simulate subcommand produces byte-identical outputs on a rerun with
/// the same config (manifest hashes compared, wall clock aside).
#[test]
fn simulate_command_round_trips_config_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let mut config = small_cluster_config();
    config.schedule = vec![ScalePoint::new(1e12, 1e13)];
    config.tuple_sizes = vec![1, 2];
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = binary()
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(out)
            .status()
            .expect("spawn");
        assert!(status.success());
    }
    let manifest_a: serde_json::Value =
        serde_json::from_slice(&read(&out_a, "run_manifest.json")).unwrap();
    let manifest_b: serde_json::Value =
        serde_json::from_slice(&read(&out_b, "run_manifest.json")).unwrap();
    assert_eq!(manifest_a["outputs"], manifest_b["outputs"]);
    // Spot-check an actual file, not just the recorded hashes.
    assert_eq!(
        read(&out_a, "point0_competence.csv"),
        read(&out_b, "point0_competence.csv")
    );
}

/// Verify subcommand with a corrupted cluster file names the violated
/// invariant and exits with the check-failure code.
#[test]
fn verify_flags_corrupted_cluster_file() {
    let dir = tempfile::tempdir().unwrap();
    let cluster_path = dir.path().join("cluster.json");
    // k = 2 cluster with a three-endpoint piece.
    std::fs::write(
        &cluster_path,
        r#"{"num_skills":2,"num_pieces":2,"k":2,"seed":1,
            "skill_measure":[0.5,0.5],"piece_measure":[0.5,0.5],
            "edges":[[0,1],[0,1,1]]}"#,
    )
    .unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        format!(
            r#"{{"cluster_file": {:?},
                "verify": {{"identity_samples": 10, "pinsker_samples": 10,
                            "bisection_triples": 1, "guarantee_trials": 0,
                            "universality_graphs": 2}}}}"#,
            cluster_path
        ),
    )
    .unwrap();
    let output = binary()
        .args(["verify", "--config"])
        .arg(&config_path)
        .output()
        .expect("spawn");
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("FAIL cluster_file_validation"));
    assert!(stdout.contains("endpoints"), "should name the invariant: {stdout}");
}
