use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn plaquette(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaquette"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("PLAQUETTE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = plaquette(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (
        header,
        lines
            .map(|l| l.split(',').map(String::from).collect())
            .collect(),
    )
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn evolve_at_zero_time_is_fully_imbalanced() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "evolve",
            "--M",
            "15",
            "--P",
            "0",
            "--mode",
            "effective",
            "--times",
            "0",
        ],
    );
    let (header, rows) = csv_rows(&dir.path().join("evolve.csv"));
    assert_eq!(
        header,
        ["Jt", "imbalance_numeric", "imbalance_analytic", "abs_error"]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(f(&rows[0][1]), 1.0);
}

#[test]
fn evolve_tracks_closed_form_in_effective_mode() {
    let dir = TempDir::new().unwrap();
    for state in ["fock", "noon"] {
        let out = ok(
            dir.path(),
            &[
                "evolve",
                "--M",
                "7",
                "--P",
                "4",
                "--mode",
                "effective",
                "--state",
                state,
                "--phi",
                "pi",
                "-o",
                "-",
            ],
        );
        let text = String::from_utf8(out.stdout).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(f).collect())
            .collect();
        assert_eq!(rows.len(), 200);
        assert!(rows.iter().all(|r| r[3] < 1e-9), "{state}");
        // Omega = 1 / (4 * 8 * 8), t_m = 128 pi, default span 2.2 t_m.
        assert!((rows[199][0] - 2.2 * 128.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn site_four_phase_shifts_the_noon_phase() {
    let dir = TempDir::new().unwrap();
    let common = [
        "evolve",
        "--M",
        "5",
        "--P",
        "2",
        "--mode",
        "effective",
        "--state",
        "noon",
        "--times",
        "0:tm:9",
        "-o",
        "-",
    ];
    let a = ok(dir.path(), &[&common[..], &["--phi", "pi"]].concat()).stdout;
    let b = ok(dir.path(), &[&common[..], &["--varphi", "pi/P"]].concat()).stdout;
    let parse = |v: &[u8]| -> Vec<f64> {
        String::from_utf8_lossy(v)
            .lines()
            .skip(1)
            .map(|l| f(l.split(',').nth(1).unwrap()))
            .collect()
    };
    for (x, y) in parse(&a).iter().zip(parse(&b)) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn json_format_embeds_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "--format",
            "json",
            "evolve",
            "--M",
            "5",
            "--P",
            "2",
            "--mode",
            "second-order",
            "--state",
            "noon",
            "--times",
            "tm",
        ],
    );
    let v = json(&dir.path().join("evolve.json"));
    assert_eq!(v["config"]["m"], 5);
    assert_eq!(v["config"]["mode"], "second-order");
    assert_eq!(v["config"]["u_over_j"], 8.0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    // NOON input at t_m: (-1)^{(N+1)/2} cos(phi) = +1 for N = 7.
    assert!((v["rows"][0]["imbalance_numeric"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"M": 5, "P": 2, "u_over_j": 12, "mode": "effective", "phi": "pi"}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(
        dir.path(),
        &["--config", cfg, "protocol", "identify", "--u-over-j", "16"],
    );
    let v = json(&dir.path().join("identify.json"));
    let c = &v["run"]["config"];
    assert_eq!((c["m"].as_u64(), c["p"].as_u64()), (Some(5), Some(2)));
    assert_eq!(c["u_over_j"], 16.0);
    assert_eq!(c["mode"], "effective");
    assert_eq!(c["phi"].as_f64().unwrap(), PI);
    assert_eq!(c["allow_even_n"], false);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"u_over_J": 3}"#).unwrap();
    let out = plaquette(dir.path(), &["--config", cfg.to_str().unwrap(), "verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("u_over_J"));
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_plaquette"))
        .args([
            "evolve",
            "--M",
            "5",
            "--P",
            "2",
            "--mode",
            "effective",
            "--times",
            "0",
        ])
        .env("PLAQUETTE_OUT_DIR", dir.path().join("env"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env/evolve.csv").exists());
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let runs: [&[&str]; 3] = [
        &[
            "--seed",
            "11",
            "protocol",
            "produce",
            "--M",
            "5",
            "--P",
            "2",
            "--u-over-j",
            "20",
            "--shots",
            "64",
        ],
        &[
            "evolve",
            "--M",
            "5",
            "--P",
            "2",
            "--u-over-j",
            "20",
            "--times",
            "0:2tm:40",
        ],
        &["bands", "--N", "6", "--grid", "0.5:20:4"],
    ];
    for args in runs {
        ok(a.path(), args);
        ok(b.path(), args);
    }
    for name in [
        "produce.json",
        "produce_table.csv",
        "evolve.csv",
        "bands.csv",
        "bands_clusters.json",
    ] {
        let (x, y) = (
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
        );
        assert!(x == y, "{name} differs between runs");
    }
    let v = json(&a.path().join("produce.json"));
    assert_eq!(v["report"]["samples"]["shots"], 64);
    assert_eq!(v["run"]["seed"], 11);
}

#[test]
fn bands_n7_has_120_levels_per_point() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["bands", "--N", "7", "--grid", "0.1:20:6"]);
    let (header, rows) = csv_rows(&dir.path().join("bands.csv"));
    assert_eq!(
        header,
        [
            "u_over_j",
            "eigenvalue_index",
            "E_over_J",
            "band_M",
            "band_P"
        ]
    );
    assert_eq!(rows.len(), 6 * 120);
    assert_eq!(f(&rows[0][0]), 0.1);
    assert_eq!(f(&rows[719][0]), 20.0);
    // At U/J = 20 every level carries a band label and the counts are
    // 2 (M+1)(P+1).
    let strong: Vec<&Vec<String>> = rows.iter().filter(|r| f(&r[0]) == 20.0).collect();
    for (m, p) in [(7usize, 0usize), (6, 1), (5, 2), (4, 3)] {
        let count = strong
            .iter()
            .filter(|r| r[3] == m.to_string() && r[4] == p.to_string())
            .count();
        assert_eq!(count, 2 * (m + 1) * (p + 1));
    }
}

#[test]
fn bands_without_hopping_form_a_degenerate_ladder() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["bands", "--N", "7", "--u-over-j", "3", "--j-zero"],
    );
    let (_, rows) = csv_rows(&dir.path().join("bands.csv"));
    // E - C = -(U12 / 4) (M - P)^2 with U12 = 4 U/J.
    for r in rows {
        let (m, p) = (f(&r[3]), f(&r[4]));
        assert!((f(&r[2]) + 3.0 * (m - p) * (m - p)).abs() < 1e-9);
    }
}

#[test]
fn bands_flag_the_configured_band() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "bands",
            "--N",
            "9",
            "--M",
            "6",
            "--P",
            "3",
            "--u-over-j",
            "8",
        ],
    );
    let v = json(&dir.path().join("bands_clusters.json"));
    let clusters = v["points"][0]["clusters"].as_array().unwrap();
    let flagged: Vec<&Value> = clusters
        .iter()
        .filter(|c| c["highlighted"] == true)
        .collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!(
        (flagged[0]["band_M"].as_u64(), flagged[0]["band_P"].as_u64()),
        (Some(6), Some(3))
    );
    assert_eq!(flagged[0]["count"], 56);
}

#[test]
fn identification_in_effective_mode_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for phi in ["0", "pi"] {
        let out = ok(
            dir.path(),
            &["protocol", "identify", "--phi", phi, "--mode", "effective"],
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains("success 1.000000"));
        let v = json(&dir.path().join("identify.json"));
        let s = v["report"]["identification"]["success_probability"]
            .as_f64()
            .unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn estimation_grid_reaches_the_heisenberg_limit() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "protocol",
            "estimate",
            "--mode",
            "effective",
            "--varphi-grid",
            "0:pi/P:50",
        ],
    );
    let (header, rows) = csv_rows(&dir.path().join("estimate.csv"));
    assert_eq!(header[0], "varphi_rad");
    assert_eq!(rows.len(), 50);
    assert!((f(&rows[49][0]) - PI / 10.0).abs() < 1e-15);
    let dphi: Vec<f64> = rows
        .iter()
        .filter(|r| !r[5].is_empty())
        .map(|r| f(&r[5]))
        .collect();
    // Both end points sit on extrema where the slope vanishes.
    assert_eq!(dphi.len(), 48);
    assert!(dphi.iter().all(|d| (d - 0.1).abs() < 1e-6));
}

#[test]
fn production_matches_reference_table() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "protocol",
            "produce",
            "--M",
            "15",
            "--P",
            "10",
            "--u-over-j",
            "8",
            "--mode",
            "full",
        ],
    );
    let (header, rows) = csv_rows(&dir.path().join("produce_table.csv"));
    assert_eq!(header, ["r", "probability", "phase", "fidelity"]);
    assert_eq!(rows.len(), 16);
    let reference = [
        (15, 0.493898, 0.999593),
        (14, 0.002814, 0.600630),
        (10, 0.001182, 0.002501),
        (1, 0.001398, 0.839876),
        (0, 0.497463, 0.996048),
    ];
    for (r, p, fid) in reference {
        let row = &rows[15 - r];
        assert_eq!(row[0], r.to_string());
        assert!(
            (f(&row[1]) - p).abs() <= 1e-3 && (f(&row[3]) - fid).abs() <= 1e-3,
            "r = {r}"
        );
    }
    assert_eq!(rows[0][2], "0");
    assert_eq!(rows[15][2], "pi");
}

#[test]
fn protocol_preconditions_are_reported() {
    let dir = TempDir::new().unwrap();
    let out = plaquette(
        dir.path(),
        &[
            "protocol",
            "identify",
            "--M",
            "5",
            "--P",
            "3",
            "--mode",
            "effective",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd N"));
    let out = plaquette(
        dir.path(),
        &["evolve", "--state", "noon", "--P", "0", "--M", "5"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = plaquette(
        dir.path(),
        &[
            "evolve",
            "--times",
            "tm,0",
            "--M",
            "5",
            "--P",
            "2",
            "--mode",
            "effective",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn production_at_even_n_needs_opt_in() {
    let dir = TempDir::new().unwrap();
    let args = [
        "protocol",
        "produce",
        "--M",
        "5",
        "--P",
        "3",
        "--mode",
        "effective",
    ];
    assert_eq!(plaquette(dir.path(), &args).status.code(), Some(2));
    ok(dir.path(), &[&args[..], &["--allow-even-n"]].concat());
    let v = json(&dir.path().join("produce.json"));
    assert_eq!(v["report"]["within_validity"], false);
}

#[test]
fn verify_passes_and_detects_broken_integrability() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["verify"]);
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() > 20);

    let out = plaquette(dir.path(), &["verify", "--break-integrability", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["passed"], false);
    assert_eq!(v["failed"], serde_json::json!(["commutator_h_q1"]));
}
