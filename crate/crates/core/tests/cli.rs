use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use specfisher::fisher::{homodyne_info_modes, invert_info};
use specfisher::synth::coherent_noise_floor;
use specfisher::{Band, OuPsd, ParamVector};

fn specfisher(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specfisher"))
        .args(args)
        .env_remove("SPECFISHER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const DESK: [&str; 6] = ["--theta1", "0.1323", "--theta2", "5.909e4", "--T", "0.01"];

#[test]
fn bounds_table_for_reference_fluxes() {
    let mut args = vec!["bounds"];
    args.extend(DESK);
    args.extend(["--C", "23.5,64.8,113,254"]);
    let csv = stdout(&specfisher(&args));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "23.5");
    let q11: f64 = rows[0][2].parse().unwrap();
    let h11: f64 = rows[0][5].parse().unwrap();
    assert!((q11 - 2.3404).abs() < 1e-4 && (h11 - 2.4266).abs() < 1e-4);

    let mut json = args.clone();
    json.extend(["--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&specfisher(&json))).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["monotone"], true);

    let mut by_flux = vec!["bounds"];
    by_flux.extend(DESK);
    by_flux.extend(["--S-I", "1.315e6,1.418e7"]);
    let rows = data_rows(&stdout(&specfisher(&by_flux)));
    let c: f64 = rows[1][0].parse().unwrap();
    assert!((c - 254.0).abs() < 0.1);
}

#[test]
fn usage_errors_exit_2() {
    let code = |args: &[&str]| specfisher(args).status.code();
    assert_eq!(
        code(&["bounds", "--theta1", "0.1323", "--T", "0.01", "--C", "1"]),
        Some(2)
    );
    let mut zero = vec!["bounds"];
    zero.extend(DESK);
    zero.extend(["--C", "0"]);
    assert_eq!(code(&zero), Some(2));
    assert_eq!(code(&["mc", "--trials", "1"]), Some(2));
    assert_eq!(code(&["mc", "--C", "-3"]), Some(2));
    assert_eq!(code(&["nonsense"]), Some(2));
    assert_eq!(code(&["bounds", "--theta1", "x"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = specfisher(&[
        "estimate",
        "--input",
        empty.to_str().unwrap(),
        "--theta1",
        "1",
        "--theta2",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty.csv:1"));
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&[
            "estimate",
            "--input",
            missing.to_str().unwrap(),
            "--theta1",
            "1",
            "--theta2",
            "1"
        ]),
        Some(2)
    );
}

#[test]
fn numeric_failure_exits_3() {
    let out = specfisher(&["bounds", "--theta1", "1", "--theta2", "1", "--T", "1", "--C", "1e300"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn default_mc_run_and_seed_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("mc.csv");
    let out = specfisher(&["mc", "--seed", "12", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta1: eps_bar"));
    let csv = fs::read_to_string(&out_path).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[6], "100");
        assert!(r[4].parse::<f64>().unwrap() > 0.0);
    }

    let env_run = Command::new(env!("CARGO_BIN_EXE_specfisher"))
        .args(["mc", "--trials", "5"])
        .env("SPECFISHER_SEED", "12")
        .output()
        .unwrap();
    let flag_run = specfisher(&["mc", "--trials", "5", "--seed", "12"]);
    assert_eq!(stdout(&env_run), stdout(&flag_run));
    let other = specfisher(&["mc", "--trials", "5", "--seed", "13"]);
    assert_ne!(stdout(&other), stdout(&flag_run));
    let threads = specfisher(&["--workers", "1", "mc", "--trials", "5", "--seed", "12"]);
    assert_eq!(stdout(&threads), stdout(&flag_run));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"trials": 4, "seed": 3, "C": 64.8, "measurement": "homodyne"}"#,
    )
    .unwrap();
    let json = stdout(&specfisher(&[
        "mc",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "3",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["config"]["trials"], 3);
    assert_eq!(v["config"]["seed"], 3);
    assert!((v["c"].as_f64().unwrap() - 64.8).abs() < 1e-9);

    let bad = dir.path().join("run.yaml");
    fs::write(&bad, "trials: 3").unwrap();
    assert_eq!(
        specfisher(&["mc", "--config", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

fn simulate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate"];
    args.extend(DESK);
    args.extend(["--out", dir.to_str().unwrap()]);
    args.extend(extra);
    stdout(&specfisher(&args));
}

#[test]
fn simulate_then_estimate_recovers_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let traces = 10;
    simulate(
        dir.path(),
        &["--dt", "5e-6", "--S-I", "1.315e6", "--count", "10", "--seed", "31"],
    );
    assert_eq!(fs::read_dir(dir.path().join("y")).unwrap().count(), traces);

    let s_eta = coherent_noise_floor(1.315e6).unwrap().to_string();
    let y = dir.path().join("y");
    let csv = stdout(&specfisher(&[
        "estimate",
        "--input",
        y.to_str().unwrap(),
        "--theta1",
        "0.1323",
        "--theta2",
        "5.909e4",
        "--s-eta",
        &s_eta,
        "--pooled",
        "true",
    ]));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "true");
    let est = [rows[0][1].parse::<f64>().unwrap(), rows[0][2].parse::<f64>().unwrap()];

    let theta = ParamVector::new(0.1323, 5.909e4).unwrap();
    let band = Band::default_for(&theta);
    let info = homodyne_info_modes(&OuPsd, 1.315e6f64.recip() / 4.0, &theta, 0.01, band.lo, band.hi).unwrap();
    let crb = invert_info(&info).unwrap();
    for (i, truth) in theta.as_array().iter().enumerate() {
        let sd = (crb[i][i] / traces as f64).sqrt();
        assert!(
            (est[i] - truth).abs() < 3.0 * sd,
            "param {i}: {} vs {truth} (sd {sd})",
            est[i]
        );
    }

    let per_trace = stdout(&specfisher(&[
        "estimate",
        "--input",
        y.to_str().unwrap(),
        "--theta1",
        "0.1323",
        "--theta2",
        "5.909e4",
        "--s-eta",
        &s_eta,
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&per_trace).unwrap();
    assert_eq!(v.as_array().unwrap().len(), traces);
    assert!(v[0]["source"].as_str().unwrap().ends_with("trace_0000.csv"));
}

#[test]
fn photon_count_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "simulate",
        "--theta1",
        "1",
        "--theta2",
        "1",
        "--T",
        "600",
        "--measurement",
        "spc",
    ];
    args.extend([
        "--S-I",
        "50",
        "--count",
        "2",
        "--seed",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    stdout(&specfisher(&args));
    let file = dir.path().join("counts_0001.csv");
    let csv = stdout(&specfisher(&[
        "estimate",
        "--input",
        file.to_str().unwrap(),
        "--photon-flux",
        "50",
        "--theta1",
        "2",
        "--theta2",
        "0.5",
    ]));
    let rows = data_rows(&csv);
    let t1: f64 = rows[0][1].parse().unwrap();
    let t2: f64 = rows[0][2].parse().unwrap();
    assert!((t1 - 1.0).abs() < 0.5 && (t2 - 1.0).abs() < 0.5, "{t1} {t2}");
}

#[test]
fn calibrate_recovers_injected_distortion() {
    let dir = tempfile::tempdir().unwrap();
    simulate(
        dir.path(),
        &[
            "--dt",
            "5e-7",
            "--S-I",
            "6.198e6",
            "--count",
            "8",
            "--seed",
            "77",
            "--y-scale",
            "1.25",
        ],
    );
    let x = dir.path().join("x");
    let y = dir.path().join("y");
    let json = stdout(&specfisher(&[
        "calibrate",
        "--x",
        x.to_str().unwrap(),
        "--y",
        y.to_str().unwrap(),
        "--theta1",
        "0.1323",
        "--theta2",
        "5.909e4",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let factor = v["factor"].as_f64().unwrap();
    assert!((factor - 0.8).abs() < 0.008, "{factor}");

    // no room for a default noise band at the coarse sampling interval
    let coarse = tempfile::tempdir().unwrap();
    simulate(
        coarse.path(),
        &["--dt", "5e-6", "--S-I", "6.198e6", "--count", "5", "--seed", "1"],
    );
    let out = specfisher(&[
        "calibrate",
        "--x",
        coarse.path().join("x").to_str().unwrap(),
        "--y",
        coarse.path().join("y").to_str().unwrap(),
        "--theta1",
        "0.1323",
        "--theta2",
        "5.909e4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
