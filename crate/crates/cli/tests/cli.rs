use std::path::Path;
use std::process::{Command, Output};

fn vocalmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vocalmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PARAMS: &str = r#"{"pitch_hz": 150.0, "voiceness": 0.8, "tongue_index": 20.0, "tongue_diameter_cm": 2.0,
  "lips_diameter_cm": 1.0, "constriction_index": 30.0, "constriction_diameter_cm": 1.1, "throat_diameter_cm": 0.8}"#;

#[test]
fn usage_errors_exit_1() {
    assert_eq!(vocalmatch(&[]).status.code(), Some(1));
    assert_eq!(
        vocalmatch(&["match", "--target", "x.wav", "--repr", "wavelet"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(vocalmatch(&["synth", "--out", "x.wav"]).status.code(), Some(1));
    assert_eq!(
        vocalmatch(&["synth", "--params", "a", "--trajectory", "b", "--out", "x.wav"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(vocalmatch(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_2() {
    let out = vocalmatch(&["stoi", "--ref", "/nonexistent/a.wav", "--deg", "/nonexistent/b.wav"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_then_stoi_and_match() {
    let d = tempfile::tempdir().unwrap();
    let params = d.path().join("p.json");
    std::fs::write(&params, PARAMS).unwrap();
    let wav = d.path().join("a.wav");
    let out = vocalmatch(&["synth", "--params", s(&params), "--duration", "0.5", "--out", s(&wav)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(vocalmatch::audio_io::read_wav(&wav).unwrap().len(), 24_000);

    let out = vocalmatch(&["stoi", "--ref", s(&wav), "--deg", s(&wav)]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(v >= 0.99);

    let result = d.path().join("m.json");
    let out = vocalmatch(&[
        "match",
        "--target",
        s(&wav),
        "--repr",
        "mel",
        "--method",
        "pso",
        "--max-evals",
        "30",
        "--out",
        s(&result),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!(json["n_evals"].as_u64().unwrap() <= 30);
    assert!(json["estimate"]["pitch_hz"].is_number());
}

#[test]
fn windowed_match_reports_each_window() {
    let d = tempfile::tempdir().unwrap();
    let params = d.path().join("p.json");
    std::fs::write(&params, PARAMS).unwrap();
    let wav = d.path().join("a.wav");
    assert!(
        vocalmatch(&["synth", "--params", s(&params), "--duration", "0.3", "--out", s(&wav)])
            .status
            .success()
    );
    let result = d.path().join("w.json");
    let out = vocalmatch(&[
        "match",
        "--target",
        s(&wav),
        "--windowed",
        "--window-ms",
        "100",
        "--max-evals",
        "5",
        "--out",
        s(&result),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(json["smoothed"].as_array().unwrap().len(), 3);
}

#[test]
fn dataset_bench_and_report() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("data");
    let out = vocalmatch(&[
        "dataset",
        "--n",
        "2",
        "--seed",
        "4",
        "--out",
        s(&data),
        "--duration",
        "0.1",
    ]);
    assert!(out.status.success());
    assert!(data.join("manifest.json").exists());

    let config = d.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"experiment": "all_params", "optimizers": ["ga", "nm"], "representations": ["mel"],
            "repetitions": 2, "master_seed": 1, "max_evals": 12, "clip_duration_s": 0.1}"#,
    )
    .unwrap();
    let out_dir = d.path().join("bench");
    let out = vocalmatch(&["bench", "--config", s(&config), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let plots = d.path().join("plots");
    let out = vocalmatch(&[
        "report",
        "--csv",
        s(&out_dir.join("report.csv")),
        "--plots-dir",
        s(&plots),
    ]);
    assert!(out.status.success());
    assert!(plots.join("timing.svg").exists());
}

#[test]
fn failed_cells_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let targets = d.path().join("targets");
    std::fs::create_dir(&targets).unwrap();
    let clip = vocalmatch::AudioClip::new(vec![0.1; 100], 48_000).unwrap();
    vocalmatch::audio_io::write_wav(
        targets.join("tiny.wav"),
        &clip,
        vocalmatch::audio_io::WavEncoding::Float32,
    )
    .unwrap();
    let config = d.path().join("cfg.json");
    let body = format!(
        r#"{{"experiment": "real_audio", "optimizers": ["ga"], "representations": ["mel"], "repetitions": 1,
            "max_evals": 5, "target_dir": {:?}}}"#,
        s(&targets)
    );
    std::fs::write(&config, body).unwrap();
    let out = vocalmatch(&["bench", "--config", s(&config), "--out-dir", s(&d.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
