//! End-to-end checks of the installed binary: the synth -> align -> eval
//! loop, the auxiliary subcommands, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyralign"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lyralign_cli_{name}_{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("failed to spawn lyralign");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn synth_align_eval_loop() {
    let dir = workdir("loop");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--units",
        "24",
        "--classes",
        "3",
        "--seed",
        "11",
        "--render-audio",
    ]));
    for file in ["lyrics.txt", "truth.json", "features.csv", "song.wav"] {
        assert!(dir.join(file).exists(), "missing {file}");
    }

    let pred = dir.join("pred.json");
    let report = dir.join("report.json");
    let lrc = dir.join("out.lrc");
    run_ok(bin().args([
        "align",
        "--audio",
        dir.join("song.wav").to_str().unwrap(),
        "--lyrics",
        dir.join("lyrics.txt").to_str().unwrap(),
        "--out",
        pred.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--lrc",
        lrc.to_str().unwrap(),
        "--dump-ssm",
        dir.join("ssm.pgm").to_str().unwrap(),
    ]));
    assert!(pred.exists() && report.exists() && lrc.exists());
    let ssm = std::fs::read(dir.join("ssm.pgm")).unwrap();
    assert!(ssm.starts_with(b"P5\n"));

    let metrics = dir.join("metrics.json");
    run_ok(bin().args([
        "eval",
        "--truth",
        dir.join("truth.json").to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
        "--curve",
        dir.join("curve.csv").to_str().unwrap(),
        "--out",
        metrics.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&metrics).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["n_units"], 24);
    let accuracy = value["accuracy_pct"].as_f64().unwrap();
    assert!(accuracy >= 80.0, "end-to-end accuracy {accuracy}");
    let curve = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 21); // header + 20 tolerances

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn separate_and_vad_subcommands() {
    let dir = workdir("sep");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--units",
        "12",
        "--classes",
        "3",
        "--seed",
        "5",
        "--render-audio",
    ]));
    let voice = dir.join("voice.wav");
    run_ok(bin().args([
        "separate",
        "--audio",
        dir.join("song.wav").to_str().unwrap(),
        "--out",
        voice.to_str().unwrap(),
    ]));
    assert!(voice.exists());

    let segs = dir.join("segments.json");
    run_ok(bin().args([
        "vad",
        "--audio",
        dir.join("song.wav").to_str().unwrap(),
        "--out",
        segs.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&segs).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let segments = value.as_array().unwrap();
    assert!(!segments.is_empty());
    assert!(segments[0]["onset_s"].is_number());
    assert!(segments[0]["offset_s"].is_number());

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn grid_subcommand_writes_full_table() {
    let dir = workdir("grid");
    let out = dir.join("grid.csv");
    run_ok(bin().args([
        "grid",
        "--out",
        out.to_str().unwrap(),
        "--units",
        "14",
        "--classes",
        "3",
        "--songs",
        "1",
        "--seed",
        "3",
        "--jobs",
        "2",
    ]));
    let text = std::fs::read_to_string(&out).unwrap();
    // Header plus 7 offsets x 5 energy settings.
    assert_eq!(text.lines().count(), 36);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_code_2_for_input_errors() {
    let out = bin()
        .args(["align", "--audio", "/nonexistent.wav", "--lyrics", "/nonexistent.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_3_for_silent_audio() {
    let dir = workdir("silent");
    // Write 4 s of digital silence.
    let spec = hound_spec();
    let wav = dir.join("silence.wav");
    let mut writer = hound::WavWriter::create(&wav, spec).unwrap();
    for _ in 0..64_000 {
        writer.write_sample(0.0f32).unwrap();
    }
    writer.finalize().unwrap();
    let lyrics = dir.join("lyrics.txt");
    std::fs::write(&lyrics, "가나다라").unwrap();

    let out = bin()
        .args([
            "align",
            "--audio",
            wav.to_str().unwrap(),
            "--lyrics",
            lyrics.to_str().unwrap(),
            "--out",
            dir.join("pred.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = bin()
        .args(["vad", "--audio", wav.to_str().unwrap(), "--no-separation"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_code_3_for_lyrics_without_vowels() {
    let dir = workdir("novowel");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--units",
        "8",
        "--classes",
        "2",
        "--seed",
        "9",
        "--render-audio",
    ]));
    let lyrics = dir.join("empty.txt");
    std::fs::write(&lyrics, "only latin words here").unwrap();
    let out = bin()
        .args([
            "align",
            "--audio",
            dir.join("song.wav").to_str().unwrap(),
            "--lyrics",
            lyrics.to_str().unwrap(),
            "--out",
            dir.join("pred.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = workdir("config");
    run_ok(bin().args([
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--units",
        "16",
        "--classes",
        "3",
        "--seed",
        "21",
        "--render-audio",
    ]));
    let config = dir.join("run.conf");
    std::fs::write(&config, "wsnmf.k_offset = 1\nseed = 7\n").unwrap();
    let report = dir.join("report.json");
    run_ok(bin().args([
        "align",
        "--audio",
        dir.join("song.wav").to_str().unwrap(),
        "--lyrics",
        dir.join("lyrics.txt").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--k-offset",
        "0",
        "--out",
        dir.join("pred.json").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // Flag wins over config: K = L' + 0 = 3.
    assert_eq!(value["l_prime"], 3);
    assert_eq!(value["k"], 3);
    std::fs::remove_dir_all(&dir).ok();
}

fn hound_spec() -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    }
}
