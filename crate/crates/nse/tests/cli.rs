use std::path::Path;
use std::process::{Command, Output};

use nse::formats::{eegb, wav};
use nse_core::audio::AudioClip;
use nse_core::signal::Recording;
use serde_json::Value;

fn nse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nse")).current_dir(dir).args(args).output().unwrap()
}

/// Runs a command expected to succeed and returns its status line.
fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = nse(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "nse {args:?} failed: {stderr}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "one status line expected: {stdout}");
    let v: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["status"], "ok");
    v
}

/// Runs a command expected to fail; returns (exit code, error JSON).
fn fails(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = nse(dir, args);
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().expect("error line on stderr");
    let v: Value = serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {stderr}"));
    assert_eq!(v["status"], "error");
    assert_eq!(v["code"], out.status.code().unwrap());
    (out.status.code().unwrap(), v)
}

const SMALL: &str = r#"{"synth": {"n_channels": 16, "n_classes": 13, "trials_per_class": 3}}"#;

fn small_dataset(dir: &Path) {
    std::fs::write(dir.join("c.json"), SMALL).unwrap();
    ok(dir, &["synth", "--config", "c.json", "--out", "data"]);
}

#[test]
fn synth_writes_both_domains_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    for f in ["imagined.eegb", "imagined.events.csv", "spoken.eegb", "spoken.events.csv", "ground_truth.json"] {
        assert!(dir.path().join("data").join(f).is_file(), "{f} missing");
    }
    let info = ok(dir.path(), &["info", "data/spoken.eegb"]);
    assert_eq!(info["format"], "eegb");
    assert_eq!(info["channels"], 16);
    assert_eq!(info["domain"], "spoken");
    let truth = ok(dir.path(), &["info", "data/ground_truth.json"]);
    assert_eq!(truth["classes"], 13);
}

#[test]
fn bank_has_104_filters_and_embeddings_are_16_by_104() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let fit = ok(d, &["csp-fit", "--epochs", "data/imagined.eegb", "--events", "data/imagined.events.csv", "--out", "bank.json"]);
    assert_eq!(fit["n_filters"], 104);
    assert_eq!(ok(d, &["info", "bank.json"])["n_filters"], 104);
    ok(d, &["embed", "--epochs", "data/spoken.eegb", "--bank", "bank.json", "--out", "emb.bin", "--masked-csv", "m.csv"]);
    let info = ok(d, &["info", "emb.bin"]);
    assert_eq!(info["count"], 39);
    assert_eq!((info["n_windows"].as_u64(), info["n_filters"].as_u64()), (Some(16), Some(104)));
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 39 * 16);
}

#[test]
fn config_precedence_flag_over_file_over_default() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let fit = |extra: &[&str]| {
        let mut args = vec!["csp-fit", "--epochs", "data/imagined.eegb", "--out", "bank.json"];
        args.extend_from_slice(extra);
        ok(d, &args)["n_filters"].as_u64().unwrap()
    };
    std::fs::write(d.join("p.json"), r#"{"patterns_per_class": 4}"#).unwrap();
    assert_eq!(fit(&[]), 13 * 8);
    assert_eq!(fit(&["--config", "p.json"]), 13 * 4);
    assert_eq!(fit(&["--config", "p.json", "--patterns-per-class", "6"]), 13 * 6);

    // Seed: flag beats file.
    std::fs::write(d.join("s.json"), r#"{"seed": 5, "synth": {"n_channels": 8, "n_classes": 2, "trials_per_class": 2}}"#).unwrap();
    ok(d, &["synth", "--config", "s.json", "--out", "a"]);
    ok(d, &["synth", "--config", "s.json", "--seed", "6", "--out", "b"]);
    let seed = |p: &str| ok(d, &["info", p])["seed"].as_u64().unwrap();
    assert_eq!((seed("a/ground_truth.json"), seed("b/ground_truth.json")), (5, 6));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, err) = fails(d, &["embed", "--epochs", "e.eegb", "--bnak", "b.json"]);
    assert_eq!(code, 1);
    assert!(err["message"].as_str().unwrap().contains("--bank"));
    assert_eq!(fails(d, &["frobnicate"]).0, 1);
    assert_eq!(fails(d, &["csp-fit", "--epochs", "x.eegb"]).0, 1, "missing --out");

    let (code, err) = fails(d, &["info", "missing.bin"]);
    assert_eq!((code, err["kind"].as_str()), (2, Some("data")));
    std::fs::write(d.join("junk.eegb"), b"{\"version\":1}\n\x00\x01").unwrap();
    assert_eq!(fails(d, &["csp-fit", "--epochs", "junk.eegb", "--out", "b.json"]).0, 2);
    std::fs::write(d.join("bad.json"), r#"{"n_windows": 0}"#).unwrap();
    assert_eq!(fails(d, &["info", "x", "--config", "bad.json"]).0, 2);

    // A constant recording has no variance to whiten.
    let flat = Recording::with_default_names(250.0, 4, vec![1.0; 4 * 1000]).unwrap();
    eegb::write(&d.join("flat.eegb"), &flat, None).unwrap();
    let (code, err) = fails(d, &["ica-clean", "--input", "flat.eegb", "--references", "flat.eegb", "--out", "o.eegb"]);
    assert_eq!((code, err["kind"].as_str()), (3, Some("numerical")));
}

#[test]
fn inputs_are_never_overwritten_or_modified() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let before = std::fs::read(d.join("data/imagined.eegb")).unwrap();
    let events = std::fs::read(d.join("data/imagined.events.csv")).unwrap();
    assert_eq!(fails(d, &["preprocess", "--input", "data/imagined.eegb", "--out", "data/imagined.eegb"]).0, 1);
    let v = ok(d, &["preprocess", "--config", "c.json", "--input", "data/imagined.eegb", "--out", "pre/imagined.eegb"]);
    assert_eq!(v["events"], 39);
    assert_eq!(std::fs::read(d.join("data/imagined.eegb")).unwrap(), before);
    assert_eq!(std::fs::read(d.join("data/imagined.events.csv")).unwrap(), events);
    assert_eq!(std::fs::read(d.join("pre/imagined.events.csv")).unwrap(), events);
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), SMALL).unwrap();
    ok(d, &["synth", "--config", "c.json", "--seed", "3", "--out", "a"]);
    ok(d, &["synth", "--config", "c.json", "--seed", "3", "--threads", "1", "--out", "b"]);
    for f in ["imagined.eegb", "spoken.eegb", "imagined.events.csv", "ground_truth.json"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn artifact_mixture_cleans_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--artifact", "--seed", "2", "--out", "art"]);
    let v = ok(d, &[
        "ica-clean", "--input", "art/mixture.eegb", "--references", "art/references.eegb", "--out", "clean.eegb", "--model-out",
        "ica.json",
    ]);
    assert_eq!(v["rejected"].as_array().unwrap().len(), 1);
    assert_eq!(ok(d, &["info", "ica.json"])["components"], 4);
}

#[test]
fn adapt_eval_erders_and_tsne_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let v = ok(d, &[
        "adapt-eval", "--config", "c.json", "--imagined", "data/imagined.eegb", "--spoken", "data/spoken.eegb", "--perplexity",
        "10", "--iterations", "300", "--out", "adapt",
    ]);
    assert!(v["shared_distance"].as_f64().unwrap() < v["per_domain_distance"].as_f64().unwrap());
    let csv = std::fs::read_to_string(d.join("adapt/tsne_shared.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch_id,label,domain,x,y"));
    assert_eq!(csv.lines().count(), 1 + 2 * 39);
    let report: Value = serde_json::from_slice(&std::fs::read(d.join("adapt/adaptation.json")).unwrap()).unwrap();
    assert_eq!(report["per_class_shared"].as_object().unwrap().len(), 13);

    let g = ok(d, &["erders", "--epochs", "data/imagined.eegb", "--out", "grid.csv"]);
    assert_eq!((g["bands"].as_u64(), g["time_bins"].as_u64()), (Some(5), Some(8)));

    ok(d, &["csp-fit", "--epochs", "data/imagined.eegb", "--out", "bank.json"]);
    ok(d, &["embed", "--epochs", "data/imagined.eegb", "--bank", "bank.json", "--out", "emb.bin"]);
    let t = ok(d, &["tsne", "--input", "emb.bin", "--perplexity", "5", "--out", "t.csv"]);
    assert!(t["kl_final"].as_f64().unwrap() <= t["kl_initial"].as_f64().unwrap());
}

#[test]
fn audio_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n = 44_100;
    let tone: Vec<f64> = (0..n).map(|i| 0.25 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 44_100.0).sin()).collect();
    wav::write(&d.join("in.wav"), &AudioClip::new(44_100, tone).unwrap(), wav::WavEncoding::Float32).unwrap();
    let v = ok(d, &["audio-resample", "--input", "in.wav", "--out", "out.wav"]);
    assert_eq!((v["target_hz"].as_u64(), v["samples"].as_u64()), (Some(22_050), Some(22_050)));
    assert_eq!(ok(d, &["info", "out.wav"])["sample_rate_hz"], 22_050);
    let v = ok(d, &["audio-denoise", "--input", "in.wav", "--target-hz", "22050", "--out", "den.wav"]);
    assert!(v["energy_out"].as_f64().unwrap() <= v["energy_in"].as_f64().unwrap());
    assert_eq!(fails(d, &["audio-denoise", "--input", "in.wav", "--out", "in.wav"]).0, 1);
}
