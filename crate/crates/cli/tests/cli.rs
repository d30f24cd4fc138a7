use std::path::{Path, PathBuf};
use std::process::Command;

use csm::container::{TrackContainer, CH_ENVELOPE, CH_F0, CH_MVF, CH_VOICING};
use csm::signal::wav::{read_wav, write_wav};
use csm::signal::SpeechBuffer;
use csm::synthesis::synthesize_parts;
use csm::synthetic::{three_harmonic_test_voice, tone};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn csm(dir: &Path, args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_csm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    Out {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = csm(dir, args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o.stdout
}

/// Report rows as `(name, [llr, fwsnrseg, lsd])`, header dropped.
fn report_rows(text: &str) -> Vec<(String, [f64; 3])> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            let v = |i: usize| f[i].parse::<f64>().unwrap();
            (f[0].to_string(), [v(1), v(2), v(3)])
        })
        .collect()
}

fn toy(dir: &Path, n: usize) -> PathBuf {
    ok(dir, &["toy-corpus", "toy", "--utterances", &n.to_string()]);
    dir.join("toy")
}

#[test]
fn analyze_writes_aligned_channels() {
    let d = tempfile::tempdir().unwrap();
    write_wav(d.path().join("tone.wav"), &tone(180.0, 0.4, 1.0, 16000)).unwrap();
    ok(d.path(), &["analyze", "tone.wav", "tone.csmt"]);
    let c = TrackContainer::load(&d.path().join("tone.csmt")).unwrap();
    let n = c.n_frames().unwrap();
    for name in [CH_F0, CH_MVF, CH_VOICING, CH_ENVELOPE] {
        assert_eq!(c.require(name).unwrap().rows, n);
    }
    let bytes = std::fs::read(d.path().join("tone.csmt")).unwrap();
    assert_eq!(
        TrackContainer::from_bytes(&bytes).unwrap().to_bytes(),
        bytes
    );
}

#[test]
fn truncated_wav_fails_without_output() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("t.wav");
    write_wav(&p, &tone(180.0, 0.4, 0.5, 16000)).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..20]).unwrap();
    let o = csm(d.path(), &["analyze", "t.wav", "t.csmt"]);
    assert_ne!(o.code, 0);
    assert!(!o.stderr.is_empty());
    assert!(!d.path().join("t.csmt").exists());
    let leftovers: Vec<_> = std::fs::read_dir(d.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn synth_is_deterministic_and_length_matched() {
    let d = tempfile::tempdir().unwrap();
    let voice = three_harmonic_test_voice(1.0, 16000, 3).unwrap();
    write_wav(d.path().join("v.wav"), &voice).unwrap();
    ok(d.path(), &["analyze", "v.wav", "v.csmt"]);
    ok(d.path(), &["synth", "v.csmt", "a.wav", "--seed", "7"]);
    ok(d.path(), &["synth", "v.csmt", "b.wav", "--seed", "7"]);
    ok(d.path(), &["synth", "v.csmt", "c.wav", "--seed", "8"]);
    let a = std::fs::read(d.path().join("a.wav")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.wav")).unwrap());
    assert_ne!(a, std::fs::read(d.path().join("c.wav")).unwrap());
    let out = read_wav(d.path().join("a.wav")).unwrap();
    assert!((out.len() as i64 - voice.len() as i64).abs() <= 80);
}

#[test]
fn synth_names_a_missing_channel() {
    let d = tempfile::tempdir().unwrap();
    let mut c = TrackContainer::new(16000, 0.005).unwrap();
    c.insert_column(CH_F0, &[120.0; 10]).unwrap();
    c.insert_column(CH_MVF, &[2000.0; 10]).unwrap();
    std::fs::write(d.path().join("x.csmt"), c.to_bytes()).unwrap();
    let o = csm(d.path(), &["synth", "x.csmt", "x.wav"]);
    assert_ne!(o.code, 0);
    assert!(o.stderr.contains("envelope"), "{}", o.stderr);
    assert!(!d.path().join("x.wav").exists());
}

#[test]
fn unvoiced_container_synthesizes_noise_only() {
    let d = tempfile::tempdir().unwrap();
    let n = 200;
    let mut c = TrackContainer::new(16000, 0.005).unwrap();
    c.insert_column(CH_F0, &vec![150.0; n]).unwrap();
    c.insert_column(CH_MVF, &vec![1000.0; n]).unwrap();
    c.insert_column(CH_VOICING, &vec![0.0; n]).unwrap();
    c.insert_rows(CH_ENVELOPE, &vec![vec![-3.0; 257]; n])
        .unwrap();
    std::fs::write(d.path().join("u.csmt"), c.to_bytes()).unwrap();
    ok(d.path(), &["synth", "u.csmt", "u.wav"]);
    let parts = synthesize_parts(&c.to_track().unwrap(), 42).unwrap();
    let e = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let total = e(parts.noise.samples()) + e(parts.voiced.samples());
    assert!(total > 0.0);
    assert!(e(parts.voiced.samples()) <= 1e-6 * total);
    let wav = read_wav(d.path().join("u.wav")).unwrap();
    for (a, b) in wav
        .samples()
        .iter()
        .zip(parts.combined().unwrap().samples())
    {
        assert!((a - b).abs() <= 1.0 / 32767.0);
    }
}

#[test]
fn copy_synth_of_test_voice_meets_lsd_gate() {
    let d = tempfile::tempdir().unwrap();
    write_wav(
        d.path().join("v.wav"),
        &three_harmonic_test_voice(1.5, 16000, 1).unwrap(),
    )
    .unwrap();
    ok(
        d.path(),
        &["copy-synth", "v.wav", "out.wav", "--report", "r.tsv"],
    );
    let rows = report_rows(&std::fs::read_to_string(d.path().join("r.tsv")).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows[0].1[2] <= 2.0, "lsd {}", rows[0].1[2]);
    assert!(d.path().join("out.wav").exists());
}

#[test]
fn copy_synth_of_silence_is_defined() {
    let d = tempfile::tempdir().unwrap();
    write_wav(
        d.path().join("s.wav"),
        &SpeechBuffer::silence(8000, 16000).unwrap(),
    )
    .unwrap();
    let text = ok(d.path(), &["copy-synth", "s.wav", "o.wav"]);
    let rows = report_rows(&text);
    let m = rows[0].1;
    assert!(m.iter().all(|v| v.is_finite()));
    assert!((-10.0..=35.0).contains(&m[1]));
}

#[test]
fn copy_synth_batch_reports_every_file_and_the_mean() {
    let d = tempfile::tempdir().unwrap();
    let src = d.path().join("in");
    std::fs::create_dir(&src).unwrap();
    for i in 0..10 {
        let f0 = 110.0 + 10.0 * i as f64;
        write_wav(src.join(format!("u{i:02}.wav")), &tone(f0, 0.3, 0.4, 16000)).unwrap();
    }
    ok(
        d.path(),
        &[
            "copy-synth",
            "in",
            "out",
            "--report",
            "r.tsv",
            "--jobs",
            "3",
        ],
    );
    let rows = report_rows(&std::fs::read_to_string(d.path().join("r.tsv")).unwrap());
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10].0, "mean");
    assert_eq!(std::fs::read_dir(d.path().join("out")).unwrap().count(), 10);
    let serial = d.path().join("r1.tsv");
    ok(
        d.path(),
        &[
            "copy-synth",
            "in",
            "out1",
            "--report",
            "r1.tsv",
            "--jobs",
            "1",
        ],
    );
    assert_eq!(
        std::fs::read(serial).unwrap(),
        std::fs::read(d.path().join("r.tsv")).unwrap()
    );
}

#[test]
fn train_is_reproducible_and_logs_the_schedule() {
    let d = tempfile::tempdir().unwrap();
    toy(d.path(), 4);
    std::fs::write(
        d.path().join("c.toml"),
        "[train]\nepochs = 17\n[model]\nff_units = [16]\nlstm_units = 8\n",
    )
    .unwrap();
    let args = |m: &str| {
        vec![
            "--config",
            "c.toml",
            "train",
            "toy/features",
            "toy/targets",
            m,
            "--heldout",
            "1",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    for m in ["a.csmn", "b.csmn"] {
        let a: Vec<String> = args(m);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        ok(d.path(), &refs);
    }
    let la = std::fs::read_to_string(d.path().join("a.csmn.loss.tsv")).unwrap();
    assert_eq!(
        la,
        std::fs::read_to_string(d.path().join("b.csmn.loss.tsv")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.path().join("a.csmn")).unwrap(),
        std::fs::read(d.path().join("b.csmn")).unwrap()
    );
    let lines: Vec<Vec<&str>> = la
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(lines.len(), 17);
    assert_eq!(&lines[9][1..3], &["0.002", "0.3"]);
    assert_eq!(&lines[10][1..3], &["0.002", "0.9"]);
    assert_eq!(lines[15][1], "0.001");
    assert_eq!(lines[16][1], "0.0005");
    assert!(lines.iter().all(|l| l[4] != "nan"));
}

#[test]
fn train_rejects_empty_and_unpaired_inputs() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("empty")).unwrap();
    assert_ne!(
        csm(d.path(), &["train", "empty", "empty", "m.csmn"]).code,
        0
    );
    toy(d.path(), 3);
    std::fs::remove_file(d.path().join("toy/targets/toy001.csmt")).unwrap();
    let o = csm(
        d.path(),
        &["train", "toy/features", "toy/targets", "m.csmn"],
    );
    assert_ne!(o.code, 0);
    assert!(o.stderr.contains("toy001"), "{}", o.stderr);
    assert!(!d.path().join("m.csmn").exists());
}

#[test]
fn eval_against_itself_is_identity() {
    let d = tempfile::tempdir().unwrap();
    toy(d.path(), 3);
    let rows = report_rows(&ok(d.path(), &["eval", "toy/wav", "toy/wav"]));
    assert_eq!(rows.len(), 4);
    for (_, m) in rows {
        assert_eq!(m[0], 0.0);
        assert_eq!(m[2], 0.0);
    }
}

#[test]
fn eval_names_a_missing_file() {
    let d = tempfile::tempdir().unwrap();
    toy(d.path(), 3);
    std::fs::create_dir(d.path().join("syn")).unwrap();
    for n in ["toy000.wav", "toy002.wav"] {
        std::fs::copy(
            d.path().join("toy/wav").join(n),
            d.path().join("syn").join(n),
        )
        .unwrap();
    }
    let o = csm(d.path(), &["eval", "toy/wav", "syn", "--report", "r.tsv"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("toy001.wav"), "{}", o.stderr);
    assert!(!d.path().join("r.tsv").exists());
}

#[test]
fn predict_synth_eval_pipeline_completes() {
    let d = tempfile::tempdir().unwrap();
    toy(d.path(), 4);
    std::fs::write(d.path().join("c.toml"), "[train]\nepochs = 3\n").unwrap();
    ok(
        d.path(),
        &[
            "--config",
            "c.toml",
            "train",
            "toy/features",
            "toy/targets",
            "m.csmn",
        ],
    );
    ok(d.path(), &["predict", "m.csmn", "toy/features", "pred"]);
    std::fs::create_dir(d.path().join("syn")).unwrap();
    for i in 0..4 {
        let name = format!("toy{i:03}");
        ok(
            d.path(),
            &[
                "synth",
                &format!("pred/{name}.csmt"),
                &format!("syn/{name}.wav"),
            ],
        );
    }
    let rows = report_rows(&ok(d.path(), &["eval", "toy/wav", "syn"]));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|(_, m)| m.iter().all(|v| v.is_finite())));
}

#[test]
fn refine_f0_text_output() {
    let d = tempfile::tempdir().unwrap();
    write_wav(d.path().join("t.wav"), &tone(200.0, 0.4, 0.5, 16000)).unwrap();
    ok(d.path(), &["refine-f0", "t.wav", "f0.txt", "--text"]);
    let text = std::fs::read_to_string(d.path().join("f0.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 50);
    let mid: Vec<f64> = lines[50].split('\t').map(|v| v.parse().unwrap()).collect();
    assert!((mid[1] - 200.0).abs() < 1.0);
    ok(d.path(), &["refine-f0", "t.wav", "f0.csmt"]);
    assert!(TrackContainer::load(&d.path().join("f0.csmt"))
        .unwrap()
        .get(CH_F0)
        .is_some());
}

#[test]
fn config_dump_reloads_identically() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("c.toml"),
        "[train]\nlearning_rate = 0.004\n[analysis]\nnoise_envelope = true\n",
    )
    .unwrap();
    ok(d.path(), &["--config", "c.toml", "config", "dump.toml"]);
    let first = std::fs::read_to_string(d.path().join("dump.toml")).unwrap();
    let again = ok(d.path(), &["--config", "dump.toml", "config"]);
    assert_eq!(first, again);
    assert!(first.contains("0.004"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(csm(d.path(), &["frobnicate"]).code, 1);
    assert_eq!(csm(d.path(), &["synth"]).code, 1);
    std::fs::write(d.path().join("bad.toml"), "[train]\nlearning_rat = 1\n").unwrap();
    assert_eq!(csm(d.path(), &["--config", "bad.toml", "config"]).code, 1);
    assert_eq!(csm(d.path(), &["--help"]).code, 0);
}

#[test]
fn unreadable_input_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = csm(d.path(), &["analyze", "nope.wav", "x.csmt"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.starts_with("csm: error:"));
}
