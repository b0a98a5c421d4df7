//! End-to-end tests that drive the real `qfea` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfea::dsp::AxisKind;
use qfea::featfile::read_feature;

fn qfea() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfea"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = qfea().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "qfea {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> (i32, String) {
    let out = qfea().args(args).output().expect("binary runs");
    assert!(!out.status.success(), "qfea {args:?} unexpectedly succeeded");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Synthesize a small corpus and return (corpus_dir, protocol_path).
fn small_corpus(root: &Path, partition: &str, n_per_class: usize, seed: u64) -> (PathBuf, PathBuf) {
    let dir = root.join(format!("corpus_{partition}"));
    run_ok(&[
        "synth",
        "--seed",
        &seed.to_string(),
        "--n-per-class",
        &n_per_class.to_string(),
        "--partition",
        partition,
        "--out",
        path_str(&dir),
    ]);
    let protocol = dir.join("protocol.txt");
    assert!(protocol.exists());
    (dir, protocol)
}

#[test]
fn chain_syntax_errors_are_usage_errors_with_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let (code, stderr) = run_err(&[
        "synth",
        "--out",
        path_str(&out),
        "--bona-chain",
        "0.5:",
    ]);
    assert_eq!(code, 2, "usage errors exit with 2: {stderr}");
    assert!(stderr.contains("byte 0"), "position missing: {stderr}");

    let (code, stderr) = run_err(&[
        "synth",
        "--out",
        path_str(&out),
        "--bona-chain",
        "0.4:6.0,0.5:",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("byte 8"), "position missing: {stderr}");
}

#[test]
fn synth_refuses_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, _) = small_corpus(tmp.path(), "train", 1, 3);
    let args = [
        "synth",
        "--seed",
        "3",
        "--n-per-class",
        "1",
        "--out",
        path_str(&dir),
    ];
    let (code, stderr) = run_err(&args);
    assert_eq!(code, 2);
    assert!(stderr.contains("--force"), "{stderr}");
    let mut forced = args.to_vec();
    forced.push("--force");
    run_ok(&forced);
}

#[test]
fn extract_writes_one_feature_per_trial_with_expected_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 2, 5);

    let feat = tmp.path().join("feat_ceps");
    let out = run_ok(&[
        "extract",
        "--frontend",
        "ceps",
        "--protocol",
        path_str(&protocol),
        "--audio-dir",
        path_str(&dir),
        "--out-dir",
        path_str(&feat),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("extracted 4/4 ceps features"), "{stdout}");
    let files: Vec<_> = std::fs::read_dir(&feat)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".qfea"))
        .collect();
    assert_eq!(files.len(), 4, "{files:?}");
    let grid = read_feature(&feat.join(&files[0])).unwrap();
    assert_eq!(grid.axis, AxisKind::QuefrencyS);
    assert!(feat.join("manifest.json").exists());
}

#[test]
fn extract_lfcc_default_geometry_is_sixty_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 1, 9);
    let feat = tmp.path().join("feat_lfcc");
    run_ok(&[
        "extract",
        "--frontend",
        "lfcc",
        "--protocol",
        path_str(&protocol),
        "--audio-dir",
        path_str(&dir),
        "--out-dir",
        path_str(&feat),
    ]);
    let trial = std::fs::read_dir(&feat)
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().ends_with(".qfea"))
        .expect("a feature file");
    let grid = read_feature(&trial.path()).unwrap();
    assert_eq!(grid.data.ncols(), 60, "static+delta+delta2 stack");
}

#[test]
fn extract_rejects_unknown_frontend() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 1, 13);
    let (code, stderr) = run_err(&[
        "extract",
        "--frontend",
        "wavelet",
        "--protocol",
        path_str(&protocol),
        "--audio-dir",
        path_str(&dir),
        "--out-dir",
        path_str(&tmp.path().join("x")),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown front-end"), "{stderr}");
}

#[test]
fn fuse_single_input_is_byte_identical_passthrough() {
    let tmp = tempfile::tempdir().unwrap();
    let scores = tmp.path().join("a.scores");
    std::fs::write(&scores, "T_01\t1.250000\nT_02\t-0.500000\n").unwrap();
    let fused = tmp.path().join("fused.scores");
    run_ok(&[
        "fuse",
        "--scores",
        path_str(&scores),
        "--weights",
        "1.0",
        "--out",
        path_str(&fused),
    ]);
    assert_eq!(
        std::fs::read(&scores).unwrap(),
        std::fs::read(&fused).unwrap(),
        "single-system fusion must not rescale"
    );
}

#[test]
fn eval_reports_zero_eer_on_perfect_separation() {
    let tmp = tempfile::tempdir().unwrap();
    let protocol = tmp.path().join("protocol.txt");
    std::fs::write(
        &protocol,
        "S1 T_01 env - bonafide\nS1 T_02 env - bonafide\nS2 T_03 env A01 spoof\nS2 T_04 env A01 spoof\n",
    )
    .unwrap();
    let scores = tmp.path().join("perfect.scores");
    std::fs::write(&scores, "T_01\t2.0\nT_02\t1.0\nT_03\t-1.0\nT_04\t-2.0\n").unwrap();
    let report = tmp.path().join("perfect.report");
    let out = run_ok(&[
        "eval",
        "--scores",
        path_str(&scores),
        "--protocol",
        path_str(&protocol),
        "--out",
        path_str(&report),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eer_pct=0.000000"), "{stdout}");
    let written = std::fs::read_to_string(&report).unwrap();
    assert!(written.contains("eer_pct=0.000000"), "{written}");
    assert!(written.contains("n_bonafide=2"), "{written}");
    assert!(written.contains("n_spoof=2"), "{written}");
    assert!(!written.contains("min_tdcf"), "no cost model given: {written}");
}

#[test]
fn eval_with_cost_model_adds_min_tdcf_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let protocol = tmp.path().join("protocol.txt");
    std::fs::write(
        &protocol,
        "S1 T_01 env - bonafide\nS2 T_02 env A01 spoof\n",
    )
    .unwrap();
    let scores = tmp.path().join("x.scores");
    std::fs::write(&scores, "T_01\t1.0\nT_02\t-1.0\n").unwrap();
    let cost = tmp.path().join("cost.json");
    std::fs::write(
        &cost,
        r#"{"p_miss_asv": 0.05, "p_fa_asv": 0.01, "p_miss_spoof_asv": 0.6}"#,
    )
    .unwrap();
    let report = tmp.path().join("x.report");
    let det = tmp.path().join("x.det");
    let out = run_ok(&[
        "eval",
        "--scores",
        path_str(&scores),
        "--protocol",
        path_str(&protocol),
        "--out",
        path_str(&report),
        "--cost-model",
        path_str(&cost),
        "--det",
        path_str(&det),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("min_tdcf=0.000000"), "{stdout}");
    assert!(stdout.contains("min_tdcf_threshold="), "{stdout}");
    let det_text = std::fs::read_to_string(&det).unwrap();
    for line in det_text.lines() {
        let mut cols = line.split('\t');
        let far: f64 = cols.next().unwrap().parse().unwrap();
        let frr: f64 = cols.next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&far) && (0.0..=1.0).contains(&frr));
        assert!(cols.next().is_none());
    }
}

#[test]
fn analyze_dumps_grids_with_both_axes() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, _) = small_corpus(tmp.path(), "dev", 1, 21);
    let wav = dir.join("QC_D_0000001.wav"); // second trial: the spoof
    let report = tmp.path().join("peaks.tsv");
    let grids = tmp.path().join("grids");
    let out = run_ok(&[
        "analyze",
        "--input",
        path_str(&wav),
        "--report",
        path_str(&report),
        "--dump-grids",
        path_str(&grids),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("index\tquefrency_s\tmagnitude"), "{stdout}");

    let spec = read_feature(&grids.join("QC_D_0000001.spec.qfea")).unwrap();
    assert_eq!(spec.axis, AxisKind::FrequencyHz);
    let ceps = read_feature(&grids.join("QC_D_0000001.ceps.qfea")).unwrap();
    assert_eq!(ceps.axis, AxisKind::QuefrencyS);

    // The spoof replay chain leaves rahmonic peaks at its tap lags.
    let report_text = std::fs::read_to_string(&report).unwrap();
    let indices: Vec<usize> = report_text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert!(
        indices.iter().any(|&i| (18..=22).contains(&i))
            || indices.iter().any(|&i| (58..=62).contains(&i)),
        "expected a replay-lag peak in {indices:?}"
    );
}

#[test]
fn replay_reproduces_synth_and_extract_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 2, 31);
    let feat = tmp.path().join("feat");
    run_ok(&[
        "extract",
        "--frontend",
        "spec",
        "--protocol",
        path_str(&protocol),
        "--audio-dir",
        path_str(&dir),
        "--out-dir",
        path_str(&feat),
    ]);

    let snapshot = |d: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(d)
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                let bytes = std::fs::read(e.path()).unwrap();
                (name, bytes)
            })
            .collect();
        files.sort();
        files
    };
    let before_corpus = snapshot(&dir);
    let before_feat = snapshot(&feat);

    run_ok(&["replay", "--manifest", path_str(&dir.join("manifest.json"))]);
    run_ok(&["replay", "--manifest", path_str(&feat.join("manifest.json"))]);

    assert_eq!(snapshot(&dir), before_corpus, "synth replay must be byte-identical");
    assert_eq!(snapshot(&feat), before_feat, "extract replay must be byte-identical");
}

#[test]
fn replay_rejects_tampered_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 1, 37);
    let feat = tmp.path().join("feat");
    run_ok(&[
        "extract",
        "--frontend",
        "spec",
        "--protocol",
        path_str(&protocol),
        "--audio-dir",
        path_str(&dir),
        "--out-dir",
        path_str(&feat),
    ]);
    // Flip one audio byte; the recorded digest must catch it.
    let wav = dir.join("QC_T_0000000.wav");
    let mut bytes = std::fs::read(&wav).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&wav, bytes).unwrap();
    let (code, stderr) = run_err(&["replay", "--manifest", path_str(&feat.join("manifest.json"))]);
    assert_eq!(code, 1);
    assert!(stderr.contains("changed since the manifest"), "{stderr}");
}

#[test]
fn jobs_flag_keeps_outputs_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, protocol) = small_corpus(tmp.path(), "train", 2, 41);
    let feat1 = tmp.path().join("feat1");
    let feat4 = tmp.path().join("feat4");
    for (jobs, feat) in [("1", &feat1), ("4", &feat4)] {
        run_ok(&[
            "extract",
            "--jobs",
            jobs,
            "--frontend",
            "ceps",
            "--protocol",
            path_str(&protocol),
            "--audio-dir",
            path_str(&dir),
            "--out-dir",
            path_str(feat),
        ]);
    }
    for entry in std::fs::read_dir(&feat1).unwrap().filter_map(|e| e.ok()) {
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(".qfea") {
            assert_eq!(
                std::fs::read(entry.path()).unwrap(),
                std::fs::read(feat4.join(&name)).unwrap(),
                "{name:?} differs across --jobs settings"
            );
        }
    }
}
