//! End-to-end CLI contract tests: exit codes, file formats, idempotence,
//! and the documented per-command behaviors.

mod common;

use std::fs;
use std::path::Path;

use common::*;
use prune_ast::cli::{RunConfig, EXIT_IO, EXIT_NUMERICAL, EXIT_USAGE};
use prune_ast::model::ModelConfig;
use prune_ast::trace::PruneTrace;
use prune_ast::weights::{random_init, save_weights, tensor_census};

fn make_weights(root: &Path, name: &str, seed: &str) {
    assert_ok(
        &run(&["make-toy-weights", "--out", name, "--seed", seed], root),
        "make-toy-weights",
    );
}

#[test]
fn toy_weights_are_seed_deterministic_and_census_sized() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    make_weights(root, "a.tpwt", "9");
    make_weights(root, "b.tpwt", "9");
    make_weights(root, "c.tpwt", "10");
    let a = fs::read(root.join("a.tpwt")).unwrap();
    let b = fs::read(root.join("b.tpwt")).unwrap();
    let c = fs::read(root.join("c.tpwt")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical files");
    assert_ne!(a, c, "different seed must change the file");

    // Entry count matches the config-derived tensor census.
    let cfg = ModelConfig::default();
    let census = tensor_census(&cfg);
    let entries = prune_ast::weights::read_weight_file(&a).unwrap();
    assert_eq!(entries.len(), census.len());
    for (entry, (name, dims)) in entries.iter().zip(&census) {
        assert_eq!(&entry.name, name);
        assert_eq!(&entry.dims, dims);
    }
}

#[test]
fn infer_writes_logits_and_reports_512_tokens_for_10s() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "long.wav", &tone_samples(800.0, 10.0, 0.4));
    make_weights(root, "w.tpwt", "3");
    let out = run(
        &[
            "infer",
            "--weights",
            "w.tpwt",
            "--keep-rate",
            "0.5",
            "--out-dir",
            "out",
            "long.wav",
        ],
        root,
    );
    assert_ok(&out, "infer");
    let mac = fs::read_to_string(root.join("out/mac.csv")).unwrap();
    let lines: Vec<&str> = mac.lines().collect();
    assert_eq!(lines[0], "input,N,keep_rate,total_G");
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "long");
    assert_eq!(cols[1], "512", "10 s input must report 512 tokens");

    let logits = fs::read_to_string(root.join("out/logits.csv")).unwrap();
    let n_rows = logits.lines().count() - 1;
    assert_eq!(n_rows, ModelConfig::default().num_classes);
    assert!(root.join("out/run_manifest.json").exists());
}

#[test]
fn infer_keep_rate_one_matches_no_prune_config() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &ramp_noise_samples(1.0, 8));
    make_weights(root, "w.tpwt", "3");
    let base = &["infer", "--weights", "w.tpwt", "clip.wav"];
    let full: Vec<&str> = [&base[..], &["--keep-rate", "1.0", "--out-dir", "kr1"]].concat();
    let none: Vec<&str> = [&base[..], &["--prune-blocks", "", "--out-dir", "np"]].concat();
    assert_ok(&run(&full, root), "infer kr=1");
    assert_ok(&run(&none, root), "infer no blocks");
    let a = fs::read(root.join("kr1/logits.csv")).unwrap();
    let b = fs::read(root.join("np/logits.csv")).unwrap();
    assert_eq!(a, b, "kr=1.0 and a pruning-free config must agree");
}

#[test]
fn infer_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &ramp_noise_samples(1.0, 5));
    make_weights(root, "w.tpwt", "1");
    let args = &[
        "infer",
        "--weights",
        "w.tpwt",
        "--keep-rate",
        "0.6",
        "--out-dir",
        "out",
        "clip.wav",
    ];
    assert_ok(&run(args, root), "first infer");
    let first = dir_snapshot(&root.join("out"));
    assert_ok(&run(args, root), "second infer");
    let second = dir_snapshot(&root.join("out"));
    assert_eq!(first, second, "rerun must be byte-identical");
}

#[test]
fn trace_log_row_count_follows_token_schedule() {
    // N=64 input through 12 blocks at kr=0.9:
    // 64*4 + 58*3 + 53*3 + 48*2 = 685 score rows.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &ramp_noise_samples(1.0, 21));
    make_weights(root, "w.tpwt", "2");
    let out = run(
        &[
            "trace",
            "--weights",
            "w.tpwt",
            "--keep-rate",
            "0.9",
            "--out-dir",
            "t",
            "clip.wav",
        ],
        root,
    );
    assert_ok(&out, "trace");
    let log = fs::read_to_string(root.join("t/clip.attn.csv")).unwrap();
    assert_eq!(log.lines().count() - 1, 64 * 4 + 58 * 3 + 53 * 3 + 48 * 2);

    // The trace JSON validates against the documented schema.
    let text = fs::read_to_string(root.join("t/clip.trace.json")).unwrap();
    let trace = PruneTrace::from_json(&text).unwrap();
    assert_eq!(trace.schema_version, 1);
    assert_eq!(trace.n_tokens, 64);
    assert_eq!(trace.locations, vec![4, 7, 10]);
    assert_eq!(trace.events.len(), 3);
    assert_eq!(trace.events[0].pre_count, 64);
    assert_eq!(trace.events[0].retained.len(), 58);
    assert_eq!(trace.events[1].retained.len(), 53);
    assert_eq!(trace.events[2].retained.len(), 48);

    // Stats CSV has one row per token plus the header.
    let stats = fs::read_to_string(root.join("t/clip.stats.csv")).unwrap();
    assert_eq!(stats.lines().count() - 1, 64);
    assert!(stats.starts_with("patch_index,time_idx,freq_idx,mean,std\n"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &tone_samples(440.0, 1.0, 0.3));

    // Usage: unknown flag.
    let out = run(&["infer", "--bogus-flag"], root);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));

    // Usage: bad metric value.
    let out = run(&["infer", "--metric", "nonsense", "clip.wav"], root);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));

    // Config: keep rate out of range, reported with the field name.
    make_weights(root, "w.tpwt", "0");
    let out = run(
        &[
            "infer",
            "--weights",
            "w.tpwt",
            "--keep-rate",
            "1.5",
            "clip.wav",
        ],
        root,
    );
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("keep rate"), "stderr: {stderr}");

    // I/O: missing weights file, error on stderr.
    let out = run(&["infer", "--weights", "nope.tpwt", "clip.wav"], root);
    assert_eq!(out.status.code(), Some(EXIT_IO));
    assert!(!out.stderr.is_empty());

    // I/O: missing input file.
    let out = run(&["infer", "--weights", "w.tpwt", "missing.wav"], root);
    assert_eq!(out.status.code(), Some(EXIT_IO));

    // Numerical: weights that produce non-finite activations.
    let mut weights = random_init(&ModelConfig::default(), 0);
    for v in weights.patch_weight.data_mut() {
        *v = f32::MAX;
    }
    for v in weights.head_weight.data_mut() {
        *v = f32::MAX;
    }
    save_weights(&weights, &root.join("nan.tpwt")).unwrap();
    let out = run(&["infer", "--weights", "nan.tpwt", "clip.wav"], root);
    assert_eq!(out.status.code(), Some(EXIT_NUMERICAL));
}

#[test]
fn config_file_resolves_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &tone_samples(600.0, 1.0, 0.3));
    make_weights(root, "w.tpwt", "6");
    let mut rc = RunConfig::default();
    rc.prune.keep_rate = 0.9;
    rc.weights = Some("w.tpwt".into());
    rc.out_dir = "cfg_out".into();
    fs::write(
        root.join("run.json"),
        serde_json::to_string_pretty(&rc).unwrap(),
    )
    .unwrap();

    let out = run(
        &[
            "infer",
            "--config",
            "run.json",
            "--keep-rate",
            "0.5",
            "clip.wav",
        ],
        root,
    );
    assert_ok(&out, "infer with config");
    let manifest = fs::read_to_string(root.join("cfg_out/run_manifest.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(value["config"]["prune"]["keep_rate"], 0.5, "flag must win");
    assert_eq!(value["weight_format_version"], 1);
    assert_eq!(value["trace_schema_version"], 1);
}

#[test]
fn invalid_config_names_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(
        root.join("bad.json"),
        r#"{"model": {"depth": 12, "dim": 65, "heads": 4, "max_tokens": 512,
            "num_classes": 10, "aggregation": "mean-pooling"},
           "prune": {"locations": [40], "keep_rate": 0.5, "metric": "attn-mp"},
           "norm": {"mean": 0.0, "std": -2.0}}"#,
    )
    .unwrap();
    let out = run(&["infer", "--config", "bad.json", "x.wav"], root);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for needle in ["model:", "prune:", "norm.std:"] {
        assert!(stderr.contains(needle), "missing `{needle}` in: {stderr}");
    }
}

#[test]
fn schedule_table_endpoints_and_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "schedule",
            "--target-kr",
            "0.5",
            "--start-epoch",
            "15",
            "--duration",
            "10",
            "--epochs",
            "30",
        ],
        dir.path(),
    );
    assert_ok(&out, "schedule");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut rows = std::collections::HashMap::new();
    for line in stdout.lines().skip(1) {
        let (epoch, kr) = line.split_once(',').unwrap();
        rows.insert(epoch.parse::<usize>().unwrap(), kr.parse::<f64>().unwrap());
    }
    assert_eq!(rows[&14], 1.0);
    assert_eq!(rows[&25], 0.5);
    assert_eq!(rows[&30], 0.5);
    assert!((rows[&20] - 0.75).abs() < 1e-12);
    // Monotone non-increasing column.
    let mut prev = f64::INFINITY;
    for epoch in 0..=30 {
        assert!(rows[&epoch] <= prev + 1e-12);
        prev = rows[&epoch];
    }
}

#[test]
fn analyze_tau_is_one_on_monotone_synthetic_logs() {
    // Hand-written trace artifacts where attention is a strictly
    // increasing function of patch mean.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let traces = root.join("traces");
    fs::create_dir(&traces).unwrap();
    let n = 16usize;
    let mut stats = String::from("patch_index,time_idx,freq_idx,mean,std\n");
    let mut log = String::from("block,provenance,score,retained_flag\n");
    for p in 0..n {
        // Five flat levels so the cluster model sees exactly 5 masses,
        // with a tiny jitter to keep k-means fittable.
        let level = (p % 5) as f32;
        let mean = level + (p as f32) * 1e-4;
        stats.push_str(&format!("{p},{},{},{mean},0.0\n", p / 8, p % 8));
        for block in 1..=2 {
            log.push_str(&format!("{block},{p},{},1\n", level * 0.1 + 0.05));
        }
    }
    let trace = serde_json::json!({
        "schema_version": 1,
        "input": "synth",
        "n_tokens": n,
        "n_time": 2,
        "n_freq": 8,
        "content_time_patches": 2,
        "metric": "attn-mp",
        "keep_rate": 1.0,
        "locations": [],
        "events": []
    });
    fs::write(traces.join("synth.stats.csv"), stats).unwrap();
    fs::write(traces.join("synth.attn.csv"), log).unwrap();
    fs::write(traces.join("synth.trace.json"), trace.to_string()).unwrap();

    let out = run(
        &[
            "analyze",
            "--trace-dir",
            "traces",
            "--mode",
            "tau",
            "--out-dir",
            "r",
        ],
        root,
    );
    assert_ok(&out, "analyze tau");
    let tau = fs::read_to_string(root.join("r/tau_report.csv")).unwrap();
    let lines: Vec<&str> = tau.lines().collect();
    assert_eq!(lines[0], "block,tau");
    assert_eq!(lines[1], "1,1");
    assert_eq!(lines[2], "2,1");
    assert_eq!(lines[3], "avg,1");
}

#[test]
fn analyze_hist_has_bins_squared_rows_per_view() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &ramp_noise_samples(1.0, 17));
    make_weights(root, "w.tpwt", "4");
    assert_ok(
        &run(
            &[
                "trace",
                "--weights",
                "w.tpwt",
                "--keep-rate",
                "0.5",
                "--out-dir",
                "t",
                "clip.wav",
            ],
            root,
        ),
        "trace",
    );
    let out = run(
        &[
            "analyze",
            "--trace-dir",
            "t",
            "--mode",
            "hist",
            "--bins",
            "12",
            "--out-dir",
            "r",
        ],
        root,
    );
    assert_ok(&out, "analyze hist");
    for view in ["hist2d_input.csv", "hist2d_retained.csv"] {
        let text = fs::read_to_string(root.join("r").join(view)).unwrap();
        assert_eq!(text.lines().count() - 1, 12 * 12, "{view}");
        assert!(text.starts_with("mean_bin,std_bin,lognorm\n"));
    }
}

#[test]
fn ablate_rejects_out_of_range_block() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_wav(root, "clip.wav", &tone_samples(500.0, 1.0, 0.3));
    make_weights(root, "w.tpwt", "8");
    let out = run(
        &[
            "ablate",
            "--weights",
            "w.tpwt",
            "--group",
            "L",
            "--block",
            "13",
            "clip.wav",
        ],
        root,
    );
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("block 13"), "stderr: {stderr}");
}

#[test]
fn ablate_low_group_drops_padding_patches() {
    // Half-signal, half-padding input: all padding lands in the lowest
    // intensity clusters, so an L discard at block 1 removes it.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // 5 s of broadband noise padded out to 10 s of frames by target-frames.
    write_wav(root, "clip.wav", &ramp_noise_samples(5.0, 9));
    make_weights(root, "w.tpwt", "8");
    let out = run(
        &[
            "ablate",
            "--weights",
            "w.tpwt",
            "--group",
            "L",
            "--block",
            "1",
            "--target-frames",
            "1024",
            "--out-dir",
            "abl",
            "clip.wav",
        ],
        root,
    );
    assert_ok(&out, "ablate");
    let survivors = fs::read_to_string(root.join("abl/survivors.csv")).unwrap();
    let mut counts = [0usize; 5];
    for line in survivors.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        counts[cols[1].parse::<usize>().unwrap() - 1] = cols[2].parse().unwrap();
    }
    assert_eq!(counts[0], 0, "cluster 1 must be emptied by an L discard");
    assert_eq!(counts[1], 0, "cluster 2 must be emptied by an L discard");
    let total: usize = counts.iter().sum();
    // 256 of the 512 patches are pure padding (all at the floor mean, so
    // all in C1); at most the 256 content patches can survive.
    assert!(total <= 256, "padding patches survived: {counts:?}");
    assert!(total > 0);
}

#[test]
fn spectrogram_csv_input_bypasses_audio() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    make_weights(root, "w.tpwt", "12");
    // 128 frames x 128 bins of structured values; imports as 64 tokens.
    let mut csv = String::new();
    for r in 0..128 {
        let row: Vec<String> = (0..128)
            .map(|c| format!("{}", ((r * 131 + c * 17) % 97) as f32 * 0.05 - 2.0))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(root.join("spec.csv"), csv).unwrap();
    let out = run(
        &[
            "infer",
            "--weights",
            "w.tpwt",
            "--out-dir",
            "out",
            "spec.csv",
        ],
        root,
    );
    assert_ok(&out, "infer from csv");
    let mac = fs::read_to_string(root.join("out/mac.csv")).unwrap();
    let cols: Vec<&str> = mac.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(cols[1], "64");
}

#[test]
fn duplicate_input_stems_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::create_dir(root.join("a")).unwrap();
    fs::create_dir(root.join("b")).unwrap();
    write_wav(&root.join("a"), "clip.wav", &tone_samples(440.0, 1.0, 0.3));
    write_wav(&root.join("b"), "clip.wav", &tone_samples(600.0, 1.0, 0.3));
    make_weights(root, "w.tpwt", "0");
    let out = run(
        &["trace", "--weights", "w.tpwt", "a/clip.wav", "b/clip.wav"],
        root,
    );
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stem"), "stderr: {stderr}");
}

#[test]
fn mac_csv_written_when_out_dir_given() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = run(&["mac", "--out-dir", "m"], root);
    assert_ok(&out, "mac");
    let file = fs::read_to_string(root.join("m/mac.csv")).unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(&file[..20]));
    assert_eq!(file.lines().count(), 22);
}
