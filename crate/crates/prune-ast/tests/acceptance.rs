//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (visible under --nocapture).
//!
//! Run with `cargo test --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use prune_ast::analysis::{
    gamma, gamma_group, gamma_report, kendall_tau_bruteforce, kendall_tau_clustered, ClusterModel,
    Corpus, SampleRecord, StatFeature,
};
use prune_ast::audio::{
    compute_log_mel, default_target_frames, mel_filterbank, patch_stats, patchify, FrontendConfig,
    MelSpectrogram, PatchStats, Waveform, MEL_BINS,
};
use prune_ast::model::{
    classify_forward, mhsa_forward, scores_mean_pooling, ModelConfig, TokenState,
};
use prune_ast::pruning::{keep_count, select_topk, Metric, PruneConfig};
use prune_ast::tensor::{topk_indices, Matrix};
use prune_ast::trace::{
    AttentionLog, AttentionLogRow, PruneEvent, PruneTrace, TokenScore, TRACE_SCHEMA_VERSION,
};
use prune_ast::weights::{random_init, read_weight_file, write_weight_file, Xoshiro256StarStar};

/// Published MAC(G) reference cells: (N, keep rate, GMACs).
const MAC_TABLE: &[(usize, f64, f64)] = &[
    (64, 1.0, 5.6),
    (64, 0.9, 4.9),
    (64, 0.8, 4.30),
    (64, 0.7, 3.7),
    (64, 0.6, 3.3),
    (64, 0.5, 2.8),
    (64, 0.4, 2.5),
    (256, 1.0, 23.1),
    (256, 0.9, 20.0),
    (256, 0.8, 17.3),
    (256, 0.7, 15.0),
    (256, 0.6, 13.1),
    (256, 0.5, 11.4),
    (256, 0.4, 10.0),
    (512, 1.0, 48.6),
    (512, 0.9, 41.8),
    (512, 0.8, 36.0),
    (512, 0.7, 31.1),
    (512, 0.6, 27.1),
    (512, 0.5, 23.7),
    (512, 0.4, 20.8),
];

fn mel_from_values(frames: usize, mut f: impl FnMut(usize, usize) -> f32) -> MelSpectrogram {
    let mut m = Matrix::zeros(frames, MEL_BINS);
    for r in 0..frames {
        for c in 0..MEL_BINS {
            m.set(r, c, f(r, c));
        }
    }
    MelSpectrogram {
        values: m,
        floor: -23.02585,
        content_frames: frames,
        norm: None,
    }
}

#[test]
fn criterion_01_mac_table_within_3_percent_under_1s() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let out = run(&["mac"], dir.path());
    let elapsed = started.elapsed();
    assert_ok(&out, "mac");
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "mac took {:.3}s, budget is 1s",
        elapsed.as_secs_f64()
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut cells = std::collections::HashMap::new();
    for line in stdout.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() == 3 {
            let n: usize = parts[0].parse().unwrap();
            let kr: f64 = parts[1].parse().unwrap();
            let g: f64 = parts[2].parse().unwrap();
            cells.insert((n, (kr * 10.0).round() as i64), g);
        }
    }
    let mut worst = 0.0f64;
    for &(n, kr, want) in MAC_TABLE {
        let got = cells
            .get(&(n, (kr * 10.0).round() as i64))
            .unwrap_or_else(|| panic!("missing cell N={n} kr={kr}"));
        let err = (got - want).abs() / want;
        assert!(
            err <= 0.03,
            "N={n} kr={kr}: {got}G vs {want}G is {:.2}% off",
            err * 100.0
        );
        worst = worst.max(err);
    }
    println!(
        "PASS criterion 1: 21/21 MAC cells within 3% (worst {:.2}%), runtime {:.0} ms",
        worst * 100.0,
        elapsed.as_secs_f64() * 1000.0
    );
}

#[test]
fn criterion_02_mac_reduction_ratios() {
    use prune_ast::mac::total_macs;
    use prune_ast::model::Aggregation;
    let cfg = ModelConfig::vit_b(527, Aggregation::Cls);
    let prune = |kr: f64| PruneConfig {
        locations: vec![4, 7, 10],
        keep_rate: kr,
        metric: Metric::AttnCls,
    };
    let base = total_macs(512, &prune(1.0), &cfg).total as f64;
    let r09 = total_macs(512, &prune(0.9), &cfg).total as f64 / base * 100.0;
    let r08 = total_macs(512, &prune(0.8), &cfg).total as f64 / base * 100.0;
    assert!((r09 - 86.0).abs() <= 1.0, "kr=0.9 ratio {r09:.2}%");
    assert!((r08 - 74.1).abs() <= 1.0, "kr=0.8 ratio {r08:.2}%");
    println!("PASS criterion 2: reduction ratios {r09:.2}% / {r08:.2}% vs 86.0% / 74.1%");
}

#[test]
fn criterion_03_five_tokens_keep_three() {
    let scores = [0.9f32, 0.1, 0.5, 0.3, 0.7];
    let (retained, pruned) = select_topk(&scores, 0.6).unwrap();
    assert_eq!(retained.len(), 3);
    assert_eq!(pruned.len(), 2);
    assert_eq!(keep_count(5, 0.6), 3);
    println!("PASS criterion 3: 5 tokens at keep rate 0.6 retain exactly 3");
}

#[test]
fn criterion_04_token_counts_by_duration() {
    let cfg = FrontendConfig::default();
    let mut counts = Vec::new();
    for (seconds, want_n) in [(1.0, 64usize), (5.0, 256), (10.0, 512)] {
        let samples: Vec<f32> = tone_samples(440.0, seconds, 0.4)
            .into_iter()
            .map(|s| s as f32 / 32768.0)
            .collect();
        let wave = Waveform {
            samples,
            sample_rate: 16_000,
        };
        let mel = compute_log_mel(&wave, &cfg).unwrap();
        let target = default_target_frames(mel.frames());
        let grid = patchify(&mel.pad_or_trim(target).unwrap()).unwrap();
        assert_eq!(grid.len(), want_n, "{seconds}s input");
        counts.push(grid.len());
    }
    println!(
        "PASS criterion 4: 1s/5s/10s inputs yield N = {}/{}/{}",
        counts[0], counts[1], counts[2]
    );
}

#[test]
fn criterion_05_keep_rate_one_is_baseline_bitexact() {
    let cfg = ModelConfig::toy();
    let weights = random_init(&cfg, 123);
    let none = PruneConfig {
        locations: vec![],
        keep_rate: 1.0,
        metric: Metric::AttnMeanPooling,
    };
    let full = PruneConfig {
        locations: vec![2, 4, 5],
        keep_rate: 1.0,
        metric: Metric::AttnMeanPooling,
    };
    let mut rng = Xoshiro256StarStar::seed_from_u64(55);
    for trial in 0..100 {
        let mel = mel_from_values(32, |r, c| {
            let _ = (r, c);
            rng.uniform(-2.0, 2.0) as f32
        });
        let grid = patchify(&mel).unwrap();
        let stats = patch_stats(&grid);
        let a = classify_forward(&grid, &weights, &cfg, &none, Some(&stats), "x").unwrap();
        let b = classify_forward(&grid, &weights, &cfg, &full, Some(&stats), "x").unwrap();
        assert_eq!(a.logits, b.logits, "trial {trial}");
        assert!(b.trace.events.is_empty());
    }
    println!("PASS criterion 5: kr=1.0 equals pruning-free forward bit-exactly on 100 inputs");
}

#[test]
fn criterion_06_topk_against_sort_oracle_1000() {
    let mut rng = Xoshiro256StarStar::seed_from_u64(2024);
    for trial in 0..1000 {
        let n = 1 + rng.below(512) as usize;
        let scores: Vec<f32> = match trial % 4 {
            0 => (0..n).map(|_| rng.uniform(-1.0, 1.0) as f32).collect(),
            // Duplicate-heavy distributions.
            1 => (0..n).map(|_| (rng.below(8) as f32) * 0.125).collect(),
            2 => (0..n).map(|_| rng.below(2) as f32).collect(),
            _ => vec![0.5; n],
        };
        let k = 1 + rng.below(n as u64) as usize;
        let got = topk_indices(&scores, k).unwrap();
        // Full sort with stable tie-break: descending score, ascending index.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut want = order[..k].to_vec();
        want.sort_unstable();
        assert_eq!(got, want, "trial {trial} n {n} k {k}");
    }
    println!("PASS criterion 6: TopK matches full-sort oracle on 1000 random vectors");
}

#[test]
fn criterion_07_kendall_against_bruteforce() {
    let mut rng = Xoshiro256StarStar::seed_from_u64(31);
    for trial in 0..100 {
        let n = 2 + rng.below(499) as usize;
        let clusters: Vec<usize> = (0..n).map(|_| 1 + rng.below(5) as usize).collect();
        let scores: Vec<f32> = match trial % 3 {
            0 => (0..n).map(|_| rng.uniform(0.0, 1.0) as f32).collect(),
            1 => (0..n).map(|_| (rng.below(4) as f32) * 0.25).collect(),
            // All-tied extreme.
            _ => vec![0.25; n],
        };
        let fast = kendall_tau_clustered(&clusters, &scores).unwrap();
        let slow = kendall_tau_bruteforce(&clusters, &scores).unwrap();
        assert_eq!(fast, slow, "trial {trial} n {n}");
    }
    // Monotone instances give tau = 1: scores a strictly increasing
    // function of the cluster index.
    let clusters: Vec<usize> = (0..50).map(|i| 1 + i / 10).collect();
    let scores: Vec<f32> = clusters.iter().map(|&c| c as f32 * 0.1).collect();
    assert_eq!(kendall_tau_clustered(&clusters, &scores).unwrap(), 1.0);
    // All clusters distinct with increasing scores is also monotone.
    let distinct: Vec<usize> = (1..=40).collect();
    let rising: Vec<f32> = (0..40).map(|i| i as f32).collect();
    assert_eq!(kendall_tau_clustered(&distinct, &rising).unwrap(), 1.0);
    // Antisymmetry under score negation on tie-free instances.
    let mut rng = Xoshiro256StarStar::seed_from_u64(32);
    for _ in 0..20 {
        let n = 3 + rng.below(200) as usize;
        let clusters: Vec<usize> = (0..n).map(|_| 1 + rng.below(5) as usize).collect();
        let mut scores: Vec<f32> = (0..n).map(|i| i as f32).collect();
        for i in (1..n).rev() {
            let j = rng.below((i + 1) as u64) as usize;
            scores.swap(i, j);
        }
        let pos = kendall_tau_clustered(&clusters, &scores).unwrap();
        let negated: Vec<f32> = scores.iter().map(|&s| -s).collect();
        let neg = kendall_tau_clustered(&clusters, &negated).unwrap();
        assert_eq!(pos, -neg);
    }
    println!("PASS criterion 7: clustered tau matches O(n^2) oracle on 100 instances + extremes");
}

fn synthetic_sample(id: &str, scores_a: &[f32; 6], scores_b: &[f32; 6]) -> SampleRecord {
    // Six tokens, patch means 0..4 and 4 -> clusters [1,2,3,4,5,5];
    // tokens 0..4 retained at block 2, token 5 pruned there.
    let means = vec![0.0f32, 1.0, 2.0, 3.0, 4.0, 4.01];
    let mut rows = Vec::new();
    for (block, scores) in [(1usize, scores_a), (2, scores_b)] {
        for (p, &s) in scores.iter().enumerate() {
            rows.push(AttentionLogRow {
                block,
                provenance: p,
                score: s,
                retained: !(block == 2 && p == 5),
            });
        }
    }
    SampleRecord {
        id: id.into(),
        stats: PatchStats {
            means,
            stds: vec![0.0; 6],
            n_time: 1,
            n_freq: 6,
            content_time_patches: 1,
        },
        log: AttentionLog { rows },
        trace: PruneTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            input: id.into(),
            n_tokens: 6,
            n_time: 1,
            n_freq: 6,
            content_time_patches: 1,
            metric: "attn-mp".into(),
            keep_rate: 0.84,
            locations: vec![2],
            events: vec![PruneEvent {
                block: 2,
                pre_count: 6,
                retained: (0..5)
                    .map(|p| TokenScore {
                        provenance: p,
                        score: 0.0,
                    })
                    .collect(),
                pruned: vec![TokenScore {
                    provenance: 5,
                    score: 0.0,
                }],
            }],
        },
    }
}

#[test]
fn criterion_08_gamma_hand_enumeration_and_uniform() {
    let cm = ClusterModel {
        centroids: vec![0.0, 1.0, 2.0, 3.0, 4.0],
        boundaries: vec![0.5, 1.5, 2.5, 3.5],
        feature: StatFeature::Mean,
        shares: vec![20.0; 5],
    };
    // Two samples, six tokens each, distinct scores per block.
    let a1 = [0.11f32, 0.21, 0.31, 0.41, 0.51, 0.06];
    let a2 = [0.13f32, 0.23, 0.33, 0.43, 0.53, 0.08];
    let b1 = [0.10f32, 0.22, 0.30, 0.42, 0.50, 0.05];
    let b2 = [0.12f32, 0.24, 0.32, 0.44, 0.52, 0.07];
    let corpus = Corpus {
        samples: vec![
            synthetic_sample("a", &a1, &a2),
            synthetic_sample("b", &b1, &b2),
        ],
    };
    // Hand enumeration: cluster i < 5 holds exactly token i-1; cluster 5
    // holds tokens 4 (retained) and 5 (pruned at block 2).
    let blocks: [(usize, [f32; 6], [f32; 6]); 2] = [(1, a1, b1), (2, a2, b2)];
    for (block, sa, sb) in blocks {
        for cluster in 1..=5usize {
            let retained_tokens: Vec<usize> = match cluster {
                5 => vec![4],
                c => vec![c - 1],
            };
            let num: f64 = retained_tokens
                .iter()
                .map(|&t| sa[t] as f64 + sb[t] as f64)
                .sum::<f64>()
                / (2 * retained_tokens.len()) as f64;
            let den = (sa[5] as f64 + sb[5] as f64) / 2.0;
            let want = num / den;
            let got = gamma(&corpus, &cm, block, cluster, &[2]).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "block {block} cluster {cluster}: {got} vs {want}"
            );
        }
    }

    // All-uniform logs over three groups give Gamma == 1 everywhere.
    let u = [0.25f32; 6];
    let mut uniform = synthetic_sample("u", &u, &u);
    // Rebuild as a 6-block log pruning at 2, 4, 6.
    uniform.log.rows.clear();
    for block in 1..=6usize {
        for p in 0..6 {
            uniform.log.rows.push(AttentionLogRow {
                block,
                provenance: p,
                score: 0.25,
                retained: true,
            });
        }
    }
    uniform.trace.locations = vec![2, 4, 6];
    uniform.trace.events = (1..=3)
        .map(|i| PruneEvent {
            block: 2 * i,
            pre_count: 6,
            retained: (0..5)
                .map(|p| TokenScore {
                    provenance: p,
                    score: 0.25,
                })
                .collect(),
            pruned: vec![TokenScore {
                provenance: 5,
                score: 0.25,
            }],
        })
        .collect();
    let corpus = Corpus {
        samples: vec![uniform],
    };
    let report = gamma_report(&corpus, &cm, &[2, 4, 6]);
    for group in 1..=3 {
        let g = gamma_group(&report, group).unwrap();
        assert!((g - 1.0).abs() < 1e-12, "group {group}: {g}");
    }
    println!(
        "PASS criterion 8: gamma matches hand enumeration to 1e-9; uniform Gamma == 1 for G1..G3"
    );
}

#[test]
fn criterion_09_mel_tone_oracle_and_silence() {
    let cfg = FrontendConfig::default();
    // Independent oracle: naive DFT -> power -> filterbank, all in f64.
    let oracle_bin = |samples: &[f32], frame: usize| -> usize {
        let window: Vec<f64> = (0..cfg.win_length)
            .map(|n| {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / cfg.win_length as f64).cos()
            })
            .collect();
        let start = frame * cfg.hop_length;
        let n_bins = cfg.n_fft / 2 + 1;
        let mut power = vec![0.0f64; n_bins];
        for (b, p) in power.iter_mut().enumerate() {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for (t, w) in window.iter().enumerate() {
                let x = samples[start + t] as f64 * w;
                let ang = -2.0 * std::f64::consts::PI * b as f64 * t as f64 / cfg.n_fft as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            *p = re * re + im * im;
        }
        let bank = mel_filterbank(&cfg);
        let energies: Vec<f64> = bank
            .iter()
            .map(|f| f.iter().zip(&power).map(|(&w, &p)| w * p).sum())
            .collect();
        let mut best = 0;
        for (i, &e) in energies.iter().enumerate() {
            if e > energies[best] {
                best = i;
            }
        }
        best
    };

    for freq in [440.0, 1000.0, 2000.0, 4000.0, 6000.0] {
        let samples: Vec<f32> = tone_samples(freq, 0.25, 0.5)
            .into_iter()
            .map(|s| s as f32 / 32768.0)
            .collect();
        let wave = Waveform {
            samples: samples.clone(),
            sample_rate: 16_000,
        };
        let mel = compute_log_mel(&wave, &cfg).unwrap();
        for frame in 0..mel.frames() {
            let want = oracle_bin(&samples, frame);
            let row = mel.values.row(frame);
            let mut got = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[got] {
                    got = i;
                }
            }
            assert_eq!(got, want, "{freq} Hz frame {frame}");
        }
    }
    // Silence: every value is the constant log floor.
    let silence = Waveform {
        samples: vec![0.0; 16_000],
        sample_rate: 16_000,
    };
    let mel = compute_log_mel(&silence, &cfg).unwrap();
    let floor = (1e-10f64).ln() as f32;
    assert!(mel.values.data().iter().all(|&v| v == floor));
    println!("PASS criterion 9: 5 tone argmax bins match the DFT oracle; silence is the log floor");
}

#[test]
fn criterion_10_attention_invariants() {
    let cfg = ModelConfig::toy();
    let weights = random_init(&cfg, 99);
    let mut rng = Xoshiro256StarStar::seed_from_u64(3);
    for n in [2usize, 5, 16] {
        let data: Vec<f32> = (0..n * cfg.dim)
            .map(|_| rng.uniform(-2.0, 2.0) as f32)
            .collect();
        let state = TokenState {
            activations: Matrix::from_vec(n, cfg.dim, data).unwrap(),
            provenance: (0..n).collect(),
            has_cls: false,
        };
        let (_, rec) = mhsa_forward(&state, &weights.blocks[0], cfg.heads, 1).unwrap();
        for h in 0..cfg.heads {
            for q in 0..n {
                let sum: f32 = (0..n).map(|k| rec.tensor.at(h, q, k)).sum();
                assert!((sum - 1.0).abs() < 1e-5, "row sum {sum}");
            }
        }
        let scores = scores_mean_pooling(&rec.tensor);
        let total: f32 = scores.iter().sum();
        assert!((total - 1.0).abs() < 1e-4, "score sum {total}");
    }
    // Single token: attention weight exactly 1.
    let one = TokenState {
        activations: Matrix::from_vec(1, cfg.dim, vec![0.1; cfg.dim]).unwrap(),
        provenance: vec![0],
        has_cls: false,
    };
    let (_, rec) = mhsa_forward(&one, &weights.blocks[0], cfg.heads, 1).unwrap();
    for h in 0..cfg.heads {
        assert_eq!(rec.tensor.at(h, 0, 0), 1.0);
    }
    println!("PASS criterion 10: attention rows sum to 1, mean-pooling scores sum to 1, singleton weight is 1");
}

#[test]
fn criterion_11_trace_analyze_determinism_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    for (i, seed) in [11u64, 22, 33, 44].iter().enumerate() {
        let samples = ramp_noise_samples(1.0, *seed);
        write_wav(root, &format!("clip{i}.wav"), &samples);
    }
    let weights = "w.tpwt";
    assert_ok(
        &run(&["make-toy-weights", "--out", weights, "--seed", "5"], root),
        "make-toy-weights",
    );

    let trace_once = |out_dir: &str, jobs: &str| {
        let out = run(
            &[
                "trace",
                "--weights",
                weights,
                "--keep-rate",
                "0.7",
                "--jobs",
                jobs,
                "--out-dir",
                out_dir,
                "clip0.wav",
                "clip1.wav",
                "clip2.wav",
                "clip3.wav",
            ],
            root,
        );
        assert_ok(&out, "trace");
    };
    let analyze = |trace_dir: &str, out_dir: &str, mode: &str, jobs: &str| {
        let out = run(
            &[
                "analyze",
                "--trace-dir",
                trace_dir,
                "--mode",
                mode,
                "--jobs",
                jobs,
                "--out-dir",
                out_dir,
            ],
            root,
        );
        assert_ok(&out, &format!("analyze {mode}"));
    };

    trace_once("t", "1");
    let t_first = dir_snapshot(&root.join("t"));
    std::fs::remove_dir_all(root.join("t")).unwrap();
    trace_once("t", "4");
    let t_second = dir_snapshot(&root.join("t"));
    assert_eq!(t_first, t_second, "trace artifacts differ across --jobs");

    for mode in ["cluster", "tau", "hist", "cdf", "gamma"] {
        analyze("t", "r", mode, "1");
    }
    let r_first = dir_snapshot(&root.join("r"));
    std::fs::remove_dir_all(root.join("r")).unwrap();
    for mode in ["cluster", "tau", "hist", "cdf", "gamma"] {
        analyze("t", "r", mode, "3");
    }
    let r_second = dir_snapshot(&root.join("r"));
    assert_eq!(r_first, r_second, "analysis reports differ across runs");
    let names: Vec<&str> = r_first.iter().map(|(n, _)| n.as_str()).collect();
    for want in [
        "Gamma_report.csv",
        "cdf.csv",
        "clusters.json",
        "gamma_report.csv",
        "hist2d_input.csv",
        "hist2d_retained.csv",
        "tau_report.csv",
    ] {
        assert!(
            names.contains(&want),
            "missing report {want}; have {names:?}"
        );
    }
    println!(
        "PASS criterion 11: trace + analyze byte-identical across reruns and --jobs ({} trace files, {} reports)",
        t_first.len(),
        r_first.len()
    );
}

#[test]
fn criterion_12_weight_loader_fuzz() {
    let mut tiny = ModelConfig::toy();
    tiny.depth = 1;
    tiny.dim = 16;
    tiny.heads = 2;
    tiny.max_tokens = 8;
    tiny.num_classes = 3;
    let bytes = write_weight_file(&random_init(&tiny, 0).to_entries());

    // Exhaustive single-byte corruption of the 12-byte header: always a
    // structured error, never a crash.
    let mut header_rejections = 0usize;
    for pos in 0..12 {
        for delta in 1..=255u8 {
            let mut corrupt = bytes.clone();
            corrupt[pos] = corrupt[pos].wrapping_add(delta);
            match read_weight_file(&corrupt) {
                Err(_) => header_rejections += 1,
                Ok(_) => panic!("header corruption at byte {pos} (+{delta}) accepted"),
            }
        }
    }

    // Random mutations anywhere in the file: structured error or a clean
    // parse (payload bytes are arbitrary floats), never a panic.
    let mut rng = Xoshiro256StarStar::seed_from_u64(911);
    let mut errors = 0usize;
    let mut accepted = 0usize;
    for _ in 0..10_000 {
        let mut corrupt = bytes.clone();
        let edits = 1 + rng.below(4);
        for _ in 0..edits {
            let pos = rng.below(corrupt.len() as u64) as usize;
            corrupt[pos] = rng.below(256) as u8;
        }
        // Occasionally truncate as well.
        if rng.below(4) == 0 {
            let cut = rng.below(corrupt.len() as u64) as usize;
            corrupt.truncate(cut);
        }
        match read_weight_file(&corrupt) {
            Err(_) => errors += 1,
            Ok(_) => accepted += 1,
        }
    }
    println!(
        "PASS criterion 12: {header_rejections} header corruptions rejected; 10000 fuzz cases ({errors} errors, {accepted} benign) without a crash"
    );
}

#[test]
fn criterion_13_intensity_pruning_removes_padding_first() {
    // Half signal, half padding: 512 content frames padded to 1024.
    let mut rng = Xoshiro256StarStar::seed_from_u64(77);
    let content = mel_from_values(512, |_, _| rng.uniform(-1.5, 1.5) as f32);
    let padded = content.pad_or_trim(1024).unwrap();
    let grid = patchify(&padded).unwrap();
    assert_eq!(grid.len(), 512);
    let stats = patch_stats(&grid);
    let padding: Vec<usize> = (0..grid.len()).filter(|&p| grid.is_padding(p)).collect();
    assert_eq!(padding.len(), 256);

    let cfg = ModelConfig::default(); // 12 blocks
    let weights = random_init(&cfg, 4);
    let prune = PruneConfig {
        locations: vec![4, 7, 10],
        keep_rate: 0.5,
        metric: Metric::Intensity,
    };
    let out = classify_forward(&grid, &weights, &cfg, &prune, Some(&stats), "pad").unwrap();
    let first = &out.trace.events[0];
    let mut pruned_at_4: Vec<usize> = first.pruned.iter().map(|t| t.provenance).collect();
    pruned_at_4.sort_unstable();
    assert_eq!(
        pruned_at_4, padding,
        "block-4 intensity pruning must drop exactly the padding patches"
    );
    for event in &out.trace.events {
        for t in &event.retained {
            assert!(
                !grid.is_padding(t.provenance) || event.block > 4,
                "padding token survived block 4"
            );
        }
    }
    let survivors = out.trace.final_survivors();
    assert!(survivors.iter().all(|&p| !grid.is_padding(p)));
    println!(
        "PASS criterion 13: intensity pruning at kr=0.5 removed all {} padding tokens before any signal token",
        padding.len()
    );
}
