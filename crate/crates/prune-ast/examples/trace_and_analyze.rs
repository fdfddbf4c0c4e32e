//! Full analysis pass over a small synthetic corpus: cluster the patch
//! intensities, correlate them with attention (clustered Kendall tau),
//! compare retained vs pruned attention (gamma / Gamma), and build the
//! retention histogram and CDF.
//!
//! ```bash
//! cargo run --example trace_and_analyze
//! ```

use prune_ast::analysis::{
    gamma_group, gamma_report, kmeans_1d, retention_cdf, retention_histogram2d, tau_report, Corpus,
    SampleRecord, StatFeature,
};
use prune_ast::audio::{patch_stats, patchify, MelSpectrogram, MEL_BINS};
use prune_ast::model::{classify_forward, ModelConfig};
use prune_ast::pruning::{Metric, PruneConfig};
use prune_ast::tensor::Matrix;
use prune_ast::weights::{random_init, Xoshiro256StarStar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::default();
    let weights = random_init(&cfg, 1);
    let prune = PruneConfig {
        locations: vec![4, 7, 10],
        keep_rate: 0.7,
        metric: Metric::AttnMeanPooling,
    };

    // Six synthetic one-second clips with ramped intensity.
    let mut samples = Vec::new();
    for id in 0..6u64 {
        let mut rng = Xoshiro256StarStar::seed_from_u64(100 + id);
        let mut values = Matrix::zeros(128, MEL_BINS);
        for r in 0..128 {
            let ramp = 0.1 + 1.9 * r as f64 / 128.0;
            for c in 0..MEL_BINS {
                values.set(r, c, (rng.uniform(-1.0, 1.0) * ramp) as f32);
            }
        }
        let mel = MelSpectrogram {
            values,
            floor: -23.0,
            content_frames: 128,
            norm: None,
        };
        let grid = patchify(&mel)?;
        let stats = patch_stats(&grid);
        let name = format!("clip{id}");
        let out = classify_forward(&grid, &weights, &cfg, &prune, Some(&stats), &name)?;
        samples.push(SampleRecord {
            id: name,
            stats,
            log: out.log,
            trace: out.trace,
        });
    }
    let corpus = Corpus { samples };

    // Five intensity clusters over every patch of every clip.
    let cm = kmeans_1d(
        &corpus.pooled_feature(StatFeature::Mean),
        5,
        StatFeature::Mean,
    )?;
    println!("cluster centroids: {:?}", cm.centroids);
    println!("cluster shares (%): {:?}", cm.shares);

    let tau = tau_report(&corpus, &cm)?;
    println!("\nblock, tau(intensity, attention)");
    for (block, t) in &tau.rows {
        println!("{block:>5}, {t:+.4}");
    }
    println!("average tau: {:+.4}", tau.average);

    let report = gamma_report(&corpus, &cm, &prune.locations);
    println!("\ngroup, Gamma (retained/pruned attention ratio)");
    for group in &report.groups {
        match gamma_group(&report, group.index) {
            Ok(g) => println!("G{} (blocks {:?}): {:.3}", group.index, group.blocks, g),
            Err(e) => println!("G{}: {e}", group.index),
        }
    }

    let (input_hist, retained_hist) = retention_histogram2d(&corpus, 16, false)?;
    println!(
        "\nhistogram totals: {} input patches, {} retained",
        input_hist.total(),
        retained_hist.total()
    );

    let cdf = retention_cdf(&corpus, &cm)?;
    for q in [0.25, 0.5, 0.75] {
        let idx = ((cdf.points.len() as f64 * q) as usize).min(cdf.points.len() - 1);
        println!(
            "retained-intensity CDF {:.0}%: mean <= {:.3}",
            q * 100.0,
            cdf.points[idx].0
        );
    }
    Ok(())
}
