//! Classify a synthetic spectrogram with in-network TopK pruning and
//! inspect what got kept where.
//!
//! ```bash
//! cargo run --example toy_inference
//! ```

use prune_ast::audio::{patch_stats, patchify, MelSpectrogram, MEL_BINS};
use prune_ast::mac::total_macs;
use prune_ast::model::{classify_forward, ModelConfig};
use prune_ast::pruning::{Metric, PruneConfig};
use prune_ast::tensor::Matrix;
use prune_ast::weights::{random_init, Xoshiro256StarStar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 12-block desk-scale model with pruning at the standard blocks.
    let cfg = ModelConfig::default();
    let weights = random_init(&cfg, 42);
    let prune = PruneConfig {
        locations: vec![4, 7, 10],
        keep_rate: 0.5,
        metric: Metric::AttnMeanPooling,
    };

    // Synthetic 640-frame spectrogram: structured noise.
    let mut rng = Xoshiro256StarStar::seed_from_u64(7);
    let frames = 640;
    let mut values = Matrix::zeros(frames, MEL_BINS);
    for r in 0..frames {
        for c in 0..MEL_BINS {
            let band = ((c as f64 / 16.0).sin() + 1.0) * 0.5;
            values.set(r, c, (rng.uniform(-1.0, 1.0) * band) as f32);
        }
    }
    let mel = MelSpectrogram {
        values,
        floor: -23.0,
        content_frames: frames,
        norm: None,
    };
    let grid = patchify(&mel)?;
    let stats = patch_stats(&grid);
    println!("input: {} tokens", grid.len());

    let out = classify_forward(&grid, &weights, &cfg, &prune, Some(&stats), "toy")?;

    let mut best = 0usize;
    for (c, &l) in out.logits.iter().enumerate() {
        if l > out.logits[best] {
            best = c;
        }
    }
    println!("argmax class: {best} (logit {:.4})", out.logits[best]);

    for event in &out.trace.events {
        println!(
            "block {:>2}: {} -> {} tokens (dropped {})",
            event.block,
            event.pre_count,
            event.retained.len(),
            event.pruned.len()
        );
    }
    let survivors = out.trace.final_survivors();
    println!(
        "final survivors: {} of {} ({} attention-log rows recorded)",
        survivors.len(),
        grid.len(),
        out.log.rows.len()
    );

    let report = total_macs(grid.len(), &prune, &cfg);
    let baseline = total_macs(
        grid.len(),
        &PruneConfig {
            keep_rate: 1.0,
            ..prune.clone()
        },
        &cfg,
    );
    println!(
        "cost: {:.3}G MACs vs {:.3}G unpruned ({:.1}%)",
        report.total_g(),
        baseline.total_g(),
        report.total as f64 / baseline.total as f64 * 100.0
    );
    Ok(())
}
