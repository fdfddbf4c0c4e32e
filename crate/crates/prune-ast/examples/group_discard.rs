//! Intensity-group ablation: discard the lowest (L: clusters 1-2) or
//! highest (H: clusters 4-5) intensity tokens after a chosen block and
//! compare the surviving token populations.
//!
//! ```bash
//! cargo run --example group_discard
//! ```

use prune_ast::analysis::{kmeans_1d, StatFeature};
use prune_ast::audio::{patch_stats, patchify, MelSpectrogram, MEL_BINS};
use prune_ast::model::{classify_forward_with_ablation, AblationSpec, ModelConfig};
use prune_ast::pruning::IntensityGroup;
use prune_ast::tensor::Matrix;
use prune_ast::weights::{random_init, Xoshiro256StarStar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::default();
    let weights = random_init(&cfg, 3);

    // Half real signal, half padding: the padding patches form the
    // lowest-intensity cluster.
    let mut rng = Xoshiro256StarStar::seed_from_u64(5);
    let mut values = Matrix::zeros(128, MEL_BINS);
    for r in 0..128 {
        for c in 0..MEL_BINS {
            values.set(r, c, rng.uniform(-1.0, 1.5) as f32);
        }
    }
    let mel = MelSpectrogram {
        values,
        floor: -23.0,
        content_frames: 128,
        norm: None,
    };
    let padded = mel.pad_or_trim(256)?;
    let grid = patchify(&padded)?;
    let stats = patch_stats(&grid);
    let cm = kmeans_1d(&stats.means, 5, StatFeature::Mean)?;
    println!(
        "input: {} tokens, {} of them padding",
        grid.len(),
        (0..grid.len()).filter(|&p| grid.is_padding(p)).count()
    );

    for group in [IntensityGroup::L, IntensityGroup::H] {
        for block in [1usize, 6, 11] {
            let spec = AblationSpec { group, block };
            let out =
                classify_forward_with_ablation(&grid, &weights, &cfg, &spec, &cm, &stats, "demo")?;
            let survivors = out.trace.final_survivors();
            let padding_left = survivors.iter().filter(|&&p| grid.is_padding(p)).count();
            println!(
                "{group:?} after block {block:>2}: {:>3} survivors, {padding_left} padding left",
                survivors.len()
            );
        }
    }
    Ok(())
}
