//! The TPWT weight container: deterministic generation, byte-exact
//! round trips, and the structured errors corrupt files produce.
//!
//! ```bash
//! cargo run --example weights_roundtrip
//! ```

use prune_ast::model::ModelConfig;
use prune_ast::weights::{
    load_weights, random_init, read_weight_file, save_weights, tensor_census, write_weight_file,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::toy();
    let census = tensor_census(&cfg);
    println!(
        "toy config: depth {}, dim {} -> {} tensors",
        cfg.depth,
        cfg.dim,
        census.len()
    );

    let weights = random_init(&cfg, 2024);
    let dir = std::env::temp_dir().join("prune-ast-weights-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("toy.tpwt");
    save_weights(&weights, &path)?;
    let size = std::fs::metadata(&path)?.len();
    println!("wrote {} ({size} bytes)", path.display());

    // Same seed, same bytes.
    let again = write_weight_file(&random_init(&cfg, 2024).to_entries());
    assert_eq!(std::fs::read(&path)?, again);
    println!("second save with seed 2024 is byte-identical");

    let loaded = load_weights(&path, &cfg)?;
    assert_eq!(loaded.blocks.len(), cfg.depth);
    println!("reloaded and validated against the config census");

    // Every kind of corruption comes back as an error, not a crash.
    let good = std::fs::read(&path)?;
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    println!(
        "bad magic     -> {}",
        read_weight_file(&bad_magic).unwrap_err()
    );
    let mut bad_version = good.clone();
    bad_version[4] = 9;
    println!(
        "bad version   -> {}",
        read_weight_file(&bad_version).unwrap_err()
    );
    let truncated = &good[..good.len() - 5];
    println!(
        "truncated     -> {}",
        read_weight_file(truncated).unwrap_err()
    );
    let mut wrong_cfg = ModelConfig::toy();
    wrong_cfg.dim = 32;
    println!(
        "wrong config  -> {}",
        load_weights(&path, &wrong_cfg).unwrap_err()
    );
    Ok(())
}
