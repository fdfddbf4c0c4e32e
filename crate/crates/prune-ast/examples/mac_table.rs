//! Reproduce the analytical MAC cost table and the headline reduction
//! ratios for a ViT-B class model.
//!
//! ```bash
//! cargo run --example mac_table
//! ```

use prune_ast::mac::{token_count_schedule, total_macs};
use prune_ast::model::{Aggregation, ModelConfig};
use prune_ast::pruning::{Metric, PruneConfig};

fn main() {
    let cfg = ModelConfig::vit_b(527, Aggregation::Cls);
    let locations = vec![4, 7, 10];
    let keep_rates = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4];

    println!("N,keep_rate,total_G");
    for n in [64usize, 256, 512] {
        for kr in keep_rates {
            let prune = PruneConfig {
                locations: locations.clone(),
                keep_rate: kr,
                metric: Metric::AttnCls,
            };
            let report = total_macs(n, &prune, &cfg);
            println!("{n},{kr},{:.1}", report.total_g());
        }
    }

    let base = total_macs(512, &prune_at(1.0, &locations), &cfg).total as f64;
    println!();
    for kr in [0.9, 0.8] {
        let total = total_macs(512, &prune_at(kr, &locations), &cfg).total as f64;
        println!(
            "N=512 kr={kr}: {:.1}% of the unpruned cost",
            total / base * 100.0
        );
    }

    println!();
    println!("token counts per block at N=512, kr=0.5:");
    let counts = token_count_schedule(512, 0.5, &locations, cfg.depth);
    println!("{counts:?}");
}

fn prune_at(kr: f64, locations: &[usize]) -> PruneConfig {
    PruneConfig {
        locations: locations.to_vec(),
        keep_rate: kr,
        metric: Metric::AttnCls,
    }
}
