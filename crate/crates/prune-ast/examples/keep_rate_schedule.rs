//! Keep-rate scheduling: flat, a linear ramp, then flat at the target.
//!
//! ```bash
//! cargo run --example keep_rate_schedule
//! ```

use prune_ast::pruning::{keep_rate_at_epoch, KeepRateSchedule};

fn main() {
    // The shape used when fine-tuning starts pruning mid-training:
    // full tokens for 15 epochs, then ramp down to 0.5 over 10.
    let schedule = KeepRateSchedule {
        start_epoch: 15,
        duration_epochs: 10,
        target_kr: 0.5,
    };
    println!("epoch,keep_rate");
    for epoch in 0..=30 {
        println!("{},{}", epoch, keep_rate_at_epoch(&schedule, epoch));
    }
}
