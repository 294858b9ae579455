//! Trains on a small synthetic union-of-subspaces problem and prints the
//! clustering scores for the multi-view model and for each view alone.
//!
//! cargo run --release -p mvsc-core --example synthetic_recovery -- [seeds] [finetune_epochs] [lambda1]

use mvsc_core::autoencoder::Architecture;
use mvsc_core::dataset::{generate_synthetic, SyntheticSpec};
use mvsc_core::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map_or(Ok(5), |s| s.parse())?;
    let mut config = TrainConfig {
        architectures: vec![Architecture::dense(&[8, 6, 4])],
        ..TrainConfig::desk_scale()
    };
    if let Some(e) = args.get(2) {
        config.finetune_epochs = e.parse()?;
    }
    if let Some(l) = args.get(3) {
        config.lambda1 = l.parse()?;
    }
    for seed in 0..seeds {
        let ds = generate_synthetic(&SyntheticSpec {
            k: 3,
            per_cluster: 20,
            views: 2,
            ambient_dims: vec![10, 12],
            subspace_rank: 2,
            noise_sigma: 0.01,
            seed,
        })?;
        let cfg = TrainConfig { seed, ..config.clone() };
        let start = std::time::Instant::now();
        let all = train(&ds, &cfg)?;
        let m = all.metrics.unwrap();
        let mut line = format!(
            "seed {seed}: all acc {:.3} nmi {:.3} ({:.1?})",
            m.acc,
            m.nmi,
            start.elapsed()
        );
        for v in 0..ds.n_views() {
            let single = train(&ds.single_view(v)?, &cfg)?.metrics.unwrap();
            line.push_str(&format!(" | view {v} acc {:.3}", single.acc));
        }
        let totals = all.log.totals();
        line.push_str(&format!(
            " | loss {:.4} -> {:.4}",
            totals.first().unwrap_or(&0.0),
            totals.last().unwrap_or(&0.0)
        ));
        println!("{line}");
    }
    Ok(())
}
