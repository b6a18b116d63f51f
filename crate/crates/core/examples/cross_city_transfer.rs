//! Trains on the synthetic source city, moves the backbone to the target
//! city, fine-tunes a head on k records per residence and compares against
//! a model trained from scratch on the same records.
//!
//! cargo run --release --example cross_city_transfer -- [epochs] [seeds]

use std::time::Instant;

use appraisal::model::ModelKind;
use appraisal::protocol::{derive_seed, fit_model, transfer_from_checkpoint, Tier, TrainConfig, TransferOptions};
use appraisal::synth::{generate_universe, UniverseSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(250);
    let seeds: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);

    let spec = UniverseSpec::default();
    let universe = generate_universe(&spec)?;
    let source = &universe.records[&spec.cities[0].name];
    let target = &universe.records[&spec.cities[1].name];
    let options = TransferOptions {
        freeze_backbone: true,
        compare_scratch: true,
    };

    for seed in 0..seeds {
        let t = Instant::now();
        let source_config = TrainConfig::for_tier(Tier::One, derive_seed(seed, 0)).with_epochs(epochs);
        let (source_model, _) = fit_model(ModelKind::HftHlf, source, &source_config)?;
        let target_config = TrainConfig::for_tier(Tier::Three, derive_seed(seed, 1)).with_epochs(epochs);
        for k in [5, 10, 15] {
            let (report, _) = transfer_from_checkpoint(&source_model, target, k, &target_config, seed, options)?;
            let scratch = report.scratch.expect("scratch arm requested");
            println!(
                "seed {seed} k {k:>2}  fine-tune {:>3}  test {:>3}  transfer r2 {:.4}  scratch r2 {:.4}",
                report.finetune_size, report.test_size, report.transfer.r2, scratch.r2
            );
        }
        println!("seed {seed} done in {:.1}s", t.elapsed().as_secs_f64());
    }
    Ok(())
}
