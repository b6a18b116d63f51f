//! Trains the two-part network and the single-stack baseline on the
//! synthetic source city and compares held-out accuracy.
//!
//! cargo run --release --example supervised_cv -- [epochs] [folds]

use std::time::Instant;

use appraisal::model::ModelKind;
use appraisal::protocol::{monte_carlo_cv, Tier, TrainConfig};
use appraisal::synth::{generate_universe, UniverseSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(250);
    let folds: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);

    let spec = UniverseSpec::default();
    let universe = generate_universe(&spec)?;
    let source = &universe.records[&spec.cities[0].name];
    let config = TrainConfig::for_tier(Tier::Three, 42).with_epochs(epochs);

    for kind in [ModelKind::HftHlf, ModelKind::Traditional] {
        let t = Instant::now();
        let report = monte_carlo_cv(source, kind, &config, folds)?;
        let m = report.mean;
        println!(
            "{:<12} rmse {:.4}  mape {:.4}  r2 {:.4}  ({} folds, {:.1}s)",
            kind.to_string(),
            m.rmse,
            m.mape,
            m.r2,
            report.folds.len(),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
