//! Trains a small model, saves it, loads it back and checks that the
//! reloaded model predicts bit-identically.
//!
//! cargo run --release --example checkpoint_roundtrip -- [epochs]

use appraisal::model::{load_checkpoint, predict_prices, ModelKind};
use appraisal::protocol::{evaluate, fit_model, Tier, TrainConfig};
use appraisal::synth::{generate_universe, UniverseSpec};

fn main() -> anyhow::Result<()> {
    let epochs: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(20);
    let spec = UniverseSpec::default();
    let universe = generate_universe(&spec)?;
    let target = &universe.records[&spec.cities[1].name];

    let config = TrainConfig::for_tier(Tier::Three, 7).with_epochs(epochs);
    let (checkpoint, history) = fit_model(ModelKind::HftHlf, target, &config)?;
    println!("loss: first epoch {:.4}, last epoch {:.4}", history[0], history[history.len() - 1]);

    let dir = std::env::temp_dir().join("appraisal-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.hfthlf.json");
    checkpoint.save(&path)?;
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let loaded = load_checkpoint(&path)?;
    let before = predict_prices(&checkpoint, target)?;
    let after = predict_prices(&loaded, target)?;
    let identical = before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{} predictions bit-identical after reload: {identical}", before.len());

    let m = evaluate(&loaded, target)?;
    println!("in-sample rmse {:.4}  mape {:.4}  r2 {:.4}", m.rmse, m.mape, m.r2);
    Ok(())
}
