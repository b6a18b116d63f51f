//! Generates the default two-city synthetic market, writes one CSV per city
//! and prints a summary with the hidden ground truth.
//!
//! cargo run --example synthetic_market -- [out_dir]

use std::fs::File;
use std::path::PathBuf;

use appraisal::ingest::write_csv;
use appraisal::synth::{generate_universe, UniverseSpec};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    std::fs::create_dir_all(&out)?;

    let spec = UniverseSpec::default();
    let universe = generate_universe(&spec)?;
    let truth = &universe.truth;
    let k = &truth.coefficients;
    println!(
        "shared slopes: area {:.3}, floor {:.3}, year {:.3}, decoration step {:.3}",
        k.area, k.floor, k.year, k.decoration_step
    );
    for (name, effect) in &truth.effects.structure {
        println!("  structure {name:<10} {effect:+.3}");
    }

    for city in &spec.cities {
        let records = &universe.records[&city.name];
        let path = out.join(format!("{}.csv", city.name));
        write_csv(records, File::create(&path)?)?;

        let mean_price = records.iter().map(|r| r.price).sum::<f64>() / records.len() as f64;
        let ct = &truth.cities[&city.name];
        let spread = |m: &std::collections::BTreeMap<String, f64>| {
            let (lo, hi) = m.values().fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            hi - lo
        };
        println!(
            "{} (tier {}): {} records, mean price {:.0}, district effect range {:.2}, residence effect range {:.2} -> {}",
            city.name,
            city.tier,
            records.len(),
            mean_price,
            spread(&ct.district),
            spread(&ct.residence),
            path.display()
        );
    }
    Ok(())
}
