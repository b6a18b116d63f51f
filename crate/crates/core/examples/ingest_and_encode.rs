//! Loads a listings CSV, cleans it, and shows how one record is encoded.
//!
//! cargo run --example ingest_and_encode -- [path/to/city.csv]
//!
//! Without a path a small synthetic city is used.

use appraisal::encode::{encode_dataset, fit_normalizer, FeatureLayout};
use appraisal::ingest::{build_vocabulary, load_records, residence_districts, write_csv, DropCause};
use appraisal::synth::{generate_universe, UniverseSpec};

fn main() -> anyhow::Result<()> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => {
            let mut spec = UniverseSpec::default();
            spec.cities.truncate(1);
            spec.cities[0].n_records = 200;
            let universe = generate_universe(&spec)?;
            let mut buf = Vec::new();
            write_csv(&universe.records[&spec.cities[0].name], &mut buf)?;
            // A few broken rows to show what cleaning does.
            buf.extend_from_slice(b"Beijing,Beijing-D01,Beijing-R001,2005,High-rise,,88,2,1,1,1,5,Flat,Simple,South\n");
            buf.extend_from_slice(b"Beijing,Beijing-D01,Beijing-R001,2005,Castle,30000,88,2,1,1,1,5,Flat,Simple,South\n");
            buf.extend_from_slice(b"Beijing,Beijing-D01,Beijing-R001,2005,High-rise,30000,5,2,1,1,1,5,Flat,Simple,South\n");
            buf.extend_from_slice(b"Beijing,too,short\n");
            buf
        }
    };

    let (records, report, parse_errors) = load_records(&bytes)?;
    println!("rows parsed: {}  malformed rows: {}", report.input, parse_errors.len());
    println!("kept {} of {}", report.retained, report.input);
    for cause in [DropCause::MissingField, DropCause::Unparseable, DropCause::OutOfRange, DropCause::UnknownCategory] {
        println!("  dropped for {cause:?}: {}", report.count(cause));
    }

    let vocab = build_vocabulary(&records)?;
    let (_, conflicts) = residence_districts(&records);
    println!(
        "{}: {} districts, {} residences, {} structures ({} residence/district conflicts)",
        vocab.city,
        vocab.districts.len(),
        vocab.residences.len(),
        vocab.structures.len(),
        conflicts.len()
    );

    let norm = fit_normalizer(&records)?;
    let layout = FeatureLayout::new(&vocab, &vocab);
    let data = encode_dataset(&records, &norm, &layout, &vocab)?;
    println!(
        "homogeneous width {}, location width {}",
        layout.homogeneous_dim(),
        layout.heterogeneous_dim()
    );

    let first = &records[0];
    println!("\nfirst record: {first:?}");
    println!("target (standardized ln price): {:.4}", data.target[0]);
    for (slot, v) in layout.homogeneous_slots().iter().zip(data.homogeneous.row(0)) {
        if *v != 0.0 {
            println!("  {slot:?} = {v:.4}");
        }
    }
    for (slot, v) in layout.heterogeneous_slots().iter().zip(data.heterogeneous.row(0)) {
        if *v != 0.0 {
            println!("  {slot:?} = {v}");
        }
    }
    Ok(())
}
