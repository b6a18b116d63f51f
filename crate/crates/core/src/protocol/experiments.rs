use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, train, MetricsReport, ProtocolError, TrainConfig};
use crate::encode::{encode_dataset, fit_normalizer, FeatureLayout};
use crate::ingest::{build_vocabulary, split_indices, PropertyRecord};
use crate::model::{transfer_backbone, ModelCheckpoint, ModelKind, Network, TrainingMeta};
use crate::SeededRng;

/// Share of a city's records held out for testing.
pub const TEST_FRACTION: f64 = 0.1;

/// Independent seed for stream `stream` of a run seeded with `base`
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pick(records: &[PropertyRecord], idx: &[usize]) -> Vec<PropertyRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

/// Fits vocabulary and statistics on `records`, then builds and trains a
/// fresh model. Initialization, shuffling and dropout all draw from
/// `config.seed`.
pub fn fit_model(
    kind: ModelKind,
    records: &[PropertyRecord],
    config: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<f64>), ProtocolError> {
    config.validate()?;
    let vocab = build_vocabulary(records)?;
    let norm = fit_normalizer(records)?;
    let layout = FeatureLayout::new(&vocab, &vocab);
    let data = encode_dataset(records, &norm, &layout, &vocab)?;
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let mut network = Network::build(kind, layout.homogeneous_dim(), vocab.location_dim(), &mut rng)?;
    let history = train(&mut network, &data, config, &mut rng)?;
    let meta = TrainingMeta {
        seed: config.seed,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        source_city: vocab.city.clone(),
        city: vocab.city.clone(),
    };
    Ok((
        ModelCheckpoint {
            network,
            norm,
            vocab,
            layout,
            meta,
        },
        history,
    ))
}

/// Transfers the backbone of `source` to the city of `records` and trains
/// a new head on them.
///
/// Homogeneous statistics and the structure list stay those of the source;
/// the location vocabulary and the target statistics are fitted on
/// `records`. With `freeze_backbone` unset the backbone keeps training.
pub fn fine_tune(
    source: &ModelCheckpoint,
    records: &[PropertyRecord],
    config: &TrainConfig,
    freeze_backbone: bool,
) -> Result<(ModelCheckpoint, Vec<f64>), ProtocolError> {
    config.validate()?;
    if records.is_empty() {
        return Err(ProtocolError::FineTuneSetEmpty);
    }
    let vocab = build_vocabulary(records)?;
    let layout = source.layout.with_locations(&vocab);
    let mut norm = source.norm.clone();
    norm.target = fit_normalizer(records)?.target;
    let data = encode_dataset(records, &norm, &layout, &vocab)?;
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let mut model = transfer_backbone(source, vocab.location_dim(), &mut rng)?;
    model.backbone_frozen = freeze_backbone;
    let mut network = Network::HftHlf(model);
    let history = train(&mut network, &data, config, &mut rng)?;
    let meta = TrainingMeta {
        seed: config.seed,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        source_city: source.meta.source_city.clone(),
        city: vocab.city.clone(),
    };
    Ok((
        ModelCheckpoint {
            network,
            norm,
            vocab,
            layout,
            meta,
        },
        history,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<MetricsReport>,
    pub mean: MetricsReport,
}

/// `n_folds` independent random 90/10 splits. Fold `i` (1-based) splits
/// with seed `config.seed + i` and trains with a seed derived from it;
/// vocabulary and statistics come from the training part only.
pub fn monte_carlo_cv(
    records: &[PropertyRecord],
    kind: ModelKind,
    config: &TrainConfig,
    n_folds: usize,
) -> Result<CvReport, ProtocolError> {
    config.validate()?;
    if n_folds == 0 {
        return Err(ProtocolError::InvalidConfig("need at least one fold".into()));
    }
    let folds = (1..=n_folds as u64)
        .into_par_iter()
        .map(|i| {
            let split_seed = config.seed.wrapping_add(i);
            let (train_idx, test_idx) = split_indices(records.len(), TEST_FRACTION, split_seed);
            let fold_config = config.clone().with_seed(derive_seed(split_seed, 0));
            let (checkpoint, _) = fit_model(kind, &pick(records, &train_idx), &fold_config)?;
            evaluate(&checkpoint, &pick(records, &test_idx))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean = MetricsReport::mean(&folds).expect("at least one fold");
    Ok(CvReport { folds, mean })
}

/// Up to `k` records drawn without replacement from every residence.
/// Returns ascending indices into `records`.
pub fn sample_k_per_residence<R: Rng + ?Sized>(records: &[PropertyRecord], k: usize, rng: &mut R) -> Vec<usize> {
    assert!(k >= 1, "k must be at least 1");
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.residence.as_str()).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in groups.values() {
        if members.len() <= k {
            out.extend_from_slice(members);
        } else {
            out.extend(index::sample(rng, members.len(), k).into_iter().map(|j| members[j]));
        }
    }
    out.sort_unstable();
    out
}

/// Fine-tuning indices (`k` per residence) and a disjoint random test set
/// of `round(TEST_FRACTION * records.len())` drawn from the rest.
pub fn transfer_split(
    records: &[PropertyRecord],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let mut rng = SeededRng::seed_from_u64(seed);
    let finetune = sample_k_per_residence(records, k, &mut rng);
    if finetune.is_empty() {
        return Err(ProtocolError::FineTuneSetEmpty);
    }
    let needed = (TEST_FRACTION * records.len() as f64).round() as usize;
    let mut chosen = vec![false; records.len()];
    for &i in &finetune {
        chosen[i] = true;
    }
    let mut remaining: Vec<usize> = (0..records.len()).filter(|&i| !chosen[i]).collect();
    if remaining.len() < needed {
        return Err(ProtocolError::InsufficientTestRecords {
            needed,
            available: remaining.len(),
        });
    }
    remaining.shuffle(&mut rng);
    let mut test = remaining[..needed].to_vec();
    test.sort_unstable();
    Ok((finetune, test))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferOptions {
    pub freeze_backbone: bool,
    /// Also train a fresh model on the same fine-tuning set and score it on
    /// the same test set.
    pub compare_scratch: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            freeze_backbone: true,
            compare_scratch: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source_city: String,
    pub target_city: String,
    pub k: usize,
    pub finetune_size: usize,
    pub test_size: usize,
    pub transfer: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scratch: Option<MetricsReport>,
}

/// Fine-tunes `source` on `k` records per residence of the target city and
/// scores it on a disjoint 10 % test set. The split uses `split_seed`;
/// training uses `config.seed`.
pub fn transfer_from_checkpoint(
    source: &ModelCheckpoint,
    target: &[PropertyRecord],
    k: usize,
    config: &TrainConfig,
    split_seed: u64,
    options: TransferOptions,
) -> Result<(TransferReport, ModelCheckpoint), ProtocolError> {
    let (finetune_idx, test_idx) = transfer_split(target, k, split_seed)?;
    let finetune = pick(target, &finetune_idx);
    let test = pick(target, &test_idx);
    let (tuned, _) = fine_tune(source, &finetune, config, options.freeze_backbone)?;
    let transfer = evaluate(&tuned, &test)?;
    let scratch = if options.compare_scratch {
        let (fresh, _) = fit_model(ModelKind::HftHlf, &finetune, config)?;
        Some(evaluate(&fresh, &test)?)
    } else {
        None
    };
    let report = TransferReport {
        source_city: source.meta.source_city.clone(),
        target_city: tuned.vocab.city.clone(),
        k,
        finetune_size: finetune.len(),
        test_size: test.len(),
        transfer,
        scratch,
    };
    Ok((report, tuned))
}

/// Trains on the whole source city, transfers, fine-tunes on `k` records
/// per target residence, and evaluates on a disjoint 10 % of the target.
pub fn run_transfer_experiment(
    source: &[PropertyRecord],
    target: &[PropertyRecord],
    k: usize,
    source_config: &TrainConfig,
    target_config: &TrainConfig,
    seed: u64,
    options: TransferOptions,
) -> Result<TransferReport, ProtocolError> {
    let (source_model, _) = fit_model(ModelKind::HftHlf, source, source_config)?;
    let (report, _) = transfer_from_checkpoint(&source_model, target, k, target_config, seed, options)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BuildingType, Decoration, Direction};

    fn rec(residence: &str, price: f64) -> PropertyRecord {
        PropertyRecord {
            city: "Hohhot".into(),
            district: "D".into(),
            residence: residence.into(),
            year: 2001,
            building_type: BuildingType::HighRise,
            price,
            area: 90.0,
            bedroom: 2,
            livingroom: 1,
            kitchen: 1,
            bathroom: 1,
            floor: 4,
            structure: "Flat".into(),
            decoration: Decoration::Simple,
            direction: Direction::South,
        }
    }

    #[test]
    fn small_residences_are_taken_whole() {
        let mut records: Vec<_> = (0..5).map(|i| rec("small", 1000.0 + i as f64)).collect();
        records.extend((0..30).map(|i| rec("large", 2000.0 + i as f64)));
        let picked = sample_k_per_residence(&records, 10, &mut SeededRng::seed_from_u64(3));
        assert_eq!(picked.len(), 15);
        assert!((0..5).all(|i| picked.contains(&i)));
        let mut dedup = picked.clone();
        dedup.dedup();
        assert_eq!(dedup, picked);
    }

    #[test]
    fn sampler_is_seeded() {
        let records: Vec<_> = (0..60).map(|i| rec(&format!("r{}", i % 3), 1.0 + i as f64)).collect();
        let a = sample_k_per_residence(&records, 4, &mut SeededRng::seed_from_u64(1));
        let b = sample_k_per_residence(&records, 4, &mut SeededRng::seed_from_u64(1));
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let records: Vec<_> = (0..203).map(|i| rec(&format!("r{}", i % 7), 1.0 + i as f64)).collect();
        let (ft, test) = transfer_split(&records, 10, 5).unwrap();
        assert_eq!(ft.len(), 70);
        assert_eq!(test.len(), 20);
        assert!(test.iter().all(|i| !ft.contains(i)));
        let crowded: Vec<_> = (0..25).map(|i| rec("only", 1.0 + i as f64)).collect();
        assert!(matches!(
            transfer_split(&crowded, 24, 0),
            Err(ProtocolError::InsufficientTestRecords { .. })
        ));
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
