//! Numeric encoding of listings.
//!
//! Each record becomes two vectors: a *homogeneous* block of property
//! features whose category sets are shared by all cities (z-scored numerics
//! then one-hot building type, decoration, direction and structure), and a
//! *heterogeneous* block of city-specific location one-hots (district then
//! residence). The target is the standardized log price per square metre.

use ndarray::{concatenate, Array1, Array2, ArrayViewMut1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BuildingType, CityVocabulary, Decoration, Direction, PropertyRecord};

/// Standard deviations are clamped to at least this value.
pub const MIN_STD: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("cannot fit normalization statistics on an empty set")]
    EmptyInput,
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    /// Population standard deviation, at least [`MIN_STD`].
    pub std: f64,
}

impl FieldStats {
    fn fit(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mut mean = values.clone().sum::<f64>() / n;
        let first = values.clone().next().unwrap_or(mean);
        if values.clone().all(|v| v == first) {
            mean = first;
        }
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt().max(MIN_STD),
        }
    }

    pub fn z(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// The numeric homogeneous fields, in slot order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumericField {
    Year,
    Area,
    Bedroom,
    Livingroom,
    Kitchen,
    Bathroom,
    Floor,
}

impl NumericField {
    pub const ALL: [NumericField; 7] = [
        Self::Year,
        Self::Area,
        Self::Bedroom,
        Self::Livingroom,
        Self::Kitchen,
        Self::Bathroom,
        Self::Floor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Year => "year",
            Self::Area => "area",
            Self::Bedroom => "bedroom",
            Self::Livingroom => "livingroom",
            Self::Kitchen => "kitchen",
            Self::Bathroom => "bathroom",
            Self::Floor => "floor",
        }
    }

    pub fn value(self, r: &PropertyRecord) -> f64 {
        match self {
            Self::Year => r.year.into(),
            Self::Area => r.area,
            Self::Bedroom => r.bedroom.into(),
            Self::Livingroom => r.livingroom.into(),
            Self::Kitchen => r.kitchen.into(),
            Self::Bathroom => r.bathroom.into(),
            Self::Floor => r.floor.into(),
        }
    }
}

/// Training-split statistics for the numeric fields and the log target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub year: FieldStats,
    pub area: FieldStats,
    pub bedroom: FieldStats,
    pub livingroom: FieldStats,
    pub kitchen: FieldStats,
    pub bathroom: FieldStats,
    pub floor: FieldStats,
    /// Statistics of `ln(price)`.
    pub target: FieldStats,
}

impl NormStats {
    pub fn field(&self, f: NumericField) -> &FieldStats {
        match f {
            NumericField::Year => &self.year,
            NumericField::Area => &self.area,
            NumericField::Bedroom => &self.bedroom,
            NumericField::Livingroom => &self.livingroom,
            NumericField::Kitchen => &self.kitchen,
            NumericField::Bathroom => &self.bathroom,
            NumericField::Floor => &self.floor,
        }
    }
}

pub fn fit_normalizer(train: &[PropertyRecord]) -> Result<NormStats, EncodeError> {
    if train.is_empty() {
        return Err(EncodeError::EmptyInput);
    }
    let fit = |f: NumericField| FieldStats::fit(train.iter().map(move |r| f.value(r)));
    Ok(NormStats {
        year: fit(NumericField::Year),
        area: fit(NumericField::Area),
        bedroom: fit(NumericField::Bedroom),
        livingroom: fit(NumericField::Livingroom),
        kitchen: fit(NumericField::Kitchen),
        bathroom: fit(NumericField::Bathroom),
        floor: fit(NumericField::Floor),
        target: FieldStats::fit(train.iter().map(|r| r.price.ln())),
    })
}

/// Standardized log price.
pub fn encode_target(price: f64, norm: &NormStats) -> Result<f64, EncodeError> {
    if !(price > 0.0) {
        return Err(EncodeError::NonPositivePrice(price));
    }
    Ok(norm.target.z(price.ln()))
}

/// Inverse of [`encode_target`].
pub fn decode_target(t: f64, norm: &NormStats) -> f64 {
    (t * norm.target.std + norm.target.mean).exp()
}

/// One named position in an encoded vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Numeric(NumericField),
    BuildingType(BuildingType),
    Decoration(Decoration),
    Direction(Direction),
    Structure(String),
    District(String),
    Residence(String),
}

/// Slot order for both blocks.
///
/// The homogeneous side is fixed by the structure list of the city the
/// backbone was trained on; the heterogeneous side by the vocabulary of the
/// city the head is fitted on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub structures: Vec<String>,
    pub districts: Vec<String>,
    pub residences: Vec<String>,
}

const FIXED_HOMOGENEOUS: usize =
    NumericField::ALL.len() + BuildingType::ALL.len() + Decoration::ALL.len() + Direction::ALL.len();

impl FeatureLayout {
    pub fn new(backbone_vocab: &CityVocabulary, location_vocab: &CityVocabulary) -> Self {
        Self {
            structures: backbone_vocab.structures.clone(),
            districts: location_vocab.districts.clone(),
            residences: location_vocab.residences.clone(),
        }
    }

    /// Same homogeneous slots, location slots taken from `location_vocab`.
    pub fn with_locations(&self, location_vocab: &CityVocabulary) -> Self {
        Self {
            structures: self.structures.clone(),
            districts: location_vocab.districts.clone(),
            residences: location_vocab.residences.clone(),
        }
    }

    pub fn homogeneous_dim(&self) -> usize {
        FIXED_HOMOGENEOUS + self.structures.len()
    }

    pub fn heterogeneous_dim(&self) -> usize {
        self.districts.len() + self.residences.len()
    }

    fn building_offset() -> usize {
        NumericField::ALL.len()
    }

    fn decoration_offset() -> usize {
        Self::building_offset() + BuildingType::ALL.len()
    }

    fn direction_offset() -> usize {
        Self::decoration_offset() + Decoration::ALL.len()
    }

    fn structure_offset() -> usize {
        Self::direction_offset() + Direction::ALL.len()
    }

    /// Homogeneous slots in vector order.
    pub fn homogeneous_slots(&self) -> Vec<Slot> {
        NumericField::ALL
            .iter()
            .map(|f| Slot::Numeric(*f))
            .chain(BuildingType::ALL.iter().map(|b| Slot::BuildingType(*b)))
            .chain(Decoration::ALL.iter().map(|d| Slot::Decoration(*d)))
            .chain(Direction::ALL.iter().map(|d| Slot::Direction(*d)))
            .chain(self.structures.iter().cloned().map(Slot::Structure))
            .collect()
    }

    /// Heterogeneous slots in vector order.
    pub fn heterogeneous_slots(&self) -> Vec<Slot> {
        self.districts
            .iter()
            .cloned()
            .map(Slot::District)
            .chain(self.residences.iter().cloned().map(Slot::Residence))
            .collect()
    }

    /// Index of `slot` within its block.
    pub fn index_of(&self, slot: &Slot) -> Option<usize> {
        let find = |list: &[String], name: &str| list.binary_search_by(|s| s.as_str().cmp(name)).ok();
        match slot {
            Slot::Numeric(f) => NumericField::ALL.iter().position(|g| g == f),
            Slot::BuildingType(b) => Some(Self::building_offset() + b.index()),
            Slot::Decoration(d) => Some(Self::decoration_offset() + d.index()),
            Slot::Direction(d) => Some(Self::direction_offset() + d.index()),
            Slot::Structure(s) => find(&self.structures, s).map(|i| Self::structure_offset() + i),
            Slot::District(d) => find(&self.districts, d),
            Slot::Residence(r) => find(&self.residences, r).map(|i| self.districts.len() + i),
        }
    }
}

fn write_homogeneous(
    rec: &PropertyRecord,
    norm: &NormStats,
    layout: &FeatureLayout,
    mut out: ArrayViewMut1<'_, f64>,
) {
    out.fill(0.0);
    for (i, f) in NumericField::ALL.iter().enumerate() {
        out[i] = norm.field(*f).z(f.value(rec));
    }
    out[FeatureLayout::building_offset() + rec.building_type.index()] = 1.0;
    out[FeatureLayout::decoration_offset() + rec.decoration.index()] = 1.0;
    out[FeatureLayout::direction_offset() + rec.direction.index()] = 1.0;
    if let Ok(i) = layout
        .structures
        .binary_search_by(|s| s.as_str().cmp(&rec.structure))
    {
        out[FeatureLayout::structure_offset() + i] = 1.0;
    }
}

fn write_heterogeneous(rec: &PropertyRecord, vocab: &CityVocabulary, mut out: ArrayViewMut1<'_, f64>) {
    out.fill(0.0);
    if let Some(i) = vocab.district_index(&rec.district) {
        out[i] = 1.0;
    }
    if let Some(i) = vocab.residence_index(&rec.residence) {
        out[vocab.districts.len() + i] = 1.0;
    }
}

/// Homogeneous block: z-scored numerics then one-hot categoricals. A
/// structure missing from the layout leaves its block all zero.
pub fn encode_homogeneous(rec: &PropertyRecord, norm: &NormStats, layout: &FeatureLayout) -> Array1<f64> {
    let mut v = Array1::zeros(layout.homogeneous_dim());
    write_homogeneous(rec, norm, layout, v.view_mut());
    v
}

/// District one-hot followed by residence one-hot; unseen labels encode as
/// zeros.
pub fn encode_heterogeneous(rec: &PropertyRecord, vocab: &CityVocabulary) -> Array1<f64> {
    let mut v = Array1::zeros(vocab.location_dim());
    write_heterogeneous(rec, vocab, v.view_mut());
    v
}

/// Row-aligned encoded matrices and targets.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    pub homogeneous: Array2<f64>,
    pub heterogeneous: Array2<f64>,
    pub target: Array1<f64>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// `[homogeneous | heterogeneous]`, the single-stack baseline's input.
    pub fn concatenated(&self) -> Array2<f64> {
        concatenate(Axis(1), &[self.homogeneous.view(), self.heterogeneous.view()])
            .expect("row counts agree")
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            homogeneous: self.homogeneous.select(Axis(0), idx),
            heterogeneous: self.heterogeneous.select(Axis(0), idx),
            target: self.target.select(Axis(0), idx),
        }
    }
}

/// Homogeneous and heterogeneous matrices, row `i` from `records[i]`.
pub fn encode_features(
    records: &[PropertyRecord],
    norm: &NormStats,
    layout: &FeatureLayout,
    vocab: &CityVocabulary,
) -> (Array2<f64>, Array2<f64>) {
    let n = records.len();
    let mut homogeneous = Array2::zeros((n, layout.homogeneous_dim()));
    let mut heterogeneous = Array2::zeros((n, vocab.location_dim()));
    for (i, rec) in records.iter().enumerate() {
        write_homogeneous(rec, norm, layout, homogeneous.row_mut(i));
        write_heterogeneous(rec, vocab, heterogeneous.row_mut(i));
    }
    (homogeneous, heterogeneous)
}

pub fn encode_dataset(
    records: &[PropertyRecord],
    norm: &NormStats,
    layout: &FeatureLayout,
    vocab: &CityVocabulary,
) -> Result<EncodedDataset, EncodeError> {
    let target = records
        .iter()
        .map(|r| encode_target(r.price, norm))
        .collect::<Result<Array1<f64>, _>>()?;
    let (homogeneous, heterogeneous) = encode_features(records, norm, layout, vocab);
    Ok(EncodedDataset {
        homogeneous,
        heterogeneous,
        target,
    })
}
