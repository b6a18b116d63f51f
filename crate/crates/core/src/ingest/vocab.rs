use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IngestError, PropertyRecord};

/// Sorted categorical vocabularies for one city.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityVocabulary {
    pub city: String,
    pub districts: Vec<String>,
    pub residences: Vec<String>,
    pub structures: Vec<String>,
}

impl CityVocabulary {
    pub fn district_index(&self, name: &str) -> Option<usize> {
        self.districts.binary_search_by(|d| d.as_str().cmp(name)).ok()
    }

    pub fn residence_index(&self, name: &str) -> Option<usize> {
        self.residences.binary_search_by(|r| r.as_str().cmp(name)).ok()
    }

    pub fn structure_index(&self, name: &str) -> Option<usize> {
        self.structures.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    /// Width of the location one-hot block.
    pub fn location_dim(&self) -> usize {
        self.districts.len() + self.residences.len()
    }
}

/// A residence that appeared under more than one district.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidenceConflict {
    pub residence: String,
    /// District it was first seen in; this one is kept.
    pub kept: String,
    pub other: String,
    pub row: usize,
}

/// Distinct districts, residences and structures, each sorted by code point.
pub fn build_vocabulary(records: &[PropertyRecord]) -> Result<CityVocabulary, IngestError> {
    let first = records.first().ok_or(IngestError::EmptyInput)?;
    if let Some(other) = records.iter().find(|r| r.city != first.city) {
        return Err(IngestError::MixedCities {
            first: first.city.clone(),
            other: other.city.clone(),
        });
    }
    let sorted = |f: fn(&PropertyRecord) -> &String| -> Vec<String> {
        records
            .iter()
            .map(f)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect()
    };
    Ok(CityVocabulary {
        city: first.city.clone(),
        districts: sorted(|r| &r.district),
        residences: sorted(|r| &r.residence),
        structures: sorted(|r| &r.structure),
    })
}

/// Residence → district map (first-seen district wins) plus every record
/// that contradicts it.
pub fn residence_districts(
    records: &[PropertyRecord],
) -> (BTreeMap<String, String>, Vec<ResidenceConflict>) {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut conflicts = Vec::new();
    for (row, r) in records.iter().enumerate() {
        match map.get(&r.residence) {
            None => {
                map.insert(r.residence.clone(), r.district.clone());
            }
            Some(kept) if *kept != r.district => conflicts.push(ResidenceConflict {
                residence: r.residence.clone(),
                kept: kept.clone(),
                other: r.district.clone(),
                row,
            }),
            Some(_) => {}
        }
    }
    (map, conflicts)
}
