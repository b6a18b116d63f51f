//! Synthetic multi-city markets.
//!
//! Prices are log-additive: a city base, a shared effect of the apartment
//! attributes (identical in every city), a district effect, a residence
//! effect and Gaussian noise. Every generated record passes
//! [`crate::ingest::clean`].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{BuildingType, Decoration, Direction, PropertyRecord, REFERENCE_MAX_YEAR};
use crate::protocol::derive_seed;
use crate::SeededRng;

/// Fixed centring constants for the continuous effects, so the shared
/// function does not depend on any one city's sample.
pub const AREA_REF: (f64, f64) = (99.89, 59.87);
pub const FLOOR_REF: (f64, f64) = (5.36, 4.94);
pub const YEAR_REF: (f64, f64) = (2003.95, 7.90);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("bad spec: {0}")]
    BadSpec(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CitySpec {
    pub name: String,
    pub tier: u8,
    pub n_districts: usize,
    pub n_residences: usize,
    pub n_records: usize,
    pub base_log_price: f64,
}

/// Slopes of the shared log-price function. Categorical effects are drawn
/// from `Normal(0, categorical_std)` once per universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedCoefficients {
    pub area: f64,
    pub floor: f64,
    pub year: f64,
    /// Added per decoration level, from `None` (0) to `Luxury` (5).
    pub decoration_step: f64,
    pub categorical_std: f64,
}

impl Default for SharedCoefficients {
    fn default() -> Self {
        Self {
            area: 0.25,
            floor: 0.04,
            year: 0.10,
            decoration_step: 0.06,
            categorical_std: 0.12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniverseSpec {
    pub cities: Vec<CitySpec>,
    #[serde(default)]
    pub coefficients: SharedCoefficients,
    #[serde(default = "default_structures")]
    pub structures: Vec<String>,
    #[serde(default = "default_sigma_district")]
    pub sigma_district: f64,
    #[serde(default = "default_sigma_residence")]
    pub sigma_residence: f64,
    #[serde(default = "default_sigma_noise")]
    pub sigma_noise: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_structures() -> Vec<String> {
    ["Flat", "Duplex", "Loft", "Penthouse"].map(String::from).to_vec()
}
fn default_sigma_district() -> f64 {
    0.25
}
fn default_sigma_residence() -> f64 {
    0.20
}
fn default_sigma_noise() -> f64 {
    0.10
}
fn default_seed() -> u64 {
    42
}

impl Default for UniverseSpec {
    /// A large tier-1 source city and a small tier-3 target city.
    fn default() -> Self {
        Self {
            cities: vec![
                CitySpec {
                    name: "Beijing".into(),
                    tier: 1,
                    n_districts: 10,
                    n_residences: 50,
                    n_records: 5000,
                    base_log_price: 45_000f64.ln(),
                },
                CitySpec {
                    name: "Hohhot".into(),
                    tier: 3,
                    n_districts: 4,
                    n_residences: 20,
                    n_records: 1000,
                    base_log_price: 15_000f64.ln(),
                },
            ],
            coefficients: SharedCoefficients::default(),
            structures: default_structures(),
            sigma_district: default_sigma_district(),
            sigma_residence: default_sigma_residence(),
            sigma_noise: default_sigma_noise(),
            seed: default_seed(),
        }
    }
}

impl UniverseSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(m));
        if self.cities.is_empty() {
            return bad("no cities".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for c in &self.cities {
            if c.name.trim().is_empty() || c.name.trim() != c.name || c.name.contains(',') {
                return bad(format!("invalid city name {:?}", c.name));
            }
            if !names.insert(c.name.as_str()) {
                return bad(format!("duplicate city {}", c.name));
            }
            if !(1..=3).contains(&c.tier) {
                return bad(format!("{}: tier must be 1, 2 or 3", c.name));
            }
            if c.n_districts == 0 || c.n_residences == 0 || c.n_records == 0 {
                return bad(format!("{}: counts must be at least 1", c.name));
            }
            if c.n_residences < c.n_districts {
                return bad(format!("{}: fewer residences than districts", c.name));
            }
            if !c.base_log_price.is_finite() {
                return bad(format!("{}: base_log_price must be finite", c.name));
            }
        }
        let k = &self.coefficients;
        if ![k.area, k.floor, k.year, k.decoration_step].iter().all(|v| v.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        for (name, s) in [
            ("categorical_std", k.categorical_std),
            ("sigma_district", self.sigma_district),
            ("sigma_residence", self.sigma_residence),
            ("sigma_noise", self.sigma_noise),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0"));
            }
        }
        if self.structures.is_empty() {
            return bad("need at least one structure".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.structures {
            if s.trim().is_empty() || s.trim() != s || s.contains(',') || !seen.insert(s) {
                return bad(format!("invalid or duplicate structure {s:?}"));
            }
        }
        Ok(())
    }
}

/// Categorical effects shared by every city.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedEffects {
    pub building_type: Vec<f64>,
    pub direction: Vec<f64>,
    pub structure: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityTruth {
    pub base_log_price: f64,
    pub district: BTreeMap<String, f64>,
    pub residence: BTreeMap<String, f64>,
    pub residence_district: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub coefficients: SharedCoefficients,
    pub effects: SharedEffects,
    pub cities: BTreeMap<String, CityTruth>,
}

impl GroundTruth {
    /// Shared (city-invariant) part of a record's log price.
    pub fn homogeneous_effect(&self, r: &PropertyRecord) -> f64 {
        let k = &self.coefficients;
        k.area * (r.area - AREA_REF.0) / AREA_REF.1
            + k.floor * (f64::from(r.floor) - FLOOR_REF.0) / FLOOR_REF.1
            + k.year * (f64::from(r.year) - YEAR_REF.0) / YEAR_REF.1
            + k.decoration_step * r.decoration.index() as f64
            + self.effects.building_type[r.building_type.index()]
            + self.effects.direction[r.direction.index()]
            + self.effects.structure.get(&r.structure).copied().unwrap_or(0.0)
    }

    /// Noise-free log price.
    pub fn expected_log_price(&self, r: &PropertyRecord) -> Option<f64> {
        let city = self.cities.get(&r.city)?;
        Some(
            city.base_log_price
                + self.homogeneous_effect(r)
                + city.district.get(&r.district)?
                + city.residence.get(&r.residence)?,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Universe {
    pub records: BTreeMap<String, Vec<PropertyRecord>>,
    pub truth: GroundTruth,
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("validated std")
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Generates every city of `spec`. Output depends only on the spec.
pub fn generate_universe(spec: &UniverseSpec) -> Result<Universe, SynthError> {
    spec.validate()?;
    let k = &spec.coefficients;
    let mut rng = SeededRng::seed_from_u64(derive_seed(spec.seed, 0));
    let cat = normal(k.categorical_std);
    let effects = SharedEffects {
        building_type: BuildingType::ALL.iter().map(|_| cat.sample(&mut rng)).collect(),
        direction: Direction::ALL.iter().map(|_| cat.sample(&mut rng)).collect(),
        structure: spec.structures.iter().map(|s| (s.clone(), cat.sample(&mut rng))).collect(),
    };
    let mut truth = GroundTruth {
        coefficients: k.clone(),
        effects,
        cities: BTreeMap::new(),
    };
    let mut records = BTreeMap::new();
    for (i, city) in spec.cities.iter().enumerate() {
        let mut rng = SeededRng::seed_from_u64(derive_seed(spec.seed, i as u64 + 1));
        let (city_truth, rows) = generate_city(city, spec, &mut rng);
        truth.cities.insert(city.name.clone(), city_truth);
        let rows = rows
            .into_iter()
            .map(|mut r| {
                let ln = truth.expected_log_price(&r).expect("known locations") + normal(spec.sigma_noise).sample(&mut rng);
                r.price = round2(ln.exp()).max(0.01);
                r
            })
            .collect();
        records.insert(city.name.clone(), rows);
    }
    Ok(Universe { records, truth })
}

fn generate_city(
    city: &CitySpec,
    spec: &UniverseSpec,
    rng: &mut SeededRng,
) -> (CityTruth, Vec<PropertyRecord>) {
    let districts: Vec<String> = (0..city.n_districts).map(|d| format!("{}-D{:02}", city.name, d + 1)).collect();
    let residences: Vec<String> = (0..city.n_residences).map(|r| format!("{}-R{:03}", city.name, r + 1)).collect();
    let d_noise = normal(spec.sigma_district);
    let r_noise = normal(spec.sigma_residence);
    let district: BTreeMap<String, f64> = districts.iter().map(|d| (d.clone(), d_noise.sample(rng))).collect();
    let residence: BTreeMap<String, f64> = residences.iter().map(|r| (r.clone(), r_noise.sample(rng))).collect();
    let residence_district: BTreeMap<String, String> = residences
        .iter()
        .enumerate()
        .map(|(j, r)| (r.clone(), districts[j % districts.len()].clone()))
        .collect();

    let area_dist = LogNormal::<f64>::new(4.451, 0.555).expect("constant parameters");
    let floor_dist = Gamma::<f64>::new(0.78, 5.6).expect("constant parameters");
    let year_dist = Normal::new(YEAR_REF.0, YEAR_REF.1).expect("constant parameters");
    let rows = (0..city.n_records)
        .map(|n| {
            // The first pass visits every residence so each one is present.
            let res = if n < residences.len() { n } else { rng.random_range(0..residences.len()) };
            let area = round2(area_dist.sample(rng).clamp(15.0, 2900.0));
            let floor = if rng.random_bool(0.03) {
                rng.random_range(-2..=0)
            } else {
                (1.0 + floor_dist.sample(rng)).round().min(40.0) as i32
            };
            let year = year_dist.sample(rng).round().clamp(1950.0, f64::from(REFERENCE_MAX_YEAR)) as i32;
            let bedroom = (area / 40.0).round().clamp(1.0, 6.0) as u8;
            PropertyRecord {
                city: city.name.clone(),
                district: residence_district[&residences[res]].clone(),
                residence: residences[res].clone(),
                year,
                building_type: BuildingType::ALL[rng.random_range(0..BuildingType::ALL.len())],
                price: 0.0,
                area,
                bedroom,
                livingroom: rng.random_range(1..=2),
                kitchen: 1,
                bathroom: 1 + u8::from(area > 120.0) + u8::from(area > 220.0),
                floor,
                structure: spec.structures[rng.random_range(0..spec.structures.len())].clone(),
                decoration: Decoration::ALL[rng.random_range(0..Decoration::ALL.len())],
                direction: Direction::ALL[rng.random_range(0..Direction::ALL.len())],
            }
        })
        .collect();
    (
        CityTruth {
            base_log_price: city.base_log_price,
            district,
            residence,
            residence_district,
        },
        rows,
    )
}
