use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Column names in canonical order.
pub const COLUMNS: [&str; 15] = [
    "city",
    "district",
    "residence",
    "year",
    "building_type",
    "price",
    "area",
    "bedroom",
    "livingroom",
    "kitchen",
    "bathroom",
    "floor",
    "structure",
    "decoration",
    "direction",
];

/// One CSV data row, fields in [`COLUMNS`] order. Blank cells are `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub fields: [Option<String>; 15],
    /// Zero-based data row index (the header is not counted).
    pub row: usize,
}

impl RawRecord {
    pub fn get(&self, column: &str) -> Option<&str> {
        let idx = COLUMNS.iter().position(|c| *c == column)?;
        self.fields[idx].as_deref()
    }
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            /// Every variant, in one-hot slot order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            /// Position of this variant within [`Self::ALL`].
            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = UnknownLabel;

            /// Exact label match, falling back to a case-insensitive one.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                Self::ALL
                    .iter()
                    .find(|v| v.label() == s)
                    .or_else(|| Self::ALL.iter().find(|v| v.label().eq_ignore_ascii_case(s)))
                    .copied()
                    .ok_or_else(|| UnknownLabel(s.to_string()))
            }
        }
    };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

label_enum!(
    BuildingType {
        Bungalow => "Bungalow",
        HighRise => "High-rise",
        HighLevel => "High-level",
        MultiStorey => "Multi-storey",
        EntireBlock => "Entire Block",
        SemiDetached => "Semi-detached House",
        Detached => "Detached House",
        Siheyuan => "Siheyuan",
    }
);

label_enum!(
    /// Ordered from no fit-out to luxury.
    Decoration {
        None => "None",
        Partial => "Partial",
        Simple => "Simple",
        MidRange => "Mid-range",
        Deluxe => "Deluxe",
        Luxury => "Luxury",
    }
);

label_enum!(
    Direction {
        North => "North",
        South => "South",
        East => "East",
        West => "West",
        NorthEast => "NorthEast",
        NorthWest => "NorthWest",
        SouthEast => "SouthEast",
        SouthWest => "SouthWest",
        NorthSouth => "NorthSouth",
        EastWest => "EastWest",
    }
);

/// A cleaned listing. Construct through [`crate::ingest::clean`] to get the
/// range guarantees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub city: String,
    pub district: String,
    pub residence: String,
    pub year: i32,
    pub building_type: BuildingType,
    /// Currency per square metre.
    pub price: f64,
    /// Square metres.
    pub area: f64,
    pub bedroom: u8,
    pub livingroom: u8,
    pub kitchen: u8,
    pub bathroom: u8,
    pub floor: i32,
    pub structure: String,
    pub decoration: Decoration,
    pub direction: Direction,
}

impl PropertyRecord {
    /// Field values as CSV cells, in [`COLUMNS`] order.
    pub fn to_cells(&self) -> [String; 15] {
        [
            self.city.clone(),
            self.district.clone(),
            self.residence.clone(),
            self.year.to_string(),
            self.building_type.label().to_string(),
            self.price.to_string(),
            self.area.to_string(),
            self.bedroom.to_string(),
            self.livingroom.to_string(),
            self.kitchen.to_string(),
            self.bathroom.to_string(),
            self.floor.to_string(),
            self.structure.clone(),
            self.decoration.label().to_string(),
            self.direction.label().to_string(),
        ]
    }

    pub fn to_raw(&self, row: usize) -> RawRecord {
        RawRecord {
            fields: self.to_cells().map(Some),
            row,
        }
    }
}
