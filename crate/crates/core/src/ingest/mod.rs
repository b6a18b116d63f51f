//! Listing CSV ingestion: parsing, validation, vocabularies and splits.

mod clean;
mod parse;
mod record;
mod split;
mod vocab;

pub use clean::{clean, clean_with, CleanBounds, CleanReport, DropCause, REFERENCE_MAX_YEAR};
pub use parse::{parse_records, ParseError};
pub use record::{
    BuildingType, Decoration, Direction, PropertyRecord, RawRecord, UnknownLabel, COLUMNS,
};
pub use split::{split_indices, split_train_test};
pub use vocab::{build_vocabulary, residence_districts, CityVocabulary, ResidenceConflict};

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("unexpected or duplicate column `{0}` in header")]
    UnexpectedColumn(String),
    #[error("input is not valid UTF-8 (first bad byte at offset {byte_offset})")]
    NonUtf8 { byte_offset: usize },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("no records")]
    EmptyInput,
    #[error("records span more than one city ({first}, {other})")]
    MixedCities { first: String, other: String },
}

/// Parses and cleans CSV bytes with the default bounds, returning the kept
/// records, the clean report and the rows that failed to parse.
pub fn load_records(input: &[u8]) -> Result<(Vec<PropertyRecord>, CleanReport, Vec<ParseError>), IngestError> {
    let (raws, errors) = parse_records(input)?;
    let (records, report) = clean(&raws);
    Ok((records, report, errors))
}

/// Writes records as CSV with the canonical header and column order.
pub fn write_csv<W: Write>(records: &[PropertyRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.to_cells())?;
    }
    w.flush()?;
    Ok(())
}
