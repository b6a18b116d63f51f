use super::{IngestError, RawRecord, COLUMNS};

/// A recoverable per-row problem found while parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseError {
    /// The row has a different number of cells than the header.
    BadArity {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// Parses CSV bytes with a header naming the 15 columns in any order.
///
/// Rows with the wrong number of cells become [`ParseError`]s; a header
/// problem or non-UTF-8 input fails the whole parse.
pub fn parse_records(input: &[u8]) -> Result<(Vec<RawRecord>, Vec<ParseError>), IngestError> {
    let text = std::str::from_utf8(input).map_err(|e| IngestError::NonUtf8 {
        byte_offset: e.valid_up_to(),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() == 1 && names[0].is_empty() {
        return Err(IngestError::MissingColumn(COLUMNS[0].to_string()));
    }
    // position in the file for each canonical column
    let mut slots = [0usize; 15];
    for (slot, column) in slots.iter_mut().zip(COLUMNS) {
        let hits: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| **n == column)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => *slot = *i,
            [] => return Err(IngestError::MissingColumn(column.to_string())),
            _ => return Err(IngestError::UnexpectedColumn(column.to_string())),
        }
    }
    if let Some(extra) = names.iter().find(|n| !COLUMNS.contains(n)) {
        return Err(IngestError::UnexpectedColumn(extra.to_string()));
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let cells = result.map_err(|e| IngestError::Csv(e.to_string()))?;
        if cells.len() != names.len() {
            errors.push(ParseError::BadArity {
                row,
                expected: names.len(),
                found: cells.len(),
            });
            continue;
        }
        let fields = slots.map(|i| {
            let v = cells[i].trim();
            (!v.is_empty()).then(|| v.to_string())
        });
        records.push(RawRecord { fields, row });
    }
    Ok((records, errors))
}
