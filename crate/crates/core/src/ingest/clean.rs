use std::str::FromStr;

use super::{PropertyRecord, RawRecord, COLUMNS};

/// Latest completion year seen in the reference market data; newer years are
/// accepted but counted in [`CleanReport::years_after_reference`].
pub const REFERENCE_MAX_YEAR: i32 = 2019;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DropCause {
    MissingField,
    Unparseable,
    OutOfRange,
    UnknownCategory,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CleanReport {
    pub input: usize,
    pub retained: usize,
    pub missing_field: usize,
    pub unparseable: usize,
    pub out_of_range: usize,
    pub unknown_category: usize,
    /// Retained records built after [`REFERENCE_MAX_YEAR`].
    pub years_after_reference: usize,
    /// `(row, cause, column)` for each dropped record.
    pub drops: Vec<(usize, DropCause, &'static str)>,
}

impl CleanReport {
    pub fn dropped(&self) -> usize {
        self.input - self.retained
    }

    pub fn count(&self, cause: DropCause) -> usize {
        match cause {
            DropCause::MissingField => self.missing_field,
            DropCause::Unparseable => self.unparseable,
            DropCause::OutOfRange => self.out_of_range,
            DropCause::UnknownCategory => self.unknown_category,
        }
    }
}

/// Value bounds applied by [`clean_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CleanBounds {
    pub min_year: i32,
    pub max_year: i32,
    pub min_area: f64,
    pub max_area: f64,
    pub max_bedroom: u8,
    pub max_livingroom: u8,
    pub max_kitchen: u8,
    pub max_bathroom: u8,
    pub min_floor: i32,
    pub max_floor: i32,
}

impl CleanBounds {
    pub fn with_max_year(max_year: i32) -> Self {
        Self {
            min_year: 1900,
            max_year,
            min_area: 10.0,
            max_area: 2900.0,
            max_bedroom: 9,
            max_livingroom: 7,
            max_kitchen: 5,
            max_bathroom: 9,
            min_floor: -10,
            max_floor: 63,
        }
    }
}

impl Default for CleanBounds {
    /// Year bound is the current calendar year plus one.
    fn default() -> Self {
        Self::with_max_year(current_year() + 1)
    }
}

fn current_year() -> i32 {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    civil_year(secs / 86_400)
}

/// Gregorian year of a day count since 1970-01-01.
fn civil_year(days: u64) -> i32 {
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    (yoe + era * 400 + i64::from(month <= 2)) as i32
}

/// Validates raw rows with the default bounds. See [`clean_with`].
pub fn clean(raws: &[RawRecord]) -> (Vec<PropertyRecord>, CleanReport) {
    clean_with(raws, &CleanBounds::default())
}

/// Keeps the rows whose every field is present, parses, lies within
/// `bounds` and names a known category. Order is preserved.
pub fn clean_with(raws: &[RawRecord], bounds: &CleanBounds) -> (Vec<PropertyRecord>, CleanReport) {
    let mut report = CleanReport {
        input: raws.len(),
        ..CleanReport::default()
    };
    let mut out = Vec::with_capacity(raws.len());
    for raw in raws {
        match convert(raw, bounds) {
            Ok(rec) => {
                if rec.year > REFERENCE_MAX_YEAR {
                    report.years_after_reference += 1;
                }
                out.push(rec);
            }
            Err((cause, column)) => {
                match cause {
                    DropCause::MissingField => report.missing_field += 1,
                    DropCause::Unparseable => report.unparseable += 1,
                    DropCause::OutOfRange => report.out_of_range += 1,
                    DropCause::UnknownCategory => report.unknown_category += 1,
                }
                report.drops.push((raw.row, cause, column));
            }
        }
    }
    report.retained = out.len();
    (out, report)
}

type Rejection = (DropCause, &'static str);

fn convert(raw: &RawRecord, b: &CleanBounds) -> Result<PropertyRecord, Rejection> {
    // A missing cell anywhere outranks any other problem in the row.
    if let Some(i) = raw.fields.iter().position(Option::is_none) {
        return Err((DropCause::MissingField, COLUMNS[i]));
    }
    let text = |i: usize| raw.fields[i].as_deref().expect("checked above");

    let year = int_in(text(3), "year", b.min_year as i64, b.max_year as i64)? as i32;
    let building_type = category(text(4), "building_type")?;
    let price = real(text(5), "price")?;
    if price <= 0.0 {
        return Err((DropCause::OutOfRange, "price"));
    }
    let area = real(text(6), "area")?;
    if !(b.min_area..=b.max_area).contains(&area) {
        return Err((DropCause::OutOfRange, "area"));
    }
    let bedroom = int_in(text(7), "bedroom", 0, b.max_bedroom.into())? as u8;
    let livingroom = int_in(text(8), "livingroom", 0, b.max_livingroom.into())? as u8;
    let kitchen = int_in(text(9), "kitchen", 0, b.max_kitchen.into())? as u8;
    let bathroom = int_in(text(10), "bathroom", 0, b.max_bathroom.into())? as u8;
    let floor = int_in(text(11), "floor", b.min_floor.into(), b.max_floor.into())? as i32;
    let decoration = category(text(13), "decoration")?;
    let direction = category(text(14), "direction")?;

    Ok(PropertyRecord {
        city: text(0).to_string(),
        district: text(1).to_string(),
        residence: text(2).to_string(),
        year,
        building_type,
        price,
        area,
        bedroom,
        livingroom,
        kitchen,
        bathroom,
        floor,
        structure: text(12).to_string(),
        decoration,
        direction,
    })
}

fn real(s: &str, column: &'static str) -> Result<f64, Rejection> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err((DropCause::Unparseable, column)),
    }
}

/// Integers may be written as `3` or `3.0`.
fn int_in(s: &str, column: &'static str, lo: i64, hi: i64) -> Result<i64, Rejection> {
    let v = match s.parse::<i64>() {
        Ok(v) => v,
        Err(_) => {
            let f = real(s, column)?;
            if f.fract() != 0.0 || f.abs() > 1e15 {
                return Err((DropCause::Unparseable, column));
            }
            f as i64
        }
    };
    if v < lo || v > hi {
        return Err((DropCause::OutOfRange, column));
    }
    Ok(v)
}

fn category<T: FromStr>(s: &str, column: &'static str) -> Result<T, Rejection> {
    s.parse::<T>()
        .map_err(|_| (DropCause::UnknownCategory, column))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BuildingType, Decoration, Direction};

    fn valid() -> PropertyRecord {
        PropertyRecord {
            city: "Beijing".into(),
            district: "Haidian".into(),
            residence: "Lake View".into(),
            year: 2004,
            building_type: BuildingType::MultiStorey,
            price: 61_250.0,
            area: 72.5,
            bedroom: 2,
            livingroom: 1,
            kitchen: 1,
            bathroom: 1,
            floor: 3,
            structure: "Flat".into(),
            decoration: Decoration::Simple,
            direction: Direction::SouthEast,
        }
    }

    fn with(column: &str, value: Option<&str>) -> RawRecord {
        let mut raw = valid().to_raw(0);
        let i = COLUMNS.iter().position(|c| *c == column).unwrap();
        raw.fields[i] = value.map(str::to_string);
        raw
    }

    #[test]
    fn valid_record_is_retained_unchanged() {
        let (out, report) = clean(&[valid().to_raw(0)]);
        assert_eq!(out, vec![valid()]);
        assert_eq!(report.retained, 1);
        assert!(report.drops.is_empty());
    }

    #[test]
    fn missing_decoration_is_dropped() {
        let (out, report) = clean(&[with("decoration", None)]);
        assert!(out.is_empty());
        assert_eq!(report.missing_field, 1);
        assert_eq!(report.drops, vec![(0, DropCause::MissingField, "decoration")]);
    }

    #[test]
    fn year_before_1900_is_out_of_range() {
        let (out, report) = clean(&[with("year", Some("1850"))]);
        assert!(out.is_empty());
        assert_eq!(report.count(DropCause::OutOfRange), 1);
    }

    #[test]
    fn each_cause_is_counted() {
        let raws = vec![
            with("price", Some("abc")),
            with("price", Some("0")),
            with("area", Some("9.5")),
            with("floor", Some("64")),
            with("floor", Some("-10")),
            with("bedroom", Some("2.5")),
            with("direction", Some("Up")),
            with("city", None),
            valid().to_raw(8),
        ];
        let (out, report) = clean(&raws);
        assert_eq!(out.len(), 2);
        assert_eq!(report.unparseable, 2);
        assert_eq!(report.out_of_range, 3);
        assert_eq!(report.unknown_category, 1);
        assert_eq!(report.missing_field, 1);
        assert_eq!(report.dropped(), 7);
    }

    #[test]
    fn newer_years_are_flagged_not_dropped() {
        let bounds = CleanBounds::with_max_year(2026);
        let (out, report) = clean_with(&[with("year", Some("2024"))], &bounds);
        assert_eq!(out.len(), 1);
        assert_eq!(report.years_after_reference, 1);
        let (out, _) = clean_with(&[with("year", Some("2027"))], &bounds);
        assert!(out.is_empty());
    }

    #[test]
    fn civil_year_conversion() {
        assert_eq!(civil_year(0), 1970);
        assert_eq!(civil_year(365), 1971);
        // 2000-02-29 and 2024-12-31
        assert_eq!(civil_year(11_016), 2000);
        assert_eq!(civil_year(20_088), 2024);
        assert_eq!(civil_year(20_089), 2025);
    }
}
