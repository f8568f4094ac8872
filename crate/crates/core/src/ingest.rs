//! Loading price series and aligning pairs of them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("I/O error reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    ParseError { row: usize, message: String },
    #[error("row {row}: value {value} is not a positive finite price")]
    NonPositiveValue { row: usize, value: f64 },
    #[error("row {row}: timestamp goes backwards")]
    NonMonotoneTimestamps { row: usize },
    #[error("row {row}: duplicate timestamp")]
    DuplicateTimestamp { row: usize },
    #[error("series `{0}` has no rows")]
    EmptySeries(String),
    #[error("series `{a}` and `{b}` share no time keys")]
    EmptyIntersection { a: String, b: String },
    #[error("timestamps and values differ in length ({timestamps} vs {values})")]
    LengthMismatch { timestamps: usize, values: usize },
}

/// Trading region. Exchanges close in the order Asia → Europe → North America
/// within one calendar day; `Other` is unordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Asia,
    Europe,
    NorthAmerica,
    Other,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Asia, Region::Europe, Region::NorthAmerica, Region::Other];

    fn session_rank(self) -> Option<u8> {
        match self {
            Region::Asia => Some(0),
            Region::Europe => Some(1),
            Region::NorthAmerica => Some(2),
            Region::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Asia => "Asia",
            Region::Europe => "Europe",
            Region::NorthAmerica => "NorthAmerica",
            Region::Other => "Other",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "asia" => Ok(Region::Asia),
            "europe" => Ok(Region::Europe),
            "northamerica" | "na" | "us" => Ok(Region::NorthAmerica),
            "other" => Ok(Region::Other),
            _ => Err(format!("unknown region `{s}`")),
        }
    }
}

/// Sample offset for the ordered pair: 1 when the source's exchanges close
/// strictly earlier in the day than the destination's, otherwise 0.
pub fn region_offset(src: Region, dst: Region) -> usize {
    match (src.session_rank(), dst.session_rank()) {
        (Some(s), Some(d)) if s < d => 1,
        _ => 0,
    }
}

/// Timestamped price samples for one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub id: String,
    pub region: Region,
    pub timestamps: Vec<NaiveDateTime>,
    pub values: Vec<f64>,
}

impl RawSeries {
    /// Builds a series, checking ordering and price validity.
    pub fn new(
        id: impl Into<String>,
        region: Region,
        timestamps: Vec<NaiveDateTime>,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        if timestamps.len() != values.len() {
            return Err(IngestError::LengthMismatch { timestamps: timestamps.len(), values: values.len() });
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(IngestError::DuplicateTimestamp { row: i + 1 });
            }
            if w[1] < w[0] {
                return Err(IngestError::NonMonotoneTimestamps { row: i + 1 });
            }
        }
        if let Some((row, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(IngestError::NonPositiveValue { row, value });
        }
        Ok(Self { id: id.into(), region, timestamps, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples whose time key satisfies `keep`, in order.
    pub fn filter_keys(&self, mut keep: impl FnMut(&NaiveDateTime) -> bool) -> RawSeries {
        let (timestamps, values) =
            self.timestamps.iter().zip(&self.values).filter(|(t, _)| keep(t)).map(|(t, v)| (*t, *v)).unzip();
        RawSeries { id: self.id.clone(), region: self.region, timestamps, values }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormat {
    /// `YYYY-MM-DD`.
    Date,
    /// ISO date and time, `T` or space separated, seconds optional.
    DateTime,
    /// Any chrono format string; date-only patterns are read as midnight.
    Custom(String),
}

impl TimeFormat {
    pub fn parse(&self, s: &str) -> Result<NaiveDateTime, String> {
        let s = s.trim();
        match self {
            TimeFormat::Date => NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
                .map_err(|e| format!("bad date `{s}`: {e}")),
            TimeFormat::DateTime => ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
                .ok_or_else(|| format!("bad datetime `{s}`")),
            TimeFormat::Custom(f) => NaiveDateTime::parse_from_str(s, f)
                .or_else(|_| NaiveDate::parse_from_str(s, f).map(|d| d.and_hms_opt(0, 0, 0).expect("midnight")))
                .map_err(|e| format!("`{s}` does not match `{f}`: {e}")),
        }
    }
}

/// Layout of a delimited price file with a header row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesFormat {
    pub delimiter: char,
    pub time_column: String,
    /// Price column; closing prices by default.
    pub value_column: String,
    pub time_format: TimeFormat,
}

impl Default for SeriesFormat {
    fn default() -> Self {
        Self { delimiter: ',', time_column: "date".into(), value_column: "close".into(), time_format: TimeFormat::Date }
    }
}

/// Reads one series. Row numbers in errors count data rows from 1.
pub fn load_series(path: &Path, id: &str, region: Region, format: &SeriesFormat) -> Result<RawSeries, IngestError> {
    let shown = path.display().to_string();
    if !path.exists() {
        return Err(IngestError::FileNotFound(shown));
    }
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io { path: shown.clone(), source })?;
    read_series(file, id, region, format)
}

pub fn read_series<R: std::io::Read>(
    reader: R,
    id: &str,
    region: Region,
    format: &SeriesFormat,
) -> Result<RawSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::ParseError { row: 0, message: e.to_string() })?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let time_col = column(&format.time_column)?;
    let value_col = column(&format.value_column)?;

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::ParseError { row, message: e.to_string() })?;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| IngestError::ParseError { row, message: format!("missing column {c}") })
        };
        let t = format.time_format.parse(field(time_col)?).map_err(|message| IngestError::ParseError { row, message })?;
        let raw = field(value_col)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| IngestError::ParseError { row, message: format!("bad number `{raw}`") })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(IngestError::NonPositiveValue { row, value: v });
        }
        if let Some(prev) = timestamps.last() {
            if t == *prev {
                return Err(IngestError::DuplicateTimestamp { row });
            }
            if t < *prev {
                return Err(IngestError::NonMonotoneTimestamps { row });
            }
        }
        timestamps.push(t);
        values.push(v);
    }
    if values.is_empty() {
        return Err(IngestError::EmptySeries(id.to_string()));
    }
    Ok(RawSeries { id: id.to_string(), region, timestamps, values })
}

/// Restricts both series to their common time keys.
pub fn intersect_dates(a: &RawSeries, b: &RawSeries) -> Result<(RawSeries, RawSeries), IngestError> {
    let mut ka = Vec::new();
    let mut kb = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a.timestamps[i].cmp(&b.timestamps[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                ka.push(i);
                kb.push(j);
                i += 1;
                j += 1;
            }
        }
    }
    if ka.is_empty() {
        return Err(IngestError::EmptyIntersection { a: a.id.clone(), b: b.id.clone() });
    }
    let pick = |s: &RawSeries, idx: &[usize]| RawSeries {
        id: s.id.clone(),
        region: s.region,
        timestamps: idx.iter().map(|&k| s.timestamps[k]).collect(),
        values: idx.iter().map(|&k| s.values[k]).collect(),
    };
    Ok((pick(a, &ka), pick(b, &kb)))
}

/// An ordered pair restricted to its shared calendar, with the source offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAlignment {
    pub src_id: String,
    pub dst_id: String,
    pub common_keys: Vec<NaiveDateTime>,
    pub src_values: Vec<f64>,
    pub dst_values: Vec<f64>,
    pub delta: usize,
}

impl PairAlignment {
    pub fn new(src: &RawSeries, dst: &RawSeries) -> Result<Self, IngestError> {
        let (s, d) = intersect_dates(src, dst)?;
        Ok(Self {
            src_id: src.id.clone(),
            dst_id: dst.id.clone(),
            common_keys: s.timestamps,
            src_values: s.values,
            dst_values: d.values,
            delta: region_offset(src.region, dst.region),
        })
    }

    pub fn len(&self) -> usize {
        self.common_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.common_keys.is_empty()
    }

    /// Sub-alignment over sample positions `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PairAlignment {
        PairAlignment {
            src_id: self.src_id.clone(),
            dst_id: self.dst_id.clone(),
            common_keys: self.common_keys[range.clone()].to_vec(),
            src_values: self.src_values[range.clone()].to_vec(),
            dst_values: self.dst_values[range].to_vec(),
            delta: self.delta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(d: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2016, 1, d).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn series(id: &str, days: &[u32]) -> RawSeries {
        RawSeries::new(id, Region::Other, days.iter().map(|&d| day(d)).collect(), days.iter().map(|&d| d as f64).collect())
            .unwrap()
    }

    fn parse(text: &str) -> Result<RawSeries, IngestError> {
        read_series(text.as_bytes(), "x", Region::Asia, &SeriesFormat::default())
    }

    #[test]
    fn parses_two_rows() {
        let s = parse("date,close\n2016-01-04,100.0\n2016-01-05,101.5\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values, vec![100.0, 101.5]);
        assert_eq!(s.timestamps[0], NaiveDate::from_ymd_opt(2016, 1, 4).unwrap().and_hms_opt(0, 0, 0).unwrap());
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            parse("date,close\n2016-01-04,100\n2016-01-04,101\n"),
            Err(IngestError::DuplicateTimestamp { row: 2 })
        ));
        assert!(matches!(
            parse("date,close\n2016-01-04,100\n2016-01-05,-3\n"),
            Err(IngestError::NonPositiveValue { row: 2, .. })
        ));
        assert!(matches!(
            parse("date,close\n2016-01-05,100\n2016-01-04,101\n"),
            Err(IngestError::NonMonotoneTimestamps { row: 2 })
        ));
        assert!(matches!(parse("date,close\n2016-01-04,abc\n"), Err(IngestError::ParseError { row: 1, .. })));
        assert!(matches!(parse("date,close\nnot-a-date,1\n"), Err(IngestError::ParseError { row: 1, .. })));
        assert!(matches!(parse("when,close\n2016-01-04,1\n"), Err(IngestError::MissingColumn(_))));
        assert!(matches!(parse("date,close\n"), Err(IngestError::EmptySeries(_))));
    }

    #[test]
    fn configurable_layout() {
        let fmt = SeriesFormat {
            delimiter: ';',
            time_column: "Time".into(),
            value_column: "Open".into(),
            time_format: TimeFormat::DateTime,
        };
        let text = "Time;Open;Close\n2016-03-01 09:00;10;11\n2016-03-01T09:01:00;12;13\n";
        let s = read_series(text.as_bytes(), "fx", Region::Europe, &fmt).unwrap();
        assert_eq!(s.values, vec![10.0, 12.0]);
        let custom = TimeFormat::Custom("%d/%m/%Y".into());
        assert_eq!(custom.parse("04/01/2016").unwrap(), day(4));
    }

    #[test]
    fn missing_file() {
        let err = load_series(Path::new("/nonexistent/x.csv"), "x", Region::Asia, &SeriesFormat::default());
        assert!(matches!(err, Err(IngestError::FileNotFound(_))));
    }

    #[test]
    fn intersection_examples() {
        let a = series("a", &[1, 2, 3]);
        let b = series("b", &[2, 3, 4]);
        let (x, y) = intersect_dates(&a, &b).unwrap();
        assert_eq!(x.timestamps, vec![day(2), day(3)]);
        assert_eq!(y.timestamps, x.timestamps);
        assert_eq!(x.values, vec![2.0, 3.0]);

        let (x, y) = intersect_dates(&a, &a).unwrap();
        assert_eq!((x, y), (a.clone(), a.clone()));

        let c = series("c", &[5, 6]);
        assert!(matches!(intersect_dates(&a, &c), Err(IngestError::EmptyIntersection { .. })));
    }

    #[test]
    fn offsets_follow_session_order() {
        use Region::*;
        assert_eq!(region_offset(Asia, NorthAmerica), 1);
        assert_eq!(region_offset(Asia, Europe), 1);
        assert_eq!(region_offset(Europe, NorthAmerica), 1);
        assert_eq!(region_offset(NorthAmerica, Asia), 0);
        assert_eq!(region_offset(Europe, Europe), 0);
        assert_eq!(region_offset(Other, NorthAmerica), 0);
        assert_eq!(region_offset(Asia, Other), 0);
        for a in Region::ALL {
            assert_eq!(region_offset(a, a), 0);
            for b in Region::ALL {
                assert!(region_offset(a, b) + region_offset(b, a) <= 1);
            }
        }
    }

    #[test]
    fn region_names() {
        assert_eq!("north_america".parse::<Region>().unwrap(), Region::NorthAmerica);
        assert_eq!("Asia".parse::<Region>().unwrap(), Region::Asia);
        assert!("mars".parse::<Region>().is_err());
    }

    #[test]
    fn alignment_carries_offset() {
        let a = RawSeries { region: Region::Asia, ..series("a", &[1, 2, 3]) };
        let u = RawSeries { region: Region::NorthAmerica, ..series("u", &[2, 3]) };
        let p = PairAlignment::new(&a, &u).unwrap();
        assert_eq!(p.delta, 1);
        assert_eq!(p.src_values, vec![2.0, 3.0]);
        assert_eq!(PairAlignment::new(&u, &a).unwrap().delta, 0);
    }

    fn day_sets() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
        let set = prop::collection::btree_set(1u32..=31, 1..20).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (set.clone(), set)
    }

    proptest! {
        #[test]
        fn intersection_is_symmetric_and_bounded((da, db) in day_sets()) {
            let a = series("a", &da);
            let b = series("b", &db);
            match (intersect_dates(&a, &b), intersect_dates(&b, &a)) {
                (Ok((a1, b1)), Ok((b2, a2))) => {
                    prop_assert_eq!(&a1, &a2);
                    prop_assert_eq!(&b1, &b2);
                    prop_assert_eq!(&a1.timestamps, &b1.timestamps);
                    prop_assert!(a1.len() <= a.len().min(b.len()));
                    prop_assert!(a1.timestamps.iter().all(|t| a.timestamps.contains(t) && b.timestamps.contains(t)));
                }
                (Err(_), Err(_)) => prop_assert!(da.iter().all(|d| !db.contains(d))),
                _ => prop_assert!(false, "asymmetric result"),
            }
        }
    }
}
