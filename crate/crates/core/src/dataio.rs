//! Ingestion of the Beijing multi-site air-quality CSV files and the
//! preprocessing chain that turns one station-year into a regression problem:
//! missing-value accounting, mode imputation, feature encoding,
//! standardization and a seeded train/test split.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cannot parse {column} value {value:?}")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("no records for year {0}")]
    EmptyYear(i32),
    #[error("{parameter} has no observed value in year {year}; cannot impute")]
    AllMissing { parameter: &'static str, year: i32 },
    #[error("row {row}: {parameter} is missing; impute before encoding")]
    MissingValue { row: usize, parameter: &'static str },
    #[error("row {row}: unknown wind direction {value:?}")]
    UnknownWindDirection { row: usize, value: String },
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("split of {n} rows at ratio {ratio} leaves an empty partition")]
    EmptyPartition { n: usize, ratio: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Observed columns that may be missing in the raw file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parameter {
    Pm25,
    Pm10,
    So2,
    No2,
    Co,
    O3,
    Temp,
    Pres,
    Dewp,
    Rain,
    Wd,
    Wspm,
}

impl Parameter {
    pub const ALL: [Parameter; 12] = [
        Parameter::Pm25,
        Parameter::Pm10,
        Parameter::So2,
        Parameter::No2,
        Parameter::Co,
        Parameter::O3,
        Parameter::Temp,
        Parameter::Pres,
        Parameter::Dewp,
        Parameter::Rain,
        Parameter::Wd,
        Parameter::Wspm,
    ];

    /// Column name as it appears in the UCI header.
    pub fn column_name(self) -> &'static str {
        match self {
            Parameter::Pm25 => "PM2.5",
            Parameter::Pm10 => "PM10",
            Parameter::So2 => "SO2",
            Parameter::No2 => "NO2",
            Parameter::Co => "CO",
            Parameter::O3 => "O3",
            Parameter::Temp => "TEMP",
            Parameter::Pres => "PRES",
            Parameter::Dewp => "DEWP",
            Parameter::Rain => "RAIN",
            Parameter::Wd => "wd",
            Parameter::Wspm => "WSPM",
        }
    }

    pub fn is_numeric(self) -> bool {
        self != Parameter::Wd
    }
}

/// One hourly observation. Missing cells are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    /// Zero-based position among the data rows of the source file.
    pub row_index: usize,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub pm25: Option<f64>,
    pub pm10: Option<f64>,
    pub so2: Option<f64>,
    pub no2: Option<f64>,
    pub co: Option<f64>,
    pub o3: Option<f64>,
    pub temp: Option<f64>,
    pub pres: Option<f64>,
    pub dewp: Option<f64>,
    pub rain: Option<f64>,
    pub wd: Option<String>,
    pub wspm: Option<f64>,
    pub station: String,
}

impl RawRecord {
    fn numeric_slot(&mut self, p: Parameter) -> Option<&mut Option<f64>> {
        Some(match p {
            Parameter::Pm25 => &mut self.pm25,
            Parameter::Pm10 => &mut self.pm10,
            Parameter::So2 => &mut self.so2,
            Parameter::No2 => &mut self.no2,
            Parameter::Co => &mut self.co,
            Parameter::O3 => &mut self.o3,
            Parameter::Temp => &mut self.temp,
            Parameter::Pres => &mut self.pres,
            Parameter::Dewp => &mut self.dewp,
            Parameter::Rain => &mut self.rain,
            Parameter::Wspm => &mut self.wspm,
            Parameter::Wd => return None,
        })
    }

    /// Value of a numeric parameter; `None` for missing cells and for `Wd`.
    pub fn numeric(&self, p: Parameter) -> Option<f64> {
        match p {
            Parameter::Pm25 => self.pm25,
            Parameter::Pm10 => self.pm10,
            Parameter::So2 => self.so2,
            Parameter::No2 => self.no2,
            Parameter::Co => self.co,
            Parameter::O3 => self.o3,
            Parameter::Temp => self.temp,
            Parameter::Pres => self.pres,
            Parameter::Dewp => self.dewp,
            Parameter::Rain => self.rain,
            Parameter::Wspm => self.wspm,
            Parameter::Wd => None,
        }
    }

    pub fn is_missing(&self, p: Parameter) -> bool {
        match p {
            Parameter::Wd => self.wd.is_none(),
            _ => self.numeric(p).is_none(),
        }
    }

    pub fn timestamp(&self) -> (i32, u32, u32, u32) {
        (self.year, self.month, self.day, self.hour)
    }
}

/// How a "year" of records is cut out of the multi-year file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YearWindow {
    /// Rows whose `year` column equals the requested year.
    Calendar,
    /// Twelve months starting 1 March 00:00 of the requested year, with the
    /// closing hour (1 March 00:00 of the next year) included: 8761 hourly
    /// rows in a non-leap span.
    #[default]
    MarchToMarch,
}

impl YearWindow {
    pub fn contains(self, year: i32, record: &RawRecord) -> bool {
        match self {
            YearWindow::Calendar => record.year == year,
            YearWindow::MarchToMarch => {
                let ts = record.timestamp();
                ts >= (year, 3, 1, 0) && ts <= (year + 1, 3, 1, 0)
            }
        }
    }
}

pub fn select_year(records: &[RawRecord], year: i32, window: YearWindow) -> Vec<&RawRecord> {
    records
        .iter()
        .filter(|r| window.contains(year, r))
        .collect()
}

const INDEX_COLUMNS: [&str; 6] = ["No", "year", "month", "day", "hour", "station"];

struct ColumnMap {
    width: usize,
    no: usize,
    year: usize,
    month: usize,
    day: usize,
    hour: usize,
    station: usize,
    params: [usize; 12],
}

impl ColumnMap {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let find = |name: &'static str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or(DataError::MissingColumn(name))
        };
        let mut idx = [0usize; 6];
        for (slot, name) in idx.iter_mut().zip(INDEX_COLUMNS) {
            *slot = find(name)?;
        }
        let mut params = [0usize; 12];
        for (slot, p) in params.iter_mut().zip(Parameter::ALL) {
            *slot = find(p.column_name())?;
        }
        Ok(Self {
            width: header.len(),
            no: idx[0],
            year: idx[1],
            month: idx[2],
            day: idx[3],
            hour: idx[4],
            station: idx[5],
            params,
        })
    }
}

fn is_missing_marker(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("NA")
}

fn parse_int(row: usize, column: &'static str, cell: &str) -> Result<i64> {
    cell.trim().parse::<i64>().map_err(|_| DataError::Parse {
        row,
        column,
        value: cell.to_string(),
    })
}

fn parse_bounded(row: usize, column: &'static str, cell: &str, lo: i64, hi: i64) -> Result<u32> {
    let v = parse_int(row, column, cell)?;
    if (lo..=hi).contains(&v) {
        Ok(v as u32)
    } else {
        Err(DataError::Parse {
            row,
            column,
            value: cell.to_string(),
        })
    }
}

fn parse_optional(row: usize, column: &'static str, cell: &str) -> Result<Option<f64>> {
    if is_missing_marker(cell) {
        return Ok(None);
    }
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(DataError::Parse {
            row,
            column,
            value: cell.to_string(),
        }),
    }
}

/// Parses UCI-format records from any reader. Columns are located by header
/// name; every data row must have as many cells as the header.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let map = ColumnMap::from_header(rdr.headers()?)?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != map.width {
            return Err(DataError::ColumnCount {
                row,
                expected: map.width,
                found: rec.len(),
            });
        }
        // The "No" column is validated but the position in the file is what
        // identifies a row.
        parse_int(row, "No", &rec[map.no])?;
        let year = parse_int(row, "year", &rec[map.year])?;
        let year = i32::try_from(year).map_err(|_| DataError::Parse {
            row,
            column: "year",
            value: rec[map.year].to_string(),
        })?;
        let month = parse_bounded(row, "month", &rec[map.month], 1, 12)?;
        let day = parse_bounded(row, "day", &rec[map.day], 1, 31)?;
        let hour = parse_bounded(row, "hour", &rec[map.hour], 0, 23)?;

        let mut record = RawRecord {
            row_index: row,
            year,
            month,
            day,
            hour,
            pm25: None,
            pm10: None,
            so2: None,
            no2: None,
            co: None,
            o3: None,
            temp: None,
            pres: None,
            dewp: None,
            rain: None,
            wd: None,
            wspm: None,
            station: rec[map.station].trim().to_string(),
        };
        for (&col, p) in map.params.iter().zip(Parameter::ALL) {
            let cell = &rec[col];
            if p == Parameter::Wd {
                if !is_missing_marker(cell) {
                    record.wd = Some(cell.trim().to_string());
                }
            } else if let Some(slot) = record.numeric_slot(p) {
                *slot = parse_optional(row, p.column_name(), cell)?;
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_records(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingEntry {
    pub parameter: String,
    pub count: usize,
    pub fraction: f64,
}

/// Per-parameter missing counts for one year of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingReport {
    pub year: i32,
    pub window: YearWindow,
    pub total_rows: usize,
    pub entries: Vec<MissingEntry>,
}

impl MissingReport {
    pub fn get(&self, parameter: Parameter) -> Option<&MissingEntry> {
        self.entries
            .iter()
            .find(|e| e.parameter == parameter.column_name())
    }
}

pub fn count_missing(
    records: &[RawRecord],
    year: i32,
    window: YearWindow,
) -> Result<MissingReport> {
    let rows = select_year(records, year, window);
    if rows.is_empty() {
        return Err(DataError::EmptyYear(year));
    }
    let total = rows.len();
    let entries = Parameter::ALL
        .iter()
        .map(|&p| {
            let count = rows.iter().filter(|r| r.is_missing(p)).count();
            MissingEntry {
                parameter: p.column_name().to_string(),
                count,
                fraction: count as f64 / total as f64,
            }
        })
        .collect();
    Ok(MissingReport {
        year,
        window,
        total_rows: total,
        entries,
    })
}

/// Most frequent value; ties go to the smallest value.
pub fn numeric_mode(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let mut best: Option<(f64, usize)> = None;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let run = j - i;
        if best.is_none_or(|(_, n)| run > n) {
            best = Some((v[i], run));
        }
        i = j;
    }
    best.map(|(value, _)| value)
}

/// Most frequent string; ties go to the lexicographically first.
pub fn categorical_mode<'a>(values: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (k, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((k, n));
        }
    }
    best.map(|(k, _)| k.to_string())
}

/// Returns the records of `year` with every missing cell replaced by that
/// year's mode of the column. Observed cells are never touched.
pub fn impute_mode(records: &[RawRecord], year: i32, window: YearWindow) -> Result<Vec<RawRecord>> {
    let mut rows: Vec<RawRecord> = select_year(records, year, window)
        .into_iter()
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(DataError::EmptyYear(year));
    }
    for p in Parameter::ALL {
        if !rows.iter().any(|r| r.is_missing(p)) {
            continue;
        }
        if p == Parameter::Wd {
            let mode = categorical_mode(rows.iter().filter_map(|r| r.wd.as_deref())).ok_or(
                DataError::AllMissing {
                    parameter: p.column_name(),
                    year,
                },
            )?;
            for r in rows.iter_mut().filter(|r| r.wd.is_none()) {
                r.wd = Some(mode.clone());
            }
        } else {
            let mode = numeric_mode(rows.iter().filter_map(|r| r.numeric(p))).ok_or(
                DataError::AllMissing {
                    parameter: p.column_name(),
                    year,
                },
            )?;
            for r in rows.iter_mut() {
                if let Some(slot) = r.numeric_slot(p) {
                    slot.get_or_insert(mode);
                }
            }
        }
    }
    Ok(rows)
}

const COMPASS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW",
    "NNW",
];

/// Bearing in degrees of a 16-point compass direction (N = 0, E = 90).
pub fn wind_direction_degrees(dir: &str) -> Option<f64> {
    COMPASS
        .iter()
        .position(|&c| c == dir)
        .map(|k| k as f64 * 22.5)
}

pub const FEATURE_NAMES: [&str; 12] = [
    "PM10", "SO2", "NO2", "CO", "O3", "TEMP", "PRES", "DEWP", "RAIN", "WSPM", "wd_sin", "wd_cos",
];
pub const TARGET_NAME: &str = "PM2.5";

const FEATURE_PARAMETERS: [Parameter; 10] = [
    Parameter::Pm10,
    Parameter::So2,
    Parameter::No2,
    Parameter::Co,
    Parameter::O3,
    Parameter::Temp,
    Parameter::Pres,
    Parameter::Dewp,
    Parameter::Rain,
    Parameter::Wspm,
];

/// Row-major numeric design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(DataError::Shape(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        if names.len() != n_cols {
            return Err(DataError::Shape(format!(
                "{} names for {n_cols} columns",
                names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Shape("non-finite entry".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
            names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let n_cols = names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(DataError::Shape(format!(
                "row of length {} in a {n_cols}-column matrix",
                bad.len()
            )));
        }
        Self::new(rows.len(), n_cols, rows.concat(), names)
    }

    /// Empty matrix with the given column names.
    pub fn empty(names: Vec<String>) -> Self {
        Self {
            n_rows: 0,
            n_cols: names.len(),
            values: Vec::new(),
            names,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.n_rows).map(move |i| self.get(i, j))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            values,
            names: self.names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetVector(pub Vec<f64>);

impl TargetVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<Vec<f64>> for TargetVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Row-aligned features and target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: FeatureMatrix,
    pub y: TargetVector,
}

impl Dataset {
    pub fn new(x: FeatureMatrix, y: TargetVector) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(DataError::Shape(format!(
                "{} feature rows vs {} targets",
                x.n_rows(),
                y.len()
            )));
        }
        if y.0.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Shape("non-finite target".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: self.y.select(indices),
        }
    }
}

/// Builds the 12-column feature matrix and the PM2.5 target from fully
/// imputed records. Wind direction becomes `(sin, cos)` of its bearing.
pub fn encode_features(records: &[RawRecord]) -> Result<(FeatureMatrix, TargetVector)> {
    let mut values = Vec::with_capacity(records.len() * FEATURE_NAMES.len());
    let mut target = Vec::with_capacity(records.len());
    for r in records {
        let require = |p: Parameter| {
            r.numeric(p).ok_or(DataError::MissingValue {
                row: r.row_index,
                parameter: p.column_name(),
            })
        };
        target.push(require(Parameter::Pm25)?);
        for p in FEATURE_PARAMETERS {
            values.push(require(p)?);
        }
        let wd = r.wd.as_deref().ok_or(DataError::MissingValue {
            row: r.row_index,
            parameter: "wd",
        })?;
        let degrees =
            wind_direction_degrees(wd).ok_or_else(|| DataError::UnknownWindDirection {
                row: r.row_index,
                value: wd.to_string(),
            })?;
        let (s, c) = degrees.to_radians().sin_cos();
        values.push(s);
        values.push(c);
    }
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let x = FeatureMatrix::new(records.len(), FEATURE_NAMES.len(), values, names)?;
    Ok((x, TargetVector(target)))
}

/// Column means and population standard deviations used for z-scoring.
/// Constant columns are recorded with `std = 1` and map to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for v in values.clone() {
        n += 1;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    if n == 0 {
        return (0.0, 1.0);
    }
    if min == max {
        return (min, 1.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std > 0.0 {
        (mean, std)
    } else {
        (mean, 1.0)
    }
}

impl ScalerParams {
    pub fn fit(x: &FeatureMatrix, y: &TargetVector) -> Self {
        let (feature_mean, feature_std) = (0..x.n_cols()).map(|j| mean_std(x.column(j))).unzip();
        let (target_mean, target_std) = mean_std(y.0.iter().copied());
        Self {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        }
    }

    pub fn transform_features(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_width(x)?;
        let cols = x.n_cols();
        let values = x
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.feature_mean[k % cols]) / self.feature_std[k % cols])
            .collect();
        FeatureMatrix::new(x.n_rows(), cols, values, x.names().to_vec())
    }

    pub fn inverse_features(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_width(x)?;
        let cols = x.n_cols();
        let values = x
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.feature_std[k % cols] + self.feature_mean[k % cols])
            .collect();
        FeatureMatrix::new(x.n_rows(), cols, values, x.names().to_vec())
    }

    pub fn transform_target(&self, y: &TargetVector) -> TargetVector {
        TargetVector(
            y.0.iter()
                .map(|v| (v - self.target_mean) / self.target_std)
                .collect(),
        )
    }

    pub fn inverse_target(&self, y: &TargetVector) -> TargetVector {
        TargetVector(
            y.0.iter()
                .map(|v| v * self.target_std + self.target_mean)
                .collect(),
        )
    }

    fn check_width(&self, x: &FeatureMatrix) -> Result<()> {
        if x.n_cols() != self.feature_mean.len() {
            return Err(DataError::Shape(format!(
                "scaler fitted on {} columns, matrix has {}",
                self.feature_mean.len(),
                x.n_cols()
            )));
        }
        Ok(())
    }
}

/// Z-scores every feature column and the target with population statistics.
pub fn standardize(
    x: &FeatureMatrix,
    y: &TargetVector,
) -> Result<(FeatureMatrix, TargetVector, ScalerParams)> {
    if x.n_rows() != y.len() {
        return Err(DataError::Shape(format!(
            "{} feature rows vs {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(DataError::TooFewRows {
            needed: 2,
            found: x.n_rows(),
        });
    }
    let scaler = ScalerParams::fit(x, y);
    let xs = scaler.transform_features(x)?;
    let ys = scaler.transform_target(y);
    Ok((xs, ys, scaler))
}

pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;

/// Shuffles `0..n` with a seeded generator and cuts it into
/// `floor(ratio * n)` training indices and the remainder.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    // the small bias absorbs representation error such as 0.7 * 10 = 6.999...
    let n_train = (ratio * n as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DataError::EmptyPartition { n, ratio });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(
    x: &FeatureMatrix,
    y: &TargetVector,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let data = Dataset::new(x.clone(), y.clone())?;
    let (train, test) = split_indices(data.len(), ratio, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Seeded sample of `n` rows without replacement, original order kept.
/// Returns the dataset unchanged when `n >= len`.
pub fn subsample(data: &Dataset, n: usize, seed: u64) -> Dataset {
    if n >= data.len() {
        return data.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, data.len(), n).into_vec();
    idx.sort_unstable();
    data.select(&idx)
}

/// Writes a processed dataset: feature columns followed by the target.
pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.x.names().iter().map(String::as_str).collect();
    header.push(TARGET_NAME);
    w.write_record(&header)?;
    let mut cells = Vec::with_capacity(header.len());
    for (row, target) in data.x.rows().zip(&data.y.0) {
        cells.clear();
        cells.extend(row.iter().map(|v| v.to_string()));
        cells.push(target.to_string());
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. The last column is the target.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(DataError::Shape(
            "dataset needs a feature and a target column".into(),
        ));
    }
    let n_cols = header.len() - 1;
    let names: Vec<String> = header.iter().take(n_cols).map(str::to_string).collect();
    let mut values = Vec::new();
    let mut target = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| DataError::Parse {
                row,
                column: "dataset cell",
                value: cell.to_string(),
            })?;
            if j < n_cols {
                values.push(v);
            } else {
                target.push(v);
            }
        }
    }
    let x = FeatureMatrix::new(target.len(), n_cols, values, names)?;
    Dataset::new(x, TargetVector(target))
}

pub fn write_dataset_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_dataset(std::io::BufWriter::new(file), data)
}

pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "\"No\",\"year\",\"month\",\"day\",\"hour\",\"PM2.5\",\"PM10\",\"SO2\",\"NO2\",\"CO\",\"O3\",\"TEMP\",\"PRES\",\"DEWP\",\"RAIN\",\"wd\",\"WSPM\",\"station\"";

    fn parse(body: &str) -> Result<Vec<RawRecord>> {
        read_records(format!("{HEADER}\n{body}").as_bytes())
    }

    fn record(year: i32, month: u32, day: u32, hour: u32) -> RawRecord {
        RawRecord {
            row_index: 0,
            year,
            month,
            day,
            hour,
            pm25: Some(10.0),
            pm10: Some(20.0),
            so2: Some(3.0),
            no2: Some(30.0),
            co: Some(500.0),
            o3: Some(40.0),
            temp: Some(5.0),
            pres: Some(1020.0),
            dewp: Some(-10.0),
            rain: Some(0.0),
            wd: Some("N".into()),
            wspm: Some(2.0),
            station: "Aotizhongxin".into(),
        }
    }

    #[test]
    fn parses_first_row_layout() {
        let recs = parse(
            "1,2013,3,1,0,4,4,4,7,300,77,-0.7,1023,-18.8,0,NNW,4.4,Aotizhongxin\n\
             2,2013,3,1,1,NA,8,4,7,300,77,-1.1,1023.2,-18.2,0,N,4.7,Aotizhongxin",
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        let r = &recs[0];
        assert_eq!((r.year, r.month, r.day, r.hour), (2013, 3, 1, 0));
        assert_eq!(r.pm25, Some(4.0));
        assert_eq!(r.temp, Some(-0.7));
        assert_eq!(r.wd.as_deref(), Some("NNW"));
        assert_eq!(r.station, "Aotizhongxin");
        assert_eq!(recs[1].pm25, None);
        assert_eq!(recs[1].row_index, 1);
    }

    #[test]
    fn short_row_is_rejected_with_its_index() {
        let err = parse(
            "1,2013,3,1,0,4,4,4,7,300,77,-0.7,1023,-18.8,0,NNW,4.4,Aotizhongxin\n\
             2,2013,3,1,1,5",
        )
        .unwrap_err();
        match err {
            DataError::ColumnCount {
                row,
                expected,
                found,
            } => assert_eq!((row, expected, found), (1, 18, 6)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_is_rejected() {
        let err = parse("1,2013,3,1,0,four,4,4,7,300,77,-0.7,1023,-18.8,0,NNW,4.4,A").unwrap_err();
        assert!(matches!(
            err,
            DataError::Parse {
                row: 0,
                column: "PM2.5",
                ..
            }
        ));
        let err = parse("1,2013,3,1,24,4,4,4,7,300,77,-0.7,1023,-18.8,0,NNW,4.4,A").unwrap_err();
        assert!(matches!(err, DataError::Parse { column: "hour", .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv("/definitely/not/here.csv"),
            Err(DataError::Io { .. })
        ));
    }

    #[test]
    fn march_window_includes_both_endpoint_hours() {
        let w = YearWindow::MarchToMarch;
        assert!(w.contains(2013, &record(2013, 3, 1, 0)));
        assert!(w.contains(2013, &record(2014, 3, 1, 0)));
        assert!(!w.contains(2013, &record(2014, 3, 1, 1)));
        assert!(!w.contains(2013, &record(2013, 2, 28, 23)));
        assert!(w.contains(2014, &record(2014, 3, 1, 0)));
        assert!(!YearWindow::Calendar.contains(2013, &record(2014, 1, 1, 0)));
    }

    #[test]
    fn count_missing_on_synthetic_rows() {
        let mut rows: Vec<RawRecord> = (0..10).map(|h| record(2013, 6, 1, h)).collect();
        for r in rows.iter_mut().take(3) {
            r.co = None;
        }
        let rep = count_missing(&rows, 2013, YearWindow::Calendar).unwrap();
        assert_eq!(rep.total_rows, 10);
        let co = rep.get(Parameter::Co).unwrap();
        assert_eq!(co.count, 3);
        assert_eq!(co.fraction, 0.3);
        assert_eq!(rep.get(Parameter::Pm25).unwrap().count, 0);
        assert!(matches!(
            count_missing(&rows, 1999, YearWindow::Calendar),
            Err(DataError::EmptyYear(1999))
        ));
    }

    #[test]
    fn numeric_mode_rules() {
        assert_eq!(numeric_mode([1.0, 2.0, 2.0]), Some(2.0));
        assert_eq!(numeric_mode([2.0, 2.0, 1.0, 1.0]), Some(1.0));
        assert_eq!(numeric_mode([3.5]), Some(3.5));
        assert_eq!(numeric_mode(std::iter::empty()), None);
        assert_eq!(
            categorical_mode(["NW", "E", "NW", "E", "S"]),
            Some("E".into())
        );
    }

    #[test]
    fn impute_fills_with_mode_and_keeps_observed() {
        let mut rows: Vec<RawRecord> = (0..5).map(|h| record(2013, 6, 1, h)).collect();
        let pm: [Option<f64>; 5] = [Some(1.0), Some(1.0), Some(2.0), Some(2.0), None];
        for (r, v) in rows.iter_mut().zip(pm) {
            r.pm25 = v;
        }
        rows[0].wd = None;
        rows[1].wd = Some("E".into());
        let out = impute_mode(&rows, 2013, YearWindow::Calendar).unwrap();
        let filled: Vec<f64> = out.iter().map(|r| r.pm25.unwrap()).collect();
        assert_eq!(filled, vec![1.0, 1.0, 2.0, 2.0, 1.0]);
        // N appears 3 times among observed directions, E once
        assert_eq!(out[0].wd.as_deref(), Some("N"));
        for p in Parameter::ALL {
            assert!(out.iter().all(|r| !r.is_missing(p)));
        }
    }

    #[test]
    fn impute_without_gaps_is_identity() {
        let rows: Vec<RawRecord> = (0..4).map(|h| record(2013, 6, 1, h)).collect();
        assert_eq!(
            impute_mode(&rows, 2013, YearWindow::Calendar).unwrap(),
            rows
        );
    }

    #[test]
    fn impute_all_missing_names_parameter() {
        let mut rows: Vec<RawRecord> = (0..3).map(|h| record(2013, 6, 1, h)).collect();
        for r in &mut rows {
            r.o3 = None;
        }
        match impute_mode(&rows, 2013, YearWindow::Calendar) {
            Err(DataError::AllMissing { parameter, year }) => {
                assert_eq!((parameter, year), ("O3", 2013))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wind_encoding() {
        let mut a = record(2013, 6, 1, 0);
        a.wd = Some("N".into());
        let mut b = record(2013, 6, 1, 1);
        b.wd = Some("E".into());
        let (x, y) = encode_features(&[a, b]).unwrap();
        assert_eq!((x.n_rows(), x.n_cols()), (2, 12));
        assert_eq!(y.len(), 2);
        assert!((x.get(0, 10) - 0.0).abs() < 1e-12 && (x.get(0, 11) - 1.0).abs() < 1e-12);
        assert!((x.get(1, 10) - 1.0).abs() < 1e-12 && x.get(1, 11).abs() < 1e-12);

        let mut c = record(2013, 6, 1, 2);
        c.wd = Some("CALM".into());
        assert!(matches!(
            encode_features(&[c]),
            Err(DataError::UnknownWindDirection { .. })
        ));
        let mut d = record(2013, 6, 1, 3);
        d.so2 = None;
        assert!(matches!(
            encode_features(&[d]),
            Err(DataError::MissingValue {
                parameter: "SO2",
                ..
            })
        ));
    }

    #[test]
    fn standardize_examples() {
        let x = FeatureMatrix::from_rows(
            &[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let y = TargetVector(vec![1.0, 2.0, 3.0]);
        let (xs, ys, scaler) = standardize(&x, &y).unwrap();
        let expected = 1.224744871391589;
        assert!((xs.get(0, 0) + expected).abs() < 1e-6);
        assert_eq!(xs.get(1, 0), 0.0);
        assert!((xs.get(2, 0) - expected).abs() < 1e-6);
        assert!(xs.column(1).all(|v| v == 0.0));
        assert_eq!(scaler.feature_std[1], 1.0);
        assert!((ys.0[2] - expected).abs() < 1e-6);

        let back = scaler.inverse_features(&xs).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        assert!(standardize(&x.select_rows(&[0]), &y.select(&[0])).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let (tr, te) = split_indices(10, 0.8, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split_indices(10, 0.8, 7).unwrap(), (tr, te));
        assert!(matches!(
            split_indices(10, 1.0, 0),
            Err(DataError::InvalidRatio(_))
        ));
        assert!(matches!(
            split_indices(10, 0.0, 0),
            Err(DataError::InvalidRatio(_))
        ));
        assert!(matches!(
            split_indices(1, 0.5, 0),
            Err(DataError::EmptyPartition { .. })
        ));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let x = FeatureMatrix::from_rows(
            &[vec![0.1, -2.5], vec![1.0 / 3.0, 7.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let data = Dataset::new(x, TargetVector(vec![0.25, -1e-17])).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("a,b,PM2.5\n"));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
    }
}
