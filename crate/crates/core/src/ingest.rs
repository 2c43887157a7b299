//! CSV series files and the TOML run configuration.
//!
//! Series files carry a header row. Annual time values are `YYYY`, weekly time
//! values are ISO weeks `YYYY-Www`. Values are plain decimals with optional
//! exponent; thousands separators and non-finite spellings are rejected.
//! Reported row numbers are file line numbers (the header is line 1).
//!
//! Run configuration grammar:
//!
//! ```toml
//! alpha = 0.1              # optional, in (0, 1)
//! max_lag = 3              # optional, >= 1
//! correction = "none"      # optional, "none" | "bonferroni"
//! skip_on_error = false    # optional
//!
//! [preprocess.words]       # optional; defaults shown
//! aggregation = "annual-mean"            # "annual-mean" | "none"
//! transform_order = "log-then-difference" # | "difference-then-log" | "difference-only"
//!
//! [preprocess.cohorts]     # optional; defaults shown
//! aggregation = "none"
//! transform_order = "log-then-difference"
//!
//! [[words]]                # one or more
//! name = "hate"
//! path = "words/hate.csv"  # relative to the config file
//! frequency = "weekly"     # "weekly" | "annual"
//! time_column = "time"     # optional, default "time"
//! value_column = "value"   # optional, default "value"
//!
//! [[cohorts]]              # one or more, same fields as words
//! ```
//!
//! Unknown keys are rejected.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::screening::{Correction, NamedSeries, ScreenConfig, DEFAULT_ALPHA, DEFAULT_MAX_LAG};
use crate::series::{
    Aggregation, Frequency, Observation, Period, PreprocessSpec, SeriesError, TimeSeries,
    TransformOrder,
};

pub const DEFAULT_TIME_COLUMN: &str = "time";
pub const DEFAULT_VALUE_COLUMN: &str = "value";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: file not found", .path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: no data rows", .path.display())]
    EmptyFile { path: PathBuf },
    #[error("{}: missing column `{column}`", .path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: row {row}: cannot parse time `{text}` as {frequency}", .path.display())]
    UnparseableTime {
        path: PathBuf,
        row: u64,
        text: String,
        frequency: Frequency,
    },
    #[error("{}: row {row}: cannot parse value `{text}`", .path.display())]
    UnparseableValue {
        path: PathBuf,
        row: u64,
        text: String,
    },
    #[error("{}: row {row}: duplicate time index {period}", .path.display())]
    DuplicateTime {
        path: PathBuf,
        row: u64,
        period: Period,
    },
    #[error("{}: malformed CSV: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", .path.display())]
    Series {
        path: PathBuf,
        #[source]
        source: SeriesError,
    },
    #[error("{}: {message}", .path.display())]
    ConfigSyntax { path: PathBuf, message: String },
    #[error("{}config key `{key}`: {message}", path_prefix(.path))]
    Config {
        /// The config file, when known.
        path: Option<PathBuf>,
        key: String,
        message: String,
    },
    #[error("series `{name}`: {source}")]
    NamedSeries {
        name: String,
        #[source]
        source: Box<IngestError>,
    },
}

fn path_prefix(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!("{}: ", p.display()))
        .unwrap_or_default()
}

impl IngestError {
    fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Config {
            path: None,
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Where a series lives and how to read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFileSpec {
    pub name: String,
    pub path: PathBuf,
    pub frequency: Frequency,
    #[serde(default = "default_time_column")]
    pub time_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
}

fn default_time_column() -> String {
    DEFAULT_TIME_COLUMN.to_string()
}

fn default_value_column() -> String {
    DEFAULT_VALUE_COLUMN.to_string()
}

impl SeriesFileSpec {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>, frequency: Frequency) -> Self {
        SeriesFileSpec {
            name: name.into(),
            path: path.into(),
            frequency,
            time_column: default_time_column(),
            value_column: default_value_column(),
        }
    }
}

/// Parses `YYYY` or `YYYY-Www` according to `frequency`.
pub fn parse_period(text: &str, frequency: Frequency) -> Option<Period> {
    let digits = |s: &str, len: usize| s.len() == len && s.bytes().all(|b| b.is_ascii_digit());
    match frequency {
        Frequency::Annual => digits(text, 4).then(|| Period::Year(text.parse().unwrap())),
        Frequency::Weekly => {
            let (year, week) = text.split_once("-W")?;
            if !digits(year, 4) || !digits(week, 2) {
                return None;
            }
            Period::week(year.parse().ok()?, week.parse().ok()?)
        }
    }
}

/// Guesses the frequency from a time label's shape.
pub fn sniff_frequency(text: &str) -> Option<Frequency> {
    [Frequency::Weekly, Frequency::Annual]
        .into_iter()
        .find(|&f| parse_period(text, f).is_some())
}

/// Decimal with optional exponent. No separators, no `inf`/`nan`.
pub fn parse_value(text: &str) -> Option<f64> {
    let allowed = |b: u8| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E');
    if text.is_empty() || !text.bytes().all(allowed) || !text.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => IngestError::MissingFile {
            path: path.to_path_buf(),
        },
        _ => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Reads and validates one series file. Rows may appear in any order.
pub fn read_series(spec: &SeriesFileSpec) -> Result<TimeSeries, IngestError> {
    let file = open(&spec.path)?;
    read_series_from(
        file,
        &spec.path,
        spec.frequency,
        &spec.time_column,
        &spec.value_column,
    )
}

/// Reads a series from any reader; `path` is only used in diagnostics.
pub fn read_series_from<R: Read>(
    reader: R,
    path: &Path,
    frequency: Frequency,
    time_column: &str,
    value_column: &str,
) -> Result<TimeSeries, IngestError> {
    let path_buf = || path.to_path_buf();
    let csv_err = |source| IngestError::Csv {
        path: path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::EmptyFile { path: path_buf() });
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn {
                path: path_buf(),
                column: name.to_string(),
            })
    };
    let (ti, vi) = (column(time_column)?, column(value_column)?);

    let mut seen: HashMap<Period, u64> = HashMap::new();
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map_or(0, |p| p.line());
        let time = record.get(ti).unwrap_or("");
        let value = record.get(vi).unwrap_or("");
        let period = parse_period(time, frequency).ok_or_else(|| IngestError::UnparseableTime {
            path: path_buf(),
            row,
            text: time.to_string(),
            frequency,
        })?;
        let value = parse_value(value).ok_or_else(|| IngestError::UnparseableValue {
            path: path_buf(),
            row,
            text: value.to_string(),
        })?;
        if seen.insert(period, row).is_some() {
            return Err(IngestError::DuplicateTime {
                path: path_buf(),
                row,
                period,
            });
        }
        points.push(Observation { period, value });
    }
    if points.is_empty() {
        return Err(IngestError::EmptyFile { path: path_buf() });
    }
    points.sort_by_key(|p| p.period);
    TimeSeries::new(frequency, points).map_err(|source| IngestError::Series {
        path: path_buf(),
        source,
    })
}

/// Reads a series file without a [`SeriesFileSpec`].
///
/// Columns default to `time`/`value` when present, otherwise the first two
/// columns. Frequency is inferred from the first data row's time label.
pub fn read_series_auto(
    path: &Path,
    time_column: Option<&str>,
    value_column: Option<&str>,
) -> Result<TimeSeries, IngestError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let pick = |wanted: Option<&str>, default: &str, fallback: usize| -> String {
        match wanted {
            Some(w) => w.to_string(),
            None if headers.iter().any(|h| h == default) => default.to_string(),
            None => headers
                .get(fallback)
                .cloned()
                .unwrap_or_else(|| default.to_string()),
        }
    };
    let time_column = pick(time_column, DEFAULT_TIME_COLUMN, 0);
    let value_column = pick(value_column, DEFAULT_VALUE_COLUMN, 1);
    let ti = headers.iter().position(|h| *h == time_column);
    let first_time = match (ti, rdr.records().next()) {
        (Some(ti), Some(Ok(record))) => record.get(ti).map(str::to_string),
        _ => None,
    };
    // Unknown shapes fall through to the annual parser, which reports the row.
    let frequency = first_time
        .as_deref()
        .and_then(sniff_frequency)
        .unwrap_or(Frequency::Annual);
    read_series_from(
        text.as_bytes(),
        path,
        frequency,
        &time_column,
        &value_column,
    )
}

/// Writes a series as CSV. Values use the shortest exact decimal form, so a
/// read-back reproduces the series bit for bit.
pub fn write_series<W: Write>(
    s: &TimeSeries,
    writer: W,
    time_column: &str,
    value_column: &str,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([time_column, value_column])?;
    for p in s.points() {
        w.write_record([p.period.to_string(), p.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(
    s: &TimeSeries,
    path: &Path,
    time_column: &str,
    value_column: &str,
) -> Result<(), IngestError> {
    let file = File::create(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_series(s, io::BufWriter::new(file), time_column, value_column).map_err(|source| {
        IngestError::Csv {
            path: path.to_path_buf(),
            source,
        }
    })
}

/// Per-group preprocessing overrides as written in the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupPreprocess {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_order: Option<TransformOrder>,
}

impl GroupPreprocess {
    fn resolve(&self, default: PreprocessSpec) -> PreprocessSpec {
        PreprocessSpec {
            aggregation: self.aggregation.unwrap_or(default.aggregation),
            transform_order: self.transform_order.unwrap_or(default.transform_order),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<GroupPreprocess>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohorts: Option<GroupPreprocess>,
}

/// The run configuration file, as parsed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<Correction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_on_error: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PreprocessSection>,
    #[serde(default)]
    pub words: Vec<SeriesFileSpec>,
    #[serde(default)]
    pub cohorts: Vec<SeriesFileSpec>,
}

impl RunFile {
    pub fn parse(text: &str, path: &Path) -> Result<RunFile, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::ConfigSyntax {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().replace('\n', " "),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run files always serialize")
    }

    /// Validates values and applies defaults.
    pub fn screen_config(&self) -> Result<ScreenConfig, IngestError> {
        let defaults = ScreenConfig::default();
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(IngestError::config(
                "alpha",
                format!("must lie in (0, 1), got {alpha}"),
            ));
        }
        let max_lag = self.max_lag.unwrap_or(DEFAULT_MAX_LAG as i64);
        if max_lag < 1 {
            return Err(IngestError::config(
                "max_lag",
                format!("must be at least 1, got {max_lag}"),
            ));
        }
        let section = self.preprocess.clone().unwrap_or_default();
        let preprocess_word = section
            .words
            .unwrap_or_default()
            .resolve(defaults.preprocess_word);
        let preprocess_cohort = section
            .cohorts
            .unwrap_or_default()
            .resolve(defaults.preprocess_cohort);
        Ok(ScreenConfig {
            alpha,
            max_lag: max_lag as usize,
            correction: self.correction.unwrap_or_default(),
            preprocess_word,
            preprocess_cohort,
            skip_on_error: self.skip_on_error.unwrap_or(false),
        })
    }

    fn check_series_list(&self) -> Result<(), IngestError> {
        for (key, list) in [("words", &self.words), ("cohorts", &self.cohorts)] {
            if list.is_empty() {
                return Err(IngestError::config(key, "at least one series is required"));
            }
        }
        let mut seen = HashMap::new();
        for (key, spec) in self
            .words
            .iter()
            .map(|s| ("words", s))
            .chain(self.cohorts.iter().map(|s| ("cohorts", s)))
        {
            if spec.name.trim().is_empty() {
                return Err(IngestError::config(
                    format!("{key}.name"),
                    "must be nonempty",
                ));
            }
            if seen.insert(spec.name.as_str(), key).is_some() {
                return Err(IngestError::config(
                    format!("{key}.name"),
                    format!("duplicate series name `{}`", spec.name),
                ));
            }
        }
        Ok(())
    }
}

/// A fully loaded screening run.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub words: Vec<NamedSeries>,
    pub cohorts: Vec<NamedSeries>,
    pub config: ScreenConfig,
}

/// Loads a run configuration and every series it names. Series paths are
/// resolved against the config file's directory.
pub fn load_run(config_path: &Path) -> Result<Run, IngestError> {
    let mut text = String::new();
    open(config_path)?
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: config_path.to_path_buf(),
            source,
        })?;
    let file = RunFile::parse(&text, config_path)?;
    let in_file = |e: IngestError| match e {
        IngestError::Config { key, message, .. } => IngestError::Config {
            path: Some(config_path.to_path_buf()),
            key,
            message,
        },
        other => other,
    };
    let config = file.screen_config().map_err(in_file)?;
    file.check_series_list().map_err(in_file)?;

    let base = config_path.parent().unwrap_or(Path::new(""));
    let load = |specs: &[SeriesFileSpec]| -> Result<Vec<NamedSeries>, IngestError> {
        specs
            .iter()
            .map(|spec| {
                let resolved = SeriesFileSpec {
                    path: base.join(&spec.path),
                    ..spec.clone()
                };
                read_series(&resolved)
                    .map(|s| NamedSeries::new(spec.name.clone(), s))
                    .map_err(|e| IngestError::NamedSeries {
                        name: spec.name.clone(),
                        source: Box::new(e),
                    })
            })
            .collect()
    };
    Ok(Run {
        words: load(&file.words)?,
        cohorts: load(&file.cohorts)?,
        config,
    })
}
