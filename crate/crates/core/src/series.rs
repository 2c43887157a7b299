//! Time-series value types and the transforms applied before correlation.
//!
//! A [`TimeSeries`] is an ordered list of `(Period, value)` observations with a
//! declared [`Frequency`]. Weekly periods are ISO year-weeks; annual periods are
//! plain years. Every transform here is a pure function returning a new series.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of weeks for a year to be considered adequately covered.
pub const FULL_YEAR_WEEKS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Weekly,
    Annual,
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Weekly => f.write_str("weekly"),
            Frequency::Annual => f.write_str("annual"),
        }
    }
}

/// A period label. Ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    /// Calendar year.
    Year(i32),
    /// ISO 8601 week: `year` is the ISO week-numbering year.
    Week { year: i32, week: u32 },
}

impl Period {
    /// Builds a weekly period, rejecting weeks that do not exist in that ISO year.
    pub fn week(year: i32, week: u32) -> Option<Period> {
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).map(|_| Period::Week { year, week })
    }

    pub fn frequency(&self) -> Frequency {
        match self {
            Period::Year(_) => Frequency::Annual,
            Period::Week { .. } => Frequency::Weekly,
        }
    }

    /// The year this period belongs to (the ISO year for weeks).
    pub fn year(&self) -> i32 {
        match *self {
            Period::Year(y) => y,
            Period::Week { year, .. } => year,
        }
    }

    /// The period immediately following this one.
    pub fn successor(&self) -> Period {
        match *self {
            Period::Year(y) => Period::Year(y + 1),
            Period::Week { year, week } => {
                let monday = NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
                    .expect("weekly periods are validated at construction");
                let next = (monday + Duration::days(7)).iso_week();
                Period::Week {
                    year: next.year(),
                    week: next.week(),
                }
            }
        }
    }
}

impl fmt::Display for Period {
    /// Annual periods print as `2004`, weekly as `2004-W03`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Period::Year(y) => write!(f, "{y:04}"),
            Period::Week { year, week } => write!(f, "{year:04}-W{week:02}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub period: Period,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("period {period} does not match the series frequency ({expected})")]
    FrequencyMismatch { period: Period, expected: Frequency },
    #[error("periods not strictly increasing at position {index} ({period})")]
    NotIncreasing { index: usize, period: Period },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("{operation} requires {expected} input, got {found}")]
    WrongFrequency {
        operation: &'static str,
        expected: Frequency,
        found: Frequency,
    },
    #[error("series too short: need at least {needed} points, have {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("nonpositive value {value} at index {index} cannot be log-transformed")]
    NonPositive { index: usize, value: f64 },
    #[error("missing period between {before} and {after}")]
    Gap { before: Period, after: Period },
    #[error("annual-mean aggregation is only valid for weekly input")]
    InvalidAggregation,
}

/// An ordered, gap-checked-on-demand sequence of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    frequency: Frequency,
    points: Vec<Observation>,
}

impl TimeSeries {
    /// Validates and builds a series. Points must already be in strictly
    /// increasing period order.
    pub fn new(frequency: Frequency, points: Vec<Observation>) -> Result<Self, SeriesError> {
        if points.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            if p.period.frequency() != frequency {
                return Err(SeriesError::FrequencyMismatch {
                    period: p.period,
                    expected: frequency,
                });
            }
            if !p.value.is_finite() {
                return Err(SeriesError::NonFinite { index });
            }
            if index > 0 && points[index - 1].period >= p.period {
                return Err(SeriesError::NotIncreasing {
                    index,
                    period: p.period,
                });
            }
        }
        Ok(TimeSeries { frequency, points })
    }

    /// Annual series with consecutive years starting at `first_year`.
    pub fn annual(first_year: i32, values: &[f64]) -> Result<Self, SeriesError> {
        let points = values
            .iter()
            .zip(first_year..)
            .map(|(&value, y)| Observation {
                period: Period::Year(y),
                value,
            })
            .collect();
        TimeSeries::new(Frequency::Annual, points)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn points(&self) -> &[Observation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false for a constructed series; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        self.points.iter().map(|p| p.period)
    }

    pub fn first_year(&self) -> i32 {
        self.points[0].period.year()
    }

    pub fn last_year(&self) -> i32 {
        self.points[self.points.len() - 1].period.year()
    }

    /// Errors on the first missing period between neighbours.
    pub fn check_contiguous(&self) -> Result<(), SeriesError> {
        for w in self.points.windows(2) {
            if w[0].period.successor() != w[1].period {
                return Err(SeriesError::Gap {
                    before: w[0].period,
                    after: w[1].period,
                });
            }
        }
        Ok(())
    }

    /// Keeps only observations whose year lies in `first..=last`.
    pub fn restrict_years(&self, first: i32, last: i32) -> Result<TimeSeries, SeriesError> {
        let points = self
            .points
            .iter()
            .filter(|p| (first..=last).contains(&p.period.year()))
            .copied()
            .collect();
        TimeSeries::new(self.frequency, points)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            frequency: self.frequency,
            points: self
                .points
                .iter()
                .map(|p| Observation {
                    period: p.period,
                    value: f(p.value),
                })
                .collect(),
        }
    }

    /// Adds `c` to every value.
    pub fn shifted(&self, c: f64) -> TimeSeries {
        self.map_values(|v| v + c)
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> TimeSeries {
        self.map_values(|v| v * c)
    }
}

/// Flags an aggregated year with fewer than [`FULL_YEAR_WEEKS`] weekly points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartialYear {
    pub year: i32,
    pub weeks: usize,
}

impl fmt::Display for PartialYear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "year {} averaged over only {} weeks",
            self.year, self.weeks
        )
    }
}

/// Result of annual aggregation: the series plus any partial-year notices.
#[derive(Debug, Clone, PartialEq)]
pub struct Annualized {
    pub series: TimeSeries,
    pub partial_years: Vec<PartialYear>,
}

/// Averages a weekly series into one point per ISO year.
///
/// Years are averaged over whatever weeks are present. A year missing
/// entirely between two present years is an error.
pub fn aggregate_annual_mean(s: &TimeSeries) -> Result<Annualized, SeriesError> {
    if s.frequency != Frequency::Weekly {
        return Err(SeriesError::WrongFrequency {
            operation: "annual-mean aggregation",
            expected: Frequency::Weekly,
            found: s.frequency,
        });
    }
    let mut by_year: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for p in &s.points {
        let entry = by_year.entry(p.period.year()).or_insert((0.0, 0));
        entry.0 += p.value;
        entry.1 += 1;
    }
    let mut points = Vec::with_capacity(by_year.len());
    let mut partial_years = Vec::new();
    for (&year, &(sum, count)) in &by_year {
        if count < FULL_YEAR_WEEKS {
            partial_years.push(PartialYear { year, weeks: count });
        }
        points.push(Observation {
            period: Period::Year(year),
            value: sum / count as f64,
        });
    }
    let series = TimeSeries::new(Frequency::Annual, points)?;
    series.check_contiguous()?;
    Ok(Annualized {
        series,
        partial_years,
    })
}

/// First differences, each stamped with the later period.
pub fn difference(s: &TimeSeries) -> Result<TimeSeries, SeriesError> {
    if s.len() < 2 {
        return Err(SeriesError::TooShort {
            needed: 2,
            actual: s.len(),
        });
    }
    s.check_contiguous()?;
    let points = s
        .points
        .windows(2)
        .map(|w| Observation {
            period: w[1].period,
            value: w[1].value - w[0].value,
        })
        .collect();
    Ok(TimeSeries {
        frequency: s.frequency,
        points,
    })
}

/// Natural log of every value.
pub fn log_transform(s: &TimeSeries) -> Result<TimeSeries, SeriesError> {
    if let Some((index, p)) = s.points.iter().enumerate().find(|(_, p)| p.value <= 0.0) {
        return Err(SeriesError::NonPositive {
            index,
            value: p.value,
        });
    }
    Ok(s.map_values(f64::ln))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    AnnualMean,
    #[default]
    None,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregation::AnnualMean => f.write_str("annual-mean"),
            Aggregation::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformOrder {
    /// Log growth: `ln(v[t]) - ln(v[t-1])`.
    #[default]
    LogThenDifference,
    /// Log of the changes; fails when any change is nonpositive.
    DifferenceThenLog,
    DifferenceOnly,
}

impl fmt::Display for TransformOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformOrder::LogThenDifference => f.write_str("log-then-difference"),
            TransformOrder::DifferenceThenLog => f.write_str("difference-then-log"),
            TransformOrder::DifferenceOnly => f.write_str("difference-only"),
        }
    }
}

impl std::str::FromStr for TransformOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log-then-difference" => Ok(TransformOrder::LogThenDifference),
            "difference-then-log" => Ok(TransformOrder::DifferenceThenLog),
            "difference-only" => Ok(TransformOrder::DifferenceOnly),
            other => Err(format!(
                "unknown transform order `{other}` (expected log-then-difference, difference-then-log or difference-only)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub aggregation: Aggregation,
    pub transform_order: TransformOrder,
}

impl PreprocessSpec {
    pub fn new(aggregation: Aggregation, transform_order: TransformOrder) -> Self {
        PreprocessSpec {
            aggregation,
            transform_order,
        }
    }

    /// Checks these settings against the input frequency.
    pub fn validate_for(&self, frequency: Frequency) -> Result<(), SeriesError> {
        if self.aggregation == Aggregation::AnnualMean && frequency != Frequency::Weekly {
            return Err(SeriesError::InvalidAggregation);
        }
        Ok(())
    }
}

impl fmt::Display for PreprocessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.aggregation, self.transform_order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Aggregate,
    Log,
    Difference,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Validate => "validate",
            Stage::Aggregate => "aggregate",
            Stage::Log => "log",
            Stage::Difference => "difference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("preprocess stage `{stage}`: {source}")]
pub struct PreprocessError {
    pub stage: Stage,
    #[source]
    pub source: SeriesError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub series: TimeSeries,
    pub partial_years: Vec<PartialYear>,
}

/// Aggregation (if requested) followed by the transform chain.
pub fn preprocess(s: &TimeSeries, spec: &PreprocessSpec) -> Result<Preprocessed, PreprocessError> {
    let at = |stage| move |source| PreprocessError { stage, source };
    spec.validate_for(s.frequency)
        .map_err(at(Stage::Validate))?;

    let (base, partial_years) = match spec.aggregation {
        Aggregation::AnnualMean => {
            let a = aggregate_annual_mean(s).map_err(at(Stage::Aggregate))?;
            (a.series, a.partial_years)
        }
        Aggregation::None => (s.clone(), Vec::new()),
    };

    let series = match spec.transform_order {
        TransformOrder::LogThenDifference => {
            let logged = log_transform(&base).map_err(at(Stage::Log))?;
            difference(&logged).map_err(at(Stage::Difference))?
        }
        TransformOrder::DifferenceThenLog => {
            let diffed = difference(&base).map_err(at(Stage::Difference))?;
            log_transform(&diffed).map_err(at(Stage::Log))?
        }
        TransformOrder::DifferenceOnly => difference(&base).map_err(at(Stage::Difference))?,
    };
    Ok(Preprocessed {
        series,
        partial_years,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn weekly(year: i32, values: &[f64]) -> Vec<Observation> {
        values
            .iter()
            .enumerate()
            .map(|(i, &value)| Observation {
                period: Period::week(year, i as u32 + 1).unwrap(),
                value,
            })
            .collect()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(
            TimeSeries::new(Frequency::Annual, vec![]),
            Err(SeriesError::Empty)
        );
        assert!(matches!(
            TimeSeries::annual(2004, &[1.0, f64::NAN]),
            Err(SeriesError::NonFinite { index: 1 })
        ));
        let dup = vec![
            Observation {
                period: Period::Year(2004),
                value: 1.0,
            },
            Observation {
                period: Period::Year(2004),
                value: 2.0,
            },
        ];
        assert!(matches!(
            TimeSeries::new(Frequency::Annual, dup),
            Err(SeriesError::NotIncreasing { index: 1, .. })
        ));
        assert!(matches!(
            TimeSeries::new(Frequency::Annual, weekly(2004, &[1.0])),
            Err(SeriesError::FrequencyMismatch { .. })
        ));
    }

    #[test]
    fn iso_week_validation_and_successor() {
        assert!(Period::week(2004, 53).is_some());
        assert!(Period::week(2005, 53).is_none());
        assert!(Period::week(2005, 0).is_none());
        assert_eq!(
            Period::week(2004, 53).unwrap().successor(),
            Period::week(2005, 1).unwrap()
        );
        assert_eq!(
            Period::week(2005, 52).unwrap().successor(),
            Period::week(2006, 1).unwrap()
        );
        assert_eq!(Period::week(2004, 3).unwrap().to_string(), "2004-W03");
        assert_eq!(Period::Year(2004).to_string(), "2004");
    }

    #[test]
    fn annual_mean_of_constants() {
        let s = TimeSeries::new(Frequency::Weekly, weekly(2005, &[3.0; 52])).unwrap();
        let a = aggregate_annual_mean(&s).unwrap();
        assert_eq!(a.series, TimeSeries::annual(2005, &[3.0]).unwrap());
        assert!(a.partial_years.is_empty());
    }

    #[test]
    fn annual_mean_of_one_to_fifty_two() {
        let values: Vec<f64> = (1..=52).map(f64::from).collect();
        let s = TimeSeries::new(Frequency::Weekly, weekly(2005, &values)).unwrap();
        // (1 + 52) / 2
        assert_eq!(
            aggregate_annual_mean(&s).unwrap().series.values(),
            vec![26.5]
        );
    }

    #[test]
    fn annual_mean_partial_year_is_averaged_and_flagged() {
        let mut points: Vec<Observation> = (43..=52)
            .map(|w| Observation {
                period: Period::week(2004, w).unwrap(),
                value: 2.0,
            })
            .collect();
        points.extend(weekly(2005, &[4.0; 52]));
        let s = TimeSeries::new(Frequency::Weekly, points).unwrap();
        let a = aggregate_annual_mean(&s).unwrap();
        assert_eq!(a.series, TimeSeries::annual(2004, &[2.0, 4.0]).unwrap());
        assert_eq!(
            a.partial_years,
            vec![PartialYear {
                year: 2004,
                weeks: 10
            }]
        );
    }

    #[test]
    fn annual_mean_rejects_annual_input_and_gaps() {
        let annual = TimeSeries::annual(2004, &[1.0, 2.0]).unwrap();
        assert!(matches!(
            aggregate_annual_mean(&annual),
            Err(SeriesError::WrongFrequency { .. })
        ));
        let mut points = weekly(2004, &[1.0; 52]);
        points.extend(weekly(2006, &[1.0; 52]));
        let gappy = TimeSeries::new(Frequency::Weekly, points).unwrap();
        assert!(matches!(
            aggregate_annual_mean(&gappy),
            Err(SeriesError::Gap { .. })
        ));
    }

    #[test]
    fn difference_examples() {
        let s = TimeSeries::annual(2004, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(difference(&s).unwrap().values(), vec![0.0, 0.0]);
        let s = TimeSeries::annual(2004, &[1.0, 3.0, 2.0]).unwrap();
        let d = difference(&s).unwrap();
        assert_eq!(d.values(), vec![2.0, -1.0]);
        // stamped with the later period
        assert_eq!(d.points()[0].period, Period::Year(2005));
        let seven = TimeSeries::annual(2004, &[1.0, 2.0, 4.0, 3.0, 5.0, 6.0, 8.0]).unwrap();
        assert_eq!(difference(&seven).unwrap().len(), 6);
    }

    #[test]
    fn difference_too_short_and_gap() {
        let one = TimeSeries::annual(2004, &[1.0]).unwrap();
        assert_eq!(
            difference(&one),
            Err(SeriesError::TooShort {
                needed: 2,
                actual: 1
            })
        );
        let gap = TimeSeries::new(
            Frequency::Annual,
            vec![
                Observation {
                    period: Period::Year(2004),
                    value: 1.0,
                },
                Observation {
                    period: Period::Year(2006),
                    value: 2.0,
                },
            ],
        )
        .unwrap();
        assert!(matches!(difference(&gap), Err(SeriesError::Gap { .. })));
    }

    #[test]
    fn log_examples() {
        let s = TimeSeries::annual(2004, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(log_transform(&s).unwrap().values(), vec![0.0, 0.0, 0.0]);
        let s = TimeSeries::annual(2004, &[E, E * E]).unwrap();
        let l = log_transform(&s).unwrap().values();
        assert!((l[0] - 1.0).abs() < 1e-15 && (l[1] - 2.0).abs() < 1e-15);
        let s = TimeSeries::annual(2004, &[2.0, -1.0]).unwrap();
        assert_eq!(
            log_transform(&s),
            Err(SeriesError::NonPositive {
                index: 1,
                value: -1.0
            })
        );
    }

    #[test]
    fn preprocess_examples() {
        let mut points = weekly(2004, &[7.0; 53]);
        points.extend(weekly(2005, &[7.0; 52]));
        points.extend(weekly(2006, &[7.0; 52]));
        let s = TimeSeries::new(Frequency::Weekly, points).unwrap();
        let spec = PreprocessSpec::new(Aggregation::AnnualMean, TransformOrder::DifferenceOnly);
        let out = preprocess(&s, &spec).unwrap();
        assert_eq!(out.series, TimeSeries::annual(2005, &[0.0, 0.0]).unwrap());

        let s = TimeSeries::annual(2004, &[E, E.powi(2), E.powi(4)]).unwrap();
        let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::LogThenDifference);
        let v = preprocess(&s, &spec).unwrap().series.values();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);

        let s = TimeSeries::annual(2004, &[5.0, 3.0]).unwrap();
        let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::DifferenceThenLog);
        let err = preprocess(&s, &spec).unwrap_err();
        assert_eq!(err.stage, Stage::Log);
        assert!(matches!(
            err.source,
            SeriesError::NonPositive { index: 0, .. }
        ));
    }

    #[test]
    fn preprocess_rejects_aggregating_annual() {
        let s = TimeSeries::annual(2004, &[1.0, 2.0, 3.0]).unwrap();
        let spec = PreprocessSpec::new(Aggregation::AnnualMean, TransformOrder::DifferenceOnly);
        let err = preprocess(&s, &spec).unwrap_err();
        assert_eq!(err.stage, Stage::Validate);
    }

    fn annual_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1e3, 2..40)
    }

    proptest! {
        #[test]
        fn difference_ignores_constant_shift(v in annual_values(), c in -1e3f64..1e3) {
            let s = TimeSeries::annual(1990, &v).unwrap();
            let a = difference(&s).unwrap().values();
            let b = difference(&s.shifted(c)).unwrap().values();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn log_inverts_exp(v in prop::collection::vec(-20f64..20.0, 1..40)) {
            let exp: Vec<f64> = v.iter().map(|x| x.exp()).collect();
            let s = TimeSeries::annual(1990, &exp).unwrap();
            let back = log_transform(&s).unwrap().values();
            for (x, y) in v.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn log_then_difference_is_difference_of_logs(v in annual_values()) {
            let s = TimeSeries::annual(1990, &v).unwrap();
            let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::LogThenDifference);
            let got = preprocess(&s, &spec).unwrap().series.values();
            prop_assert_eq!(got.len(), v.len() - 1);
            for (i, g) in got.iter().enumerate() {
                let want = v[i + 1].ln() - v[i].ln();
                prop_assert!((g - want).abs() <= 1e-12);
            }
        }

        #[test]
        fn annual_mean_ignores_within_year_order(
            mut a in prop::collection::vec(0.0f64..100.0, 1..52),
            seed in any::<u64>(),
        ) {
            let s1 = TimeSeries::new(Frequency::Weekly, weekly(2010, &a)).unwrap();
            // deterministic permutation of the same multiset
            let k = (seed as usize) % a.len();
            a.rotate_left(k);
            a.reverse();
            let s2 = TimeSeries::new(Frequency::Weekly, weekly(2010, &a)).unwrap();
            let m1 = aggregate_annual_mean(&s1).unwrap().series.values()[0];
            let m2 = aggregate_annual_mean(&s2).unwrap().series.values()[0];
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.abs().max(1.0));
        }

        #[test]
        fn differencing_drops_one_year(years in 2usize..12) {
            let mut points = Vec::new();
            for y in 0..years {
                points.extend(weekly(2000 + y as i32, &[5.0; 52]));
            }
            let s = TimeSeries::new(Frequency::Weekly, points).unwrap();
            let spec = PreprocessSpec::new(Aggregation::AnnualMean, TransformOrder::LogThenDifference);
            prop_assert_eq!(preprocess(&s, &spec).unwrap().series.len(), years - 1);
        }
    }
}
