//! Grid screening: every word series against every cohort series.
//!
//! Each pair is trimmed to the calendar years both series cover, each side is
//! preprocessed with its group's [`PreprocessSpec`], and the CCF is thresholded
//! at the (optionally Bonferroni-corrected) alpha. The word series is always the
//! first CCF argument, so a negative lag means the cohort series leads.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccf::{cross_correlation, significant_lags, CcfError, CcfResult, SignificantLag};
use crate::series::{preprocess, PartialYear, PreprocessError, PreprocessSpec, TimeSeries};
use crate::series::{Aggregation, TransformOrder};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_MAX_LAG: usize = 3;

/// Effective sample sizes below this get a small-n notice.
pub const SMALL_N: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub name: String,
    pub series: TimeSeries,
}

impl NamedSeries {
    pub fn new(name: impl Into<String>, series: TimeSeries) -> Self {
        NamedSeries {
            name: name.into(),
            series,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    None,
    Bonferroni,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correction::None => f.write_str("none"),
            Correction::Bonferroni => f.write_str("bonferroni"),
        }
    }
}

impl std::str::FromStr for Correction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Correction::None),
            "bonferroni" => Ok(Correction::Bonferroni),
            other => Err(format!(
                "unknown correction `{other}` (expected none or bonferroni)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenConfig {
    pub alpha: f64,
    pub max_lag: usize,
    pub correction: Correction,
    pub preprocess_word: PreprocessSpec,
    pub preprocess_cohort: PreprocessSpec,
    /// Record failing pairs in the table instead of aborting the run.
    pub skip_on_error: bool,
}

impl Default for ScreenConfig {
    /// Words are weekly and averaged to years; cohorts are annual. Both use
    /// log growth.
    fn default() -> Self {
        ScreenConfig {
            alpha: DEFAULT_ALPHA,
            max_lag: DEFAULT_MAX_LAG,
            correction: Correction::None,
            preprocess_word: PreprocessSpec::new(
                Aggregation::AnnualMean,
                TransformOrder::LogThenDifference,
            ),
            preprocess_cohort: PreprocessSpec::new(
                Aggregation::None,
                TransformOrder::LogThenDifference,
            ),
            skip_on_error: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Word,
    Cohort,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Word => f.write_str("word"),
            Role::Cohort => f.write_str("cohort"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("series share no calendar years")]
    NoOverlap,
    #[error("{role} series: {source}")]
    Preprocess {
        role: Role,
        #[source]
        source: PreprocessError,
    },
    #[error("cross-correlation: {0}")]
    Ccf(#[from] CcfError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreenError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("number of tests must be at least 1")]
    NoTests,
    #[error("at least one {0} series is required")]
    NoSeries(Role),
    #[error("duplicate {role} name `{name}`")]
    DuplicateName { role: Role, name: String },
    #[error("pair ({word}, {cohort}): {source}")]
    Pair {
        word: String,
        cohort: String,
        #[source]
        source: PairError,
    },
}

/// Per-test alpha under Bonferroni correction for `m` simultaneous tests.
pub fn bonferroni_alpha(alpha: f64, m: usize) -> Result<f64, ScreenError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScreenError::Alpha(alpha));
    }
    if m == 0 {
        return Err(ScreenError::NoTests);
    }
    Ok(alpha / m as f64)
}

/// Everything computed for one word/cohort pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAnalysis {
    pub word: TimeSeries,
    pub cohort: TimeSeries,
    pub ccf: CcfResult,
    pub findings: Vec<SignificantLag>,
    pub partial_years: Vec<(Role, PartialYear)>,
}

/// Aligns, preprocesses and correlates one pair at a fixed per-test alpha.
pub fn run_pair(
    word: &TimeSeries,
    cohort: &TimeSeries,
    preprocess_word: &PreprocessSpec,
    preprocess_cohort: &PreprocessSpec,
    max_lag: usize,
    alpha: f64,
) -> Result<PairAnalysis, PairError> {
    let first = word.first_year().max(cohort.first_year());
    let last = word.last_year().min(cohort.last_year());
    if first > last {
        return Err(PairError::NoOverlap);
    }
    let trim = |s: &TimeSeries| {
        s.restrict_years(first, last)
            .map_err(|_| PairError::NoOverlap)
    };
    let (word, cohort) = (trim(word)?, trim(cohort)?);

    let w = preprocess(&word, preprocess_word).map_err(|source| PairError::Preprocess {
        role: Role::Word,
        source,
    })?;
    let c = preprocess(&cohort, preprocess_cohort).map_err(|source| PairError::Preprocess {
        role: Role::Cohort,
        source,
    })?;
    let ccf = cross_correlation(&w.series, &c.series, max_lag, alpha)?;
    let findings = significant_lags(&ccf);
    let partial_years = w
        .partial_years
        .into_iter()
        .map(|p| (Role::Word, p))
        .chain(c.partial_years.into_iter().map(|p| (Role::Cohort, p)))
        .collect();
    Ok(PairAnalysis {
        word: w.series,
        cohort: c.series,
        ccf,
        findings,
        partial_years,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub findings: Vec<SignificantLag>,
    /// Effective sample size, absent when the pair errored.
    pub n: Option<usize>,
    pub threshold: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenMeta {
    pub alpha: f64,
    /// Per-test alpha when a correction was applied.
    pub corrected_alpha: Option<f64>,
    pub correction: Correction,
    pub max_lag: usize,
    /// Number of simultaneous tests (word/cohort pairs).
    pub tests: usize,
    pub preprocess_word: PreprocessSpec,
    pub preprocess_cohort: PreprocessSpec,
    pub notices: Vec<String>,
}

impl ScreenMeta {
    pub fn effective_alpha(&self) -> f64 {
        self.corrected_alpha.unwrap_or(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenTable {
    pub word_names: Vec<String>,
    pub cohort_names: Vec<String>,
    /// Indexed `[word][cohort]`.
    pub cells: Vec<Vec<Cell>>,
    pub meta: ScreenMeta,
}

impl ScreenTable {
    pub fn findings(&self, word: usize, cohort: usize) -> &[SignificantLag] {
        &self.cells[word][cohort].findings
    }

    pub fn finding_count(&self) -> usize {
        self.cells.iter().flatten().map(|c| c.findings.len()).sum()
    }

    pub fn errored_cells(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| c.error.is_some())
            .count()
    }

    /// Smallest effective n across successful pairs.
    pub fn min_n(&self) -> Option<usize> {
        self.cells.iter().flatten().filter_map(|c| c.n).min()
    }

    /// `(word, cohort, lag, sign)` for every finding, in table order.
    pub fn finding_set(&self) -> Vec<(usize, usize, i64, crate::ccf::Sign)> {
        let mut out = Vec::new();
        for (w, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                out.extend(cell.findings.iter().map(|f| (w, c, f.lag, f.sign)));
            }
        }
        out
    }
}

fn check_names(series: &[NamedSeries], role: Role) -> Result<(), ScreenError> {
    if series.is_empty() {
        return Err(ScreenError::NoSeries(role));
    }
    let mut seen = HashSet::new();
    for s in series {
        if !seen.insert(s.name.as_str()) {
            return Err(ScreenError::DuplicateName {
                role,
                name: s.name.clone(),
            });
        }
    }
    Ok(())
}

/// Screens the full word × cohort grid.
///
/// Cells are computed in parallel and assembled by `(word, cohort)` index, so
/// the table does not depend on scheduling.
pub fn run_grid(
    words: &[NamedSeries],
    cohorts: &[NamedSeries],
    cfg: &ScreenConfig,
) -> Result<ScreenTable, ScreenError> {
    check_names(words, Role::Word)?;
    check_names(cohorts, Role::Cohort)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(ScreenError::Alpha(cfg.alpha));
    }
    let tests = words.len() * cohorts.len();
    let corrected_alpha = match cfg.correction {
        Correction::None => None,
        Correction::Bonferroni => Some(bonferroni_alpha(cfg.alpha, tests)?),
    };
    let alpha = corrected_alpha.unwrap_or(cfg.alpha);

    let results: Vec<Result<PairAnalysis, PairError>> = (0..tests)
        .into_par_iter()
        .map(|i| {
            let (w, c) = (i / cohorts.len(), i % cohorts.len());
            run_pair(
                &words[w].series,
                &cohorts[c].series,
                &cfg.preprocess_word,
                &cfg.preprocess_cohort,
                cfg.max_lag,
                alpha,
            )
        })
        .collect();

    let mut notices = Vec::new();
    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(words.len());
    let mut reported_partial = HashSet::new();
    for (i, result) in results.into_iter().enumerate() {
        let (w, c) = (i / cohorts.len(), i % cohorts.len());
        if c == 0 {
            cells.push(Vec::with_capacity(cohorts.len()));
        }
        let cell = match result {
            Ok(pair) => {
                for (role, p) in &pair.partial_years {
                    let name = match role {
                        Role::Word => &words[w].name,
                        Role::Cohort => &cohorts[c].name,
                    };
                    if reported_partial.insert((name.clone(), p.year)) {
                        notices.push(format!("{role} `{name}`: {p}"));
                    }
                }
                Cell {
                    findings: pair.findings,
                    n: Some(pair.ccf.n),
                    threshold: Some(pair.ccf.threshold),
                    error: None,
                }
            }
            Err(source) if cfg.skip_on_error => {
                notices.push(format!(
                    "pair ({}, {}) skipped: {source}",
                    words[w].name, cohorts[c].name
                ));
                Cell {
                    findings: Vec::new(),
                    n: None,
                    threshold: None,
                    error: Some(source.to_string()),
                }
            }
            Err(source) => {
                return Err(ScreenError::Pair {
                    word: words[w].name.clone(),
                    cohort: cohorts[c].name.clone(),
                    source,
                })
            }
        };
        cells[w].push(cell);
    }

    Ok(ScreenTable {
        word_names: words.iter().map(|s| s.name.clone()).collect(),
        cohort_names: cohorts.iter().map(|s| s.name.clone()).collect(),
        cells,
        meta: ScreenMeta {
            alpha: cfg.alpha,
            corrected_alpha,
            correction: cfg.correction,
            max_lag: cfg.max_lag,
            tests,
            preprocess_word: cfg.preprocess_word,
            preprocess_cohort: cfg.preprocess_cohort,
            notices,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccf::Sign;
    use crate::synth::SplitMix64;

    fn annual_cfg() -> ScreenConfig {
        let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::DifferenceOnly);
        ScreenConfig {
            preprocess_word: spec,
            preprocess_cohort: spec,
            ..ScreenConfig::default()
        }
    }

    fn noise(seed: u64, n: usize) -> TimeSeries {
        let mut rng = SplitMix64::new(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        TimeSeries::annual(2000, &v).unwrap()
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni_alpha(0.1, 1), Ok(0.1));
        assert_eq!(bonferroni_alpha(0.1, 81), Ok(0.1 / 81.0));
        assert!((bonferroni_alpha(0.1, 81).unwrap() - 0.001_234_567_901_234_567_9).abs() < 1e-15);
        assert_eq!(bonferroni_alpha(0.05, 5), Ok(0.01));
        assert_eq!(bonferroni_alpha(0.0, 5), Err(ScreenError::Alpha(0.0)));
        assert_eq!(bonferroni_alpha(0.1, 0), Err(ScreenError::NoTests));
    }

    #[test]
    fn identical_pair_flags_lag_zero() {
        let s = TimeSeries::annual(2004, &[1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0]).unwrap();
        let words = [NamedSeries::new("w", s.clone())];
        let cohorts = [NamedSeries::new("c", s)];
        let t = run_grid(&words, &cohorts, &annual_cfg()).unwrap();
        let f = t.findings(0, 0);
        assert!(f.iter().any(|f| f.lag == 0 && f.sign == Sign::Positive));
        assert_eq!(t.cells[0][0].n, Some(6));
        assert_eq!(t.meta.tests, 1);
    }

    #[test]
    fn pairs_are_trimmed_to_common_years() {
        let word = TimeSeries::annual(2000, &[1.0, 2.0, 4.0, 3.0, 6.0, 5.0, 9.0, 8.0]).unwrap();
        let cohort = TimeSeries::annual(2003, &[3.0, 6.0, 5.0, 9.0, 8.0, 1.0]).unwrap();
        let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::DifferenceOnly);
        let p = run_pair(&word, &cohort, &spec, &spec, 2, 0.1).unwrap();
        // common years 2003..=2007 -> 5 points -> 4 differences
        assert_eq!(p.ccf.n, 4);
        assert_eq!(p.word.first_year(), 2004);
        assert!((p.ccf.at(0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_spans_fail() {
        let a = TimeSeries::annual(2000, &[1.0, 2.0, 3.0]).unwrap();
        let b = TimeSeries::annual(2010, &[1.0, 2.0, 3.0]).unwrap();
        let spec = PreprocessSpec::default();
        assert_eq!(
            run_pair(&a, &b, &spec, &spec, 1, 0.1),
            Err(PairError::NoOverlap)
        );
    }

    #[test]
    fn failing_pair_names_the_pair_or_is_skipped() {
        let good = noise(1, 12);
        let bad = TimeSeries::annual(2000, &[1.0; 12]).unwrap();
        let words = [NamedSeries::new("w", good)];
        let cohorts = [
            NamedSeries::new("ok", noise(2, 12)),
            NamedSeries::new("flat", bad),
        ];
        let mut cfg = annual_cfg();
        let err = run_grid(&words, &cohorts, &cfg).unwrap_err();
        assert!(matches!(&err, ScreenError::Pair { cohort, .. } if cohort == "flat"));

        cfg.skip_on_error = true;
        let t = run_grid(&words, &cohorts, &cfg).unwrap();
        assert_eq!(t.errored_cells(), 1);
        assert!(t.cells[0][1].error.is_some());
        assert!(t.cells[0][0].error.is_none());
    }

    #[test]
    fn rejects_empty_and_duplicate_names() {
        let s = noise(3, 10);
        let one = [NamedSeries::new("a", s.clone())];
        assert_eq!(
            run_grid(&[], &one, &annual_cfg()),
            Err(ScreenError::NoSeries(Role::Word))
        );
        let dup = [NamedSeries::new("a", s.clone()), NamedSeries::new("a", s)];
        assert!(matches!(
            run_grid(&one, &dup, &annual_cfg()),
            Err(ScreenError::DuplicateName {
                role: Role::Cohort,
                ..
            })
        ));
    }

    #[test]
    fn independent_noise_at_tiny_alpha_is_clean() {
        // Seeds checked once against the oracle CCF: no |r| reaches the
        // alpha = 0.001 band (3.29 / sqrt(29) = 0.611).
        let words: Vec<_> = (0..2)
            .map(|i| NamedSeries::new(format!("w{i}"), noise(1800 + i, 30)))
            .collect();
        let cohorts: Vec<_> = (0..2)
            .map(|i| NamedSeries::new(format!("c{i}"), noise(1900 + i, 30)))
            .collect();
        let cfg = ScreenConfig {
            alpha: 0.001,
            ..annual_cfg()
        };
        let t = run_grid(&words, &cohorts, &cfg).unwrap();
        assert_eq!(t.finding_count(), 0);
        for w in &words {
            for c in &cohorts {
                let x = crate::series::difference(&w.series).unwrap().values();
                let y = crate::series::difference(&c.series).unwrap().values();
                for lag in -3..=3 {
                    let r = crate::synth::oracle_ccf(&x, &y, lag).unwrap();
                    assert!(r.abs() < 0.611, "{} x {} lag {lag}: {r}", w.name, c.name);
                }
            }
        }
    }

    #[test]
    fn cells_match_single_pair_runs() {
        let words: Vec<_> = (0..3)
            .map(|i| NamedSeries::new(format!("w{i}"), noise(10 + i, 15)))
            .collect();
        let cohorts: Vec<_> = (0..2)
            .map(|i| NamedSeries::new(format!("c{i}"), noise(20 + i, 15)))
            .collect();
        let cfg = ScreenConfig {
            correction: Correction::Bonferroni,
            alpha: 0.3,
            ..annual_cfg()
        };
        let t = run_grid(&words, &cohorts, &cfg).unwrap();
        let alpha = 0.3 / 6.0;
        for (wi, w) in words.iter().enumerate() {
            for (ci, c) in cohorts.iter().enumerate() {
                let p = run_pair(
                    &w.series,
                    &c.series,
                    &cfg.preprocess_word,
                    &cfg.preprocess_cohort,
                    3,
                    alpha,
                )
                .unwrap();
                assert_eq!(t.findings(wi, ci), p.findings.as_slice());
            }
        }
        assert_eq!(run_grid(&words, &cohorts, &cfg).unwrap(), t);
    }
}
