//! Seeded synthetic series with planted lagged correlation, a brute-force CCF
//! oracle, and the bundled 9 × 9 study fixture.
//!
//! Random numbers come from SplitMix64 (Steele, Lea & Flood 2014):
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! Uniforms are `((out >> 11) + 0.5) * 2^-53`, strictly inside `(0, 1)`. Each
//! standard normal consumes two uniforms `u1, u2` and returns the cosine branch
//! of Box-Muller, `sqrt(-2 ln u1) * cos(2 pi u2)`. The sine branch is discarded
//! so the stream position is a pure function of the number of draws.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ccf::{significance_threshold, CcfError};
use crate::ingest::{
    write_series_file, GroupPreprocess, PreprocessSection, RunFile, SeriesFileSpec,
};
use crate::screening::{Correction, NamedSeries};
use crate::series::{
    preprocess, Aggregation, Frequency, Observation, Period, PreprocessSpec, TimeSeries,
    TransformOrder,
};

/// First year stamped on simulated series.
pub const SIM_FIRST_YEAR: i32 = 2000;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("series length must be at least 3, got {0}")]
    TooShort(usize),
    #[error("|lag| must be below n - 2 (lag {lag}, n {n})")]
    LagTooLarge { lag: i64, n: usize },
    #[error("strength must lie in [0, 1], got {0}")]
    Strength(f64),
}

/// Parameters for a planted-lag pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSpec {
    /// Length of the underlying draws before trimming.
    pub n: usize,
    /// Planted lag: `y` carries `x` content `lag` periods later.
    pub lag: i64,
    /// Weight of the shared signal; `1 - strength` goes to independent noise.
    pub strength: f64,
    pub seed: u64,
}

impl PlantSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n < 3 {
            return Err(SynthError::TooShort(self.n));
        }
        if self.lag.unsigned_abs() >= (self.n - 2) as u64 {
            return Err(SynthError::LagTooLarge {
                lag: self.lag,
                n: self.n,
            });
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(SynthError::Strength(self.strength));
        }
        Ok(())
    }
}

/// Draws `x` and independent noise `e` (n each, in that order), then forms
/// `y[t] = strength * x[t - lag] + (1 - strength) * e[t]` on the `n - |lag|`
/// indices where `x[t - lag]` exists. Both outputs cover those indices, stamped
/// as consecutive years from [`SIM_FIRST_YEAR`].
pub fn generate_lagged_pair(spec: &PlantSpec) -> Result<(TimeSeries, TimeSeries), SynthError> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let x = rng.normals(spec.n);
    let e = rng.normals(spec.n);
    let start = spec.lag.max(0) as usize;
    let len = spec.n - spec.lag.unsigned_abs() as usize;
    let (mut xs, mut ys) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for t in start..start + len {
        let src = (t as i64 - spec.lag) as usize;
        xs.push(x[t]);
        ys.push(spec.strength * x[src] + (1.0 - spec.strength) * e[t]);
    }
    let x = TimeSeries::annual(SIM_FIRST_YEAR, &xs).expect("finite draws");
    let y = TimeSeries::annual(SIM_FIRST_YEAR, &ys).expect("finite draws");
    Ok((x, y))
}

/// Direct evaluation of the sample cross-correlation at one lag.
///
/// Written with explicit index loops and no shared helpers so it can check
/// [`crate::ccf::cross_correlation`] independently.
pub fn oracle_ccf(x: &[f64], y: &[f64], lag: i64) -> Result<f64, CcfError> {
    let n = x.len();
    if y.len() != n {
        return Err(CcfError::LengthMismatch { x: n, y: y.len() });
    }
    if n < 3 {
        return Err(CcfError::TooShort(n));
    }
    if lag.unsigned_abs() as usize > n - 2 {
        return Err(CcfError::MaxLagTooLarge {
            max_lag: lag.unsigned_abs() as usize,
            n,
        });
    }
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for i in 0..n {
        sum_x += x[i];
        sum_y += y[i];
    }
    let mx = sum_x / n as f64;
    let my = sum_y / n as f64;

    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(CcfError::ZeroVariance("first"));
    }
    if syy == 0.0 {
        return Err(CcfError::ZeroVariance("second"));
    }

    let mut sxy = 0.0;
    for t in 0..n as i64 {
        let u = t + lag;
        if u >= 0 && u < n as i64 {
            sxy += (x[t as usize] - mx) * (y[u as usize] - my);
        }
    }
    Ok(sxy / (sxx * syy).sqrt())
}

pub const STUDY_WORDS: [&str; 9] = [
    "marijuana",
    "alcohol",
    "debt",
    "foreclosure",
    "bunnies",
    "stress",
    "hate",
    "ship",
    "obesity",
];

pub const STUDY_COHORTS: [&str; 9] = [
    "all",
    "male",
    "female",
    "white",
    "black",
    "white-male",
    "white-female",
    "black-male",
    "black-female",
];

/// Word index carrying a positive lag -1 link to cohorts 0..8.
pub const STUDY_HATE_ROW: usize = 6;
/// Word index carrying a negative lag -1 link to cohorts 0..5.
pub const STUDY_FORECLOSURE_ROW: usize = 3;
pub const STUDY_FIRST_YEAR: i32 = 2004;
pub const STUDY_LAST_YEAR: i32 = 2010;
pub const STUDY_ALPHA: f64 = 0.1;
pub const STUDY_MAX_LAG: usize = 3;
/// Required distance between any |r| and the band in the study fixture.
pub const STUDY_MARGIN: f64 = 0.02;

/// Seeds for the bundled fixture, selected by [`find_study_seeds`] and frozen.
pub const STUDY_SEEDS: StudySeeds = StudySeeds {
    cohorts: 11,
    words: [3, 4, 14, 318, 12, 11, 0, 12, 28],
};

/// One stream for the cohort block and one per word row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudySeeds {
    pub cohorts: u64,
    pub words: [u64; 9],
}

/// `(word, cohort, lag, positive)` cells planted in the study fixture.
pub fn study_planted_cells() -> Vec<(usize, usize, i64, bool)> {
    let mut cells: Vec<_> = (0..5)
        .map(|c| (STUDY_FORECLOSURE_ROW, c, -1, false))
        .collect();
    cells.extend((0..8).map(|c| (STUDY_HATE_ROW, c, -1, true)));
    cells.sort();
    cells
}

pub fn study_word_spec() -> PreprocessSpec {
    PreprocessSpec::new(Aggregation::AnnualMean, TransformOrder::LogThenDifference)
}

pub fn study_cohort_spec() -> PreprocessSpec {
    PreprocessSpec::new(Aggregation::None, TransformOrder::LogThenDifference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyFixture {
    pub seeds: StudySeeds,
    /// Weekly search-volume-like series.
    pub words: Vec<NamedSeries>,
    /// Annual rate-like series.
    pub cohorts: Vec<NamedSeries>,
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}

const SLOTS: usize = (STUDY_LAST_YEAR - STUDY_FIRST_YEAR + 1) as usize;

/// Latent log-growth signals shared between cohorts and planted words.
///
/// Slot `s` is the change into year `2004 + s`; slot 0 precedes the sample.
/// `b = (a + c) / sqrt(2)` with `c` independent of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyLatent {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lone: Vec<f64>,
}

/// Cohorts 0..5 follow `a`, cohorts 5..8 follow `b`, cohort 8 follows
/// `lone`; each adds a small idiosyncratic term. Levels are rebuilt from
/// growth and rounded to one decimal like published rates.
pub fn study_cohorts(seed: u64) -> (Vec<NamedSeries>, StudyLatent) {
    const SIGMA: f64 = 0.02;
    const JITTER: f64 = 0.15;
    let mut rng = SplitMix64::new(seed);
    let a = rng.normals(SLOTS);
    let c = rng.normals(SLOTS);
    let b: Vec<f64> = a
        .iter()
        .zip(&c)
        .map(|(a, c)| (a + c) / std::f64::consts::SQRT_2)
        .collect();
    let lone = rng.normals(SLOTS);
    let cohorts = STUDY_COHORTS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let signal = match i {
                0..=4 => &a,
                5..=7 => &b,
                _ => &lone,
            };
            let jitter = rng.normals(SLOTS);
            let base = 600.0 + 80.0 * i as f64;
            let levels = levels_from_growth(base, SIGMA, |s| signal[s] + JITTER * jitter[s]);
            let values: Vec<f64> = levels.iter().map(|v| round_to(*v, 1)).collect();
            NamedSeries::new(
                *name,
                TimeSeries::annual(STUDY_FIRST_YEAR, &values).expect("finite levels"),
            )
        })
        .collect();
    (cohorts, StudyLatent { a, b, lone })
}

/// Word row `index` drawn from its own stream, seeded with
/// `(index << 32) | seed` so rows never share draws.
///
/// The hate row's growth in slot `s` follows `(a + b)` from slot `s - 1`; the
/// foreclosure row follows `-(2a - b)`, which is nearly orthogonal to `b`.
/// Other rows are independent noise. Annual levels are spread over ISO weeks
/// with zero-mean weekly jitter and rounded to one decimal.
pub fn study_word(index: usize, latent: &StudyLatent, seed: u64) -> NamedSeries {
    const SIGMA: f64 = 0.1;
    const JITTER: f64 = 0.15;
    let mut rng = SplitMix64::new(((index as u64) << 32) | (seed & 0xFFFF_FFFF));
    let own = rng.normals(SLOTS);
    let (a, b) = (&latent.a, &latent.b);
    let growth = |s: usize| -> f64 {
        match index {
            STUDY_HATE_ROW => (a[s - 1] + b[s - 1]) / 1.5 + JITTER * own[s],
            STUDY_FORECLOSURE_ROW => -(2.0 * a[s - 1] - b[s - 1]) + JITTER * own[s],
            _ => own[s],
        }
    };
    let base = 20.0 + 7.0 * index as f64;
    let annual = levels_from_growth(base, SIGMA, growth);
    NamedSeries::new(STUDY_WORDS[index], weekly_from_annual(&annual, &mut rng))
}

pub fn study_fixture(seeds: &StudySeeds) -> StudyFixture {
    let (cohorts, latent) = study_cohorts(seeds.cohorts);
    let words = (0..STUDY_WORDS.len())
        .map(|i| study_word(i, &latent, seeds.words[i]))
        .collect();
    StudyFixture {
        seeds: *seeds,
        words,
        cohorts,
    }
}

// Level in year 0 is `base`; slot 0's growth precedes the sample and is
// only used through the lagged rows.
fn levels_from_growth(base: f64, sigma: f64, growth: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut level = base;
    let mut out = Vec::with_capacity(SLOTS);
    out.push(level);
    for s in 1..SLOTS {
        level *= (sigma * growth(s)).exp();
        out.push(level);
    }
    out
}

fn weekly_from_annual(annual: &[f64], rng: &mut SplitMix64) -> TimeSeries {
    let mut points = Vec::new();
    for (i, &mean) in annual.iter().enumerate() {
        let year = STUDY_FIRST_YEAR + i as i32;
        let weeks: Vec<Period> = (1..=53).filter_map(|w| Period::week(year, w)).collect();
        let jitter = rng.normals(weeks.len());
        let avg = jitter.iter().sum::<f64>() / jitter.len() as f64;
        for (period, j) in weeks.into_iter().zip(jitter) {
            let value = round_to(mean * (1.0 + 0.05 * (j - avg)), 1);
            points.push(Observation { period, value });
        }
    }
    TimeSeries::new(Frequency::Weekly, points).expect("weeks are ordered")
}

/// Flagged `(cohort, lag, positive)` for one word row, computed with
/// [`oracle_ccf`] on preprocessed data. `None` when some |r| sits within
/// [`STUDY_MARGIN`] of the band.
pub fn study_row_cells(word: &TimeSeries, cohorts: &[Vec<f64>]) -> Option<Vec<(usize, i64, bool)>> {
    let w = preprocess(word, &study_word_spec()).ok()?.series.values();
    let band = significance_threshold(w.len(), STUDY_ALPHA).expect("valid alpha");
    let mut flagged = Vec::new();
    for (ci, c) in cohorts.iter().enumerate() {
        for lag in -(STUDY_MAX_LAG as i64)..=STUDY_MAX_LAG as i64 {
            let r = oracle_ccf(&w, c, lag).ok()?;
            if (r.abs() - band).abs() < STUDY_MARGIN {
                return None;
            }
            if r.abs() > band {
                flagged.push((ci, lag, r > 0.0));
            }
        }
    }
    Some(flagged)
}

fn preprocessed_cohorts(cohorts: &[NamedSeries]) -> Vec<Vec<f64>> {
    cohorts
        .iter()
        .map(|c| {
            preprocess(&c.series, &study_cohort_spec())
                .expect("study rates are positive")
                .series
                .values()
        })
        .collect()
}

/// Every flagged `(word, cohort, lag, positive)` cell of a fixture, by oracle.
pub fn study_oracle_cells(fixture: &StudyFixture) -> Option<Vec<(usize, usize, i64, bool)>> {
    let cohorts = preprocessed_cohorts(&fixture.cohorts);
    let mut out = Vec::new();
    for (wi, w) in fixture.words.iter().enumerate() {
        let row = study_row_cells(&w.series, &cohorts)?;
        out.extend(row.into_iter().map(|(c, lag, pos)| (wi, c, lag, pos)));
    }
    Some(out)
}

/// Searches seeds so that the fixture flags exactly [`study_planted_cells`]
/// with every |r| at least [`STUDY_MARGIN`] from the band.
///
/// Cohort seeds are tried from `start`; for each, every word row searches its
/// own seed in `0..row_attempts` independently.
pub fn find_study_seeds(start: u64, cohort_attempts: u64, row_attempts: u64) -> Option<StudySeeds> {
    let planted = study_planted_cells();
    'cohort: for cohort_seed in start..start.saturating_add(cohort_attempts) {
        let (cohorts, latent) = study_cohorts(cohort_seed);
        let prepped = preprocessed_cohorts(&cohorts);
        let mut words = [0u64; 9];
        for (i, slot) in words.iter_mut().enumerate() {
            let want: Vec<(usize, i64, bool)> = planted
                .iter()
                .filter(|p| p.0 == i)
                .map(|&(_, c, lag, pos)| (c, lag, pos))
                .collect();
            let found = (0..row_attempts).find(|&seed| {
                let w = study_word(i, &latent, seed);
                study_row_cells(&w.series, &prepped).as_ref() == Some(&want)
            });
            match found {
                Some(seed) => *slot = seed,
                None => continue 'cohort,
            }
        }
        return Some(StudySeeds {
            cohorts: cohort_seed,
            words,
        });
    }
    None
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn create_dir(path: &Path) -> Result<(), FixtureError> {
    fs::create_dir_all(path).map_err(|source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), FixtureError> {
    fs::write(path, text).map_err(|source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the study fixture (`words/*.csv`, `cohorts/*.csv`, `study.toml`).
/// Returns the config path.
pub fn write_study_fixture(fixture: &StudyFixture, dir: &Path) -> Result<PathBuf, FixtureError> {
    create_dir(&dir.join("words"))?;
    create_dir(&dir.join("cohorts"))?;
    let mut run = RunFile {
        alpha: Some(STUDY_ALPHA),
        max_lag: Some(STUDY_MAX_LAG as i64),
        correction: Some(Correction::None),
        preprocess: Some(PreprocessSection {
            words: Some(GroupPreprocess {
                aggregation: Some(Aggregation::AnnualMean),
                transform_order: Some(TransformOrder::LogThenDifference),
            }),
            cohorts: Some(GroupPreprocess {
                aggregation: Some(Aggregation::None),
                transform_order: Some(TransformOrder::LogThenDifference),
            }),
        }),
        ..RunFile::default()
    };
    for w in &fixture.words {
        let rel = PathBuf::from("words").join(format!("{}.csv", w.name));
        write_series_file(&w.series, &dir.join(&rel), "week", "search_index")?;
        run.words.push(SeriesFileSpec {
            time_column: "week".into(),
            value_column: "search_index".into(),
            ..SeriesFileSpec::new(&w.name, rel, Frequency::Weekly)
        });
    }
    for c in &fixture.cohorts {
        let rel = PathBuf::from("cohorts").join(format!("{}.csv", c.name));
        write_series_file(&c.series, &dir.join(&rel), "year", "rate")?;
        run.cohorts.push(SeriesFileSpec {
            time_column: "year".into(),
            value_column: "rate".into(),
            ..SeriesFileSpec::new(&c.name, rel, Frequency::Annual)
        });
    }
    let config = dir.join("study.toml");
    let header = format!(
        "# Synthetic 9 x 9 screening study generated from seeds {:?}.\n\
         # Planted: hate x cohorts 1-8 at lag -1 (+), foreclosure x cohorts 1-5 at lag -1 (-).\n\n",
        fixture.seeds
    );
    write_text(&config, &(header + &run.to_toml()))?;
    Ok(config)
}

/// Options for a simulated single-pair run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub plant: PlantSpec,
    pub alpha: f64,
    pub max_lag: usize,
}

/// Writes `word.csv`, `cohort.csv` and `lagscan.toml` for a planted pair.
/// Returns the config path.
pub fn write_simulation(opts: &SimulateOptions, dir: &Path) -> Result<PathBuf, FixtureError> {
    let (x, y) = generate_lagged_pair(&opts.plant)?;
    create_dir(dir)?;
    write_series_file(&x, &dir.join("word.csv"), "time", "value")?;
    write_series_file(&y, &dir.join("cohort.csv"), "time", "value")?;
    let group = GroupPreprocess {
        aggregation: Some(Aggregation::None),
        transform_order: Some(TransformOrder::DifferenceOnly),
    };
    let run = RunFile {
        alpha: Some(opts.alpha),
        max_lag: Some(opts.max_lag as i64),
        correction: Some(Correction::None),
        skip_on_error: None,
        preprocess: Some(PreprocessSection {
            words: Some(group.clone()),
            cohorts: Some(group),
        }),
        words: vec![SeriesFileSpec::new("x", "word.csv", Frequency::Annual)],
        cohorts: vec![SeriesFileSpec::new("y", "cohort.csv", Frequency::Annual)],
    };
    let p = &opts.plant;
    let header = format!(
        "# Simulated pair: seed {}, n {}, planted lag {}, strength {}.\n\n",
        p.seed, p.n, p.lag, p.strength
    );
    let config = dir.join("lagscan.toml");
    write_text(&config, &(header + &run.to_toml()))?;
    Ok(config)
}
