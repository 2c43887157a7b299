//! Every malformed file under `fixtures/errors` must map to its designated
//! error, never a panic or a silent success.

use std::path::{Path, PathBuf};

use lagscan_core::ingest::{read_series_auto, IngestError};
use lagscan_core::screening::{run_grid, PairError, Role, ScreenError};
use lagscan_core::series::{preprocess, SeriesError};
use lagscan_core::{load_run, Aggregation, PreprocessSpec, TransformOrder};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/errors")
        .join(name)
}

fn read(name: &str) -> IngestError {
    read_series_auto(&fixture(name), None, None).expect_err(name)
}

fn run_err(name: &str) -> IngestError {
    load_run(&fixture(name)).expect_err(name)
}

#[test]
fn csv_fixtures() {
    assert!(matches!(
        read("duplicate_year.csv"),
        IngestError::DuplicateTime { row: 4, .. }
    ));
    assert!(matches!(
        read("bad_time.csv"),
        IngestError::UnparseableTime { row: 3, .. }
    ));
    assert!(matches!(
        read("bad_value.csv"),
        IngestError::UnparseableValue { row: 3, .. }
    ));
    assert!(matches!(
        read("thousands_separator.csv"),
        IngestError::UnparseableValue { row: 3, .. }
    ));
    assert!(matches!(read("empty.csv"), IngestError::EmptyFile { .. }));
    assert!(matches!(
        read("does_not_exist.csv"),
        IngestError::MissingFile { .. }
    ));
    match read_series_auto(&fixture("missing_column.csv"), Some("time"), None) {
        Err(IngestError::MissingColumn { column, .. }) => assert_eq!(column, "time"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn messages_name_the_file() {
    for name in [
        "duplicate_year.csv",
        "bad_time.csv",
        "bad_value.csv",
        "empty.csv",
    ] {
        assert!(read(name).to_string().contains(name), "{name}");
    }
}

#[test]
fn series_level_fixtures() {
    let gap = read_series_auto(&fixture("interior_gap.csv"), None, None).unwrap();
    let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::DifferenceOnly);
    let err = preprocess(&gap, &spec).unwrap_err();
    assert!(matches!(err.source, SeriesError::Gap { .. }), "{err}");

    let sign = read_series_auto(&fixture("sign_change.csv"), None, None).unwrap();
    let spec = PreprocessSpec::new(Aggregation::None, TransformOrder::DifferenceThenLog);
    let err = preprocess(&sign, &spec).unwrap_err();
    assert!(
        matches!(err.source, SeriesError::NonPositive { .. }),
        "{err}"
    );
}

#[test]
fn config_fixtures() {
    let key = |name: &str| match run_err(name) {
        IngestError::Config { key, .. } => key,
        other => panic!("{name}: {other:?}"),
    };
    assert_eq!(key("alpha_out_of_range.toml"), "alpha");
    assert_eq!(key("empty_words.toml"), "words");
    for name in ["unknown_key.toml", "wrong_type.toml", "bad_syntax.toml"] {
        assert!(
            matches!(run_err(name), IngestError::ConfigSyntax { .. }),
            "{name}"
        );
    }
    assert!(run_err("unknown_key.toml").to_string().contains("alpah"));
    match run_err("missing_series.toml") {
        IngestError::NamedSeries { name, source } => {
            assert_eq!(name, "w");
            assert!(matches!(*source, IngestError::MissingFile { .. }));
        }
        other => panic!("{other:?}"),
    }
    match run_err("bad_series.toml") {
        IngestError::NamedSeries { source, .. } => {
            assert!(matches!(*source, IngestError::DuplicateTime { .. }))
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn failing_pair_names_role_and_stage() {
    let run = load_run(&fixture("difference_then_log.toml")).unwrap();
    match run_grid(&run.words, &run.cohorts, &run.config) {
        Err(ScreenError::Pair {
            word,
            cohort,
            source,
        }) => {
            assert_eq!((word.as_str(), cohort.as_str()), ("w", "c"));
            assert!(matches!(
                source,
                PairError::Preprocess {
                    role: Role::Word,
                    ..
                }
            ));
        }
        other => panic!("{other:?}"),
    }
}
