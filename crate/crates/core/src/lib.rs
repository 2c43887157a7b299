//! Screening of paired time series for significant lagged cross-correlation.
//!
//! The pipeline runs: CSV ingestion ([`ingest`]), annual aggregation and
//! differencing/log transforms ([`series`]), the sample cross-correlation with
//! white-noise bands ([`ccf`]), grid screening with optional Bonferroni
//! correction ([`screening`]) and rendering ([`report`]). [`synth`] holds the
//! seeded generators and the brute-force oracle used to check the estimator.

pub mod ccf;
pub mod ingest;
pub mod report;
pub mod screening;
pub mod series;
pub mod synth;

pub use ccf::{
    cross_correlation, significance_threshold, significant_lags, CcfError, CcfResult, Sign,
    SignificantLag,
};
pub use ingest::{load_run, read_series, IngestError, Run, SeriesFileSpec};
pub use report::{render_ccf_plot, render_table, RenderOptions, TableFormat};
pub use screening::{
    bonferroni_alpha, run_grid, run_pair, Correction, NamedSeries, ScreenConfig, ScreenError,
    ScreenTable,
};
pub use series::{
    Aggregation, Frequency, Period, PreprocessSpec, SeriesError, TimeSeries, TransformOrder,
};
