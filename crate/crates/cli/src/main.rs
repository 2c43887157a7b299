//! `lagscan`: screen time-series pairs for significant lagged cross-correlation.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error. Results go
//! to stdout, diagnostics to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lagscan_core::ingest::{load_run, read_series_auto};
use lagscan_core::report::{
    render_ccf_plot, render_table, RenderOptions, TableFormat, LAG_CONVENTION,
};
use lagscan_core::screening::{run_pair, Correction, SMALL_N};
use lagscan_core::synth::{write_simulation, PlantSpec, SimulateOptions};
use lagscan_core::{run_grid, Aggregation, Frequency, PreprocessSpec, TimeSeries, TransformOrder};

#[derive(Debug, Parser)]
#[command(
    name = "lagscan",
    version,
    about = "Lagged cross-correlation screening for time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-correlate one word series with one cohort series.
    Ccf {
        /// Word (search volume) series CSV.
        #[arg(long)]
        word: PathBuf,
        /// Cohort (rate) series CSV.
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        max_lag: usize,
        /// log-then-difference, difference-then-log or difference-only.
        #[arg(long, default_value = "log-then-difference")]
        transform_order: TransformOrder,
        /// Write an SVG stem plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Screen every word against every cohort from a run config.
    Screen {
        #[arg(long)]
        config: PathBuf,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// markdown or csv.
        #[arg(long, default_value = "markdown")]
        format: TableFormat,
        /// Overrides the config's correction (none or bonferroni).
        #[arg(long)]
        correction: Option<Correction>,
    },
    /// Write a planted-lag pair and a ready-to-run screen config.
    Simulate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lag: i64,
        #[arg(long)]
        strength: f64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Alpha written into the generated config.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Max lag written into the generated config.
        #[arg(long, default_value_t = 3)]
        max_lag: usize,
    },
}

/// Invalid option combinations detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Ccf {
            word,
            cohort,
            alpha,
            max_lag,
            transform_order,
            plot,
        } => cmd_ccf(
            &word,
            &cohort,
            alpha,
            max_lag,
            transform_order,
            plot.as_deref(),
        ),
        Command::Screen {
            config,
            out,
            format,
            correction,
        } => cmd_screen(&config, out.as_deref(), format, correction),
        Command::Simulate {
            seed,
            n,
            lag,
            strength,
            out_dir,
            alpha,
            max_lag,
        } => cmd_simulate(
            SimulateOptions {
                plant: PlantSpec {
                    n,
                    lag,
                    strength,
                    seed,
                },
                alpha,
                max_lag,
            },
            &out_dir,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("lagscan: usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("lagscan: error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// Joins the error chain, skipping causes whose text the previous message
/// already ends with (most library errors inline their source).
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if prev.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
        prev = msg;
    }
    out
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn warn_small_n(n: usize, what: &str) {
    if n < SMALL_N {
        eprintln!(
            "lagscan: warning[small-n]: {what} has effective n = {n} (< {SMALL_N}); bands are approximate"
        );
    }
}

fn spec_for(series: &TimeSeries, order: TransformOrder) -> PreprocessSpec {
    let aggregation = match series.frequency() {
        Frequency::Weekly => Aggregation::AnnualMean,
        Frequency::Annual => Aggregation::None,
    };
    PreprocessSpec::new(aggregation, order)
}

fn cmd_ccf(
    word_path: &Path,
    cohort_path: &Path,
    alpha: f64,
    max_lag: usize,
    order: TransformOrder,
    plot: Option<&Path>,
) -> Result<()> {
    check_alpha(alpha)?;
    if max_lag == 0 {
        return Err(usage("--max-lag must be at least 1"));
    }
    let word = read_series_auto(word_path, None, None).context("reading word series")?;
    let cohort = read_series_auto(cohort_path, None, None).context("reading cohort series")?;
    let pair_name = format!("{} against {}", word_path.display(), cohort_path.display());
    let pair = run_pair(
        &word,
        &cohort,
        &spec_for(&word, order),
        &spec_for(&cohort, order),
        max_lag,
        alpha,
    )
    .with_context(|| format!("analysing {pair_name}"))?;
    for (role, p) in &pair.partial_years {
        eprintln!("lagscan: warning: {role} series: {p}");
    }
    warn_small_n(pair.ccf.n, "pair");

    let r = &pair.ccf;
    let mut out = String::new();
    out.push_str(&format!("# {LAG_CONVENTION}\n"));
    out.push_str(&format!(
        "# n = {}, alpha = {}, threshold = {:.6}\n",
        r.n, r.alpha, r.threshold
    ));
    out.push_str("lag\tcorrelation\tsignificant\n");
    for (&lag, &c) in r.lags.iter().zip(&r.correlations) {
        let mark = if c.abs() > r.threshold { "*" } else { "" };
        out.push_str(&format!("{lag}\t{c:.6}\t{mark}\n"));
    }
    io::stdout()
        .write_all(out.as_bytes())
        .context("writing output")?;

    if let Some(path) = plot {
        fs::write(path, render_ccf_plot(r, &RenderOptions::default()))
            .with_context(|| format!("writing plot {}", path.display()))?;
    }
    Ok(())
}

fn cmd_screen(
    config: &Path,
    out: Option<&Path>,
    format: TableFormat,
    correction: Option<Correction>,
) -> Result<()> {
    let mut run = load_run(config).context("loading run config")?;
    if let Some(c) = correction {
        run.config.correction = c;
    }
    let table = run_grid(&run.words, &run.cohorts, &run.config)
        .with_context(|| format!("screening {}", config.display()))?;
    for notice in &table.meta.notices {
        eprintln!("lagscan: warning: {notice}");
    }
    if let Some(n) = table.min_n() {
        warn_small_n(n, "smallest pair");
    }

    let rendered = render_table(&table, &RenderOptions::for_format(format));
    let summary = format!(
        "{} significant findings across {} tests (alpha={}, correction={})",
        table.finding_count(),
        table.meta.tests,
        table.meta.alpha,
        table.meta.correction
    );
    match out {
        Some(path) => {
            fs::write(path, rendered)
                .with_context(|| format!("writing table {}", path.display()))?;
            println!("{summary}");
        }
        None => {
            // Keep stdout a clean table; the summary goes with the diagnostics.
            io::stdout()
                .write_all(rendered.as_bytes())
                .context("writing output")?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_simulate(opts: SimulateOptions, dir: &Path) -> Result<()> {
    check_alpha(opts.alpha)?;
    opts.plant.validate().map_err(|e| usage(e.to_string()))?;
    // differencing drops one more point
    let n = opts.plant.n - opts.plant.lag.unsigned_abs() as usize - 1;
    if opts.max_lag == 0 || opts.max_lag + 2 > n {
        return Err(usage(format!(
            "--max-lag {} does not fit {} differenced points",
            opts.max_lag, n
        )));
    }
    let config = write_simulation(&opts, dir)
        .with_context(|| format!("writing simulation to {}", dir.display()))?;
    println!("{}", config.display());
    Ok(())
}
