//! Rendering of screening tables (markdown, CSV) and CCF stem plots (SVG).

use std::fmt::Write as _;

use thiserror::Error;

use crate::ccf::{CcfResult, Sign, SignificantLag};
use crate::screening::{Cell, ScreenTable};

/// One-line statement of the lag convention, printed with every report.
pub const LAG_CONVENTION: &str =
    "Lag k compares word(t) with cohort(t + k); negative k means the cohort series leads.";

/// Marker for cells whose pair failed under skip-on-error.
pub const ERROR_MARKER: &str = "error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!(
                "unknown format `{other}` (expected markdown or csv)"
            )),
        }
    }
}

/// `Superscript` renders `-1^+`; `Ascii` renders `-1+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignNotation {
    Superscript,
    Ascii,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub format: TableFormat,
    pub sign_notation: SignNotation,
    pub empty_marker: String,
    pub width: u32,
    pub height: u32,
}

impl RenderOptions {
    pub fn markdown() -> Self {
        RenderOptions {
            format: TableFormat::Markdown,
            sign_notation: SignNotation::Superscript,
            empty_marker: "x".to_string(),
            width: 640,
            height: 480,
        }
    }

    pub fn csv() -> Self {
        RenderOptions {
            format: TableFormat::Csv,
            sign_notation: SignNotation::Ascii,
            ..RenderOptions::markdown()
        }
    }

    pub fn for_format(format: TableFormat) -> Self {
        match format {
            TableFormat::Markdown => RenderOptions::markdown(),
            TableFormat::Csv => RenderOptions::csv(),
        }
    }
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions::markdown()
    }
}

pub fn format_finding(lag: i64, sign: Sign, notation: SignNotation) -> String {
    match notation {
        SignNotation::Superscript => format!("{lag}^{sign}"),
        SignNotation::Ascii => format!("{lag}{sign}"),
    }
}

fn format_cell(cell: &Cell, opts: &RenderOptions) -> String {
    if cell.error.is_some() {
        return ERROR_MARKER.to_string();
    }
    if cell.findings.is_empty() {
        return opts.empty_marker.clone();
    }
    cell.findings
        .iter()
        .map(|f| format_finding(f.lag, f.sign, opts.sign_notation))
        .collect::<Vec<_>>()
        .join(";")
}

fn format_alpha(a: f64) -> String {
    format!("{a}")
}

fn metadata(t: &ScreenTable) -> Vec<(&'static str, String)> {
    let m = &t.meta;
    let n = match (
        t.min_n(),
        t.cells.iter().flatten().filter_map(|c| c.n).max(),
    ) {
        (Some(lo), Some(hi)) if lo == hi => lo.to_string(),
        (Some(lo), Some(hi)) => format!("{lo}-{hi}"),
        _ => "none".to_string(),
    };
    vec![
        ("alpha", format_alpha(m.alpha)),
        (
            "corrected alpha",
            m.corrected_alpha.map_or("none".to_string(), format_alpha),
        ),
        ("correction", m.correction.to_string()),
        ("max_lag", m.max_lag.to_string()),
        ("n", n),
        ("tests", m.tests.to_string()),
        ("word preprocessing", m.preprocess_word.to_string()),
        ("cohort preprocessing", m.preprocess_cohort.to_string()),
    ]
}

fn escape_pipe(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Renders the word × cohort matrix in the requested format.
pub fn render_table(t: &ScreenTable, opts: &RenderOptions) -> String {
    match opts.format {
        TableFormat::Markdown => render_markdown(t, opts),
        TableFormat::Csv => render_csv(t, opts),
    }
}

fn render_markdown(t: &ScreenTable, opts: &RenderOptions) -> String {
    let mut out = String::new();
    writeln!(out, "{LAG_CONVENTION}\n").unwrap();

    let header: Vec<String> = std::iter::once("word".to_string())
        .chain(t.cohort_names.iter().map(|c| escape_pipe(c)))
        .collect();
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    writeln!(out, "|{}", " --- |".repeat(header.len())).unwrap();
    for (w, row) in t.cells.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format_cell(c, opts)).collect();
        writeln!(
            out,
            "| {} | {} |",
            escape_pipe(&t.word_names[w]),
            cells.join(" | ")
        )
        .unwrap();
    }

    writeln!(out).unwrap();
    for (key, value) in metadata(t) {
        writeln!(out, "- {key}: {value}").unwrap();
    }

    let details: Vec<String> = t
        .cells
        .iter()
        .enumerate()
        .flat_map(|(w, row)| {
            row.iter().enumerate().flat_map(move |(c, cell)| {
                cell.findings.iter().map(move |f| {
                    format!(
                        "- {} / {}: lag {}, r = {:.4} (band {:.4})",
                        t.word_names[w],
                        t.cohort_names[c],
                        f.lag,
                        f.correlation,
                        cell.threshold.unwrap_or(f64::NAN)
                    )
                })
            })
        })
        .collect();
    if !details.is_empty() {
        writeln!(out, "\nFindings:\n").unwrap();
        for d in details {
            writeln!(out, "{d}").unwrap();
        }
    }
    let errors: Vec<String> = t
        .cells
        .iter()
        .enumerate()
        .flat_map(|(w, row)| {
            row.iter().enumerate().filter_map(move |(c, cell)| {
                cell.error
                    .as_ref()
                    .map(|e| format!("- {} / {}: {e}", t.word_names[w], t.cohort_names[c]))
            })
        })
        .collect();
    if !errors.is_empty() {
        writeln!(out, "\nErrored pairs:\n").unwrap();
        for e in errors {
            writeln!(out, "{e}").unwrap();
        }
    }
    out
}

fn render_csv(t: &ScreenTable, opts: &RenderOptions) -> String {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    let header = std::iter::once("word").chain(t.cohort_names.iter().map(String::as_str));
    w.write_record(header).unwrap();
    for (i, row) in t.cells.iter().enumerate() {
        let cells = row.iter().map(|c| format_cell(c, opts));
        w.write_record(std::iter::once(t.word_names[i].clone()).chain(cells))
            .unwrap();
    }
    w.write_record(["# lag convention", LAG_CONVENTION])
        .unwrap();
    for (key, value) in metadata(t) {
        w.write_record([format!("# {key}"), value]).unwrap();
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 input")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedCell {
    Findings(Vec<(i64, Sign)>),
    Errored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTable {
    pub word_names: Vec<String>,
    pub cohort_names: Vec<String>,
    pub cells: Vec<Vec<ParsedCell>>,
}

impl ParsedTable {
    /// The finding matrix of a rendered table, for comparison with a parse.
    pub fn from_table(t: &ScreenTable) -> Self {
        let cells = t
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c.error {
                        Some(_) => ParsedCell::Errored,
                        None => ParsedCell::Findings(
                            c.findings.iter().map(|f| (f.lag, f.sign)).collect(),
                        ),
                    })
                    .collect()
            })
            .collect();
        ParsedTable {
            word_names: t.word_names.clone(),
            cohort_names: t.cohort_names.clone(),
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no table found")]
    NoTable,
    #[error("line {line}: expected {expected} cells, found {found}")]
    Width {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse cell `{text}`")]
    Cell { line: usize, text: String },
}

fn split_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|');
    let inner = inner.strip_suffix('|').unwrap_or(inner);
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(ch),
        }
    }
    cells.push(cur.trim().to_string());
    cells
}

fn parse_finding(text: &str) -> Option<(i64, Sign)> {
    let (lag, sign) = text.split_once('^')?;
    let sign = match sign {
        "+" => Sign::Positive,
        "-" => Sign::Negative,
        _ => return None,
    };
    Some((lag.parse().ok()?, sign))
}

/// Recovers the finding matrix from markdown produced by [`render_table`].
pub fn parse_markdown_table(text: &str, empty_marker: &str) -> Result<ParsedTable, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .skip_while(|(_, l)| !l.trim_start().starts_with('|'));
    let (_, header) = lines.next().ok_or(ParseError::NoTable)?;
    let header = split_row(header);
    lines.next().ok_or(ParseError::NoTable)?;
    let cohort_names: Vec<String> = header[1..].to_vec();

    let mut word_names = Vec::new();
    let mut cells = Vec::new();
    for (i, line) in lines.take_while(|(_, l)| l.trim_start().starts_with('|')) {
        let row = split_row(line);
        if row.len() != header.len() {
            return Err(ParseError::Width {
                line: i + 1,
                expected: header.len(),
                found: row.len(),
            });
        }
        word_names.push(row[0].clone());
        let parsed = row[1..]
            .iter()
            .map(|cell| {
                if cell == empty_marker {
                    Ok(ParsedCell::Findings(Vec::new()))
                } else if cell == ERROR_MARKER {
                    Ok(ParsedCell::Errored)
                } else {
                    cell.split(';')
                        .map(parse_finding)
                        .collect::<Option<Vec<_>>>()
                        .map(ParsedCell::Findings)
                        .ok_or_else(|| ParseError::Cell {
                            line: i + 1,
                            text: cell.clone(),
                        })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        cells.push(parsed);
    }
    Ok(ParsedTable {
        word_names,
        cohort_names,
        cells,
    })
}

/// Layout of a CCF stem plot in pixel space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
    /// Correlation shown at the top edge; the bottom edge is its negative.
    pub y_extent: f64,
    pub max_lag: i64,
}

impl PlotFrame {
    pub fn new(r: &CcfResult, width: u32, height: u32) -> Self {
        PlotFrame {
            left: 64.0,
            right: width as f64 - 24.0,
            top: 36.0,
            bottom: height as f64 - 52.0,
            y_extent: r.threshold.max(1.0),
            max_lag: r.max_lag() as i64,
        }
    }

    pub fn x(&self, lag: i64) -> f64 {
        let span = (2 * self.max_lag).max(1) as f64;
        let pad = (self.right - self.left) * 0.04;
        self.left + pad + (lag + self.max_lag) as f64 / span * (self.right - self.left - 2.0 * pad)
    }

    pub fn y(&self, r: f64) -> f64 {
        self.top + (self.y_extent - r) / (2.0 * self.y_extent) * (self.bottom - self.top)
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Stem plot of a CCF with dashed significance bands.
///
/// Elements carry classes `stem` (with `data-lag`), `band`, `zero` and
/// `axis` so tests can locate them.
pub fn render_ccf_plot(r: &CcfResult, opts: &RenderOptions) -> String {
    let frame = PlotFrame::new(r, opts.width, opts.height);
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = opts.width,
        h = opts.height
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        opts.width, opts.height
    )
    .unwrap();
    let title = format!("Cross-correlation (n = {}, alpha = {})", r.n, r.alpha);
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        px(opts.width as f64 / 2.0),
        svg_escape(&title)
    )
    .unwrap();

    // axes
    writeln!(
        s,
        r#"<line class="axis" x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = px(frame.left),
        t = px(frame.top),
        b = px(frame.bottom)
    )
    .unwrap();
    writeln!(
        s,
        r#"<line class="axis" x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        l = px(frame.left),
        r = px(frame.right),
        b = px(frame.bottom)
    )
    .unwrap();
    let ext = frame.y_extent;
    for tick in [-ext, -ext / 2.0, 0.0, ext / 2.0, ext] {
        let y = px(frame.y(tick));
        writeln!(
            s,
            r#"<line class="tick" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
            px(frame.left - 5.0),
            px(frame.left)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{tick:.2}</text>"#,
            px(frame.left - 8.0),
            px(frame.y(tick) + 4.0)
        )
        .unwrap();
    }
    let label_step = ((2 * frame.max_lag + 1) as f64 / 20.0).ceil().max(1.0) as i64;
    for &lag in &r.lags {
        if lag % label_step != 0 {
            continue;
        }
        let x = px(frame.x(lag));
        writeln!(
            s,
            r#"<line class="tick" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            px(frame.bottom),
            px(frame.bottom + 5.0)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{lag}</text>"#,
            px(frame.bottom + 18.0)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Lag</text>"#,
        px((frame.left + frame.right) / 2.0),
        px(frame.bottom + 40.0)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">CCF</text>"#,
        y = px((frame.top + frame.bottom) / 2.0)
    )
    .unwrap();

    writeln!(
        s,
        r#"<line class="zero" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
        px(frame.left),
        px(frame.right),
        y = px(frame.y(0.0))
    )
    .unwrap();
    for band in [r.threshold, -r.threshold] {
        writeln!(
            s,
            r#"<line class="band" data-value="{band}" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="blue" stroke-dasharray="6 4"/>"#,
            px(frame.left),
            px(frame.right),
            y = px(frame.y(band))
        )
        .unwrap();
    }
    for (&lag, &c) in r.lags.iter().zip(&r.correlations) {
        let x = px(frame.x(lag));
        writeln!(
            s,
            r#"<line class="stem" data-lag="{lag}" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="2"/>"#,
            px(frame.y(0.0)),
            px(frame.y(c))
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// Renders a single pair's findings as `lag^sign` items, or the marker.
pub fn render_findings(findings: &[SignificantLag], opts: &RenderOptions) -> String {
    if findings.is_empty() {
        return opts.empty_marker.clone();
    }
    findings
        .iter()
        .map(|f| format_finding(f.lag, f.sign, opts.sign_notation))
        .collect::<Vec<_>>()
        .join(";")
}
