//! CSV tables, run manifests, flat key=value config files and a small SVG
//! line plot.
//!
//! Every CSV starts with a `# run_id: <id>` line that ties it to the
//! manifest.json written alongside, then a fixed header row. Floats are
//! written with 17 significant digits, which round-trips any f64.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsSummary;
use crate::engine::{AggregateResult, SingleRoundRow};
use crate::error::{Error, Result};

pub const REGRET_CURVE_HEADER: &[&str] = &["t", "mean_cum_regret", "p25", "p75"];
pub const FINAL_SUMMARY_HEADER: &[&str] = &["mean", "two_sigma"];
pub const SINGLE_ROUND_HEADER: &[&str] = &["width", "samples", "mean_shrink_pct", "mean_regret", "update_rate"];
pub const DIAGNOSTICS_HEADER: &[&str] = &[
    "t",
    "count_obey",
    "count_deviate",
    "count_otf",
    "acc_total",
    "acc_obey",
    "acc_deviate",
    "acc_otf",
];

/// Round-trip exact float formatting: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table held in memory so it can be hashed and written atomically.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    run_id: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(run_id: &str, header: &[&str]) -> Self {
        Self {
            run_id: run_id.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 2));
        let _ = writeln!(out, "# run_id: {}", self.run_id);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        let mut file = io::BufWriter::new(fs::File::create(path)?);
        file.write_all(self.render().as_bytes())?;
        file.flush()
    }
}

pub fn regret_curve_table(run_id: &str, agg: &AggregateResult) -> CsvTable {
    let mut table = CsvTable::new(run_id, REGRET_CURVE_HEADER);
    for (i, ((mean, p25), p75)) in agg.mean_cum_regret.iter().zip(&agg.p25).zip(&agg.p75).enumerate() {
        table.push(vec![(i + 1).to_string(), fmt_f64(*mean), fmt_f64(*p25), fmt_f64(*p75)]);
    }
    table
}

pub fn final_summary_table(run_id: &str, agg: &AggregateResult) -> CsvTable {
    let mut table = CsvTable::new(run_id, FINAL_SUMMARY_HEADER);
    table.push(vec![fmt_f64(agg.final_mean), fmt_f64(agg.final_two_sigma)]);
    table
}

pub fn single_round_table(run_id: &str, rows: &[SingleRoundRow]) -> CsvTable {
    let mut table = CsvTable::new(run_id, SINGLE_ROUND_HEADER);
    for r in rows {
        table.push(vec![
            fmt_f64(r.width),
            r.samples.to_string(),
            fmt_f64(r.mean_shrink_pct),
            fmt_f64(r.mean_regret),
            fmt_f64(r.update_rate),
        ]);
    }
    table
}

pub fn diagnostics_table(run_id: &str, d: &DiagnosticsSummary) -> CsvTable {
    let mut table = CsvTable::new(run_id, DIAGNOSTICS_HEADER);
    for i in 0..d.acc_total.len() {
        table.push(vec![
            (i + 1).to_string(),
            fmt_f64(d.count_obey[i]),
            fmt_f64(d.count_deviate[i]),
            fmt_f64(d.count_otf[i]),
            fmt_f64(d.acc_total[i]),
            fmt_f64(d.acc_obey[i]),
            fmt_f64(d.acc_deviate[i]),
            fmt_f64(d.acc_otf[i]),
        ]);
    }
    table
}

/// Deterministic run id: the first 16 hex digits of SHA-256 over the
/// command name and its canonical config JSON.
pub fn run_id(command: &str, config: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update([0]);
    hasher.update(config.to_string().as_bytes());
    hasher
        .finalize()
        .iter()
        .take(8)
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub wall_clock_secs: f64,
    pub outputs: Vec<String>,
    pub criteria: Vec<CriterionOutcome>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            run_id: run_id(command, &config),
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            wall_clock_secs: 0.0,
            outputs: Vec::new(),
            criteria: Vec::new(),
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialise manifest: {e}")))?;
        fs::write(path, text + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Parses a flat `key = value` file. Blank lines and lines starting with `#`
/// are ignored; keys are case-insensitive and may use `-` or `_`
/// interchangeably.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        out.insert(key, value.trim().trim_matches('"').to_owned());
    }
    Ok(out)
}

/// One line of an SVG plot, optionally with a shaded band.
pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub y: &'a [f64],
    pub band: Option<(&'a [f64], &'a [f64])>,
}

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

/// Renders series sharing the x axis 1..=n as a static SVG. Long series are
/// thinned to at most 1000 points.
pub fn render_svg(title: &str, series: &[PlotSeries<'_>]) -> String {
    let (w, h, pad) = (720.0, 440.0, 50.0);
    let n = series.iter().map(|s| s.y.len()).max().unwrap_or(0).max(2);
    let mut y_max = f64::MIN;
    let mut y_min = f64::MAX;
    for s in series {
        let bands = s.band.map(|(lo, hi)| [lo, hi]);
        for v in s.y.iter().chain(bands.iter().flatten().flat_map(|b| b.iter())) {
            if v.is_finite() {
                y_max = y_max.max(*v);
                y_min = y_min.min(*v);
            }
        }
    }
    if !(y_max > y_min) {
        y_min = 0.0;
        y_max = 1.0;
    }
    let px = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (n - 1) as f64;
    let py = |v: f64| h - pad - (h - 2.0 * pad) * (v - y_min) / (y_max - y_min);
    let stride = n.div_ceil(1000).max(1);
    let points = |ys: &[f64]| {
        let mut s = String::new();
        for i in (0..ys.len()).step_by(stride).chain(std::iter::once(ys.len().saturating_sub(1))) {
            if let Some(&v) = ys.get(i) {
                let _ = write!(s, "{:.1},{:.1} ", px(i), py(v));
            }
        }
        s
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, title);
    let _ = writeln!(
        out,
        r#"<polyline points="{pad},{pad} {pad},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, pad - 4.0, pad + 4.0, y_max);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, pad - 4.0, h - pad, y_min);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, w - pad, h - pad + 16.0, n);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some((lo, hi)) = s.band {
            let upper = points(hi);
            let lower: String = points(lo)
                .split_whitespace()
                .rev()
                .map(|p| format!("{p} "))
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{upper}{lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#
            );
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points(s.y).trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - pad - 140.0,
            pad + 16.0 * (k as f64 + 1.0),
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}
