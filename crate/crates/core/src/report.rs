//! Diagnostics output: result JSON, per-panel score CSVs and SVG plots.
//!
//! Every emitter is a pure function of the [`DppResult`] (plus explicit bin
//! counts), so writing the same result twice gives byte-identical files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::engine::DppResult;
use crate::error::{DppError, Result};
use crate::unistat::{mean, median, variance, ProjectionScores};

pub const SCHEMA_VERSION: u32 = 1;

/// One diagnostic plot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// Observed projection scores.
    Obs,
    /// Permutation with the smallest statistic.
    Min,
    /// Permutation with the largest statistic.
    Max,
    Perm1,
    Perm2,
    /// Histogram of the permutation statistics.
    PermDist,
}

/// Panels drawn when none are requested.
pub const DEFAULT_PANELS: [Panel; 4] = [Panel::Obs, Panel::Min, Panel::Max, Panel::PermDist];

impl Panel {
    pub const ALL: [Panel; 6] = [
        Panel::Obs,
        Panel::Min,
        Panel::Max,
        Panel::Perm1,
        Panel::Perm2,
        Panel::PermDist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Panel::Obs => "obs",
            Panel::Min => "min",
            Panel::Max => "max",
            Panel::Perm1 => "perm1",
            Panel::Perm2 => "perm2",
            Panel::PermDist => "permdist",
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Panel {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self> {
        Panel::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            DppError::invalid(
                "panel",
                format!("{s:?} (expected obs, min, max, perm1, perm2 or permdist)"),
            )
        })
    }
}

/// Permutation index behind a score panel (`None` for the observed panel).
fn panel_perm_index(result: &DppResult, panel: Panel) -> Option<usize> {
    match panel {
        Panel::Obs | Panel::PermDist => None,
        Panel::Min => Some(result.min_perm_index),
        Panel::Max => Some(result.max_perm_index),
        Panel::Perm1 => Some(1),
        Panel::Perm2 => Some(2),
    }
}

/// Scores plotted in a score panel.
pub fn panel_scores(result: &DppResult, panel: Panel) -> Result<&ProjectionScores> {
    match panel {
        Panel::PermDist => Err(DppError::invalid("panel", "permdist has no projection scores")),
        Panel::Obs => Ok(&result.observed_scores),
        _ => {
            let idx = panel_perm_index(result, panel).unwrap_or(0);
            result
                .record(idx)
                .map(|r| &r.scores)
                .ok_or_else(|| DppError::PanelUnavailable(panel.name().to_string()))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| DppError::io(path, e))
}

/// CSV behind a panel: `score,label` rows in sample order for score panels,
/// `perm_index,statistic` for `permdist`.
pub fn emit_scores_csv(result: &DppResult, panel: Panel, path: &Path) -> Result<()> {
    let mut out = String::new();
    if panel == Panel::PermDist {
        out.push_str("perm_index,statistic\n");
        for (i, s) in result.perm_statistics.iter().enumerate() {
            let _ = writeln!(out, "{},{s}", i + 1);
        }
    } else {
        let ps = panel_scores(result, panel)?;
        out.push_str("score,label\n");
        for (s, l) in ps.scores.iter().zip(&ps.labels) {
            let _ = writeln!(out, "{s},{l}");
        }
    }
    write_file(path, &out)
}

#[derive(Serialize, Deserialize)]
struct ResultDocument {
    schema_version: u32,
    #[serde(flatten)]
    result: DppResult,
}

pub fn result_to_json(result: &DppResult) -> Result<String> {
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        result: result.clone(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| DppError::ResultFormat(e.to_string()))
}

/// Writes the versioned result document.
pub fn emit_result_json(result: &DppResult, path: &Path) -> Result<()> {
    let mut text = result_to_json(result)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn read_result_json(path: &Path) -> Result<DppResult> {
    let text = fs::read_to_string(path).map_err(|e| DppError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| DppError::ResultFormat(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(DppError::ResultFormat(format!("unsupported schema_version {v}"))),
        None => return Err(DppError::ResultFormat("missing schema_version".into())),
    }
    let doc: ResultDocument = serde_json::from_value(value).map_err(|e| DppError::ResultFormat(e.to_string()))?;
    Ok(doc.result)
}

/// `x` rounded to `digits` significant digits, plain decimal notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1) as i32;
    let render = |v: f64| {
        let mag = v.abs().log10().floor() as i32;
        if mag >= digits - 1 {
            let scale = 10f64.powi(mag - digits + 1);
            format!("{:.0}", (v / scale).round() * scale)
        } else {
            format!("{:.*}", (digits - 1 - mag) as usize, v)
        }
    };
    let first = render(x);
    // rounding can carry into a new digit (9.996 -> 10.00)
    let rounded: f64 = first.parse().unwrap_or(x);
    if rounded != 0.0 && rounded.abs().log10().floor() != x.abs().log10().floor() {
        render(rounded)
    } else {
        first
    }
}

/// Freedman–Diaconis bin count, at least 10.
pub fn default_bins(values: &[f64]) -> usize {
    const FLOOR: usize = 10;
    const CAP: usize = 200;
    if values.len() < 2 {
        return FLOOR;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if !(iqr > 0.0) || !(range > 0.0) {
        return FLOOR;
    }
    let width = 2.0 * iqr / (values.len() as f64).cbrt();
    ((range / width).ceil() as usize).clamp(FLOOR, CAP)
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 56.0;
const NEG_COLOR: &str = "#1f77b4";
const POS_COLOR: &str = "#d62728";

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn padded(lo: f64, hi: f64) -> Axis {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let pad = 0.05 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.lo) / (self.hi - self.lo) * (WIDTH - LEFT - RIGHT)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn x_axis(out: &mut String, axis: &Axis, label: &str) {
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(out, r#"<g class="axis">"#);
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    for k in 0..=4 {
        let v = axis.lo + (axis.hi - axis.lo) * k as f64 / 4.0;
        let x = axis.x(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 5.0,
            base + 18.0,
            fmt_sig(v, 3)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(label)
    );
    let _ = writeln!(out, "</g>");
}

/// Histogram of the permutation statistics with observed and cutoff markers
/// and a text block (3 significant digits).
pub fn permdist_svg(result: &DppResult, bins: Option<usize>) -> Result<String> {
    let stats = &result.perm_statistics;
    if stats.is_empty() {
        return Err(DppError::Empty);
    }
    let bins = bins.unwrap_or_else(|| default_bins(stats));
    if bins == 0 {
        return Err(DppError::invalid("bins", "must be at least 1"));
    }
    let lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo_edge, hi_edge) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let bin_width = (hi_edge - lo_edge) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in stats {
        let k = (((s - lo_edge) / bin_width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[k] += 1;
    }
    let peak = *counts.iter().max().unwrap_or(&1) as f64;

    let obs = result.observed_statistic;
    let axis = Axis::padded(lo_edge.min(obs).min(result.cutoff), hi_edge.max(obs).max(result.cutoff));
    let base = HEIGHT - BOTTOM;
    let plot_h = base - TOP - 70.0;

    let mut out = String::new();
    svg_open(&mut out, "Permutation distribution of the test statistic");
    let _ = writeln!(out, r#"<g id="histogram" fill="grey" stroke="white">"#);
    for (k, &c) in counts.iter().enumerate() {
        let x0 = axis.x(lo_edge + k as f64 * bin_width);
        let x1 = axis.x(lo_edge + (k + 1) as f64 * bin_width);
        let h = c as f64 / peak * plot_h;
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{x0:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" data-count="{c}"/>"#,
            base - h,
            x1 - x0
        );
    }
    let _ = writeln!(out, "</g>");
    for (class, value, color) in [("observed", obs, "red"), ("cutoff", result.cutoff, "black")] {
        let x = axis.x(value);
        let _ = writeln!(
            out,
            r#"<line class="marker {class}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{base:.2}" stroke="{color}" stroke-width="2" stroke-dasharray="6,4" data-value="{value}"/>"#,
            TOP + 50.0
        );
    }
    let z = result.z_score.map_or_else(|| "NA".to_string(), |z| fmt_sig(z, 3));
    let _ = writeln!(out, r#"<g id="summary" text-anchor="start">"#);
    let lines = [
        ("observed", format!("observed = {}", fmt_sig(obs, 3))),
        ("p", format!("p = {}", fmt_sig(result.p_value, 3))),
        ("z", format!("z = {z}")),
        ("cutoff", format!("cutoff = {}", fmt_sig(result.cutoff, 3))),
    ];
    for (i, (key, text)) in lines.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="stat" data-key="{key}" x="{:.2}" y="{:.2}">{text}</text>"#,
            LEFT + 8.0 + 130.0 * i as f64,
            TOP + 12.0
        );
    }
    let _ = writeln!(out, "</g>");
    x_axis(&mut out, &axis, &format!("{} statistic", result.config.statistic));
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_permdist_svg(result: &DppResult, path: &Path, bins: Option<usize>) -> Result<()> {
    write_file(path, &permdist_svg(result, bins)?)
}

/// Gaussian kernel density with Silverman's bandwidth.
fn kde(values: &[f64], grid: &[f64]) -> Vec<f64> {
    let bw = silverman_bandwidth(values);
    let norm = 1.0 / (values.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&g| {
            values
                .iter()
                .map(|&v| {
                    let u = (g - v) / bw;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sd = if values.len() > 1 { variance(values).sqrt() } else { 0.0 };
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => {
            let m = sorted[0].abs();
            if m > 0.0 {
                1e-3 * m
            } else {
                1e-3
            }
        }
    };
    0.9 * spread * n.powf(-0.2)
}

pub const KDE_GRID: usize = 256;

fn panel_title(result: &DppResult, panel: Panel) -> String {
    match panel_perm_index(result, panel) {
        None => "Observed projection scores".to_string(),
        Some(b) => {
            let which = match panel {
                Panel::Min => " (smallest statistic)",
                Panel::Max => " (largest statistic)",
                _ => "",
            };
            format!("Permutation {b}{which}")
        }
    }
}

/// Jittered 1-D scatter of the scores with per-class density curves and
/// class-mean markers.
pub fn score_panel_svg(result: &DppResult, panel: Panel) -> Result<String> {
    let ps = panel_scores(result, panel)?;
    let (neg, pos) = ps.split();
    let lo = ps.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ps.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let reach = 3.0 * silverman_bandwidth(&neg).max(silverman_bandwidth(&pos));
    let axis = Axis::padded(lo - reach, hi + reach);

    let grid: Vec<f64> = (0..KDE_GRID)
        .map(|k| axis.lo + (axis.hi - axis.lo) * k as f64 / (KDE_GRID - 1) as f64)
        .collect();
    let dens_neg = kde(&neg, &grid);
    let dens_pos = kde(&pos, &grid);
    let peak = dens_neg
        .iter()
        .chain(&dens_pos)
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let base = HEIGHT - BOTTOM;
    let strip_top = base - 70.0;
    let curve_base = strip_top - 10.0;
    let curve_h = curve_base - TOP - 10.0;

    let mut out = String::new();
    svg_open(&mut out, &panel_title(result, panel));

    for (class, dens, color) in [("negative", &dens_neg, NEG_COLOR), ("positive", &dens_pos, POS_COLOR)] {
        let mut d = String::new();
        for (k, (&g, &v)) in grid.iter().zip(dens.iter()).enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if k == 0 { "M" } else { " L" },
                axis.x(g),
                curve_base - v / peak * curve_h
            );
        }
        let _ = writeln!(
            out,
            r#"<path class="density {class}" d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
    }

    // jitter seed depends only on the panel, so re-emission is byte-identical
    let seed = 0x5eed_0000_u64 ^ ((panel as u64) << 40) ^ panel_perm_index(result, panel).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _ = writeln!(out, r#"<g id="points" fill-opacity="0.7">"#);
    for (s, l) in ps.scores.iter().zip(&ps.labels) {
        let (class, color) = match l {
            Label::Negative => ("negative", NEG_COLOR),
            Label::Positive => ("positive", POS_COLOR),
        };
        let y = strip_top + 8.0 + rng.random::<f64>() * 50.0;
        let _ = writeln!(
            out,
            r#"<circle class="point {class}" cx="{:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#,
            axis.x(*s)
        );
    }
    let _ = writeln!(out, "</g>");

    for (class, values, color) in [("negative", &neg, NEG_COLOR), ("positive", &pos, POS_COLOR)] {
        let m = mean(values);
        let x = axis.x(m);
        let _ = writeln!(
            out,
            r#"<line class="mean {class}" x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{base:.2}" stroke="{color}" stroke-dasharray="3,3" data-mean="{m}"/>"#
        );
    }
    let mut sorted_neg = neg.clone();
    let mut sorted_pos = pos.clone();
    let _ = writeln!(
        out,
        r#"<text class="legend" x="{:.2}" y="{:.2}">-1 (n={}, median {})   +1 (n={}, median {})</text>"#,
        LEFT,
        TOP,
        neg.len(),
        fmt_sig(median(&mut sorted_neg), 3),
        pos.len(),
        fmt_sig(median(&mut sorted_pos), 3)
    );
    x_axis(&mut out, &axis, "projection score");
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_score_panel_svg(result: &DppResult, panel: Panel, path: &Path) -> Result<()> {
    write_file(path, &score_panel_svg(result, panel)?)
}

/// Writes `<panel>.csv` and `<panel>.svg` for each panel into `out_dir`.
/// All panels are checked for availability before anything is written.
pub fn emit_panels(result: &DppResult, panels: &[Panel], out_dir: &Path) -> Result<Vec<PathBuf>> {
    for &panel in panels {
        if panel != Panel::PermDist {
            panel_scores(result, panel)?;
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| DppError::io(out_dir, e))?;
    let mut written = Vec::new();
    for &panel in panels {
        let csv = out_dir.join(format!("{panel}.csv"));
        let svg = out_dir.join(format!("{panel}.svg"));
        emit_scores_csv(result, panel, &csv)?;
        if panel == Panel::PermDist {
            emit_permdist_svg(result, &svg, None)?;
        } else {
            emit_score_panel_svg(result, panel, &svg)?;
        }
        written.push(csv);
        written.push(svg);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(13.2149, 3), "13.2");
        assert_eq!(fmt_sig(0.67812, 3), "0.678");
        assert_eq!(fmt_sig(0.0, 3), "0");
        assert_eq!(fmt_sig(0.001, 3), "0.00100");
        assert_eq!(fmt_sig(9.996, 3), "10.0");
        assert_eq!(fmt_sig(-2.12441, 3), "-2.12");
        assert_eq!(fmt_sig(123456.0, 3), "123000");
        assert_eq!(fmt_sig(999.7, 3), "1000");
    }

    #[test]
    fn bins_have_floor() {
        assert_eq!(default_bins(&[1.0, 1.0, 1.0]), 10);
        let many: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(default_bins(&many) >= 10);
    }

    #[test]
    fn panel_names() {
        for p in Panel::ALL {
            assert_eq!(p.name().parse::<Panel>().unwrap(), p);
        }
        assert!("facet".parse::<Panel>().is_err());
    }

    #[test]
    fn silverman_positive() {
        assert!(silverman_bandwidth(&[2.0, 2.0, 2.0]) > 0.0);
        assert!(silverman_bandwidth(&[0.0]) > 0.0);
        let d = kde(&[0.0, 1.0], &[0.5]);
        assert!(d[0] > 0.0);
    }
}
