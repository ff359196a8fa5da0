//! Deterministic SVG rendering of the four figure families, plus the plain
//! text report.
//!
//! Faceting mirrors the measurement layout: panel rows are nodes, panel
//! columns are cpu packages (`core / cores_per_package`). The series key is
//! either the scheme or the mask width. Box-plot geometry comes from the
//! same quantile code as [`crate::analysis::summarize`], and every box also
//! carries its five numbers as `data-*` attributes so parity with the
//! summary file can be checked textually. Output bytes depend only on the
//! input files: no timestamps, no environment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{quantile_sorted, AnalysisError, SummaryRow, Verdict};
use crate::trace::{read_durations, read_freqs, DurationRecord, FreqRecord, TraceError};

pub const DEFAULT_CORES_PER_PACKAGE: u32 = 16;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;
const LEGEND_W: f64 = 180.0;

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("empty selection: no rows to plot")]
    EmptySelection,
    #[error("unknown plot kind {0:?}")]
    UnknownKind(String),
    #[error("plot kind {kind} needs the {input} input")]
    MissingInput { kind: &'static str, input: &'static str },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The four figure families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    DurationTimeline,
    DurationBox,
    FreqTimeline,
    FreqDensity,
}

impl PlotKind {
    pub fn all() -> [PlotKind; 4] {
        [
            PlotKind::DurationTimeline,
            PlotKind::DurationBox,
            PlotKind::FreqTimeline,
            PlotKind::FreqDensity,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::DurationTimeline => "duration_timeline",
            PlotKind::DurationBox => "duration_box",
            PlotKind::FreqTimeline => "freq_timeline",
            PlotKind::FreqDensity => "freq_density",
        }
    }
}

impl FromStr for PlotKind {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duration_timeline" => Ok(PlotKind::DurationTimeline),
            "duration_box" => Ok(PlotKind::DurationBox),
            "freq_timeline" => Ok(PlotKind::FreqTimeline),
            "freq_density" => Ok(PlotKind::FreqDensity),
            other => Err(ReportError::UnknownKind(other.to_string())),
        }
    }
}

/// Which trace column labels the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKey {
    Scheme,
    MaskBits,
}

/// One plot request.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub series: SeriesKey,
    pub durations_path: Option<PathBuf>,
    pub freq_path: Option<PathBuf>,
    pub cores_per_package: u32,
    pub output_path: PathBuf,
}

pub fn plot_filename(kind: PlotKind, run_id: &str) -> String {
    format!("{}_{}.svg", kind.name(), run_id)
}

pub fn report_filename(run_id: &str) -> String {
    format!("report_{run_id}.txt")
}

fn series_label(record: &DurationRecord, key: SeriesKey) -> String {
    match key {
        SeriesKey::Scheme => record.scheme.clone(),
        SeriesKey::MaskBits => match record.mask_bits {
            Some(m) => format!("mask:{m}"),
            None => record.scheme.clone(),
        },
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Six significant digits, enough for pixel coordinates, and stable.
fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    // Trim trailing zeros so byte output stays tidy and deterministic.
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() || trimmed == "-" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

#[derive(Debug, Clone, Copy)]
struct LinScale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl LinScale {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if (d1 - d0).abs() < f64::EPSILON {
            (d0 - 0.5, d1 + 0.5)
        } else {
            (d0, d1)
        };
        Self { d0, d1, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.d0 + (self.d1 - self.d0) * i as f64 / n as f64)
            .collect()
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

#[allow(clippy::too_many_arguments)]
impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="{}"{}/>"#,
            px(x),
            px(y),
            px(w),
            px(h),
            fill,
            stroke,
            extra
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"/>"#,
            px(x1),
            px(y1),
            px(x2),
            px(y2),
            stroke,
            px(width)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            px(x),
            px(y),
            px(r),
            fill
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let pts: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", px(x), px(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            pts.join(" "),
            stroke,
            px(width)
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" font-family="monospace" text-anchor="{}">{}</text>"#,
            px(x),
            px(y),
            px(size),
            anchor,
            xml_escape(content)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            px(self.width),
            px(self.height),
            px(self.width),
            px(self.height),
            self.body
        )
    }
}

type Facet = (String, u32);

fn facet_of(node: &str, core: u32, cores_per_package: u32) -> Facet {
    (node.to_string(), core / cores_per_package.max(1))
}

struct Layout {
    facets: Vec<Facet>,
    nodes: Vec<String>,
    packages: Vec<u32>,
    width: f64,
    height: f64,
}

fn layout(facets: BTreeSet<Facet>) -> Layout {
    let nodes: Vec<String> = facets
        .iter()
        .map(|(n, _)| n.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let packages: Vec<u32> = facets
        .iter()
        .map(|&(_, p)| p)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let width = MARGIN_L + packages.len() as f64 * (PANEL_W + MARGIN_R) + LEGEND_W;
    let height = MARGIN_T + nodes.len() as f64 * (PANEL_H + MARGIN_B);
    Layout {
        facets: facets.into_iter().collect(),
        nodes,
        packages,
        width,
        height,
    }
}

impl Layout {
    fn panel_origin(&self, facet: &Facet) -> (f64, f64) {
        let row = self.nodes.iter().position(|n| *n == facet.0).unwrap_or(0);
        let col = self.packages.iter().position(|p| *p == facet.1).unwrap_or(0);
        (
            MARGIN_L + col as f64 * (PANEL_W + MARGIN_R),
            MARGIN_T + row as f64 * (PANEL_H + MARGIN_B),
        )
    }
}

fn color_for(labels: &[String], label: &str) -> &'static str {
    let idx = labels.iter().position(|l| l == label).unwrap_or(0);
    PALETTE[idx % PALETTE.len()]
}

fn draw_legend(svg: &mut Svg, layout: &Layout, labels: &[String]) {
    let x = layout.width - LEGEND_W + 12.0;
    let mut y = MARGIN_T + 8.0;
    for label in labels {
        svg.rect(x, y - 9.0, 12.0, 12.0, color_for(labels, label), "none", "");
        svg.text(x + 18.0, y + 1.0, 11.0, "start", label);
        y += 18.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn draw_panel_frame(
    svg: &mut Svg,
    origin: (f64, f64),
    facet: &Facet,
    xs: &LinScale,
    ys: &LinScale,
    x_label: &str,
    y_label: &str,
    x_unit_scale: f64,
    y_unit_scale: f64,
) {
    let (ox, oy) = origin;
    svg.rect(ox, oy, PANEL_W, PANEL_H, "none", "#333333", "");
    svg.text(
        ox + PANEL_W / 2.0,
        oy - 8.0,
        12.0,
        "middle",
        &format!("{} / package {}", facet.0, facet.1),
    );
    for tick in xs.ticks(4) {
        let tx = xs.map(tick);
        svg.line(tx, oy + PANEL_H, tx, oy + PANEL_H + 4.0, "#333333", 1.0);
        svg.text(
            tx,
            oy + PANEL_H + 16.0,
            10.0,
            "middle",
            &format!("{:.3}", tick * x_unit_scale),
        );
    }
    for tick in ys.ticks(4) {
        let ty = ys.map(tick);
        svg.line(ox - 4.0, ty, ox, ty, "#333333", 1.0);
        svg.text(
            ox - 6.0,
            ty + 3.0,
            10.0,
            "end",
            &format!("{:.3}", tick * y_unit_scale),
        );
    }
    svg.text(
        ox + PANEL_W / 2.0,
        oy + PANEL_H + 32.0,
        11.0,
        "middle",
        x_label,
    );
    svg.text(ox - 48.0, oy - 8.0, 11.0, "start", y_label);
}

/// Render one plot to its SVG file. Nothing is written when the selection
/// is empty or an input is unreadable.
pub fn render(spec: &PlotSpec) -> Result<(), ReportError> {
    let svg = match spec.kind {
        PlotKind::DurationTimeline => duration_timeline(spec)?,
        PlotKind::DurationBox => duration_box(spec)?,
        PlotKind::FreqTimeline => freq_plot(spec, false)?,
        PlotKind::FreqDensity => freq_plot(spec, true)?,
    };
    fs::write(&spec.output_path, svg).map_err(|source| ReportError::Io {
        path: spec.output_path.clone(),
        source,
    })
}

fn load_durations(spec: &PlotSpec) -> Result<Vec<DurationRecord>, ReportError> {
    let path = spec
        .durations_path
        .as_ref()
        .ok_or(ReportError::MissingInput {
            kind: spec.kind.name(),
            input: "durations",
        })?;
    let rows = read_durations(path)?;
    if rows.is_empty() {
        return Err(ReportError::EmptySelection);
    }
    Ok(rows)
}

fn duration_timeline(spec: &PlotSpec) -> Result<String, ReportError> {
    let rows = load_durations(spec)?;
    let labels: Vec<String> = rows
        .iter()
        .map(|r| series_label(r, spec.series))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let facets: BTreeSet<Facet> = rows
        .iter()
        .map(|r| facet_of(&r.node, r.core, spec.cores_per_package))
        .collect();
    let layout = layout(facets);

    let t_max = rows
        .iter()
        .map(|r| r.start_ns + r.duration_ns)
        .max()
        .unwrap_or(1) as f64;
    let d_max = rows.iter().map(|r| r.duration_ns).max().unwrap_or(1) as f64;

    let mut svg = Svg::new(layout.width, layout.height);
    for facet in &layout.facets {
        let origin = layout.panel_origin(facet);
        let xs = LinScale::new(0.0, t_max, origin.0, origin.0 + PANEL_W);
        let ys = LinScale::new(0.0, d_max * 1.05, origin.1 + PANEL_H, origin.1);
        draw_panel_frame(
            &mut svg,
            origin,
            facet,
            &xs,
            &ys,
            "time [s]",
            "duration [s]",
            1e-9,
            1e-9,
        );
        for row in &rows {
            if facet_of(&row.node, row.core, spec.cores_per_package) != *facet {
                continue;
            }
            let label = series_label(row, spec.series);
            svg.circle(
                xs.map(row.start_ns as f64),
                ys.map(row.duration_ns as f64),
                1.6,
                color_for(&labels, &label),
            );
        }
    }
    draw_legend(&mut svg, &layout, &labels);
    Ok(svg.finish())
}

fn duration_box(spec: &PlotSpec) -> Result<String, ReportError> {
    let rows = load_durations(spec)?;
    let labels: Vec<String> = rows
        .iter()
        .map(|r| series_label(r, spec.series))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let facets: BTreeSet<Facet> = rows
        .iter()
        .map(|r| facet_of(&r.node, r.core, spec.cores_per_package))
        .collect();
    let layout = layout(facets);

    // Per (facet, series) duration samples.
    let mut groups: BTreeMap<(Facet, String), Vec<f64>> = BTreeMap::new();
    for row in &rows {
        let facet = facet_of(&row.node, row.core, spec.cores_per_package);
        let label = series_label(row, spec.series);
        groups
            .entry((facet, label))
            .or_default()
            .push(row.duration_ns as f64);
    }
    let d_max = rows.iter().map(|r| r.duration_ns).max().unwrap_or(1) as f64;

    let mut svg = Svg::new(layout.width, layout.height);
    for facet in &layout.facets {
        let origin = layout.panel_origin(facet);
        let xs = LinScale::new(0.0, labels.len() as f64, origin.0, origin.0 + PANEL_W);
        let ys = LinScale::new(0.0, d_max * 1.05, origin.1 + PANEL_H, origin.1);
        draw_panel_frame(
            &mut svg,
            origin,
            facet,
            &xs,
            &ys,
            "scheme",
            "duration [s]",
            1.0 / labels.len().max(1) as f64,
            1e-9,
        );
        for (i, label) in labels.iter().enumerate() {
            let Some(values) = groups.get(&(facet.clone(), label.clone())) else {
                continue;
            };
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let min = sorted[0];
            let q1 = quantile_sorted(&sorted, 0.25);
            let median = quantile_sorted(&sorted, 0.5);
            let q3 = quantile_sorted(&sorted, 0.75);
            let max = sorted[sorted.len() - 1];

            let cx = xs.map(i as f64 + 0.5);
            let half = PANEL_W / labels.len() as f64 * 0.3;
            let color = color_for(&labels, label);
            // Whiskers, box, median; the five numbers ride along as data
            // attributes for textual parity checks against the summary CSV.
            svg.line(cx, ys.map(min), cx, ys.map(q1), color, 1.0);
            svg.line(cx, ys.map(q3), cx, ys.map(max), color, 1.0);
            svg.line(cx - half / 2.0, ys.map(min), cx + half / 2.0, ys.map(min), color, 1.0);
            svg.line(cx - half / 2.0, ys.map(max), cx + half / 2.0, ys.map(max), color, 1.0);
            svg.rect(
                cx - half,
                ys.map(q3),
                2.0 * half,
                (ys.map(q1) - ys.map(q3)).abs(),
                "none",
                color,
                &format!(
                    r#" data-series="{}" data-min="{min}" data-q1="{q1}" data-median="{median}" data-q3="{q3}" data-max="{max}""#,
                    xml_escape(label)
                ),
            );
            svg.line(cx - half, ys.map(median), cx + half, ys.map(median), color, 2.0);
        }
    }
    draw_legend(&mut svg, &layout, &labels);
    Ok(svg.finish())
}

/// Shared implementation of the two frequency figures: timelines of
/// per-core samples, or binned densities, both labelled by scheme segments
/// from the companion durations file when it is available.
fn freq_plot(spec: &PlotSpec, density: bool) -> Result<String, ReportError> {
    let freq_path = spec.freq_path.as_ref().ok_or(ReportError::MissingInput {
        kind: spec.kind.name(),
        input: "freq",
    })?;
    let samples = read_freqs(freq_path)?;
    if samples.is_empty() {
        return Err(ReportError::EmptySelection);
    }
    let durations = match &spec.durations_path {
        Some(path) => read_durations(path)?,
        None => Vec::new(),
    };

    // Scheme segments per core: label = series of the duration rows whose
    // window covers the sample.
    struct Segment {
        core: u32,
        t0: u64,
        t1: u64,
        label: String,
        node: String,
    }
    let mut segments: Vec<Segment> = Vec::new();
    {
        let mut agg: BTreeMap<(u32, String, String), (u64, u64)> = BTreeMap::new();
        for row in &durations {
            let key = (row.core, series_label(row, spec.series), row.node.clone());
            let end = row.start_ns + row.duration_ns;
            agg.entry(key)
                .and_modify(|(t0, t1)| {
                    *t0 = (*t0).min(row.start_ns);
                    *t1 = (*t1).max(end);
                })
                .or_insert((row.start_ns, end));
        }
        for ((core, label, node), (t0, t1)) in agg {
            segments.push(Segment {
                core,
                t0,
                t1,
                label,
                node,
            });
        }
    }

    let label_of = |rec: &FreqRecord| -> (String, String) {
        if segments.is_empty() {
            return (format!("core{}", rec.core), "trace".to_string());
        }
        for seg in &segments {
            if seg.core == rec.core && (seg.t0..=seg.t1).contains(&rec.timestamp_ns) {
                return (seg.label.clone(), seg.node.clone());
            }
        }
        (String::new(), String::new())
    };

    // (facet, label) -> samples; unlabeled samples are dropped when scheme
    // segments exist.
    let mut grouped: BTreeMap<(Facet, String), Vec<(u64, u64)>> = BTreeMap::new();
    for rec in &samples {
        let (label, node) = label_of(rec);
        if label.is_empty() {
            continue;
        }
        let facet = facet_of(&node, rec.core, spec.cores_per_package);
        grouped
            .entry((facet, label))
            .or_default()
            .push((rec.timestamp_ns, rec.frequency_khz));
    }
    if grouped.is_empty() {
        return Err(ReportError::EmptySelection);
    }

    let labels: Vec<String> = grouped
        .keys()
        .map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let facets: BTreeSet<Facet> = grouped.keys().map(|(f, _)| f.clone()).collect();
    let layout = layout(facets);

    let f_min = samples.iter().map(|s| s.frequency_khz).min().unwrap() as f64;
    let f_max = samples.iter().map(|s| s.frequency_khz).max().unwrap() as f64;
    let t_max = samples.iter().map(|s| s.timestamp_ns).max().unwrap() as f64;

    let mut svg = Svg::new(layout.width, layout.height);
    for facet in &layout.facets {
        let origin = layout.panel_origin(facet);
        if density {
            // 100 MHz bins spanning the observed range.
            let bin = 100_000f64;
            let lo = (f_min / bin).floor() * bin;
            let hi = (f_max / bin).floor() * bin + bin;
            let bins = ((hi - lo) / bin) as usize;
            let mut max_frac = 0.0f64;
            let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
            for label in &labels {
                if let Some(pts) = grouped.get(&(facet.clone(), label.clone())) {
                    let mut counts = vec![0usize; bins];
                    for &(_, khz) in pts {
                        let idx = (((khz as f64 - lo) / bin) as usize).min(bins - 1);
                        counts[idx] += 1;
                    }
                    let total = pts.len() as f64;
                    let fracs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
                    max_frac = max_frac.max(fracs.iter().cloned().fold(0.0, f64::max));
                    curves.push((label.clone(), fracs));
                }
            }
            let xs = LinScale::new(lo, hi, origin.0, origin.0 + PANEL_W);
            let ys = LinScale::new(0.0, (max_frac * 1.1).max(0.1), origin.1 + PANEL_H, origin.1);
            draw_panel_frame(
                &mut svg,
                origin,
                facet,
                &xs,
                &ys,
                "frequency [GHz]",
                "fraction",
                1e-6,
                1.0,
            );
            for (label, fracs) in &curves {
                let color = color_for(&labels, label);
                let mut points = Vec::new();
                for (i, frac) in fracs.iter().enumerate() {
                    let x0 = lo + i as f64 * bin;
                    points.push((xs.map(x0), ys.map(*frac)));
                    points.push((xs.map(x0 + bin), ys.map(*frac)));
                }
                svg.polyline(&points, color, 1.5);
            }
        } else {
            let xs = LinScale::new(0.0, t_max, origin.0, origin.0 + PANEL_W);
            let ys = LinScale::new(f_min * 0.95, f_max * 1.05, origin.1 + PANEL_H, origin.1);
            draw_panel_frame(
                &mut svg,
                origin,
                facet,
                &xs,
                &ys,
                "time [s]",
                "frequency [GHz]",
                1e-9,
                1e-6,
            );
            for label in &labels {
                if let Some(pts) = grouped.get(&(facet.clone(), label.clone())) {
                    let mut pts = pts.clone();
                    pts.sort_by_key(|&(ts, _)| ts);
                    let line: Vec<(f64, f64)> = pts
                        .iter()
                        .map(|&(ts, khz)| (xs.map(ts as f64), ys.map(khz as f64)))
                        .collect();
                    svg.polyline(&line, color_for(&labels, label), 1.2);
                }
            }
        }
    }
    draw_legend(&mut svg, &layout, &labels);
    Ok(svg.finish())
}

/// Fixed-width table of summary rows followed by one verdict line each.
/// Column widths are the per-column maxima, so identical inputs give
/// identical bytes.
pub fn text_report(summary: &[SummaryRow], verdicts: &[Verdict]) -> String {
    const HEADERS: [&str; 12] = [
        "node",
        "core",
        "scheme",
        "mask",
        "n",
        "min_ns",
        "q1_ns",
        "median_ns",
        "q3_ns",
        "max_ns",
        "mean_ns",
        "freq_median_khz",
    ];
    let cells: Vec<[String; 12]> = summary
        .iter()
        .map(|r| {
            [
                r.node.clone().unwrap_or_else(|| "-".into()),
                r.group_core.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
                r.scheme.clone().unwrap_or_else(|| "-".into()),
                r.mask_bits.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
                r.n.to_string(),
                r.min_ns.to_string(),
                r.q1_ns.to_string(),
                r.median_ns.to_string(),
                r.q3_ns.to_string(),
                r.max_ns.to_string(),
                r.mean_ns.to_string(),
                r.freq_median_khz
                    .map(|f| f.to_string())
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cols: &[String]| -> String {
        cols.iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header: Vec<String> = HEADERS.iter().map(|h| h.to_string()).collect();
    out.push_str(&fmt_row(&header));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &cells {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out.push('\n');
    for verdict in verdicts {
        out.push_str(&verdict.to_string());
        out.push('\n');
    }
    out
}

pub fn write_text_report(
    summary: &[SummaryRow],
    verdicts: &[Verdict],
    path: &Path,
) -> Result<(), ReportError> {
    fs::write(path, text_report(summary, verdicts)).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{summarize, without_freq, GroupKey};
    use crate::datagen::InitSpec;
    use crate::flipmodel::{simulate_experiment, PowerModel, SimConfig};

    fn sim_artifacts(dir: &Path) -> crate::trace::RunArtifacts {
        let cfg = SimConfig {
            model: PowerModel::default(),
            active_cores: 4,
            schemes: vec![
                InitSpec::constant(1.0).unwrap(),
                InitSpec::Sequential,
                InitSpec::Random { seed: 3 },
            ],
            calls: 8,
            matrix_order: 32,
            noise_rel: 0.0,
            seed: 3,
        };
        simulate_experiment(&cfg, dir).unwrap()
    }

    fn spec_for(kind: PlotKind, arts: &crate::trace::RunArtifacts, out: PathBuf) -> PlotSpec {
        PlotSpec {
            kind,
            series: SeriesKey::Scheme,
            durations_path: Some(arts.durations_path.clone()),
            freq_path: Some(arts.freq_path.clone()),
            cores_per_package: 2,
            output_path: out,
        }
    }

    #[test]
    fn all_kinds_render_deterministic_svg() {
        let dir = tempfile::tempdir().unwrap();
        let arts = sim_artifacts(&dir.path().join("sim"));
        for kind in PlotKind::all() {
            let out1 = dir.path().join(plot_filename(kind, "t1"));
            let out2 = dir.path().join(plot_filename(kind, "t2"));
            render(&spec_for(kind, &arts, out1.clone())).unwrap();
            render(&spec_for(kind, &arts, out2.clone())).unwrap();
            let b1 = fs::read(&out1).unwrap();
            let b2 = fs::read(&out2).unwrap();
            assert!(!b1.is_empty());
            assert_eq!(b1, b2, "{kind:?} not byte-stable");
            let text = String::from_utf8(b1).unwrap();
            assert!(text.starts_with("<svg"));
            assert!(text.trim_end().ends_with("</svg>"));
        }
    }

    #[test]
    fn box_plot_embeds_summarize_quartiles() {
        let dir = tempfile::tempdir().unwrap();
        let arts = sim_artifacts(&dir.path().join("sim"));
        let out = dir.path().join("box.svg");
        render(&spec_for(PlotKind::DurationBox, &arts, out.clone())).unwrap();
        let svg = fs::read_to_string(&out).unwrap();

        // Panels pool two cores each; compare one series' data attributes
        // against an equivalent summarize() on the same selection.
        let rows = crate::trace::read_durations(&arts.durations_path).unwrap();
        let pkg0: Vec<_> = rows.into_iter().filter(|r| r.core < 2).collect();
        let summary = summarize(&without_freq(pkg0), &[GroupKey::Scheme]).unwrap();
        for row in &summary {
            let scheme = row.scheme.clone().unwrap();
            let needle = format!(
                r#"data-series="{}" data-min="{}" data-q1="{}" data-median="{}" data-q3="{}" data-max="{}""#,
                scheme, row.min_ns, row.q1_ns, row.median_ns, row.q3_ns, row.max_ns
            );
            assert!(
                svg.contains(&needle),
                "summary quartiles not embedded for {scheme}: {needle}"
            );
        }
    }

    #[test]
    fn empty_selection_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let durations = dir.path().join("durations.csv");
        fs::write(&durations, format!("{}\n", crate::trace::DURATIONS_HEADER)).unwrap();
        let out = dir.path().join("plot.svg");
        let spec = PlotSpec {
            kind: PlotKind::DurationTimeline,
            series: SeriesKey::Scheme,
            durations_path: Some(durations),
            freq_path: None,
            cores_per_package: 16,
            output_path: out.clone(),
        };
        assert!(matches!(
            render(&spec),
            Err(ReportError::EmptySelection)
        ));
        assert!(!out.exists());
        assert!("badkind".parse::<PlotKind>().is_err());
    }

    #[test]
    fn text_report_is_stable_and_complete() {
        let summary = vec![SummaryRow {
            node: Some("sim".into()),
            group_core: None,
            scheme: Some("random".into()),
            mask_bits: None,
            n: 5,
            min_ns: 1.0,
            q1_ns: 2.0,
            median_ns: 3.0,
            q3_ns: 4.0,
            max_ns: 5.0,
            mean_ns: 3.0,
            freq_median_khz: Some(2_400_000.0),
        }];
        let verdicts = vec![Verdict {
            name: "ordering_check".into(),
            pass: true,
            statistic: 12.5,
            detail: "gap=12.5".into(),
        }];
        let r1 = text_report(&summary, &verdicts);
        let r2 = text_report(&summary, &verdicts);
        assert_eq!(r1, r2);
        assert!(r1.contains("ordering_check: PASS (gap=12.5)"));
        assert!(r1.contains("median_ns"));
        assert!(r1.contains("2400000"));

        // Zero verdicts: header-only report still renders.
        let r3 = text_report(&summary, &[]);
        assert!(r3.contains("median_ns"));
    }
}
