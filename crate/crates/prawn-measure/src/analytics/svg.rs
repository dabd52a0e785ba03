//! Deterministic SVG rendering for the growth report. Plain string assembly
//! with fixed-precision coordinates; identical inputs give identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::analytics::{
    length_histogram, summarize_by_doc, Measurement, PondTrend, RejectionStats, ReportOptions,
    Source,
};

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_B: f64 = 36.0;
const MARGIN_T: f64 = 28.0;
const GAP: f64 = 24.0;

fn source_colour(s: Source) -> &'static str {
    match s {
        Source::Cv => "#1f77b4",
        Source::CvTracked => "#2ca02c",
        Source::FeedTraySample => "#ff7f0e",
        Source::CastNet => "#d62728",
    }
}

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64) -> Self {
        Canvas {
            body: String::new(),
            width,
            height: 0.0,
        }
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, fill: &str, s: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}" fill="{fill}">{s}</text>"#
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        )
        .unwrap();
    }

    fn dashed_line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1.00" stroke-dasharray="4 3"/>"#
        )
        .unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}" stroke-width="1.00"/>"#
        )
        .unwrap();
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" fill-opacity="0.7"/>"#
        )
        .unwrap();
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Linear data→pixel mapping for one panel.
struct Scale {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        let span = (self.max_x - self.min_x).max(1e-9);
        self.x0 + (v - self.min_x) / span * self.w
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.max_y - self.min_y).max(1e-9);
        self.y0 + self.h - (v - self.min_y) / span * self.h
    }
}

fn axes(canvas: &mut Canvas, s: &Scale, title: &str, x_label: &str, y_label: &str) {
    canvas.text(s.x0, s.y0 - 8.0, 13, "start", "#000000", title);
    canvas.line(s.x0, s.y0, s.x0, s.y0 + s.h, "#333333", 1.0);
    canvas.line(s.x0, s.y0 + s.h, s.x0 + s.w, s.y0 + s.h, "#333333", 1.0);
    canvas.text(
        s.x0 + s.w / 2.0,
        s.y0 + s.h + 26.0,
        11,
        "middle",
        "#333333",
        x_label,
    );
    canvas.text(s.x0 - 50.0, s.y0 + 10.0, 11, "start", "#333333", y_label);
    for i in 0..=4 {
        let vy = s.min_y + (s.max_y - s.min_y) * i as f64 / 4.0;
        let py = s.y(vy);
        canvas.line(s.x0 - 3.0, py, s.x0, py, "#333333", 1.0);
        canvas.text(s.x0 - 6.0, py + 4.0, 10, "end", "#333333", &format!("{vy:.0}"));
        let vx = s.min_x + (s.max_x - s.min_x) * i as f64 / 4.0;
        let px = s.x(vx);
        canvas.line(px, s.y0 + s.h, px, s.y0 + s.h + 3.0, "#333333", 1.0);
        canvas.text(
            px,
            s.y0 + s.h + 14.0,
            10,
            "middle",
            "#333333",
            &format!("{vx:.0}"),
        );
    }
}

fn length_bounds(ms: &[Measurement]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in ms {
        lo = lo.min(m.length_mm);
        hi = hi.max(m.length_mm);
    }
    let pad = ((hi - lo) * 0.08).max(1.0);
    (lo - pad, hi + pad)
}

fn doc_bounds(ms: &[Measurement]) -> (f64, f64) {
    let mut lo = u32::MAX;
    let mut hi = 0u32;
    for m in ms {
        lo = lo.min(m.doc);
        hi = hi.max(m.doc);
    }
    ((lo as f64 - 1.0).max(0.0), hi as f64 + 1.0)
}

pub(crate) fn render(
    measurements: &[Measurement],
    trends: &[PondTrend],
    rejections: Option<RejectionStats>,
    options: &ReportOptions,
) -> String {
    let width = MARGIN_L + PANEL_W + 200.0;
    let mut canvas = Canvas::new(width);
    let mut cursor = MARGIN_T;

    let mut ponds: Vec<&str> = measurements.iter().map(|m| m.pond_id.as_str()).collect();
    ponds.sort_unstable();
    ponds.dedup();
    let ponds: Vec<String> = ponds.into_iter().map(str::to_string).collect();

    // Section 1: per-pond scatter with per-source trendlines.
    for pond in &ponds {
        let subset: Vec<Measurement> = measurements
            .iter()
            .filter(|m| m.pond_id == *pond)
            .cloned()
            .collect();
        let (min_y, max_y) = length_bounds(&subset);
        let (min_x, max_x) = doc_bounds(&subset);
        let scale = Scale {
            x0: MARGIN_L,
            y0: cursor,
            w: PANEL_W,
            h: PANEL_H,
            min_x,
            max_x,
            min_y,
            max_y,
        };
        axes(
            &mut canvas,
            &scale,
            &format!("Pond {pond}: length vs day of culture"),
            "day of culture",
            "length (mm)",
        );
        for m in &subset {
            canvas.circle(
                scale.x(m.doc as f64),
                scale.y(m.length_mm),
                2.4,
                source_colour(m.source),
            );
        }
        for t in trends.iter().filter(|t| t.pond_id == *pond) {
            let y1 = t.trend.intercept + t.trend.slope * min_x;
            let y2 = t.trend.intercept + t.trend.slope * max_x;
            canvas.line(
                scale.x(min_x),
                scale.y(y1.clamp(min_y, max_y)),
                scale.x(max_x),
                scale.y(y2.clamp(min_y, max_y)),
                source_colour(t.source),
                1.6,
            );
        }
        // Legend.
        let mut ly = cursor + 12.0;
        for source in Source::ALL {
            if subset.iter().any(|m| m.source == source) {
                let lx = MARGIN_L + PANEL_W + 16.0;
                canvas.rect(lx, ly - 8.0, 10.0, 10.0, source_colour(source), "none");
                canvas.text(lx + 14.0, ly, 10, "start", "#333333", source.as_str());
                ly += 16.0;
            }
        }
        cursor += PANEL_H + MARGIN_B + GAP;
    }

    // Section 2: per-source box plots by DOC, ponds pooled.
    for source in Source::ALL {
        let subset: Vec<Measurement> = measurements
            .iter()
            .filter(|m| m.source == source)
            .map(|m| Measurement {
                pond_id: "all".into(),
                ..m.clone()
            })
            .collect();
        if subset.is_empty() {
            continue;
        }
        let summaries = summarize_by_doc(&subset, Some(source));
        let (min_y, max_y) = length_bounds(&subset);
        let (min_x, max_x) = doc_bounds(&subset);
        let scale = Scale {
            x0: MARGIN_L,
            y0: cursor,
            w: PANEL_W,
            h: PANEL_H,
            min_x,
            max_x,
            min_y,
            max_y,
        };
        axes(
            &mut canvas,
            &scale,
            &format!("{} lengths by day of culture (box plots)", source.as_str()),
            "day of culture",
            "length (mm)",
        );
        let half = 6.0;
        for s in &summaries {
            let cx = scale.x(s.doc as f64);
            let colour = source_colour(source);
            canvas.line(cx, scale.y(s.whisker_lo), cx, scale.y(s.q1), colour, 1.0);
            canvas.line(cx, scale.y(s.q3), cx, scale.y(s.whisker_hi), colour, 1.0);
            canvas.rect(
                cx - half,
                scale.y(s.q3),
                half * 2.0,
                (scale.y(s.q1) - scale.y(s.q3)).max(0.5),
                "none",
                colour,
            );
            canvas.line(
                cx - half,
                scale.y(s.median),
                cx + half,
                scale.y(s.median),
                colour,
                1.6,
            );
        }
        cursor += PANEL_H + MARGIN_B + GAP;
    }

    // Section 3: per-DOC histograms with the median marker.
    let docs: BTreeSet<u32> = measurements.iter().map(|m| m.doc).collect();
    for doc in docs {
        let h = length_histogram(measurements, doc, options.histogram_bin_mm);
        if h.counts.is_empty() {
            continue;
        }
        let max_count = *h.counts.iter().max().unwrap() as f64;
        let span = h.counts.len() as f64 * h.bin_width_mm;
        let scale = Scale {
            x0: MARGIN_L,
            y0: cursor,
            w: PANEL_W,
            h: PANEL_H / 2.0,
            min_x: h.min_mm,
            max_x: h.min_mm + span,
            min_y: 0.0,
            max_y: max_count,
        };
        axes(
            &mut canvas,
            &scale,
            &format!("Length distribution, day of culture {doc}"),
            "length (mm)",
            "count",
        );
        for (i, &count) in h.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x_lo = h.min_mm + i as f64 * h.bin_width_mm;
            canvas.rect(
                scale.x(x_lo),
                scale.y(count as f64),
                scale.x(x_lo + h.bin_width_mm) - scale.x(x_lo),
                scale.y(0.0) - scale.y(count as f64),
                "#9ecae1",
                "#3182bd",
            );
        }
        if let Some(med) = h.median_mm {
            canvas.dashed_line(
                scale.x(med),
                scale.y(max_count),
                scale.x(med),
                scale.y(0.0),
                "#000000",
            );
        }
        cursor += PANEL_H / 2.0 + MARGIN_B + GAP;
    }

    // Footer: rejection-rate line so the depth-quality discard is visible.
    if let Some(r) = rejections {
        canvas.text(
            MARGIN_L,
            cursor,
            11,
            "start",
            "#333333",
            &format!(
                "rejection rate: {:.1}% ({} of {} instances rejected by the validity gate)",
                r.rejection_rate() * 100.0,
                r.n_rejected,
                r.n_measured
            ),
        );
        cursor += 20.0;
    }

    canvas.height = cursor + MARGIN_B;
    canvas.finish()
}
