//! Growth analytics over accepted measurements: per day-of-culture summary
//! statistics, first-order growth trendlines, length distributions, and a
//! deterministic report bundle (SVG plus CSV tables).

mod svg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{median_sorted, quantile_r7};

/// Where a length came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    /// Computer-vision measurement, one row per accepted instance.
    #[serde(rename = "CV")]
    Cv,
    /// Computer-vision measurement aggregated per track.
    #[serde(rename = "CV_tracked")]
    CvTracked,
    /// Hand measurement of prawns sampled from the feed tray.
    #[serde(rename = "FeedTraySample")]
    FeedTraySample,
    /// Traditional cast-net sampling.
    #[serde(rename = "CastNet")]
    CastNet,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Cv => "CV",
            Source::CvTracked => "CV_tracked",
            Source::FeedTraySample => "FeedTraySample",
            Source::CastNet => "CastNet",
        }
    }

    pub const ALL: [Source; 4] = [
        Source::Cv,
        Source::CvTracked,
        Source::FeedTraySample,
        Source::CastNet,
    ];
}

/// One accepted length observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub pond_id: String,
    /// Day of culture.
    pub doc: u32,
    pub source: Source,
    pub length_mm: f64,
}

/// Box-plot statistics for one (pond, doc) group.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySummary {
    pub pond_id: String,
    pub doc: u32,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// 1.5·IQR fences clamped to the data (and to the box, so the ordering
    /// min <= whisker_lo <= q1 and q3 <= whisker_hi <= max always holds).
    pub whisker_lo: f64,
    pub whisker_hi: f64,
}

/// First-order growth fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendLine {
    /// mm per day.
    pub slope: f64,
    /// mm at doc 0.
    pub intercept: f64,
    pub r2: f64,
}

/// Group measurements by (pond, doc), optionally filtered to one source, and
/// compute box-plot statistics per group. Output ordered by (pond, doc).
pub fn summarize_by_doc(
    measurements: &[Measurement],
    source: Option<Source>,
) -> Vec<DailySummary> {
    let mut groups: std::collections::BTreeMap<(&str, u32), Vec<f64>> = Default::default();
    for m in measurements {
        if source.is_some_and(|s| s != m.source) {
            continue;
        }
        groups
            .entry((m.pond_id.as_str(), m.doc))
            .or_default()
            .push(m.length_mm);
    }
    groups
        .into_iter()
        .map(|((pond, doc), mut lengths)| {
            lengths.sort_by(|a, b| a.partial_cmp(b).expect("finite lengths"));
            summary_of_sorted(pond, doc, &lengths)
        })
        .collect()
}

fn summary_of_sorted(pond: &str, doc: u32, sorted: &[f64]) -> DailySummary {
    let n = sorted.len();
    let q1 = quantile_r7(sorted, 0.25);
    let q3 = quantile_r7(sorted, 0.75);
    let iqr = q3 - q1;
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_lo = sorted
        .iter()
        .copied()
        .find(|&v| v >= fence_lo)
        .unwrap_or(sorted[0])
        .min(q1);
    let whisker_hi = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= fence_hi)
        .unwrap_or(sorted[n - 1])
        .max(q3);
    DailySummary {
        pond_id: pond.to_string(),
        doc,
        n,
        min: sorted[0],
        q1,
        median: median_sorted(sorted),
        q3,
        max: sorted[n - 1],
        whisker_lo,
        whisker_hi,
    }
}

/// Ordinary least squares line through (doc, median) points.
pub fn fit_trend(points: &[(f64, f64)]) -> Result<TrendLine> {
    if points.len() < 2 {
        return Err(Error::TooSparse("trend fit needs 2 points".into()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateX(points[0].0 as u32));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(TrendLine {
        slope,
        intercept,
        r2,
    })
}

/// Length distribution for one day of culture.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub doc: u32,
    pub bin_width_mm: f64,
    /// Left edge of the first bin; empty histograms have no bins.
    pub min_mm: f64,
    pub counts: Vec<u64>,
    /// The figure's median marker.
    pub median_mm: Option<f64>,
}

pub fn length_histogram(measurements: &[Measurement], doc: u32, bin_width_mm: f64) -> Histogram {
    assert!(bin_width_mm > 0.0, "bin width must be positive");
    let mut values: Vec<f64> = measurements
        .iter()
        .filter(|m| m.doc == doc)
        .map(|m| m.length_mm)
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite lengths"));
    if values.is_empty() {
        return Histogram {
            doc,
            bin_width_mm,
            min_mm: 0.0,
            counts: Vec::new(),
            median_mm: None,
        };
    }
    let min = values[0];
    let max = *values.last().unwrap();
    let n_bins = (((max - min) / bin_width_mm).ceil() as usize).max(1);
    let mut counts = vec![0u64; n_bins];
    for &v in &values {
        let idx = (((v - min) / bin_width_mm) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Histogram {
        doc,
        bin_width_mm,
        min_mm: min,
        counts,
        median_mm: Some(median_sorted(&values)),
    }
}

/// Acceptance bookkeeping surfaced in the report.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RejectionStats {
    pub n_measured: usize,
    pub n_rejected: usize,
}

impl RejectionStats {
    pub fn rejection_rate(&self) -> f64 {
        if self.n_measured == 0 {
            0.0
        } else {
            self.n_rejected as f64 / self.n_measured as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub histogram_bin_mm: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            histogram_bin_mm: 5.0,
        }
    }
}

/// Everything the report writer emits. Byte-identical for identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub svg: String,
    pub summaries_csv: String,
    pub trend_csv: String,
}

/// Fitted trend for one (pond, source) pair, fed by per-DOC medians.
#[derive(Debug, Clone, PartialEq)]
pub struct PondTrend {
    pub pond_id: String,
    pub source: Source,
    pub n_docs: usize,
    pub trend: TrendLine,
}

/// Trend per (pond, source) over per-DOC medians; pairs with fewer than two
/// distinct docs are skipped.
pub fn pond_trends(measurements: &[Measurement]) -> Vec<PondTrend> {
    let mut ponds: Vec<&str> = measurements.iter().map(|m| m.pond_id.as_str()).collect();
    ponds.sort_unstable();
    ponds.dedup();

    let mut out = Vec::new();
    for pond in ponds {
        for source in Source::ALL {
            let subset: Vec<Measurement> = measurements
                .iter()
                .filter(|m| m.pond_id == pond && m.source == source)
                .cloned()
                .collect();
            if subset.is_empty() {
                continue;
            }
            let summaries = summarize_by_doc(&subset, Some(source));
            let points: Vec<(f64, f64)> = summaries
                .iter()
                .map(|s| (s.doc as f64, s.median))
                .collect();
            if points.len() < 2 {
                continue;
            }
            if let Ok(trend) = fit_trend(&points) {
                out.push(PondTrend {
                    pond_id: pond.to_string(),
                    source,
                    n_docs: points.len(),
                    trend,
                });
            }
        }
    }
    out
}

/// Render the growth report. Errors with [`Error::EmptyReport`] when no
/// measurement is available.
pub fn render_report(
    measurements: &[Measurement],
    rejections: Option<RejectionStats>,
    options: &ReportOptions,
) -> Result<ReportBundle> {
    if measurements.is_empty() {
        return Err(Error::EmptyReport);
    }
    let trends = pond_trends(measurements);
    let svg = svg::render(measurements, &trends, rejections, options);

    let mut summaries_csv = String::from(
        "pond_id,source,doc,n,min_mm,q1_mm,median_mm,q3_mm,max_mm,whisker_lo_mm,whisker_hi_mm\n",
    );
    for source in Source::ALL {
        for s in summarize_by_doc(measurements, Some(source)) {
            summaries_csv.push_str(&format!(
                "{},{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
                s.pond_id,
                source.as_str(),
                s.doc,
                s.n,
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max,
                s.whisker_lo,
                s.whisker_hi,
            ));
        }
    }

    let mut trend_csv = String::from("pond_id,source,n_docs,slope_mm_per_day,intercept_mm,r2\n");
    for t in &trends {
        trend_csv.push_str(&format!(
            "{},{},{},{:.4},{:.2},{:.4}\n",
            t.pond_id,
            t.source.as_str(),
            t.n_docs,
            t.trend.slope,
            t.trend.intercept,
            t.trend.r2,
        ));
    }

    Ok(ReportBundle {
        svg,
        summaries_csv,
        trend_csv,
    })
}
