//! Simulate a growing pond population over a season and render the report
//! bundle (SVG plus CSV tables) into `target/example-report/`.
//!
//! ```sh
//! cargo run --example growth_report
//! ```

use prawn_measure::analytics::{
    fit_trend, pond_trends, render_report, summarize_by_doc, Measurement, RejectionStats,
    ReportOptions, Source,
};
use prawn_measure::synth::Xoshiro256;

fn main() {
    let mut rng = Xoshiro256::seeded(3);
    let mut measurements = Vec::new();
    for pond in ["P1", "P2"] {
        for doc in (10..=38).step_by(4) {
            let nominal = 55.0 + 0.9 * doc as f64;
            for _ in 0..25 {
                measurements.push(Measurement {
                    pond_id: pond.into(),
                    doc,
                    source: Source::Cv,
                    length_mm: nominal + 4.0 * rng.gaussian(),
                });
            }
            for _ in 0..5 {
                measurements.push(Measurement {
                    pond_id: pond.into(),
                    doc,
                    source: Source::FeedTraySample,
                    length_mm: nominal + 3.0 * rng.gaussian(),
                });
            }
        }
    }

    println!("per-DOC medians (pond P1, CV):");
    for s in summarize_by_doc(&measurements, Some(Source::Cv)) {
        if s.pond_id == "P1" {
            println!(
                "  doc {:>2}: n={:<3} median {:.1} mm  (q1 {:.1}, q3 {:.1})",
                s.doc, s.n, s.median, s.q1, s.q3
            );
        }
    }

    for t in pond_trends(&measurements) {
        println!(
            "trend {} / {}: {:.2} mm/day (r2 {:.3})",
            t.pond_id,
            t.source.as_str(),
            t.trend.slope,
            t.trend.r2
        );
    }

    // The same fit, straight from points.
    let points: Vec<(f64, f64)> = summarize_by_doc(&measurements, Some(Source::Cv))
        .into_iter()
        .filter(|s| s.pond_id == "P1")
        .map(|s| (s.doc as f64, s.median))
        .collect();
    let trend = fit_trend(&points).unwrap();
    println!("P1 CV refit: slope {:.3} mm/day", trend.slope);

    let bundle = render_report(
        &measurements,
        Some(RejectionStats {
            n_measured: 600,
            n_rejected: 180,
        }),
        &ReportOptions::default(),
    )
    .expect("non-empty measurements");
    let out = std::path::Path::new("target/example-report");
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(out.join("report.svg"), &bundle.svg).unwrap();
    std::fs::write(out.join("summaries.csv"), &bundle.summaries_csv).unwrap();
    std::fs::write(out.join("trend.csv"), &bundle.trend_csv).unwrap();
    println!("\nwrote {}", out.display());
}
