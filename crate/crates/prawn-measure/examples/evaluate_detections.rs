//! Score a set of jittered predictions against ground truth with the
//! COCO-style evaluator and print the per-threshold breakdown.
//!
//! ```sh
//! cargo run --example evaluate_detections
//! ```

use prawn_measure::evaluation::{summarize_with_breakdown, Region, ScoredInstance};
use prawn_measure::synth::Xoshiro256;
use prawn_measure::tracking::BBox;

fn main() {
    let mut rng = Xoshiro256::seeded(11);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for img in 0..4 {
        let image_id = format!("frame{img:03}");
        for _ in 0..5 {
            let x = rng.range(0.0, 1100.0);
            let y = rng.range(0.0, 600.0);
            let w = rng.range(40.0, 120.0);
            let h = rng.range(20.0, 60.0);
            gts.push(ScoredInstance {
                image_id: image_id.clone(),
                region: Region::Box(BBox::new(x, y, x + w, y + h)),
                score: None,
            });
            // A good detector: small jitter, high score. One in five boxes
            // is missed and replaced by a stray low-score detection.
            if rng.uniform() < 0.8 {
                let dx = rng.range(-6.0, 6.0);
                let dy = rng.range(-4.0, 4.0);
                preds.push(ScoredInstance {
                    image_id: image_id.clone(),
                    region: Region::Box(BBox::new(x + dx, y + dy, x + w + dx, y + h + dy)),
                    score: Some(rng.range(0.7, 1.0)),
                });
            } else {
                preds.push(ScoredInstance {
                    image_id: image_id.clone(),
                    region: Region::Box(BBox::new(x + 300.0, y, x + w + 300.0, y + h)),
                    score: Some(rng.range(0.1, 0.4)),
                });
            }
        }
    }

    let (summary, rows) = summarize_with_breakdown(&gts, &preds).expect("same region kinds");
    println!("ground truth: {} instances, predictions: {}", gts.len(), preds.len());
    println!("\niou    ap        ar");
    for r in &rows {
        println!("{:.2}   {:.4}    {:.4}", r.iou, r.ap, r.ar);
    }
    println!(
        "\nmAP = {:.4}   AP@.50 = {:.4}   mAR = {:.4}",
        summary.map, summary.ap50, summary.mar
    );
}
