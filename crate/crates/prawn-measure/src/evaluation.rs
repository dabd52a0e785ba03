//! Detection/segmentation scoring against ground truth: precision, recall,
//! and COCO-protocol mAP/mAR (IoU 0.50:0.05:0.95, 101-point interpolation,
//! single category, maxDets = 100, all areas).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::BinaryMask;
use crate::tracking::{iou as box_iou, BBox};

/// The ten COCO IoU thresholds.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

pub const MAX_DETECTIONS_PER_IMAGE: usize = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// TP / (TP + FP); 0 when nothing was predicted.
pub fn precision(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

/// TP / (TP + FN); 0 when there is no ground truth.
pub fn recall(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fn_ == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

/// A detection region: box for detection scoring, mask for segmentation.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Box(BBox),
    Mask(BinaryMask),
}

/// One ground-truth or predicted instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredInstance {
    pub image_id: String,
    pub region: Region,
    /// Present for predictions, absent for ground truth.
    pub score: Option<f64>,
}

/// IoU between two regions of the same kind.
pub fn region_iou(a: &Region, b: &Region) -> Result<f64> {
    match (a, b) {
        (Region::Box(a), Region::Box(b)) => Ok(box_iou(a, b)),
        (Region::Mask(a), Region::Mask(b)) => {
            if (a.width, a.height) != (b.width, b.height) {
                return Err(Error::Kind(format!(
                    "mask dims {}x{} vs {}x{}",
                    a.width, a.height, b.width, b.height
                )));
            }
            let mut inter = 0u64;
            let mut union = 0u64;
            for y in 0..a.height {
                for x in 0..a.width {
                    match (a.get(x, y), b.get(x, y)) {
                        (true, true) => {
                            inter += 1;
                            union += 1;
                        }
                        (false, false) => {}
                        _ => union += 1,
                    }
                }
            }
            Ok(if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            })
        }
        _ => Err(Error::Kind("cannot compare a box with a mask".into())),
    }
}

/// Greedy single-image matching at one IoU threshold. `pred_order` must be
/// score-descending. Each prediction takes the highest-IoU unmatched ground
/// truth with IoU >= thr; each ground truth matches at most once.
/// Returns (per-prediction TP flag, per-GT matched flag).
pub fn match_at_iou(
    gts: &[&ScoredInstance],
    preds_sorted: &[&ScoredInstance],
    thr: f64,
) -> Result<(Vec<bool>, Vec<bool>)> {
    let mut gt_matched = vec![false; gts.len()];
    let mut pred_tp = vec![false; preds_sorted.len()];
    for (pi, pred) in preds_sorted.iter().enumerate() {
        let mut best = thr - f64::EPSILON;
        let mut best_gt: Option<usize> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_matched[gi] {
                continue;
            }
            let overlap = region_iou(&pred.region, &gt.region)?;
            if overlap >= thr && overlap > best {
                best = overlap;
                best_gt = Some(gi);
            }
        }
        if let Some(gi) = best_gt {
            gt_matched[gi] = true;
            pred_tp[pi] = true;
        }
    }
    Ok((pred_tp, gt_matched))
}

struct PooledLabels {
    /// (score, tp) in global score-descending order.
    labels: Vec<(f64, bool)>,
    n_gt: usize,
    n_gt_matched: usize,
}

/// Ground truths and (input index, prediction) pairs of one image.
type ImageInstances<'a> = (Vec<&'a ScoredInstance>, Vec<(usize, &'a ScoredInstance)>);

/// Per-image matching at `thr`, pooled across images in global score order
/// (ties broken by original input index).
fn pool_labels(gts: &[ScoredInstance], preds: &[ScoredInstance], thr: f64) -> Result<PooledLabels> {
    let mut by_image: BTreeMap<&str, ImageInstances> = BTreeMap::new();
    for gt in gts {
        by_image.entry(&gt.image_id).or_default().0.push(gt);
    }
    for (i, pred) in preds.iter().enumerate() {
        by_image.entry(&pred.image_id).or_default().1.push((i, pred));
    }

    let mut labelled: Vec<(usize, f64, bool)> = Vec::with_capacity(preds.len());
    let mut n_gt_matched = 0usize;
    for (image_gts, mut image_preds) in by_image.into_values() {
        image_preds.sort_by(|(ia, a), (ib, b)| {
            let sa = a.score.unwrap_or(0.0);
            let sb = b.score.unwrap_or(0.0);
            sb.partial_cmp(&sa).expect("finite scores").then(ia.cmp(ib))
        });
        image_preds.truncate(MAX_DETECTIONS_PER_IMAGE);
        let sorted: Vec<&ScoredInstance> = image_preds.iter().map(|(_, p)| *p).collect();
        let (pred_tp, gt_matched) = match_at_iou(&image_gts, &sorted, thr)?;
        n_gt_matched += gt_matched.iter().filter(|&&m| m).count();
        for ((orig_idx, pred), tp) in image_preds.iter().zip(pred_tp) {
            labelled.push((*orig_idx, pred.score.unwrap_or(0.0), tp));
        }
    }
    labelled.sort_by(|(ia, sa, _), (ib, sb, _)| {
        sb.partial_cmp(sa).expect("finite scores").then(ia.cmp(ib))
    });
    Ok(PooledLabels {
        labels: labelled.into_iter().map(|(_, s, tp)| (s, tp)).collect(),
        n_gt: gts.len(),
        n_gt_matched,
    })
}

/// 101-point interpolated average precision at one IoU threshold, pooled
/// across images. Zero ground truth scores 0 by convention.
pub fn average_precision(gts: &[ScoredInstance], preds: &[ScoredInstance], thr: f64) -> Result<f64> {
    let pooled = pool_labels(gts, preds, thr)?;
    if pooled.n_gt == 0 {
        return Ok(0.0);
    }
    let mut recalls = Vec::with_capacity(pooled.labels.len());
    let mut precisions = Vec::with_capacity(pooled.labels.len());
    let mut tp_cum = 0usize;
    for (rank, &(_, tp)) in pooled.labels.iter().enumerate() {
        if tp {
            tp_cum += 1;
        }
        recalls.push(tp_cum as f64 / pooled.n_gt as f64);
        precisions.push(tp_cum as f64 / (rank + 1) as f64);
    }
    // Monotone envelope from the right.
    for i in (0..precisions.len().saturating_sub(1)).rev() {
        if precisions[i] < precisions[i + 1] {
            precisions[i] = precisions[i + 1];
        }
    }
    let mut total = 0.0;
    for r in 0..=100 {
        let want = r as f64 / 100.0;
        let idx = recalls.partition_point(|&rc| rc < want);
        if idx < precisions.len() {
            total += precisions[idx];
        }
    }
    Ok(total / 101.0)
}

/// Max recall at one threshold (maxDets = 100 per image).
pub fn max_recall(gts: &[ScoredInstance], preds: &[ScoredInstance], thr: f64) -> Result<f64> {
    let pooled = pool_labels(gts, preds, thr)?;
    if pooled.n_gt == 0 {
        return Ok(0.0);
    }
    Ok(pooled.n_gt_matched as f64 / pooled.n_gt as f64)
}

/// Summary triple reported by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    /// AP averaged over IoU 0.50:0.05:0.95.
    pub map: f64,
    /// AP at IoU 0.50.
    pub ap50: f64,
    /// AR (maxDets = 100) averaged over the same thresholds.
    pub mar: f64,
}

/// Per-threshold breakdown used by the CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScore {
    pub iou: f64,
    pub ap: f64,
    pub ar: f64,
}

pub fn summarize(gts: &[ScoredInstance], preds: &[ScoredInstance]) -> Result<EvalSummary> {
    Ok(summarize_with_breakdown(gts, preds)?.0)
}

pub fn summarize_with_breakdown(
    gts: &[ScoredInstance],
    preds: &[ScoredInstance],
) -> Result<(EvalSummary, Vec<ThresholdScore>)> {
    let thresholds = coco_thresholds();
    let mut rows = Vec::with_capacity(thresholds.len());
    for &thr in &thresholds {
        rows.push(ThresholdScore {
            iou: thr,
            ap: average_precision(gts, preds, thr)?,
            ar: max_recall(gts, preds, thr)?,
        });
    }
    let n = rows.len() as f64;
    let summary = EvalSummary {
        map: rows.iter().map(|r| r.ap).sum::<f64>() / n,
        ap50: rows[0].ap,
        mar: rows.iter().map(|r| r.ar).sum::<f64>() / n,
    };
    Ok((summary, rows))
}
