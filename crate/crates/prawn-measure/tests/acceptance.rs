//! Acceptance suite. Each test prints one `acceptance N (...): PASS` line and
//! pins its tolerances in code; the oracles here are written independently of
//! the library paths they check.

use std::time::Instant;

use prawn_measure::analytics::{self, Measurement, ReportOptions, Source};
use prawn_measure::evaluation::{self, Region, ScoredInstance};
use prawn_measure::ingest::{BinaryMask, CameraIntrinsics};
use prawn_measure::ranging::{
    deproject, measure, polyline_length, project, MeasurementStatus, Polyline3D, RangingConfig,
    RejectReason,
};
use prawn_measure::skeleton::{build_graph, components, mask_component_count, skeletonize};
use prawn_measure::synth::{
    gen_motion, gen_scene, random_blob, random_prawns, BoxScript, MotionScript, RandomPrawnParams,
    SceneSpec, Xoshiro256,
};
use prawn_measure::tracking::{
    aggregate_lengths, assign_min_cost, BBox, Detection, SortTracker, TrackerConfig,
};

/// Long-lens capture rig used by the synthetic acceptance scenes.
fn test_rig() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 1600.0,
        fy: 1600.0,
        ppx: 640.0,
        ppy: 360.0,
        width: 1280,
        height: 720,
        depth_scale: 0.001,
    }
}

// ---------------------------------------------------------------------------
// 1. Length accuracy on clean scenes.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_length_accuracy_clean_scenes() {
    let started = Instant::now();
    let k = test_rig();
    let cfg = RangingConfig::default();
    let mut rng = Xoshiro256::seeded(2024);
    let params = RandomPrawnParams::default();

    // 200 seeded prawns, straight and curved, 60-200 mm at 0.3-1.0 m.
    let mut accepted = 0usize;
    let mut total = 0usize;
    let mut rel_errors = Vec::new();
    let mut scene_idx = 0u64;
    while total < 200 {
        let prawns = random_prawns(&mut rng, &k, 9, &params);
        let spec = SceneSpec {
            seed: 1000 + scene_idx,
            intrinsics: k.clone(),
            prawns,
            hole_rate: 0.0,
            depth_noise_sigma_m: 0.0,
            background_depth_m: 0.75,
        };
        scene_idx += 1;
        let scene = gen_scene(&spec).unwrap();
        for (i, (mask, truth)) in scene.masks.iter().zip(&scene.truths).enumerate() {
            if total == 200 {
                break;
            }
            total += 1;
            let r = measure(mask, &scene.depth, &k, &cfg, "f", i as u32).unwrap();
            if let Some(len) = r.length_m {
                accepted += 1;
                rel_errors.push((len - truth.length_m) / truth.length_m);
            }
        }
    }

    assert_eq!(total, 200);
    let accept_rate = accepted as f64 / total as f64;
    assert!(accept_rate >= 0.95, "accept rate {accept_rate}");
    let worst = rel_errors
        .iter()
        .map(|e| e.abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 0.05, "worst |relative error| {worst}");
    let bias = rel_errors.iter().sum::<f64>() / rel_errors.len() as f64;
    assert!(
        (-0.05..=0.02).contains(&bias),
        "signed bias {bias} outside [-5%, +2%]"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "acceptance 1 (length accuracy): PASS — {accepted}/{total} accepted, worst |err| {:.3}%, bias {:.3}%, {elapsed:?}",
        worst * 100.0,
        bias * 100.0
    );
}

// ---------------------------------------------------------------------------
// 2. Validity gate under depth holes.
// ---------------------------------------------------------------------------

fn gate_scenes(hole_rate: f64) -> Vec<SceneSpec> {
    let k = test_rig();
    let mut rng = Xoshiro256::seeded(77);
    // Long, near prawns: hundreds of retained samples each, so the binomial
    // hole count concentrates hard around its mean.
    let params = RandomPrawnParams {
        length_mm: (150.0, 200.0),
        depth_m: (0.3, 0.45),
        ..RandomPrawnParams::default()
    };
    (0..5u64)
        .map(|i| SceneSpec {
            seed: 9000 + i,
            intrinsics: k.clone(),
            prawns: random_prawns(&mut rng, &k, 8, &params),
            hole_rate,
            depth_noise_sigma_m: 0.0,
            background_depth_m: 0.75,
        })
        .collect()
}

#[test]
fn acceptance_2_validity_gate() {
    let started = Instant::now();
    let k = test_rig();
    let cfg = RangingConfig {
        sample_stride: 1,
        ..RangingConfig::default()
    };

    let mut rejected_low_validity = 0usize;
    let mut total = 0usize;
    for spec in gate_scenes(0.10) {
        let scene = gen_scene(&spec).unwrap();
        for (i, mask) in scene.masks.iter().enumerate() {
            total += 1;
            let r = measure(mask, &scene.depth, &k, &cfg, "f", i as u32).unwrap();
            match r.status {
                MeasurementStatus::Rejected(RejectReason::LowValidity) => {
                    rejected_low_validity += 1;
                }
                other => panic!("hole_rate 0.10 produced {other:?} (ratio {})", r.validity_ratio),
            }
        }
    }
    assert_eq!(rejected_low_validity, total, "gate must reject everything");

    let mut accepted = 0usize;
    let mut total_low = 0usize;
    for spec in gate_scenes(0.02) {
        let scene = gen_scene(&spec).unwrap();
        for (i, mask) in scene.masks.iter().enumerate() {
            total_low += 1;
            let r = measure(mask, &scene.depth, &k, &cfg, "f", i as u32).unwrap();
            if r.is_accepted() {
                accepted += 1;
            }
        }
    }
    let rate = accepted as f64 / total_low as f64;
    assert!(rate >= 0.90, "hole_rate 0.02 accept rate {rate}");

    // Gate monotonicity: holes are placed by thresholding a per-pixel hash,
    // so lowering the rate only removes holes; an instance accepted at a
    // higher rate must stay accepted at every lower rate.
    let rates = [0.06, 0.03, 0.0];
    let mut accepted_at: Vec<Vec<bool>> = Vec::new();
    for &rate in &rates {
        let mut flags = Vec::new();
        for spec in gate_scenes(rate) {
            let scene = gen_scene(&spec).unwrap();
            for (i, mask) in scene.masks.iter().enumerate() {
                let r = measure(mask, &scene.depth, &k, &cfg, "f", i as u32).unwrap();
                flags.push(r.is_accepted());
            }
        }
        accepted_at.push(flags);
    }
    for w in accepted_at.windows(2) {
        for (i, (&high, &low)) in w[0].iter().zip(&w[1]).enumerate() {
            assert!(
                !high || low,
                "instance {i} flipped accepted -> rejected as holes decreased"
            );
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "acceptance 2 (validity gate): PASS — 0.10 rejected {rejected_low_validity}/{total}, 0.02 accepted {accepted}/{total_low}, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 3. Skeletonization properties against the rule-table oracle.
// ---------------------------------------------------------------------------

/// Independent Zhang–Suen implementation straight from the 1984 rule table,
/// on a dense grid with the P2..P9 neighbourhood written out longhand.
mod zhang_suen_oracle {
    pub fn thin(grid: &mut [Vec<bool>]) {
        loop {
            let first = mark(grid, true);
            erase(grid, &first);
            let second = mark(grid, false);
            erase(grid, &second);
            if first.is_empty() && second.is_empty() {
                break;
            }
        }
    }

    fn mark(grid: &[Vec<bool>], first_subiteration: bool) -> Vec<(usize, usize)> {
        let h = grid.len();
        let w = grid[0].len();
        let at = |x: i64, y: i64| -> u32 {
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                0
            } else {
                grid[y as usize][x as usize] as u32
            }
        };
        let mut out = Vec::new();
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if at(x, y) == 0 {
                    continue;
                }
                let p2 = at(x, y - 1);
                let p3 = at(x + 1, y - 1);
                let p4 = at(x + 1, y);
                let p5 = at(x + 1, y + 1);
                let p6 = at(x, y + 1);
                let p7 = at(x - 1, y + 1);
                let p8 = at(x - 1, y);
                let p9 = at(x - 1, y - 1);
                let b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                if !(2..=6).contains(&b) {
                    continue;
                }
                let ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                let a: u32 = ring.windows(2).map(|w| (w[0] == 0 && w[1] == 1) as u32).sum();
                if a != 1 {
                    continue;
                }
                let ok = if first_subiteration {
                    p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                } else {
                    p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                };
                if ok {
                    out.push((x as usize, y as usize));
                }
            }
        }
        out
    }

    fn erase(grid: &mut [Vec<bool>], marked: &[(usize, usize)]) {
        for &(x, y) in marked {
            grid[y][x] = false;
        }
    }
}

#[test]
fn acceptance_3_skeletonization_properties() {
    let started = Instant::now();
    let mut rng = Xoshiro256::seeded(31);

    for trial in 0..1000 {
        let blob = random_blob(&mut rng, 64, 64);
        let sk = skeletonize(&blob).unwrap();

        // Subset of the mask.
        for &(x, y) in sk.pixels() {
            assert!(blob.get(x, y), "trial {trial}: skeleton escaped the mask");
        }
        // Idempotence at the fixpoint.
        let again = skeletonize(&sk.as_mask()).unwrap();
        assert_eq!(again.pixels(), sk.pixels(), "trial {trial}: not a fixpoint");
        // 8-connectivity preservation.
        let mask_components = mask_component_count(&blob);
        let skeleton_components = components(&build_graph(&sk)).len();
        assert_eq!(
            mask_components, skeleton_components,
            "trial {trial}: component count changed"
        );
    }

    // Exact agreement with the independently written rule-table oracle.
    let mut oracle_rng = Xoshiro256::seeded(32);
    for trial in 0..100 {
        let blob = random_blob(&mut oracle_rng, 64, 64);
        let mut grid = vec![vec![false; 64]; 64];
        for (x, y) in blob.iter_set() {
            grid[y as usize][x as usize] = true;
        }
        zhang_suen_oracle::thin(&mut grid);
        let mut expected: Vec<(u32, u32)> = Vec::new();
        for (y, row) in grid.iter().enumerate() {
            for (x, &on) in row.iter().enumerate() {
                if on {
                    expected.push((x as u32, y as u32));
                }
            }
        }
        expected.sort_unstable();
        let sk = skeletonize(&blob).unwrap();
        assert_eq!(sk.pixels(), expected.as_slice(), "trial {trial}: oracle mismatch");
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("acceptance 3 (skeletonization properties): PASS — 1000 property blobs, 100 oracle blobs, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 4. De-projection and geometry.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_deprojection_and_geometry() {
    let started = Instant::now();
    let k = test_rig();
    let mut rng = Xoshiro256::seeded(404);

    // Round trip exact to 1e-9 pixels over 1e5 samples.
    for _ in 0..100_000 {
        let u = rng.range(0.0, k.width as f64);
        let v = rng.range(0.0, k.height as f64);
        let z = rng.range(0.05, 4.0);
        let p = deproject(&k, u, v, z).unwrap();
        let (u2, v2) = project(&k, p);
        assert!((u2 - u).abs() < 1e-9 && (v2 - v).abs() < 1e-9);
    }

    // Rigid-motion invariance of polyline length to 1e-9 relative.
    for _ in 0..200 {
        let n = 2 + rng.below(20);
        let points: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.range(-1.0, 1.0),
                    rng.range(-1.0, 1.0),
                    rng.range(0.1, 2.0),
                ]
            })
            .collect();
        let base = polyline_length(&Polyline3D {
            points: points.clone(),
        })
        .unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(
            rng.range(-3.0, 3.0),
            rng.range(-3.0, 3.0),
            rng.range(-3.0, 3.0),
        );
        let shift = nalgebra::Vector3::new(
            rng.range(-5.0, 5.0),
            rng.range(-5.0, 5.0),
            rng.range(-5.0, 5.0),
        );
        let moved: Vec<[f64; 3]> = points
            .iter()
            .map(|p| {
                let q = rot * nalgebra::Vector3::new(p[0], p[1], p[2]) + shift;
                [q.x, q.y, q.z]
            })
            .collect();
        let transformed = polyline_length(&Polyline3D { points: moved }).unwrap();
        assert!(
            ((transformed - base) / base).abs() < 1e-9,
            "rigid motion changed length: {base} vs {transformed}"
        );
        // Triangle inequality: the path is never shorter than its chord.
        let first = points.first().unwrap();
        let last = points.last().unwrap();
        let chord = ((last[0] - first[0]).powi(2)
            + (last[1] - first[1]).powi(2)
            + (last[2] - first[2]).powi(2))
        .sqrt();
        assert!(base >= chord - 1e-12);
    }

    // Doubling z doubles the length of a fixed pixel path on a plane.
    for _ in 0..200 {
        let n = 2 + rng.below(30);
        let pixels: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.range(0.0, 1279.0), rng.range(0.0, 719.0)))
            .collect();
        let z = rng.range(0.2, 1.5);
        let at = |depth: f64| -> f64 {
            let pts: Vec<[f64; 3]> = pixels
                .iter()
                .map(|&(u, v)| deproject(&k, u, v, depth).unwrap())
                .collect();
            polyline_length(&Polyline3D { points: pts }).unwrap()
        };
        let (l1, l2) = (at(z), at(2.0 * z));
        assert!(
            (l2 / l1 - 2.0).abs() < 1e-6,
            "length not linear in z: {l1} vs {l2}"
        );
    }

    let elapsed = started.elapsed();
    println!("acceptance 4 (de-projection and geometry): PASS — {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 5. Tracking: stability, optimal association, documented jump failure.
// ---------------------------------------------------------------------------

fn brute_force_assignment_cost(cost: &[Vec<f64>]) -> f64 {
    use itertools::Itertools;
    let rows = cost.len();
    let cols = cost[0].len();
    (0..cols)
        .permutations(rows)
        .map(|perm| perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn acceptance_5_tracking() {
    let started = Instant::now();

    // 10 constant-velocity boxes, 50 frames, zero identity switches.
    let boxes: Vec<BoxScript> = (0..10)
        .map(|i| {
            let y = 40.0 + 65.0 * i as f64;
            let vx = [-4.0, -3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0, 4.0][i];
            let x0 = if vx < 0.0 { 900.0 } else { 100.0 };
            BoxScript {
                initial: BBox::new(x0, y, x0 + 70.0, y + 44.0),
                velocity: (vx, 0.0),
                jumps: Vec::new(),
            }
        })
        .collect();
    let script = MotionScript {
        n_frames: 50,
        width: 1280,
        height: 720,
        boxes,
    };
    let frames = gen_motion(&script).unwrap();
    let mut tracker = SortTracker::new(TrackerConfig::default());
    let mut identity: std::collections::HashMap<usize, u64> = Default::default();
    let mut switches = 0usize;
    for (frame_idx, dets) in frames.iter().enumerate() {
        let detections: Vec<Detection> = dets
            .iter()
            .map(|&(_, bbox)| Detection {
                bbox,
                length_m: None,
            })
            .collect();
        let reported = tracker.step(frame_idx as u64, &detections).unwrap();
        // Reported boxes are matched back to ground truth by best IoU.
        for &(gt_id, gt_box) in dets {
            let best = reported
                .iter()
                .max_by(|a, b| {
                    prawn_measure::tracking::iou(&a.bbox, &gt_box)
                        .partial_cmp(&prawn_measure::tracking::iou(&b.bbox, &gt_box))
                        .unwrap()
                })
                .expect("every detection reported with min_hits = 0");
            if frame_idx > 3 {
                let overlap = prawn_measure::tracking::iou(&best.bbox, &gt_box);
                assert!(
                    overlap >= 0.9,
                    "frame {frame_idx} gt {gt_id}: tracked-vs-truth IoU {overlap}"
                );
            }
            match identity.get(&gt_id) {
                None => {
                    identity.insert(gt_id, best.track_id);
                }
                Some(&expected) => {
                    if expected != best.track_id {
                        switches += 1;
                    }
                }
            }
        }
    }
    assert_eq!(switches, 0, "identity switches on constant-velocity motion");

    // Hungarian equals the permutation optimum on 1e4 random matrices <= 6x6.
    let mut rng = Xoshiro256::seeded(55);
    for trial in 0..10_000 {
        let rows = 1 + rng.below(6);
        let cols = rows + rng.below(6 - rows + 1);
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.range(0.0, 10.0)).collect())
            .collect();
        let assignment = assign_min_cost(&cost);
        let total: f64 = assignment
            .iter()
            .enumerate()
            .map(|(r, &c)| cost[r][c])
            .sum();
        let oracle = brute_force_assignment_cost(&cost);
        assert!(
            (total - oracle).abs() < 1e-9,
            "trial {trial}: {total} vs brute force {oracle}"
        );
    }

    // The documented failure: a jump with zero overlap forces a new id.
    let script = MotionScript {
        n_frames: 20,
        width: 1280,
        height: 720,
        boxes: vec![BoxScript {
            initial: BBox::new(100.0, 100.0, 160.0, 140.0),
            velocity: (0.0, 0.0),
            jumps: vec![(10, (900.0, 500.0))],
        }],
    };
    let frames = gen_motion(&script).unwrap();
    assert_eq!(
        prawn_measure::tracking::iou(&frames[9][0].1, &frames[10][0].1),
        0.0
    );
    let mut tracker = SortTracker::new(TrackerConfig::default());
    let mut ids = Vec::new();
    for (frame_idx, dets) in frames.iter().enumerate() {
        let detections: Vec<Detection> = dets
            .iter()
            .map(|&(_, bbox)| Detection {
                bbox,
                length_m: None,
            })
            .collect();
        let reported = tracker.step(frame_idx as u64, &detections).unwrap();
        ids.push(reported[0].track_id);
    }
    assert_ne!(ids[9], ids[10], "jump must switch identity");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("acceptance 5 (tracking): PASS — 0 switches, 1e4 assignment trials, jump reproduced, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 6. Evaluation equals an independent reference evaluator.
// ---------------------------------------------------------------------------

/// Straightforward reference evaluator: same COCO conventions, written
/// against plain per-image lists with no shared code beyond box IoU.
mod reference_eval {
    use prawn_measure::tracking::{iou, BBox};
    use std::collections::BTreeMap;

    pub struct Item {
        pub image: String,
        pub bbox: BBox,
        pub score: f64,
        pub index: usize,
    }

    pub fn summary(gts: &[(String, BBox)], preds: &[Item]) -> (f64, f64, f64) {
        let thresholds: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
        let mut aps = Vec::new();
        let mut ars = Vec::new();
        for &t in &thresholds {
            let (ap, ar) = at_threshold(gts, preds, t);
            aps.push(ap);
            ars.push(ar);
        }
        (
            aps.iter().sum::<f64>() / 10.0,
            aps[0],
            ars.iter().sum::<f64>() / 10.0,
        )
    }

    fn at_threshold(gts: &[(String, BBox)], preds: &[Item], thr: f64) -> (f64, f64) {
        let mut images: BTreeMap<&str, (Vec<&BBox>, Vec<&Item>)> = BTreeMap::new();
        for (img, b) in gts {
            images.entry(img).or_default().0.push(b);
        }
        for p in preds {
            images.entry(&p.image).or_default().1.push(p);
        }

        let mut labels: Vec<(f64, usize, bool)> = Vec::new();
        let mut matched_gt = 0usize;
        for (img_gts, mut img_preds) in images.into_values() {
            img_preds.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap()
                    .then(a.index.cmp(&b.index))
            });
            img_preds.truncate(100);
            let mut taken = vec![false; img_gts.len()];
            for p in img_preds {
                let mut best = -1.0;
                let mut best_gi = None;
                for (gi, g) in img_gts.iter().enumerate() {
                    if taken[gi] {
                        continue;
                    }
                    let o = iou(&p.bbox, g);
                    if o >= thr && o > best {
                        best = o;
                        best_gi = Some(gi);
                    }
                }
                let tp = match best_gi {
                    Some(gi) => {
                        taken[gi] = true;
                        true
                    }
                    None => false,
                };
                labels.push((p.score, p.index, tp));
            }
            matched_gt += taken.iter().filter(|&&t| t).count();
        }

        let n_gt = gts.len();
        if n_gt == 0 {
            return (0.0, 0.0);
        }
        labels.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut tp_cum = 0usize;
        let mut recalls = Vec::new();
        let mut precisions = Vec::new();
        for (rank, &(_, _, tp)) in labels.iter().enumerate() {
            if tp {
                tp_cum += 1;
            }
            recalls.push(tp_cum as f64 / n_gt as f64);
            precisions.push(tp_cum as f64 / (rank + 1) as f64);
        }
        for i in (0..precisions.len().saturating_sub(1)).rev() {
            precisions[i] = precisions[i].max(precisions[i + 1]);
        }
        let mut ap_total = 0.0;
        for r in 0..=100 {
            let want = r as f64 / 100.0;
            let mut p_at = 0.0;
            for (i, &rc) in recalls.iter().enumerate() {
                if rc >= want {
                    p_at = precisions[i];
                    break;
                }
            }
            ap_total += p_at;
        }
        (ap_total / 101.0, matched_gt as f64 / n_gt as f64)
    }
}

#[test]
fn acceptance_6_evaluation_matches_reference() {
    let started = Instant::now();
    let mut rng = Xoshiro256::seeded(606);

    for fixture in 0..20 {
        let n_images = 1 + rng.below(5);
        let mut gts = Vec::new();
        let mut gt_instances = Vec::new();
        let mut preds = Vec::new();
        let mut pred_instances = Vec::new();
        let mut pred_index = 0usize;
        for img in 0..n_images {
            let image = format!("img{img}");
            let n_gt = 1 + rng.below(6);
            for _ in 0..n_gt {
                let x = rng.range(0.0, 500.0);
                let y = rng.range(0.0, 300.0);
                let w = rng.range(8.0, 80.0);
                let h = rng.range(8.0, 80.0);
                let b = BBox::new(x, y, x + w, y + h);
                gts.push((image.clone(), b));
                gt_instances.push(ScoredInstance {
                    image_id: image.clone(),
                    region: Region::Box(b),
                    score: None,
                });
                // Each GT spawns 0..2 predictions: a jittered copy and
                // sometimes a stray.
                for copy in 0..(1 + rng.below(2)) {
                    let jitter = if copy == 0 {
                        rng.range(0.0, 20.0)
                    } else {
                        rng.range(20.0, 200.0)
                    };
                    let px = x + jitter;
                    let py = y + rng.range(-10.0, 10.0);
                    let pb = BBox::new(px, py, px + w, py + h);
                    let score = rng.uniform();
                    preds.push(reference_eval::Item {
                        image: image.clone(),
                        bbox: pb,
                        score,
                        index: pred_index,
                    });
                    pred_instances.push(ScoredInstance {
                        image_id: image.clone(),
                        region: Region::Box(pb),
                        score: Some(score),
                    });
                    pred_index += 1;
                }
            }
        }

        let got = evaluation::summarize(&gt_instances, &pred_instances).unwrap();
        let (map, ap50, mar) = reference_eval::summary(&gts, &preds);
        assert!(
            (got.map - map).abs() < 1e-9
                && (got.ap50 - ap50).abs() < 1e-9
                && (got.mar - mar).abs() < 1e-9,
            "fixture {fixture}: ({}, {}, {}) vs reference ({map}, {ap50}, {mar})",
            got.map,
            got.ap50,
            got.mar
        );
    }

    // Perfect predictions score exactly 1.0 everywhere.
    let gts: Vec<ScoredInstance> = (0..4)
        .map(|i| ScoredInstance {
            image_id: format!("img{}", i % 2),
            region: Region::Box(BBox::new(10.0 * i as f64, 0.0, 10.0 * i as f64 + 8.0, 8.0)),
            score: None,
        })
        .collect();
    let preds: Vec<ScoredInstance> = gts
        .iter()
        .map(|g| ScoredInstance {
            score: Some(1.0),
            ..g.clone()
        })
        .collect();
    let s = evaluation::summarize(&gts, &preds).unwrap();
    assert_eq!((s.map, s.ap50, s.mar), (1.0, 1.0, 1.0));

    let elapsed = started.elapsed();
    println!("acceptance 6 (evaluation vs reference): PASS — 20 fixtures, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 7. Analytics: trend recovery, quartile ordering, report determinism.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_analytics() {
    let started = Instant::now();

    // Seeded growth signal: 0.9 mm/day over 40 days, 30 samples/day, noise
    // sigma = 2 mm. The oracle is the generating parameter.
    let mut rng = Xoshiro256::seeded(707);
    let mut points = Vec::new();
    for day in 0..40u32 {
        let mut lengths: Vec<f64> = (0..30)
            .map(|_| 50.0 + 0.9 * day as f64 + 2.0 * rng.gaussian())
            .collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.push((day as f64, prawn_measure::stats::median_sorted(&lengths)));
    }
    let trend = analytics::fit_trend(&points).unwrap();
    assert!(
        (trend.slope - 0.9).abs() <= 0.15,
        "recovered slope {} not within 0.15 of 0.9",
        trend.slope
    );

    // Quartile ordering invariant over 1e4 random samples.
    let mut rng = Xoshiro256::seeded(708);
    for _ in 0..10_000 {
        let n = 1 + rng.below(20);
        let ms: Vec<Measurement> = (0..n)
            .map(|_| Measurement {
                pond_id: "P".into(),
                doc: 1,
                source: Source::Cv,
                length_mm: rng.range(1.0, 300.0),
            })
            .collect();
        let s = &analytics::summarize_by_doc(&ms, None)[0];
        assert!(
            s.min <= s.whisker_lo
                && s.whisker_lo <= s.q1
                && s.q1 <= s.median
                && s.median <= s.q3
                && s.q3 <= s.whisker_hi
                && s.whisker_hi <= s.max,
            "quartile ordering violated: {s:?}"
        );
    }

    // Report bundle is byte-identical across runs.
    let mut rng = Xoshiro256::seeded(709);
    let measurements: Vec<Measurement> = (0..300)
        .map(|i| Measurement {
            pond_id: format!("P{}", i % 3),
            doc: 10 + (i as u32 % 6) * 4,
            source: if i % 4 == 0 {
                Source::FeedTraySample
            } else {
                Source::Cv
            },
            length_mm: rng.range(40.0, 120.0),
        })
        .collect();
    let opts = ReportOptions::default();
    let a = analytics::render_report(&measurements, None, &opts).unwrap();
    let b = analytics::render_report(&measurements, None, &opts).unwrap();
    assert_eq!(a.svg.as_bytes(), b.svg.as_bytes());
    assert_eq!(a.summaries_csv, b.summaries_csv);
    assert_eq!(a.trend_csv, b.trend_csv);

    let elapsed = started.elapsed();
    println!(
        "acceptance 7 (analytics): PASS — slope {:.3}, report deterministic, {elapsed:?}",
        trend.slope
    );
}

// ---------------------------------------------------------------------------
// 8. End to end through the binary: synth -> measure -> track -> report.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_end_to_end_season() {
    let started = Instant::now();
    let bin = env!("CARGO_BIN_EXE_prawn-measure");
    let workdir = tempfile::tempdir().unwrap();
    let root = workdir.path();

    let spec = r#"
seed = 4242

[intrinsics]
fx = 800.0
fy = 800.0
ppx = 320.0
ppy = 180.0
width = 640
height = 360

[season]
ponds = ["P1", "P2", "P3", "P4"]
docs = [10, 14, 18, 22, 26, 30, 34, 38]
base_length_mm = 60.0
growth_mm_per_day = 0.9
spread_mm = 8.0
prawns_per_frame = 4
n_frames = 3
depth_m = [0.35, 0.55]
velocity_px = [2.0, 0.0]
"#;
    let spec_path = root.join("season.toml");
    std::fs::write(&spec_path, spec).unwrap();

    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin)
            .args(args)
            .current_dir(root)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "command {:?} failed:\n{}\n{}",
            args,
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).into_owned()
    };

    run(&[
        "synth",
        spec_path.to_str().unwrap(),
        "--out-dir",
        root.join("season").to_str().unwrap(),
    ]);

    let mut growth_files = Vec::new();
    for pond in ["P1", "P2", "P3", "P4"] {
        for doc in [10, 14, 18, 22, 26, 30, 34, 38] {
            let session = root.join(format!("season/{pond}/doc{doc:03}"));
            assert!(session.join("manifest.toml").is_file());
            let measured = root.join(format!("out/{pond}_doc{doc:03}_measurements.csv"));
            let growth_m = root.join(format!("out/{pond}_doc{doc:03}_growth.csv"));
            run(&[
                "measure",
                session.to_str().unwrap(),
                "-o",
                measured.to_str().unwrap(),
                "--growth-out",
                growth_m.to_str().unwrap(),
            ]);
            let tracks = root.join(format!("out/{pond}_doc{doc:03}_tracks.csv"));
            let growth_t = root.join(format!("out/{pond}_doc{doc:03}_growth_tracked.csv"));
            run(&[
                "track",
                session.to_str().unwrap(),
                "-o",
                tracks.to_str().unwrap(),
                "--growth-out",
                growth_t.to_str().unwrap(),
            ]);
            growth_files.push(growth_m.to_str().unwrap().to_string());
            growth_files.push(growth_t.to_str().unwrap().to_string());
        }
    }

    let mut report_args = vec!["report"];
    report_args.extend(growth_files.iter().map(String::as_str));
    let report_dir = root.join("report");
    report_args.extend(["--out-dir", report_dir.to_str().unwrap()]);
    run(&report_args);

    // Every pond must show a positive fitted slope for every present source.
    let trend = std::fs::read_to_string(report_dir.join("trend.csv")).unwrap();
    let mut seen_cv_ponds = std::collections::HashSet::new();
    for line in trend.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (pond, source, slope): (&str, &str, f64) =
            (cols[0], cols[1], cols[3].parse().unwrap());
        assert!(
            slope > 0.0,
            "pond {pond} source {source} has non-positive slope {slope}"
        );
        if source == "CV" {
            seen_cv_ponds.insert(pond.to_string());
        }
    }
    assert_eq!(seen_cv_ponds.len(), 4, "expected CV trends for all 4 ponds");
    assert!(report_dir.join("report.svg").is_file());
    assert!(report_dir.join("summaries.csv").is_file());

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "acceptance 8 (end-to-end season): PASS — 32 sessions, 4 positive CV slopes, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Cross-cutting: aggregate_lengths sanity inside the tracking chain.
// ---------------------------------------------------------------------------

#[test]
fn track_length_aggregation_survives_outliers() {
    // A supporting check for criterion 5's robust-length path.
    let mut values = vec![0.101, 0.099, 0.1, 0.102, 0.098, 0.25];
    let robust = aggregate_lengths(&values).unwrap();
    assert!((robust - 0.1).abs() < 5e-3, "robust {robust}");
    values.reverse();
    assert_eq!(aggregate_lengths(&values).unwrap(), robust);
    // A mask-based detour to keep the imports honest.
    let mut m = BinaryMask::empty(4, 4);
    m.set(1, 1, true);
    assert_eq!(mask_component_count(&m), 1);
}
