//! Writing synthetic sessions to disk in the layout the pipeline consumes:
//! `manifest.toml`, `intrinsics.toml`, depth PGMs, a VIA annotation document,
//! optional instance masks, and `ground_truth.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{
    serialize_intrinsics, serialize_manifest, serialize_via, write_depth_pgm, write_gray_pgm,
    write_mask_pgm, CameraIntrinsics, FrameEntry, PolygonAnnotation, SessionManifest,
};
use crate::synth::{
    gen_scene, random_prawns, splitmix64, CurveSpec, DepthModel, RandomPrawnParams, SceneSpec,
    SyntheticPrawn, Xoshiro256,
};

/// Scene specification document for the `synth` command.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpecFile {
    pub seed: u64,
    #[serde(default)]
    pub intrinsics: Option<IntrinsicsSpec>,
    #[serde(default)]
    pub session: Option<SessionSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default, rename = "prawn")]
    pub prawns: Vec<PrawnSpec>,
    #[serde(default)]
    pub random: Option<RandomSpec>,
    #[serde(default)]
    pub season: Option<SeasonSpec>,
    /// Also write per-instance mask PGMs (large; annotations always written).
    #[serde(default)]
    pub emit_masks: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsSpec {
    pub fx: f64,
    pub fy: f64,
    pub ppx: f64,
    pub ppy: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_depth_scale")]
    pub depth_scale: f64,
}

fn default_depth_scale() -> f64 {
    0.001
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub pond_id: String,
    pub doc: u32,
    #[serde(default = "default_n_frames")]
    pub n_frames: u64,
    /// Applied to every prawn, pixels per frame.
    #[serde(default)]
    pub velocity_px: (f64, f64),
}

fn default_n_frames() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub hole_rate: f64,
    #[serde(default)]
    pub depth_sigma_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrawnSpec {
    /// 3 control points for a quadratic curve, 4 for a cubic.
    pub control_points: Vec<[f64; 2]>,
    pub half_width_px: f64,
    pub depth_m: f64,
    #[serde(default)]
    pub tilt: (f64, f64),
    #[serde(default)]
    pub velocity_px: Option<(f64, f64)>,
    #[serde(default)]
    pub jump: Option<JumpSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub frame: u64,
    pub to: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub count: usize,
    #[serde(default = "default_length_range")]
    pub length_mm: (f64, f64),
    #[serde(default = "default_depth_range")]
    pub depth_m: (f64, f64),
    #[serde(default = "default_straight_fraction")]
    pub straight_fraction: f64,
    #[serde(default = "default_sagitta")]
    pub max_sagitta_frac: f64,
}

fn default_length_range() -> (f64, f64) {
    (60.0, 200.0)
}
fn default_depth_range() -> (f64, f64) {
    (0.3, 1.0)
}
fn default_straight_fraction() -> f64 {
    0.5
}
fn default_sagitta() -> f64 {
    0.06
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonSpec {
    pub ponds: Vec<String>,
    pub docs: Vec<u32>,
    pub base_length_mm: f64,
    pub growth_mm_per_day: f64,
    #[serde(default = "default_spread")]
    pub spread_mm: f64,
    #[serde(default = "default_per_frame")]
    pub prawns_per_frame: usize,
    #[serde(default = "default_n_frames")]
    pub n_frames: u64,
    #[serde(default = "default_depth_range")]
    pub depth_m: (f64, f64),
    #[serde(default)]
    pub velocity_px: (f64, f64),
    /// Hand-measured samples recorded per session.
    #[serde(default = "default_hand_samples")]
    pub hand_samples: usize,
}

fn default_spread() -> f64 {
    8.0
}
fn default_per_frame() -> usize {
    5
}
fn default_hand_samples() -> usize {
    5
}

pub fn parse_spec(text: &str) -> Result<SynthSpecFile> {
    let spec: SynthSpecFile = toml::from_str(text).map_err(|e| Error::Spec(e.message().into()))?;
    if spec.season.is_none() && spec.session.is_none() {
        return Err(Error::Spec("spec needs a [session] or [season] block".into()));
    }
    if spec.season.is_some() && (spec.random.is_some() || !spec.prawns.is_empty()) {
        return Err(Error::Spec(
            "[season] generates its own prawns; drop [random]/[[prawn]]".into(),
        ));
    }
    if spec.season.is_none() && spec.random.is_none() && spec.prawns.is_empty() {
        return Err(Error::Spec("no prawns: add [[prawn]] or [random]".into()));
    }
    if !(0.0..1.0).contains(&spec.noise.hole_rate) {
        return Err(Error::Spec("hole_rate must be in [0, 1)".into()));
    }
    Ok(spec)
}

fn intrinsics_from(spec: &Option<IntrinsicsSpec>) -> Result<CameraIntrinsics> {
    let k = match spec {
        Some(s) => CameraIntrinsics {
            fx: s.fx,
            fy: s.fy,
            ppx: s.ppx,
            ppy: s.ppy,
            width: s.width,
            height: s.height,
            depth_scale: s.depth_scale,
        },
        // Typical colour-aligned 720p depth stream.
        None => CameraIntrinsics {
            fx: 900.0,
            fy: 900.0,
            ppx: 640.0,
            ppy: 360.0,
            width: 1280,
            height: 720,
            depth_scale: 0.001,
        },
    };
    k.validate()?;
    Ok(k)
}

struct PrawnPlan {
    prawn: SyntheticPrawn,
    velocity: (f64, f64),
    jump: Option<(u64, [f64; 2])>,
}

impl PrawnPlan {
    /// The prawn as placed at `frame`.
    fn at_frame(&self, frame: u64) -> SyntheticPrawn {
        let p0 = first_point(&self.prawn.curve);
        let (anchor_frame, anchor) = match self.jump {
            Some((jf, to)) if jf <= frame => (jf, to),
            _ => (0, p0),
        };
        let dt = (frame - anchor_frame) as f64;
        let dx = anchor[0] - p0[0] + self.velocity.0 * dt;
        let dy = anchor[1] - p0[1] + self.velocity.1 * dt;
        SyntheticPrawn {
            curve: self.prawn.curve.translated(dx, dy),
            ..self.prawn.clone()
        }
    }
}

fn first_point(curve: &CurveSpec) -> [f64; 2] {
    match curve {
        CurveSpec::Quadratic(ps) => ps[0],
        CurveSpec::Cubic(ps) => ps[0],
    }
}

struct SessionPlan {
    rel_dir: String,
    pond_id: String,
    doc: u32,
    n_frames: u64,
    seed: u64,
    prawns: Vec<PrawnPlan>,
    hand_measurements_mm: Option<Vec<f64>>,
}

fn plan_sessions(spec: &SynthSpecFile, k: &CameraIntrinsics) -> Result<Vec<SessionPlan>> {
    if let Some(season) = &spec.season {
        let mut plans = Vec::new();
        for (pi, pond) in season.ponds.iter().enumerate() {
            for &doc in &season.docs {
                let mut seed_state = spec.seed ^ ((pi as u64) << 32) ^ doc as u64;
                let session_seed = splitmix64(&mut seed_state);
                let mut rng = Xoshiro256::seeded(session_seed);
                let nominal = season.base_length_mm + season.growth_mm_per_day * doc as f64;
                let params = RandomPrawnParams {
                    length_mm: (
                        (nominal - season.spread_mm).max(20.0),
                        nominal + season.spread_mm,
                    ),
                    depth_m: season.depth_m,
                    ..RandomPrawnParams::default()
                };
                let prawns = random_prawns(&mut rng, k, season.prawns_per_frame, &params);
                if prawns.is_empty() {
                    return Err(Error::Spec("frame too small for any prawn band".into()));
                }
                let hand: Vec<f64> = (0..season.hand_samples)
                    .map(|_| (nominal + rng.gaussian() * season.spread_mm / 2.0).max(10.0))
                    .collect();
                plans.push(SessionPlan {
                    rel_dir: format!("{pond}/doc{doc:03}"),
                    pond_id: pond.clone(),
                    doc,
                    n_frames: season.n_frames,
                    seed: session_seed,
                    prawns: prawns
                        .into_iter()
                        .map(|prawn| PrawnPlan {
                            prawn,
                            velocity: season.velocity_px,
                            jump: None,
                        })
                        .collect(),
                    hand_measurements_mm: (!hand.is_empty()).then_some(hand),
                });
            }
        }
        return Ok(plans);
    }

    let session = spec.session.as_ref().expect("validated in parse_spec");
    let mut prawns: Vec<PrawnPlan> = Vec::new();
    for (i, p) in spec.prawns.iter().enumerate() {
        let curve = match p.control_points.len() {
            3 => CurveSpec::Quadratic([p.control_points[0], p.control_points[1], p.control_points[2]]),
            4 => CurveSpec::Cubic([
                p.control_points[0],
                p.control_points[1],
                p.control_points[2],
                p.control_points[3],
            ]),
            n => {
                return Err(Error::Spec(format!(
                    "prawn {i}: {n} control points (need 3 or 4)"
                )))
            }
        };
        if !(p.half_width_px >= 1.0) {
            return Err(Error::Spec(format!("prawn {i}: half_width must be >= 1")));
        }
        prawns.push(PrawnPlan {
            prawn: SyntheticPrawn {
                curve,
                half_width_px: p.half_width_px,
                depth: DepthModel {
                    z_centre_m: p.depth_m,
                    tilt_x_per_px: p.tilt.0,
                    tilt_y_per_px: p.tilt.1,
                },
            },
            velocity: p.velocity_px.unwrap_or(session.velocity_px),
            jump: p.jump.as_ref().map(|j| (j.frame, j.to)),
        });
    }
    if let Some(random) = &spec.random {
        let mut rng = Xoshiro256::seeded(spec.seed);
        let params = RandomPrawnParams {
            length_mm: random.length_mm,
            depth_m: random.depth_m,
            straight_fraction: random.straight_fraction,
            max_sagitta_frac: random.max_sagitta_frac,
            ..RandomPrawnParams::default()
        };
        for prawn in random_prawns(&mut rng, k, random.count, &params) {
            prawns.push(PrawnPlan {
                prawn,
                velocity: session.velocity_px,
                jump: None,
            });
        }
    }
    Ok(vec![SessionPlan {
        rel_dir: String::new(),
        pond_id: session.pond_id.clone(),
        doc: session.doc,
        n_frames: session.n_frames,
        seed: spec.seed,
        prawns,
        hand_measurements_mm: None,
    }])
}

/// Capsule outline of a ribbon, for the VIA annotation document.
pub fn ribbon_polygon(curve: &CurveSpec, half_width: f64) -> Vec<(f64, f64)> {
    const SIDE: usize = 40;
    const CAP: usize = 8;
    let pts: Vec<[f64; 2]> = (0..=SIDE)
        .map(|i| curve.point(i as f64 / SIDE as f64))
        .collect();
    // Unit normals from segment tangents, averaged at interior points.
    let normal_at = |i: usize| -> [f64; 2] {
        let a = if i == 0 { pts[0] } else { pts[i - 1] };
        let b = if i == SIDE { pts[SIDE] } else { pts[i + 1] };
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt().max(1e-12);
        [-dy / len, dx / len]
    };

    let mut poly = Vec::with_capacity(2 * (SIDE + 1) + 2 * CAP);
    for (i, p) in pts.iter().enumerate() {
        let n = normal_at(i);
        poly.push((p[0] + half_width * n[0], p[1] + half_width * n[1]));
    }
    // End cap: sweep the normal through 180 degrees.
    let end = pts[SIDE];
    let n_end = normal_at(SIDE);
    for c in 1..CAP {
        let ang = std::f64::consts::PI * c as f64 / CAP as f64;
        let (cos, sin) = (ang.cos(), ang.sin());
        let t = [n_end[1], -n_end[0]]; // tangent direction
        poly.push((
            end[0] + half_width * (n_end[0] * cos + t[0] * sin),
            end[1] + half_width * (n_end[1] * cos + t[1] * sin),
        ));
    }
    for (i, p) in pts.iter().enumerate().rev() {
        let n = normal_at(i);
        poly.push((p[0] - half_width * n[0], p[1] - half_width * n[1]));
    }
    let start = pts[0];
    let n0 = normal_at(0);
    for c in 1..CAP {
        let ang = std::f64::consts::PI * c as f64 / CAP as f64;
        let (cos, sin) = (ang.cos(), ang.sin());
        let t = [-n0[1], n0[0]];
        poly.push((
            start[0] - half_width * (n0[0] * cos + t[0] * sin),
            start[1] - half_width * (n0[1] * cos - t[1] * sin),
        ));
    }
    poly
}

/// Outcome of writing one spec: session directories relative to the out dir.
pub struct WrittenSessions {
    pub session_dirs: Vec<String>,
}

/// Generate and write every session of a spec under `out_dir`.
pub fn write_sessions(spec: &SynthSpecFile, out_dir: &Path) -> Result<WrittenSessions> {
    let k = intrinsics_from(&spec.intrinsics)?;
    let plans = plan_sessions(spec, &k)?;
    let mut dirs = Vec::new();
    for plan in &plans {
        let dir = if plan.rel_dir.is_empty() {
            out_dir.to_path_buf()
        } else {
            out_dir.join(&plan.rel_dir)
        };
        write_one_session(spec, plan, &k, &dir)?;
        dirs.push(plan.rel_dir.clone());
    }
    Ok(WrittenSessions { session_dirs: dirs })
}

fn write_one_session(
    spec: &SynthSpecFile,
    plan: &SessionPlan,
    k: &CameraIntrinsics,
    dir: &Path,
) -> Result<()> {
    let io_err = |p: &Path, e: std::io::Error| Error::io(p.display().to_string(), e);
    for sub in ["frames", "annotations"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| io_err(&p, e))?;
    }
    if spec.emit_masks {
        let p = dir.join("masks");
        fs::create_dir_all(&p).map_err(|e| io_err(&p, e))?;
    }

    let session_name = format!("{}-doc{:03}", plan.pond_id, plan.doc);
    let mut frames = Vec::new();
    let mut annotations: Vec<PolygonAnnotation> = Vec::new();
    let mut truth_csv = String::from("session,frame_id,instance_id,true_length_mm,true_pixel_arc_length\n");

    for frame in 0..plan.n_frames {
        let frame_id = format!("f{frame:05}");
        let colour_rel = format!("frames/{frame_id}.colour.pgm");
        let depth_rel = format!("frames/{frame_id}.depth.pgm");

        let prawns: Vec<SyntheticPrawn> =
            plan.prawns.iter().map(|p| p.at_frame(frame)).collect();
        let mut frame_seed_state = plan.seed ^ frame.wrapping_mul(0xA076_1D64_78BD_642F);
        let scene_spec = SceneSpec {
            seed: splitmix64(&mut frame_seed_state),
            intrinsics: k.clone(),
            prawns: prawns.clone(),
            hole_rate: spec.noise.hole_rate,
            depth_noise_sigma_m: spec.noise.depth_sigma_m,
            background_depth_m: 0.75,
        };
        let scene = gen_scene(&scene_spec)?;

        let depth_path = dir.join(&depth_rel);
        fs::write(&depth_path, write_depth_pgm(&scene.depth))
            .map_err(|e| io_err(&depth_path, e))?;
        // Colour is never decoded; a small placeholder keeps references valid.
        let colour_path = dir.join(&colour_rel);
        fs::write(&colour_path, write_gray_pgm(8, 8, 128)).map_err(|e| io_err(&colour_path, e))?;

        let mut mask_rels = Vec::new();
        for (i, (prawn, truth)) in prawns.iter().zip(&scene.truths).enumerate() {
            let colour_stem = format!("{frame_id}.colour.pgm");
            annotations.push(PolygonAnnotation {
                image_id: colour_stem,
                vertices: ribbon_polygon(&prawn.curve, prawn.half_width_px),
                score: None,
            });
            writeln!(
                truth_csv,
                "{},{},{},{:.3},{:.2}",
                session_name,
                frame_id,
                i,
                truth.length_m * 1000.0,
                truth.pixel_arc_length
            )
            .unwrap();
            if spec.emit_masks {
                let mask_rel = format!("masks/{frame_id}_i{i:02}.pgm");
                let mask_path = dir.join(&mask_rel);
                fs::write(&mask_path, write_mask_pgm(&scene.masks[i]))
                    .map_err(|e| io_err(&mask_path, e))?;
                mask_rels.push(mask_rel);
            }
        }

        frames.push(FrameEntry {
            id: frame_id,
            colour: colour_rel,
            depth: depth_rel,
            annotations: Some("annotations/via.json".into()),
            masks: mask_rels,
        });
    }

    let via_path = dir.join("annotations/via.json");
    fs::write(&via_path, serialize_via(&annotations)).map_err(|e| io_err(&via_path, e))?;

    let k_path = dir.join("intrinsics.toml");
    fs::write(&k_path, serialize_intrinsics(k)).map_err(|e| io_err(&k_path, e))?;

    let manifest = SessionManifest {
        pond_id: plan.pond_id.clone(),
        doc: plan.doc,
        intrinsics: "intrinsics.toml".into(),
        hand_measurements_mm: plan.hand_measurements_mm.clone(),
        frames,
    };
    let m_path = dir.join("manifest.toml");
    fs::write(&m_path, serialize_manifest(&manifest)).map_err(|e| io_err(&m_path, e))?;

    let t_path = dir.join("ground_truth.csv");
    fs::write(&t_path, truth_csv).map_err(|e| io_err(&t_path, e))?;
    Ok(())
}
