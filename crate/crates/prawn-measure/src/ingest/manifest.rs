//! Session manifest and camera intrinsics documents (TOML).
//!
//! One manifest per session directory. Frames are listed in capture order;
//! file references are relative to the manifest's directory. Unknown keys are
//! rejected so typos fail loudly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CameraIntrinsics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    /// Frame identifier, unique within the session.
    pub id: String,
    /// Colour frame reference (never decoded beyond existence).
    pub colour: String,
    /// Depth frame reference: 16-bit PGM or raw `.z16`.
    pub depth: String,
    /// VIA document holding this frame's polygons (keyed by the colour
    /// file's basename or the frame id).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<String>,
    /// Direct per-instance masks (8-bit PGM); preferred over `annotations`
    /// when both are present.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub pond_id: String,
    /// Day of culture.
    pub doc: u32,
    /// Path of the intrinsics document, relative to the session directory.
    pub intrinsics: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_measurements_mm: Option<Vec<f64>>,
    pub frames: Vec<FrameEntry>,
}

impl SessionManifest {
    /// Check that every referenced file exists under `base`.
    pub fn check_resolvable(&self, base: &Path) -> Result<()> {
        let check = |field: &str, rel: &str| -> Result<()> {
            if base.join(rel).is_file() {
                Ok(())
            } else {
                Err(Error::config(field, format!("`{rel}` does not resolve")))
            }
        };
        check("intrinsics", &self.intrinsics)?;
        for frame in &self.frames {
            check("frames.colour", &frame.colour)?;
            check("frames.depth", &frame.depth)?;
            if let Some(ann) = &frame.annotations {
                check("frames.annotations", ann)?;
            }
            for mask in &frame.masks {
                check("frames.masks", mask)?;
            }
        }
        Ok(())
    }
}

pub fn load_manifest(text: &str) -> Result<SessionManifest> {
    let manifest: SessionManifest = toml::from_str(text).map_err(toml_config_error)?;
    if manifest.frames.is_empty() {
        return Err(Error::config("frames", "session has no frames"));
    }
    let mut seen = std::collections::HashSet::new();
    for frame in &manifest.frames {
        if !seen.insert(frame.id.as_str()) {
            return Err(Error::config(
                "frames",
                format!("duplicate frame id `{}`", frame.id),
            ));
        }
        if frame.annotations.is_none() && frame.masks.is_empty() {
            return Err(Error::config(
                "frames",
                format!("frame `{}` has neither annotations nor masks", frame.id),
            ));
        }
    }
    if let Some(hand) = &manifest.hand_measurements_mm {
        if hand.iter().any(|&mm| !(mm > 0.0) || !mm.is_finite()) {
            return Err(Error::config(
                "hand_measurements_mm",
                "lengths must be positive",
            ));
        }
    }
    Ok(manifest)
}

/// On-disk shape of the intrinsics document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsDoc {
    fx: f64,
    fy: f64,
    ppx: f64,
    ppy: f64,
    width: u32,
    height: u32,
    #[serde(default = "default_depth_scale")]
    depth_scale: f64,
}

fn default_depth_scale() -> f64 {
    0.001
}

pub fn load_intrinsics(text: &str) -> Result<CameraIntrinsics> {
    let doc: IntrinsicsDoc = toml::from_str(text).map_err(toml_config_error)?;
    let k = CameraIntrinsics {
        fx: doc.fx,
        fy: doc.fy,
        ppx: doc.ppx,
        ppy: doc.ppy,
        width: doc.width,
        height: doc.height,
        depth_scale: doc.depth_scale,
    };
    k.validate()?;
    Ok(k)
}

pub fn serialize_intrinsics(k: &CameraIntrinsics) -> String {
    let doc = IntrinsicsDoc {
        fx: k.fx,
        fy: k.fy,
        ppx: k.ppx,
        ppy: k.ppy,
        width: k.width,
        height: k.height,
        depth_scale: k.depth_scale,
    };
    toml::to_string(&doc).expect("intrinsics serialize")
}

pub fn serialize_manifest(m: &SessionManifest) -> String {
    toml::to_string(m).expect("manifest serialize")
}

fn toml_config_error(e: toml::de::Error) -> Error {
    // Point at the offending key when toml exposes one.
    let msg = e.message().to_string();
    let field = msg
        .split('`')
        .nth(1)
        .unwrap_or("document")
        .split_whitespace()
        .next()
        .unwrap_or("document")
        .to_string();
    Error::Config { field, msg }
}
