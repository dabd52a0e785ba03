//! Parsing of annotation exports, depth rasters, camera intrinsics, and
//! session manifests into validated in-memory records.
//!
//! All loaders are pure functions of their input bytes; the returned records
//! are immutable and safe to share across threads.

mod manifest;
mod pgm;
mod raster;
mod via;

pub use manifest::{
    load_intrinsics, load_manifest, serialize_intrinsics, serialize_manifest, FrameEntry,
    SessionManifest,
};
pub use pgm::{
    load_depth, load_mask_pgm, write_depth_pgm, write_gray_pgm, write_mask_pgm, DepthEncoding,
};
pub use raster::rasterize_polygon;
pub use via::{parse_via, serialize_via, ParsedAnnotations};

use crate::error::{Error, Result};

/// Pinhole model of the depth/colour camera pair plus the metric scale of the
/// depth stream. Depth and colour are assumed pre-aligned pixel-for-pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraIntrinsics {
    /// Focal length in pixels, x axis.
    pub fx: f64,
    /// Focal length in pixels, y axis.
    pub fy: f64,
    /// Principal point x, pixels.
    pub ppx: f64,
    /// Principal point y, pixels.
    pub ppy: f64,
    /// Frame width in pixels.
    pub width: u32,
    /// Frame height in pixels.
    pub height: u32,
    /// Metres per depth unit (Z16 convention: 0.001).
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0) {
            return Err(Error::config("fx", "focal length must be positive"));
        }
        if !(self.fy > 0.0) {
            return Err(Error::config("fy", "focal length must be positive"));
        }
        if !(self.ppx >= 0.0 && self.ppx < self.width as f64) {
            return Err(Error::config("ppx", "principal point outside frame"));
        }
        if !(self.ppy >= 0.0 && self.ppy < self.height as f64) {
            return Err(Error::config("ppy", "principal point outside frame"));
        }
        if !(self.depth_scale > 0.0) {
            return Err(Error::config("depth_scale", "must be positive"));
        }
        Ok(())
    }
}

/// 16-bit range raster. A value of 0 means "no depth" and is treated as
/// missing everywhere downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major depth units, length `width * height`.
    pub values: Vec<u16>,
    /// Metres per depth unit.
    pub depth_scale: f64,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, values: Vec<u16>, depth_scale: f64) -> Result<Self> {
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::Format(format!(
                "depth buffer has {} samples, expected {}",
                values.len(),
                (width as usize) * (height as usize)
            )));
        }
        Ok(DepthFrame {
            width,
            height,
            values,
            depth_scale,
        })
    }

    /// Raw depth units at (x, y); 0 is the invalid sentinel.
    #[inline]
    pub fn raw(&self, x: u32, y: u32) -> u16 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Metric depth at (x, y), or `None` for the invalid sentinel.
    #[inline]
    pub fn metres(&self, x: u32, y: u32) -> Option<f64> {
        match self.raw(x, y) {
            0 => None,
            units => Some(units as f64 * self.depth_scale),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }
}

/// One polygon region from an annotation or prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonAnnotation {
    /// Identifier of the image the polygon belongs to (the exporter's
    /// filename attribute when present, the entry key otherwise).
    pub image_id: String,
    /// Ordered vertices in pixel coordinates.
    pub vertices: Vec<(f64, f64)>,
    /// Detection confidence in [0, 1]; absent for ground truth.
    pub score: Option<f64>,
}

impl PolygonAnnotation {
    /// Axis-aligned extent of the vertices as (x1, y1, x2, y2).
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut x1 = f64::INFINITY;
        let mut y1 = f64::INFINITY;
        let mut x2 = f64::NEG_INFINITY;
        let mut y2 = f64::NEG_INFINITY;
        for &(x, y) in &self.vertices {
            x1 = x1.min(x);
            y1 = y1.min(y);
            x2 = x2.max(x);
            y2 = y2.max(y);
        }
        (x1, y1, x2, y2)
    }
}

/// Row-major set-membership raster for a single instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        let i = self.idx(x, y);
        self.bits[i] = on;
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    /// Tight bounding box of set pixels as (x1, y1, x2, y2) inclusive, or
    /// `None` for an empty mask.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut b: Option<(u32, u32, u32, u32)> = None;
        for (x, y) in self.iter_set() {
            b = Some(match b {
                None => (x, y, x, y),
                Some((x1, y1, x2, y2)) => (x1.min(x), y1.min(y), x2.max(x), y2.max(y)),
            });
        }
        b
    }
}

