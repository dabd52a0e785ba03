//! Polygon-to-mask rasterization.
//!
//! Convention: a pixel (x, y) is set iff its centre (x + 0.5, y + 0.5) lies
//! inside the polygon under the even-odd rule. A crossing counts when the
//! pixel centre is strictly left of the edge intersection and the edge spans
//! the centre's y under the half-open rule `y_lo <= cy < y_hi`.

use crate::error::{Error, Result};
use crate::ingest::{BinaryMask, PolygonAnnotation};

pub fn rasterize_polygon(poly: &PolygonAnnotation, width: u32, height: u32) -> Result<BinaryMask> {
    assert!(width > 0 && height > 0, "frame dims must be positive");
    if poly.vertices.len() < 3 {
        return Err(Error::EmptyMask);
    }

    // Clamp vertices into the frame; a polygon fully outside collapses onto
    // the border with zero area.
    let verts: Vec<(f64, f64)> = poly
        .vertices
        .iter()
        .map(|&(x, y)| (x.clamp(0.0, width as f64), y.clamp(0.0, height as f64)))
        .collect();

    if shoelace_area(&verts) == 0.0 {
        return Err(Error::EmptyMask);
    }

    let mut mask = BinaryMask::empty(width, height);
    let mut crossings: Vec<f64> = Vec::new();
    for y in 0..height {
        let cy = y as f64 + 0.5;
        crossings.clear();
        for i in 0..verts.len() {
            let (x0, y0) = verts[i];
            let (x1, y1) = verts[(i + 1) % verts.len()];
            if (y0 <= cy && cy < y1) || (y1 <= cy && cy < y0) {
                crossings.push(x0 + (cy - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
        // Even-odd: centres in [c[2i], c[2i+1]) are inside.
        for pair in crossings.chunks_exact(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let x_start = (lo - 0.5).ceil().max(0.0) as i64;
            let x_end = ((hi - 0.5).ceil() as i64).min(width as i64);
            for x in x_start..x_end {
                let cx = x as f64 + 0.5;
                // Guard the half-open convention at span ends.
                if cx >= lo && cx < hi {
                    mask.set(x as u32, y, true);
                }
            }
        }
    }
    Ok(mask)
}

fn shoelace_area(verts: &[(f64, f64)]) -> f64 {
    let mut twice = 0.0;
    for i in 0..verts.len() {
        let (x0, y0) = verts[i];
        let (x1, y1) = verts[(i + 1) % verts.len()];
        twice += x0 * y1 - x1 * y0;
    }
    (twice / 2.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(vertices: Vec<(f64, f64)>) -> PolygonAnnotation {
        PolygonAnnotation {
            image_id: "t".into(),
            vertices,
            score: None,
        }
    }

    /// Independent oracle: even-odd crossing count per pixel centre.
    fn centre_inside(verts: &[(f64, f64)], cx: f64, cy: f64) -> bool {
        let mut crossings = 0;
        for i in 0..verts.len() {
            let (x0, y0) = verts[i];
            let (x1, y1) = verts[(i + 1) % verts.len()];
            if (y0 <= cy && cy < y1) || (y1 <= cy && cy < y0) {
                let xi = x0 + (cy - y0) * (x1 - x0) / (y1 - y0);
                if cx < xi {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }

    fn brute_force(verts: &[(f64, f64)], w: u32, h: u32) -> Vec<(u32, u32)> {
        let clamped: Vec<(f64, f64)> = verts
            .iter()
            .map(|&(x, y)| (x.clamp(0.0, w as f64), y.clamp(0.0, h as f64)))
            .collect();
        let mut set = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if centre_inside(&clamped, x as f64 + 0.5, y as f64 + 0.5) {
                    set.push((x, y));
                }
            }
        }
        set
    }

    #[test]
    fn unit_square_covers_exactly_100_pixels() {
        let p = poly(vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let mask = rasterize_polygon(&p, 20, 20).unwrap();
        assert_eq!(mask.count(), brute_force(&p.vertices, 20, 20).len());
        assert_eq!(mask.count(), 100);
    }

    #[test]
    fn sliver_triangle_has_no_interior_centres() {
        let p = poly(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let mask = rasterize_polygon(&p, 8, 8).unwrap();
        assert_eq!(brute_force(&p.vertices, 8, 8).len(), 0);
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn fully_outside_polygon_is_empty_mask_error() {
        let p = poly(vec![(-10.0, -10.0), (-5.0, -10.0), (-5.0, -5.0)]);
        assert!(matches!(
            rasterize_polygon(&p, 16, 16),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn zero_area_polygon_rejected() {
        let p = poly(vec![(2.0, 2.0), (6.0, 6.0), (4.0, 4.0)]);
        assert!(matches!(
            rasterize_polygon(&p, 16, 16),
            Err(Error::EmptyMask)
        ));
    }

    proptest! {
        // Star-shaped polygons are always simple; quarter-pixel vertices
        // exercise boundary-tie handling.
        #[test]
        fn matches_pixel_centre_brute_force(
            n in 3usize..9,
            seed in 0u64..500,
            cx in 8.0f64..56.0,
            cy in 8.0f64..56.0,
        ) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            let mut verts = Vec::new();
            for k in 0..n {
                let angle = (k as f64 + (next() % 128) as f64 / 512.0)
                    * std::f64::consts::TAU / n as f64;
                let r = 2.0 + (next() % 64) as f64 / 4.0; // up to 18, quarter steps
                let x = ((cx + r * angle.cos()) * 4.0).round() / 4.0;
                let y = ((cy + r * angle.sin()) * 4.0).round() / 4.0;
                verts.push((x, y));
            }
            let p = poly(verts.clone());
            match rasterize_polygon(&p, 64, 64) {
                Ok(mask) => {
                    let expect = brute_force(&verts, 64, 64);
                    let got: Vec<(u32, u32)> = mask.iter_set().collect();
                    prop_assert_eq!(got, expect);
                }
                Err(Error::EmptyMask) => {
                    // Degenerate draw; the oracle must agree there is no interior.
                    prop_assert_eq!(brute_force(&verts, 64, 64).len(), 0);
                }
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }
    }
}
