//! VGG Image Annotator (VIA) polygon export parsing and serialization.
//!
//! The supported subset is the project-export shape: a JSON map of image
//! entries, each carrying `regions[].shape_attributes` with
//! `name: "polygon"` and `all_points_x` / `all_points_y` arrays. Predictions
//! use the same layout plus a numeric `score` in `region_attributes`.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingest::PolygonAnnotation;

/// Outcome of [`parse_via`]: annotations in document order plus counts of
/// regions that were dropped and why.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedAnnotations {
    pub annotations: Vec<PolygonAnnotation>,
    /// Regions whose shape is not a polygon (circles, rects, ...).
    pub skipped_shapes: usize,
    /// Polygon regions with fewer than 3 vertices.
    pub rejected_polygons: usize,
}

pub fn parse_via(document: &str) -> Result<ParsedAnnotations> {
    let root: Value = serde_json::from_str(document).map_err(|e| Error::Parse {
        offset: byte_offset(document, e.line(), e.column()),
        msg: e.to_string(),
    })?;

    let map = match &root {
        // Full project saves wrap the image map in `_via_img_metadata`.
        Value::Object(o) => match o.get("_via_img_metadata") {
            Some(Value::Object(inner)) => inner,
            _ => o,
        },
        _ => {
            return Err(Error::Parse {
                offset: 0,
                msg: "top-level value is not an object".into(),
            })
        }
    };

    let mut out = ParsedAnnotations::default();
    for (key, entry) in map {
        let Some(entry) = entry.as_object() else {
            continue;
        };
        let image_id = entry
            .get("filename")
            .and_then(Value::as_str)
            .unwrap_or(key)
            .to_string();

        // Regions are a list in current exports, an index-keyed map in old ones.
        let regions: Vec<&Value> = match entry.get("regions") {
            Some(Value::Array(a)) => a.iter().collect(),
            Some(Value::Object(o)) => o.values().collect(),
            _ => Vec::new(),
        };

        for region in regions {
            let Some(shape) = region.get("shape_attributes").and_then(Value::as_object) else {
                out.skipped_shapes += 1;
                continue;
            };
            if shape.get("name").and_then(Value::as_str) != Some("polygon") {
                out.skipped_shapes += 1;
                continue;
            }
            let xs = number_array(shape.get("all_points_x"))?;
            let ys = number_array(shape.get("all_points_y"))?;
            if xs.len() != ys.len() {
                return Err(Error::Parse {
                    offset: 0,
                    msg: format!(
                        "polygon in `{image_id}` has {} x points but {} y points",
                        xs.len(),
                        ys.len()
                    ),
                });
            }
            if xs.len() < 3 {
                out.rejected_polygons += 1;
                continue;
            }
            let score = region_score(region, &image_id)?;
            out.annotations.push(PolygonAnnotation {
                image_id: image_id.clone(),
                vertices: xs.into_iter().zip(ys).collect(),
                score,
            });
        }
    }
    Ok(out)
}

/// Serialize annotations back to the supported VIA subset. Entries are
/// grouped by image in first-appearance order.
pub fn serialize_via(annotations: &[PolygonAnnotation]) -> String {
    let mut images: Vec<(&str, Vec<&PolygonAnnotation>)> = Vec::new();
    for ann in annotations {
        match images.iter_mut().find(|(id, _)| *id == ann.image_id) {
            Some((_, list)) => list.push(ann),
            None => images.push((&ann.image_id, vec![ann])),
        }
    }

    let mut root = serde_json::Map::new();
    for (image_id, anns) in images {
        let regions: Vec<Value> = anns
            .iter()
            .map(|ann| {
                let mut shape = serde_json::Map::new();
                shape.insert("name".into(), Value::from("polygon"));
                shape.insert(
                    "all_points_x".into(),
                    Value::from(ann.vertices.iter().map(|v| v.0).collect::<Vec<_>>()),
                );
                shape.insert(
                    "all_points_y".into(),
                    Value::from(ann.vertices.iter().map(|v| v.1).collect::<Vec<_>>()),
                );
                let mut attrs = serde_json::Map::new();
                if let Some(score) = ann.score {
                    attrs.insert("score".into(), Value::from(score));
                }
                let mut region = serde_json::Map::new();
                region.insert("shape_attributes".into(), Value::Object(shape));
                region.insert("region_attributes".into(), Value::Object(attrs));
                Value::Object(region)
            })
            .collect();

        let mut entry = serde_json::Map::new();
        entry.insert("filename".into(), Value::from(image_id));
        entry.insert("size".into(), Value::from(-1));
        entry.insert("regions".into(), Value::Array(regions));
        entry.insert("file_attributes".into(), Value::Object(Default::default()));
        root.insert(format!("{image_id}-1"), Value::Object(entry));
    }
    serde_json::to_string_pretty(&Value::Object(root)).expect("serializing plain JSON values")
}

fn number_array(v: Option<&Value>) -> Result<Vec<f64>> {
    let Some(Value::Array(a)) = v else {
        return Err(Error::Parse {
            offset: 0,
            msg: "polygon is missing all_points_x/all_points_y".into(),
        });
    };
    a.iter()
        .map(|x| {
            x.as_f64().ok_or_else(|| Error::Parse {
                offset: 0,
                msg: format!("non-numeric polygon coordinate {x}"),
            })
        })
        .collect()
}

fn region_score(region: &Value, image_id: &str) -> Result<Option<f64>> {
    let Some(attrs) = region.get("region_attributes").and_then(Value::as_object) else {
        return Ok(None);
    };
    let Some(raw) = attrs.get("score") else {
        return Ok(None);
    };
    // VIA stores attribute values as strings when entered by hand.
    let score = match raw {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse::<f64>().ok(),
        _ => None,
    };
    match score {
        Some(s) if (0.0..=1.0).contains(&s) => Ok(Some(s)),
        _ => Err(Error::Parse {
            offset: 0,
            msg: format!("region in `{image_id}` has invalid score {raw}"),
        }),
    }
}

/// Translate serde_json's 1-based line/column into a byte offset.
fn byte_offset(document: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut remaining = line - 1;
    let mut offset = 0;
    for (i, b) in document.bytes().enumerate() {
        if remaining == 0 {
            return (i + column.saturating_sub(1)).min(document.len());
        }
        if b == b'\n' {
            remaining -= 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(document.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECT_AND_CIRCLE: &str = r#"{
      "img1.png123": {
        "filename": "img1.png",
        "size": 123,
        "regions": [
          {"shape_attributes": {"name": "polygon",
             "all_points_x": [0, 10, 10, 0], "all_points_y": [0, 0, 10, 10]},
           "region_attributes": {}},
          {"shape_attributes": {"name": "circle", "cx": 5, "cy": 5, "r": 2},
           "region_attributes": {}}
        ],
        "file_attributes": {}
      }
    }"#;

    #[test]
    fn rectangle_region_parses() {
        let parsed = parse_via(RECT_AND_CIRCLE).unwrap();
        assert_eq!(parsed.annotations.len(), 1);
        assert_eq!(parsed.annotations[0].vertices.len(), 4);
        assert_eq!(parsed.annotations[0].image_id, "img1.png");
        assert_eq!(parsed.skipped_shapes, 1);
    }

    #[test]
    fn degenerate_polygon_counted() {
        let doc = r#"{"a": {"filename": "a", "regions": [
            {"shape_attributes": {"name": "polygon",
               "all_points_x": [1, 2], "all_points_y": [1, 2]}}]}}"#;
        let parsed = parse_via(doc).unwrap();
        assert!(parsed.annotations.is_empty());
        assert_eq!(parsed.rejected_polygons, 1);
    }

    #[test]
    fn malformed_document_reports_offset() {
        let doc = "{\"a\": {\n  \"regions\": [,]\n}}";
        let err = parse_via(doc).unwrap_err();
        match err {
            Error::Parse { offset, .. } => {
                // The stray comma sits on line 2.
                assert!(offset > 8 && offset <= doc.len(), "offset {offset}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn score_attribute_round_trips() {
        let anns = vec![PolygonAnnotation {
            image_id: "f1".into(),
            vertices: vec![(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)],
            score: Some(0.75),
        }];
        let doc = serialize_via(&anns);
        let parsed = parse_via(&doc).unwrap();
        assert_eq!(parsed.annotations, anns);
    }

    #[test]
    fn invalid_score_rejected() {
        let doc = r#"{"a": {"filename": "a", "regions": [
            {"shape_attributes": {"name": "polygon",
               "all_points_x": [0, 4, 4], "all_points_y": [0, 0, 3]},
             "region_attributes": {"score": 1.5}}]}}"#;
        assert!(parse_via(doc).is_err());
    }

    #[test]
    fn old_style_region_map_supported() {
        let doc = r#"{"a": {"filename": "a", "regions": {
            "0": {"shape_attributes": {"name": "polygon",
               "all_points_x": [0, 4, 4], "all_points_y": [0, 0, 3]}}}}}"#;
        let parsed = parse_via(doc).unwrap();
        assert_eq!(parsed.annotations.len(), 1);
    }

    proptest::proptest! {
        #[test]
        fn random_annotations_round_trip(
            n_images in 1usize..5,
            per_image in 1usize..4,
            coords in proptest::collection::vec(0.0f64..1280.0, 120),
            with_score in proptest::collection::vec(proptest::bool::ANY, 20),
        ) {
            let mut anns = Vec::new();
            let mut c = coords.iter().cycle();
            for img in 0..n_images {
                for r in 0..per_image {
                    let k = anns.len();
                    let vertices: Vec<(f64, f64)> = (0..3 + (k % 4))
                        .map(|_| (*c.next().unwrap(), *c.next().unwrap()))
                        .collect();
                    anns.push(PolygonAnnotation {
                        image_id: format!("img{img}.png"),
                        vertices,
                        score: with_score[(img * 3 + r) % with_score.len()]
                            .then_some((k % 10) as f64 / 10.0),
                    });
                }
            }
            let parsed = parse_via(&serialize_via(&anns)).unwrap();
            proptest::prop_assert_eq!(parsed.annotations, anns);
            proptest::prop_assert_eq!(parsed.skipped_shapes, 0);
            proptest::prop_assert_eq!(parsed.rejected_polygons, 0);
        }
    }

    // Round-trip on a corpus with the shape reported for the field dataset:
    // hundreds of images, thousands of polygons.
    #[test]
    fn paper_scale_corpus_round_trips() {
        let mut anns = Vec::new();
        let mut polys = 0usize;
        let mut img = 0usize;
        while polys < 4454 {
            let in_this_image = 2 + (img * 7 + 3) % 11; // 2..=12, deterministic
            for k in 0..in_this_image {
                if polys == 4454 {
                    break;
                }
                let base = (polys % 600) as f64;
                anns.push(PolygonAnnotation {
                    image_id: format!("frame{img:04}.png"),
                    vertices: vec![
                        (base, k as f64),
                        (base + 8.0, k as f64 + 1.0),
                        (base + 5.0, k as f64 + 6.0),
                        (base + 1.0, k as f64 + 4.0),
                    ],
                    score: None,
                });
                polys += 1;
            }
            img += 1;
        }
        assert!(img <= 735, "corpus generator exceeded image budget: {img}");
        let doc = serialize_via(&anns);
        let parsed = parse_via(&doc).unwrap();
        assert_eq!(parsed.annotations.len(), 4454);
        assert_eq!(parsed.annotations, anns);
        assert_eq!(parsed.skipped_shapes, 0);
    }
}
