//! Mask polygonization, CVAT XML exchange, and polygon rasterization.
//!
//! Coordinates follow the pixel-corner convention: pixel `(i, j)` spans
//! `[i, i+1) x [j, j+1)` and its center is `(i + 0.5, j + 0.5)`.

mod cvat;
pub mod simplify;
pub mod trace;

pub use cvat::{
    format_points, parse_points, read_cvat_xml, write_cvat_xml, AnnotationDoc, ImageAnnotation, ParsedAnnotations,
    Shape, ShapeKind, CVAT_VERSION,
};

use crate::compositor::{label_components, ClassMask};
use crate::error::{Error, Result};

pub const DEFAULT_SIMPLIFY_EPS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygonization {
    pub shapes: Vec<Shape>,
    /// Components whose simplified outline had fewer than three vertices.
    pub dropped: usize,
}

/// One polygon per 4-connected foreground component.
///
/// Components lying inside another component's outline get a z_order equal
/// to their nesting depth, so filling in z order restores them over the
/// enclosing polygon.
pub fn mask_to_polygons(mask: &ClassMask, simplify_eps: f64) -> Polygonization {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let (labels, classes) = label_components(mask);

    let mut starts = vec![None; classes.len()];
    for (i, &label) in labels.iter().enumerate() {
        if label != u32::MAX && starts[label as usize].is_none() {
            starts[label as usize] = Some(((i % w) as u32, (i / w) as u32));
        }
    }

    let outlines: Vec<Vec<(f64, f64)>> = starts
        .iter()
        .enumerate()
        .map(|(id, start)| {
            let start = start.expect("every component has a pixel");
            trace::trace_outer(&labels, w, h, id as u32, start)
                .into_iter()
                .map(|(x, y)| (x as f64, y as f64))
                .collect()
        })
        .collect();

    let depth = |id: usize| -> i32 {
        let (sx, sy) = starts[id].expect("component start");
        let (cx, cy) = (sx as f64 + 0.5, sy as f64 + 0.5);
        outlines
            .iter()
            .enumerate()
            .filter(|&(other, outline)| other != id && trace::contains(outline, cx, cy))
            .count() as i32
    };

    let mut shapes = Vec::with_capacity(classes.len());
    let mut dropped = 0;
    for (id, class) in classes.iter().enumerate() {
        let vertices = simplify::simplify_ring(&outlines[id], simplify_eps);
        if vertices.len() < 3 {
            dropped += 1;
            continue;
        }
        shapes.push(Shape {
            z_order: depth(id),
            ..Shape::polygon(*class, vertices)
        });
    }
    shapes.sort_by_key(|s| s.z_order);
    Polygonization { shapes, dropped }
}

/// Even-odd scanline fill of `vertices` into `mask`; a pixel is filled when its
/// center is inside the polygon.
pub fn fill_polygon(mask: &mut ClassMask, vertices: &[(f64, f64)], class: crate::class::ClassLabel) {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let n = vertices.len();
    if n < 3 {
        return;
    }
    let (ymin, ymax) = vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    let row_lo = ((ymin - 0.5).ceil() as i64).max(0);
    let row_hi = ((ymax - 0.5).floor() as i64).min(h - 1);
    let mut crossings = Vec::new();
    for row in row_lo..=row_hi {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let (x1, y1) = vertices[i];
            let (x2, y2) = vertices[(i + 1) % n];
            if (y1 <= yc) != (y2 <= yc) {
                crossings.push(x1 + (yc - y1) * (x2 - x1) / (y2 - y1));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            // Centers i + 0.5 in [a, b).
            let first = ((pair[0] - 0.5).ceil() as i64).max(0);
            let last = ((pair[1] - 0.5).ceil() as i64 - 1).min(w - 1);
            for col in first..=last {
                mask.set(col as u32, row as u32, class);
            }
        }
    }
}

pub fn rasterize(doc: &AnnotationDoc, image_id: u32) -> Result<ClassMask> {
    let img = doc
        .image(image_id)
        .ok_or_else(|| Error::Lookup(format!("no image with id {image_id} in annotation document")))?;
    Ok(rasterize_image(img))
}

pub fn rasterize_image(img: &ImageAnnotation) -> ClassMask {
    let mut mask = ClassMask::new(img.width, img.height);
    let mut shapes: Vec<&Shape> = img.shapes.iter().collect();
    shapes.sort_by_key(|s| s.z_order);
    for shape in shapes {
        match shape.kind {
            ShapeKind::Polygon => fill_polygon(&mut mask, &shape.vertices, shape.label),
            ShapeKind::Points => {
                for &(x, y) in &shape.vertices {
                    let px = (x.floor() as i64).clamp(0, img.width as i64 - 1);
                    let py = (y.floor() as i64).clamp(0, img.height as i64 - 1);
                    if img.width > 0 && img.height > 0 {
                        mask.set(px as u32, py as u32, shape.label);
                    }
                }
            }
        }
    }
    mask
}
