//! Independent oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use image::{Rgb, RgbImage};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use layerdoc::annotation::{AnnotationDoc, ImageAnnotation, Shape, ShapeKind};
use layerdoc::samples::{sample_catalog, SampleCounts};
use layerdoc::{Asset, Catalog, ClassLabel, ClassMask, GrayHistogram, PageSpec, Placement};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

/// The demo catalog used throughout the suites.
pub fn demo_catalog() -> Catalog {
    sample_catalog(0, SampleCounts::default()).unwrap()
}

/// Similarity by accumulating the per-bin penalty `|s-g|/max(s,g)` over the
/// bins where either histogram is nonzero.
pub fn similarity_oracle(s: &GrayHistogram, g: &GrayHistogram) -> f64 {
    let mut penalty = 0.0;
    for i in 0..256 {
        let (a, b) = (s.bins()[i], g.bins()[i]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let hi = if a > b { a } else { b };
        penalty += (a - b).abs() / hi;
    }
    1.0 - penalty / 256.0
}

/// Random histogram over a random subset of gray levels.
pub fn random_histogram(rng: &mut ChaCha8Rng) -> GrayHistogram {
    let mut counts = [0u64; 256];
    let support = 1 + uniform(rng, 256);
    for _ in 0..support {
        counts[uniform(rng, 256) as usize] += 1 + uniform(rng, 1000);
    }
    GrayHistogram::from_counts(&counts).unwrap()
}

/// Class of the top-most placement covering `(x, y)`, by scanning every
/// placement.
pub fn top_class(spec: &PageSpec, x: u32, y: u32) -> ClassLabel {
    let mut best: Option<&Placement> = None;
    for p in &spec.placements {
        let covers = x >= p.x && x < p.x + p.target_w && y >= p.y && y < p.y + p.target_h;
        if covers && best.is_none_or(|b| p.z > b.z) {
            best = Some(p);
        }
    }
    best.map_or(ClassLabel::Background, |p| p.class)
}

/// Small catalog of solid assets with ids `"{class}{k}"`.
pub fn tiny_catalog() -> Catalog {
    let mut assets = Vec::new();
    for (class, shade) in [(ClassLabel::Text, 20u8), (ClassLabel::Figure, 120), (ClassLabel::Table, 220)] {
        for k in 0..3u8 {
            let img = RgbImage::from_fn(5 + k as u32 * 7, 4 + k as u32 * 5, |x, y| {
                Rgb([shade.wrapping_add((x * 3) as u8), shade, shade.wrapping_add((y * 5) as u8)])
            });
            assets.push(Asset::new(format!("{class}{k}"), class, img).unwrap());
        }
    }
    Catalog::from_assets(assets).unwrap()
}

/// Random spec over `tiny_catalog()` with overlapping rectangles and a
/// shuffled z order.
pub fn random_spec(rng: &mut ChaCha8Rng, width: u32, height: u32) -> PageSpec {
    let mut spec = PageSpec::blank("random", width, height);
    let n = uniform(rng, 12) as u32;
    let mut zs: Vec<u32> = (0..n).collect();
    for i in (1..zs.len()).rev() {
        zs.swap(i, uniform(rng, i as u64 + 1) as usize);
    }
    for z in zs {
        let class = ClassLabel::FOREGROUND[uniform(rng, 3) as usize];
        let k = uniform(rng, 3);
        let w = 1 + uniform(rng, width as u64) as u32;
        let h = 1 + uniform(rng, height as u64) as u32;
        let x = uniform(rng, (width - w + 1) as u64) as u32;
        let y = uniform(rng, (height - h + 1) as u64) as u32;
        spec.placements.push(Placement {
            asset_id: format!("{class}{k}"),
            class,
            x,
            y,
            scale: 1.0,
            scale_y: 1.0,
            target_w: w,
            target_h: h,
            z,
            relaxed: false,
        });
    }
    spec
}

/// Confusion counts by a plain double loop over pixel coordinates.
pub fn tally(pred: &ClassMask, truth: &ClassMask) -> [[u64; 4]; 4] {
    let mut counts = [[0u64; 4]; 4];
    for y in 0..truth.height() {
        for x in 0..truth.width() {
            counts[truth.get(x, y).code() as usize][pred.get(x, y).code() as usize] += 1;
        }
    }
    counts
}

/// Intersection over union of one class between two masks; `None` when the
/// class is absent from both.
pub fn class_iou(a: &ClassMask, b: &ClassMask, class: ClassLabel) -> Option<f64> {
    let (mut inter, mut union) = (0u64, 0u64);
    for (&p, &q) in a.codes().iter().zip(b.codes()) {
        let (ip, iq) = (p == class.code(), q == class.code());
        inter += u64::from(ip && iq);
        union += u64::from(ip || iq);
    }
    (union > 0).then(|| inter as f64 / union as f64)
}

/// Random document in writer order with coordinates on the 0.01 grid.
pub fn random_doc(rng: &mut ChaCha8Rng) -> AnnotationDoc {
    let mut images = Vec::new();
    let mut id = 0u32;
    for _ in 0..uniform(rng, 5) {
        id += uniform(rng, 4) as u32;
        let width = 1 + uniform(rng, 2000) as u32;
        let height = 1 + uniform(rng, 2000) as u32;
        let mut shapes = Vec::new();
        for _ in 0..uniform(rng, 6) {
            let kind = if uniform(rng, 3) == 0 { ShapeKind::Points } else { ShapeKind::Polygon };
            let n = match kind {
                ShapeKind::Polygon => 3 + uniform(rng, 8),
                ShapeKind::Points => 1 + uniform(rng, 4),
            };
            let vertices = (0..n)
                .map(|_| {
                    (
                        uniform(rng, width as u64 * 100 + 1) as f64 / 100.0,
                        uniform(rng, height as u64 * 100 + 1) as f64 / 100.0,
                    )
                })
                .collect();
            shapes.push(Shape {
                kind,
                label: ClassLabel::FOREGROUND[uniform(rng, 3) as usize],
                vertices,
                z_order: uniform(rng, 7) as i32 - 3,
                occluded: uniform(rng, 2) == 1,
            });
        }
        shapes.sort_by_key(|s| s.z_order);
        let name = format!("img_{id}{}", ["", "&x", " <y>", "\"q\""][uniform(rng, 4) as usize]);
        images.push(ImageAnnotation {
            id,
            name,
            width,
            height,
            shapes,
        });
        id += 1;
    }
    AnnotationDoc { images }
}
