//! Procedurally drawn text blocks, figures and tables.
//!
//! These stand in for real crops in tests and demos. Figures come in two
//! styles (smooth "photos" and flat charts) so their gray histograms differ
//! enough for the similarity gate to matter.

use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Asset, Catalog, CatalogManifest, ManifestEntry};
use crate::class::ClassLabel;
use crate::error::{Error, Result};
use crate::rng::{below, page_rng, splitmix64, unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCounts {
    pub text: usize,
    pub figures: usize,
    pub tables: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            text: 12,
            figures: 12,
            tables: 6,
        }
    }
}

fn range(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    lo + below(rng, (hi - lo + 1) as usize) as u32
}

fn fill(img: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, color: [u8; 3]) {
    for y in y0..y1.min(img.height()) {
        for x in x0..x1.min(img.width()) {
            img.put_pixel(x, y, Rgb(color));
        }
    }
}

/// Dark word bars on paper, line by line.
pub fn text_block(rng: &mut ChaCha8Rng) -> RgbImage {
    let w = range(rng, 260, 520);
    let h = range(rng, 60, 320);
    let paper = 255 - range(rng, 0, 6) as u8;
    let ink = range(rng, 10, 60) as u8;
    let mut img = RgbImage::from_pixel(w, h, Rgb([paper; 3]));
    let line_h = range(rng, 10, 16);
    let mut y = 4;
    while y + line_h <= h {
        let mut x = 4;
        let line_end = if y + 2 * line_h + 4 > h { w / 2 + range(rng, 0, w / 3) } else { w - 4 };
        while x < line_end {
            let word = range(rng, 12, 60);
            fill(&mut img, x, y + 2, (x + word).min(line_end), y + line_h - 2, [ink; 3]);
            x += word + range(rng, 5, 9);
        }
        y += line_h + 4;
    }
    img
}

/// Smooth two-color gradient with a few soft discs.
pub fn photo(rng: &mut ChaCha8Rng) -> RgbImage {
    let w = range(rng, 180, 560);
    let h = range(rng, 140, 460);
    let a: [f64; 3] = [unit(rng) * 255.0, unit(rng) * 255.0, unit(rng) * 255.0];
    let b: [f64; 3] = [unit(rng) * 255.0, unit(rng) * 255.0, unit(rng) * 255.0];
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..range(rng, 1, 4))
        .map(|_| {
            (
                unit(rng) * w as f64,
                unit(rng) * h as f64,
                20.0 + unit(rng) * 80.0,
                [unit(rng) * 255.0, unit(rng) * 255.0, unit(rng) * 255.0],
            )
        })
        .collect();
    RgbImage::from_fn(w, h, |x, y| {
        let t = (x as f64 / w as f64 + y as f64 / h as f64) / 2.0;
        let mut c = [0.0; 3];
        for k in 0..3 {
            c[k] = a[k] * (1.0 - t) + b[k] * t;
        }
        for &(cx, cy, r, col) in &discs {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d < r {
                let m = 1.0 - d / r;
                for k in 0..3 {
                    c[k] = c[k] * (1.0 - m) + col[k] * m;
                }
            }
        }
        Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8))
    })
}

/// Bar chart on a white background with axes.
pub fn chart(rng: &mut ChaCha8Rng) -> RgbImage {
    let w = range(rng, 200, 480);
    let h = range(rng, 160, 360);
    let mut img = RgbImage::from_pixel(w, h, Rgb([255; 3]));
    fill(&mut img, 20, h - 22, w - 10, h - 20, [0; 3]);
    fill(&mut img, 20, 10, 22, h - 20, [0; 3]);
    let bars = range(rng, 3, 8);
    let slot = (w - 40) / bars;
    for i in 0..bars {
        let color = [range(rng, 30, 220) as u8, range(rng, 30, 220) as u8, range(rng, 30, 220) as u8];
        let bar_h = range(rng, 10, h - 40);
        let x = 26 + i * slot;
        fill(&mut img, x, h - 22 - bar_h, x + slot * 2 / 3, h - 22, color);
    }
    img
}

/// Ruled grid with optional shaded header and short cell entries.
pub fn table(rng: &mut ChaCha8Rng) -> RgbImage {
    let cols = range(rng, 2, 6);
    let rows = range(rng, 3, 12);
    let cell_w = range(rng, 50, 110);
    let cell_h = range(rng, 18, 28);
    let (w, h) = (cols * cell_w + 1, rows * cell_h + 1);
    let mut img = RgbImage::from_pixel(w, h, Rgb([255; 3]));
    if below(rng, 2) == 0 {
        fill(&mut img, 0, 0, w, cell_h, [220; 3]);
    }
    for r in 0..rows {
        for c in 0..cols {
            let len = range(rng, 8, cell_w - 12);
            let (x, y) = (c * cell_w + 6, r * cell_h + cell_h / 2 - 3);
            fill(&mut img, x, y, x + len, y + 6, [40; 3]);
        }
    }
    for r in 0..=rows {
        fill(&mut img, 0, r * cell_h, w, r * cell_h + 1, [0; 3]);
    }
    for c in 0..=cols {
        fill(&mut img, c * cell_w, 0, c * cell_w + 1, h, [0; 3]);
    }
    img
}

fn generate(seed: u64, counts: SampleCounts) -> Vec<(String, ClassLabel, RgbImage)> {
    let mut out = Vec::new();
    for i in 0..counts.text {
        let mut rng = page_rng(splitmix64(seed ^ (1 << 32 | i as u64)));
        out.push((format!("text/block_{i:03}.png"), ClassLabel::Text, text_block(&mut rng)));
    }
    for i in 0..counts.figures {
        let mut rng = page_rng(splitmix64(seed ^ (2 << 32 | i as u64)));
        let img = if i % 2 == 0 { photo(&mut rng) } else { chart(&mut rng) };
        out.push((format!("figure/figure_{i:03}.png"), ClassLabel::Figure, img));
    }
    for i in 0..counts.tables {
        let mut rng = page_rng(splitmix64(seed ^ (3 << 32 | i as u64)));
        out.push((format!("table/table_{i:03}.png"), ClassLabel::Table, table(&mut rng)));
    }
    out
}

/// Builds an in-memory catalog of procedurally drawn assets.
pub fn sample_catalog(seed: u64, counts: SampleCounts) -> Result<Catalog> {
    let assets = generate(seed, counts)
        .into_iter()
        .map(|(id, class, raster)| Asset::new(id, class, raster))
        .collect::<Result<Vec<_>>>()?;
    Catalog::from_assets(assets)
}

/// Writes the procedural assets as PNGs under `dir` together with a
/// `catalog.toml` manifest, and returns the manifest path.
pub fn write_sample_catalog(dir: &Path, seed: u64, counts: SampleCounts) -> Result<std::path::PathBuf> {
    let mut manifest = CatalogManifest::default();
    for (path, class, raster) in generate(seed, counts) {
        let full = dir.join(&path);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        raster.save(&full).map_err(|e| Error::load(&full, e))?;
        manifest.assets.push(ManifestEntry {
            id: None,
            path,
            class: class.name().to_string(),
        });
    }
    let manifest_path = dir.join("catalog.toml");
    fs::write(&manifest_path, manifest.to_toml()).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
