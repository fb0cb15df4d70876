//! Page planning: text columns first, then a stack of figure/table layers
//! placed under aesthetic guidance.
//!
//! Guidance has three rules: every image is scaled by a factor drawn from
//! `[scale_min, scale_max]` with its aspect ratio kept, the number of images
//! per page is drawn from `[count_min, count_max]`, and each image must be
//! histogram-similar (at least `similarity_threshold`) to every image already
//! chosen for the page. With guidance off, gating is skipped and the two
//! axes are scaled independently from `[0.3, 1.2]`.
//!
//! Random draws come from one ChaCha8 stream per page, consumed in this order:
//!
//! 1. text: column count, then one asset index per text block attempt
//! 2. scales: `count_max` factors (two per slot without guidance)
//! 3. image count
//! 4. image selection (candidate indices, including gate retries)
//! 5. positions: `x` then `y` for each image

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::catalog::{Asset, Catalog};
use crate::class::ClassLabel;
use crate::config::{SynthConfig, UNGUIDED_SCALE_RANGE};
use crate::error::{Error, Result};
use crate::rng::{below, page_rng, page_seed, unit};
use crate::similarity::similarity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub asset_id: String,
    pub class: ClassLabel,
    pub x: u32,
    pub y: u32,
    /// Horizontal scale factor; equals `scale_y` whenever aspect is kept.
    pub scale: f64,
    pub scale_y: f64,
    pub target_w: u32,
    pub target_h: u32,
    /// Paint order, 0 is the bottom layer.
    pub z: u32,
    /// Set when the similarity gate could not be met and the best candidate
    /// was taken instead.
    #[serde(default)]
    pub relaxed: bool,
}

impl Placement {
    pub fn right(&self) -> u32 {
        self.x + self.target_w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.target_h
    }

    pub fn covers(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSpec {
    pub page_id: String,
    pub page_index: u64,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub placements: Vec<Placement>,
    /// Number of similarity evaluations spent selecting images.
    pub similarity_evaluations: u64,
    pub config_snapshot: SynthConfig,
}

impl PageSpec {
    /// A spec with no placements, for hand-built layouts.
    pub fn blank(page_id: impl Into<String>, width: u32, height: u32) -> Self {
        PageSpec {
            page_id: page_id.into(),
            page_index: 0,
            width,
            height,
            seed: 0,
            placements: Vec::new(),
            similarity_evaluations: 0,
            config_snapshot: SynthConfig {
                page_width: width,
                page_height: height,
                ..SynthConfig::default()
            },
        }
    }

    pub fn image_placements(&self) -> impl Iterator<Item = &Placement> + '_ {
        self.placements.iter().filter(|p| p.class.is_image())
    }

    pub fn image_count(&self) -> usize {
        self.image_placements().count()
    }

    pub fn text_count(&self) -> usize {
        self.placements.iter().filter(|p| p.class == ClassLabel::Text).count()
    }

    pub fn relaxed_count(&self) -> usize {
        self.placements.iter().filter(|p| p.relaxed).count()
    }
}

pub fn sample_scale(config: &SynthConfig, u: f64) -> Result<f64> {
    check_unit(u)?;
    Ok(config.scale_min + (config.scale_max - config.scale_min) * u)
}

pub fn sample_image_count(config: &SynthConfig, u: f64) -> Result<u32> {
    check_unit(u)?;
    let span = (config.count_max - config.count_min + 1) as f64;
    Ok(((u * span).floor() as u32).min(config.count_max - config.count_min) + config.count_min)
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain(format!("draw {u} outside [0, 1)")))
    }
}

/// Result of gated image selection.
#[derive(Debug, Clone)]
pub struct Selection<'a> {
    pub assets: Vec<&'a Asset>,
    /// One flag per selected asset.
    pub relaxed: Vec<bool>,
    pub evaluations: u64,
}

impl Selection<'_> {
    pub fn relaxed_count(&self) -> usize {
        self.relaxed.iter().filter(|&&r| r).count()
    }
}

/// Draws `k` figure/table assets (repetition allowed) from the catalog with
/// the similarity gate applied.
pub fn select_images<'a, R: RngCore + ?Sized>(
    catalog: &'a Catalog,
    k: usize,
    rng: &mut R,
    threshold: f64,
    max_attempts: u32,
) -> Result<Selection<'a>> {
    let pool: Vec<&Asset> = catalog.images().collect();
    select_from_pool(&pool, k, rng, threshold, max_attempts)
}

/// Gated selection over an explicit candidate pool.
///
/// The first asset is accepted unconditionally. Each later slot draws
/// candidates until one scores at least `threshold` against every accepted
/// asset; after `max_attempts` rejections the candidate with the highest
/// worst-case score is taken and the slot is flagged as relaxed.
pub fn select_from_pool<'a, R: RngCore + ?Sized>(
    pool: &[&'a Asset],
    k: usize,
    rng: &mut R,
    threshold: f64,
    max_attempts: u32,
) -> Result<Selection<'a>> {
    if pool.is_empty() {
        return Err(Error::Planning("no figure or table assets to select from".into()));
    }
    if k == 0 {
        return Err(Error::Domain("image count must be at least 1".into()));
    }
    let max_attempts = max_attempts.max(1);
    let mut selection = Selection {
        assets: Vec::with_capacity(k),
        relaxed: Vec::with_capacity(k),
        evaluations: 0,
    };
    selection.assets.push(pool[below(rng, pool.len())]);
    selection.relaxed.push(false);

    while selection.assets.len() < k {
        let mut best: Option<(&Asset, f64)> = None;
        let mut accepted = None;
        for _ in 0..max_attempts {
            let candidate = pool[below(rng, pool.len())];
            let mut worst = f64::INFINITY;
            for chosen in &selection.assets {
                selection.evaluations += 1;
                worst = worst.min(similarity(candidate.gray_hist(), chosen.gray_hist()));
                if worst < threshold {
                    break;
                }
            }
            if worst >= threshold {
                accepted = Some(candidate);
                break;
            }
            if best.is_none_or(|(_, score)| worst > score) {
                best = Some((candidate, worst));
            }
        }
        match accepted {
            Some(asset) => {
                selection.assets.push(asset);
                selection.relaxed.push(false);
            }
            None => {
                let (asset, _) = best.expect("at least one attempt is made");
                selection.assets.push(asset);
                selection.relaxed.push(true);
            }
        }
    }
    Ok(selection)
}

/// Selection without the similarity gate.
fn select_ungated<'a, R: RngCore + ?Sized>(pool: &[&'a Asset], k: usize, rng: &mut R) -> Selection<'a> {
    Selection {
        assets: (0..k).map(|_| pool[below(rng, pool.len())]).collect(),
        relaxed: vec![false; k],
        evaluations: 0,
    }
}

fn scaled(len: u32, scale: f64) -> u32 {
    ((len as f64 * scale).round() as u32).max(1)
}

pub fn plan_page(catalog: &Catalog, config: &SynthConfig, page_index: u64) -> Result<PageSpec> {
    config.validate()?;
    catalog.check_plannable()?;

    let (width, height) = (config.page_width, config.page_height);
    let seed = page_seed(config.master_seed, page_index);
    let mut rng = page_rng(seed);
    let mut placements = layout_text(catalog, config, &mut rng);

    let guided = config.aesthetic_guidance;
    let (min_x, min_y) = if guided {
        (config.scale_min, config.scale_min)
    } else {
        (UNGUIDED_SCALE_RANGE.0, UNGUIDED_SCALE_RANGE.0)
    };
    // Assets that cannot fit at the smallest allowed scale are never drawn.
    let pool: Vec<&Asset> = catalog
        .images()
        .filter(|a| a.width() as f64 * min_x <= width as f64 && a.height() as f64 * min_y <= height as f64)
        .collect();
    if pool.is_empty() {
        return Err(Error::Planning(format!(
            "page {width}x{height} is too small to fit any figure or table asset"
        )));
    }

    let slots = config.count_max as usize;
    let scale_draws: Vec<(f64, f64)> = if guided {
        (0..slots)
            .map(|_| {
                let s = sample_scale(config, unit(&mut rng)).expect("unit draw is in range");
                (s, s)
            })
            .collect()
    } else {
        let (lo, hi) = UNGUIDED_SCALE_RANGE;
        (0..slots)
            .map(|_| {
                let sx = lo + (hi - lo) * unit(&mut rng);
                let sy = lo + (hi - lo) * unit(&mut rng);
                (sx, sy)
            })
            .collect()
    };

    let k = sample_image_count(config, unit(&mut rng))? as usize;
    let selection = if guided {
        select_from_pool(&pool, k, &mut rng, config.similarity_threshold, config.max_attempts)?
    } else {
        select_ungated(&pool, k, &mut rng)
    };

    let draws = selection.assets.iter().zip(&selection.relaxed).zip(&scale_draws);
    for (z, ((asset, &relaxed), &(sx, sy))) in (placements.len() as u32..).zip(draws) {
        let fit_x = width as f64 / asset.width() as f64;
        let fit_y = height as f64 / asset.height() as f64;
        let (sx, sy) = if guided {
            let s = sx.min(fit_x).min(fit_y);
            (s, s)
        } else {
            (sx.min(fit_x), sy.min(fit_y))
        };
        let target_w = scaled(asset.width(), sx).min(width);
        let target_h = scaled(asset.height(), sy).min(height);
        let x = below(&mut rng, (width - target_w + 1) as usize) as u32;
        let y = below(&mut rng, (height - target_h + 1) as usize) as u32;
        placements.push(Placement {
            asset_id: asset.id().to_string(),
            class: asset.class(),
            x,
            y,
            scale: sx,
            scale_y: sy,
            target_w,
            target_h,
            z,
            relaxed,
        });
    }

    Ok(PageSpec {
        page_id: format!("page_{page_index:06}"),
        page_index,
        width,
        height,
        seed,
        placements,
        similarity_evaluations: selection.evaluations,
        config_snapshot: config.clone(),
    })
}

/// Fills `n` equal columns top to bottom with text blocks scaled to the
/// column width, separated by the gutter on every side.
fn layout_text<R: RngCore + ?Sized>(catalog: &Catalog, config: &SynthConfig, rng: &mut R) -> Vec<Placement> {
    let texts: Vec<&Asset> = catalog.by_class(ClassLabel::Text).collect();
    let span = (config.text_columns_max - config.text_columns_min + 1) as usize;
    let columns = config.text_columns_min + below(rng, span) as u32;
    let gutter = config.column_gutter;

    let mut placements = Vec::new();
    let inner = config.page_width.saturating_sub((columns + 1) * gutter);
    let col_w = inner / columns;
    if col_w == 0 {
        return placements;
    }
    let bottom = config.page_height.saturating_sub(gutter);
    for c in 0..columns {
        let x = gutter + c * (col_w + gutter);
        let mut y = gutter;
        loop {
            let asset = texts[below(rng, texts.len())];
            let scale = col_w as f64 / asset.width() as f64;
            let target_h = scaled(asset.height(), scale);
            if y + target_h > bottom {
                break;
            }
            placements.push(Placement {
                asset_id: asset.id().to_string(),
                class: ClassLabel::Text,
                x,
                y,
                scale,
                scale_y: scale,
                target_w: col_w,
                target_h,
                z: placements.len() as u32,
                relaxed: false,
            });
            y += target_h + gutter;
        }
    }
    placements
}
