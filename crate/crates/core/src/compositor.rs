//! Painter's-algorithm rendering of a page spec into an RGB raster and a
//! class mask, plus 4-connected region labeling of the mask.

use image::imageops::{self, FilterType};
use image::{GrayImage, Rgb, RgbImage};

use crate::catalog::Catalog;
use crate::class::ClassLabel;
use crate::error::{Error, Result};
use crate::planner::PageSpec;

/// Per-pixel class codes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ClassMask {
    pub fn new(width: u32, height: u32) -> Self {
        ClassMask {
            width,
            height,
            data: vec![ClassLabel::Background.code(); width as usize * height as usize],
        }
    }

    pub fn from_codes(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Shape(format!(
                "{} codes given for a {width}x{height} mask",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&c| ClassLabel::from_code(c).is_none()) {
            return Err(Error::Validation(format!("invalid class code {bad} in mask")));
        }
        Ok(ClassMask { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> ClassLabel {
        ClassLabel::from_code(self.data[self.offset(x, y)]).expect("mask holds valid codes")
    }

    pub fn set(&mut self, x: u32, y: u32, class: ClassLabel) {
        let i = self.offset(x, y);
        self.data[i] = class.code();
    }

    /// Fills the half-open rectangle `[x0, x1) x [y0, y1)`, clipped to the mask.
    pub fn fill_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32, class: ClassLabel) {
        let (x1, y1) = (x1.min(self.width), y1.min(self.height));
        for y in y0..y1 {
            let row = self.offset(0, y);
            self.data[row + x0 as usize..row + x1 as usize].fill(class.code());
        }
    }

    pub fn class_counts(&self) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for &c in &self.data {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Single-channel image holding the raw class codes.
    pub fn to_code_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.data.clone()).expect("buffer matches dimensions")
    }

    pub fn from_code_image(img: &GrayImage) -> Result<Self> {
        ClassMask::from_codes(img.width(), img.height(), img.as_raw().clone())
    }

    /// RGB visualization using the class color key.
    pub fn to_color_image(&self) -> RgbImage {
        RgbImage::from_fn(self.width, self.height, |x, y| Rgb(self.get(x, y).display_color()))
    }
}

#[derive(Debug, Clone)]
pub struct Page {
    pub page_id: String,
    pub raster: RgbImage,
    pub mask: ClassMask,
    pub spec: PageSpec,
}

pub const PAGE_BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

pub fn render(spec: &PageSpec, catalog: &Catalog) -> Result<Page> {
    let mut raster = RgbImage::from_pixel(spec.width, spec.height, PAGE_BACKGROUND);
    let mut mask = ClassMask::new(spec.width, spec.height);

    let mut order: Vec<_> = spec.placements.iter().collect();
    order.sort_by_key(|p| p.z);
    for p in order {
        let asset = catalog
            .get(&p.asset_id)
            .ok_or_else(|| Error::Render(format!("unknown asset id {:?}", p.asset_id)))?;
        if p.target_w == 0 || p.target_h == 0 || p.right() > spec.width || p.bottom() > spec.height {
            return Err(Error::Render(format!(
                "placement of {:?} at ({}, {}) size {}x{} exceeds the {}x{} page",
                p.asset_id, p.x, p.y, p.target_w, p.target_h, spec.width, spec.height
            )));
        }
        if p.class != asset.class() {
            return Err(Error::Render(format!(
                "placement class {} does not match asset {:?} class {}",
                p.class,
                p.asset_id,
                asset.class()
            )));
        }
        let layer = if (p.target_w, p.target_h) == asset.raster().dimensions() {
            asset.raster().clone()
        } else {
            imageops::resize(asset.raster(), p.target_w, p.target_h, FilterType::Triangle)
        };
        imageops::replace(&mut raster, &layer, p.x as i64, p.y as i64);
        mask.fill_rect(p.x, p.y, p.right(), p.bottom(), p.class);
    }

    Ok(Page {
        page_id: spec.page_id.clone(),
        raster,
        mask,
        spec: spec.clone(),
    })
}

/// A maximal 4-connected set of equal-class foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub class: ClassLabel,
    /// Pixel coordinates in raster order.
    pub pixels: Vec<(u32, u32)>,
}

impl Region {
    /// `(x0, y0, x1, y1)`, half-open.
    pub fn bounds(&self) -> (u32, u32, u32, u32) {
        let mut b = (u32::MAX, u32::MAX, 0, 0);
        for &(x, y) in &self.pixels {
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x + 1);
            b.3 = b.3.max(y + 1);
        }
        b
    }

    /// True when the region is exactly its bounding box.
    pub fn is_rectangle(&self) -> bool {
        let (x0, y0, x1, y1) = self.bounds();
        self.pixels.len() as u64 == (x1 - x0) as u64 * (y1 - y0) as u64
    }
}

/// Label image of 4-connected foreground components. Background pixels get
/// `u32::MAX`; components are numbered in raster order of their first pixel.
pub fn label_components(mask: &ClassMask) -> (Vec<u32>, Vec<ClassLabel>) {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut labels = vec![u32::MAX; w * h];
    let mut classes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        let code = mask.data[start];
        if code == 0 || labels[start] != u32::MAX {
            continue;
        }
        let id = classes.len() as u32;
        classes.push(ClassLabel::from_code(code).expect("valid code"));
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if labels[j] == u32::MAX && mask.data[j] == code {
                    labels[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    (labels, classes)
}

pub fn region_components(mask: &ClassMask) -> Vec<Region> {
    let (labels, classes) = label_components(mask);
    let mut regions: Vec<Region> = classes
        .into_iter()
        .map(|class| Region {
            class,
            pixels: Vec::new(),
        })
        .collect();
    let w = mask.width as usize;
    for (i, &label) in labels.iter().enumerate() {
        if label != u32::MAX {
            regions[label as usize].pixels.push(((i % w) as u32, (i / w) as u32));
        }
    }
    regions
}
