//! Batch commands: dataset synthesis, mask evaluation and manifest
//! inspection.
//!
//! A synthesis run writes, per page, `page_NNNNNN.png` (raster),
//! `page_NNNNNN_mask.png` (raw class codes) and `page_NNNNNN_vis.png`
//! (color key), then one `annotations.xml` covering every page and a
//! `manifest.json` that references all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use image::DynamicImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{self, mask_to_polygons, AnnotationDoc, ImageAnnotation, DEFAULT_SIMPLIFY_EPS};
use crate::catalog::Catalog;
use crate::class::ClassLabel;
use crate::compositor::{render, ClassMask};
use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::evaluation::{confusion, metrics, ConfusionMatrix, Metrics};
use crate::planner::plan_page;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.xml";
pub const FAILURES_FILE: &str = "failures.json";
/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "LAYERDOC_WORKERS";

pub fn raster_name(index: u64) -> String {
    format!("page_{index:06}.png")
}

pub fn mask_name(index: u64) -> String {
    format!("page_{index:06}_mask.png")
}

pub fn vis_name(index: u64) -> String {
    format!("page_{index:06}_vis.png")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub asset_id: String,
    pub class: ClassLabel,
    pub scale: f64,
    pub scale_y: f64,
    pub relaxed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub page_id: String,
    pub page_index: u64,
    pub seed: u64,
    pub raster_path: String,
    pub mask_path: String,
    pub vis_path: String,
    /// `annotations.xml#<image id>`
    pub annotation_ref: String,
    pub relaxed_count: usize,
    /// Figure and table placements on the page.
    pub placement_count: usize,
    pub text_count: usize,
    pub similarity_evaluations: u64,
    /// Pixel counts per class code.
    pub class_pixels: [u64; 4],
    pub polygons: usize,
    pub dropped_components: usize,
    pub images: Vec<ImageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tool_version: String,
    /// Unix seconds.
    pub generated_at: u64,
    pub config_snapshot: SynthConfig,
    pub annotations_path: String,
    pub pages: Vec<PageRecord>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageFailure {
    pub page_index: u64,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub config_path: Option<PathBuf>,
    pub catalog_path: PathBuf,
    pub out_dir: PathBuf,
    pub num_pages: u64,
    pub master_seed: Option<u64>,
    pub no_aesthetic: bool,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub manifest: DatasetManifest,
    pub failures: Vec<PageFailure>,
}

impl SynthOutcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Resolves the config from file, seed flag and ablation flag.
pub fn resolve_config(options: &SynthOptions) -> Result<SynthConfig> {
    let mut config = match &options.config_path {
        Some(path) => SynthConfig::load(path)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = options.master_seed {
        config.master_seed = seed;
    }
    if options.no_aesthetic {
        config.aesthetic_guidance = false;
    }
    config.validate()?;
    Ok(config)
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let workers = workers
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn save_png(img: DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::load(path, e))
}

struct GeneratedPage {
    record: PageRecord,
    annotation: ImageAnnotation,
}

fn generate_page(catalog: &Catalog, config: &SynthConfig, out_dir: &Path, index: u64) -> Result<GeneratedPage> {
    let spec = plan_page(catalog, config, index)?;
    let page = render(&spec, catalog)?;
    let polys = mask_to_polygons(&page.mask, DEFAULT_SIMPLIFY_EPS);

    let (raster_path, mask_path, vis_path) = (raster_name(index), mask_name(index), vis_name(index));
    save_png(DynamicImage::ImageRgb8(page.raster), &out_dir.join(&raster_path))?;
    save_png(DynamicImage::ImageLuma8(page.mask.to_code_image()), &out_dir.join(&mask_path))?;
    save_png(DynamicImage::ImageRgb8(page.mask.to_color_image()), &out_dir.join(&vis_path))?;

    let images = spec
        .image_placements()
        .map(|p| ImageRecord {
            asset_id: p.asset_id.clone(),
            class: p.class,
            scale: p.scale,
            scale_y: p.scale_y,
            relaxed: p.relaxed,
        })
        .collect::<Vec<_>>();
    let image_id = u32::try_from(index).map_err(|_| Error::Domain(format!("page index {index} too large")))?;
    let record = PageRecord {
        page_id: spec.page_id.clone(),
        page_index: index,
        seed: spec.seed,
        raster_path: raster_path.clone(),
        mask_path,
        vis_path,
        annotation_ref: format!("{ANNOTATIONS_FILE}#{image_id}"),
        relaxed_count: spec.relaxed_count(),
        placement_count: images.len(),
        text_count: spec.text_count(),
        similarity_evaluations: spec.similarity_evaluations,
        class_pixels: page.mask.class_counts(),
        polygons: polys.shapes.len(),
        dropped_components: polys.dropped,
        images,
    };
    let annotation = ImageAnnotation {
        id: image_id,
        name: raster_path,
        width: spec.width,
        height: spec.height,
        shapes: polys.shapes,
    };
    Ok(GeneratedPage { record, annotation })
}

/// Generates `num_pages` pages into `out_dir`. Page failures do not stop the
/// run; they are returned in the outcome and written to `failures.json`.
pub fn cmd_synth(options: &SynthOptions) -> Result<SynthOutcome> {
    let config = resolve_config(options)?;
    let catalog = Catalog::load(&options.catalog_path)?;
    catalog.check_plannable()?;
    let pool = worker_pool(options.workers)?;

    fs::create_dir_all(&options.out_dir).map_err(|e| Error::io(&options.out_dir, e))?;
    let out_dir = options.out_dir.as_path();

    let results: Vec<(u64, Result<GeneratedPage>)> = pool.install(|| {
        (0..options.num_pages)
            .into_par_iter()
            .map(|i| (i, generate_page(&catalog, &config, out_dir, i)))
            .collect()
    });

    let mut pages = Vec::new();
    let mut doc = AnnotationDoc::default();
    let mut failures = Vec::new();
    for (index, result) in results {
        match result {
            Ok(generated) => {
                pages.push(generated.record);
                doc.images.push(generated.annotation);
            }
            Err(e) => {
                log::error!("page {index}: {e}");
                failures.push(PageFailure {
                    page_index: index,
                    error: e.to_string(),
                });
            }
        }
    }

    let xml_path = out_dir.join(ANNOTATIONS_FILE);
    fs::write(&xml_path, annotation::write_cvat_xml(&doc)).map_err(|e| Error::io(&xml_path, e))?;

    let manifest = DatasetManifest {
        tool_version: TOOL_VERSION.to_string(),
        generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config_snapshot: config,
        annotations_path: ANNOTATIONS_FILE.to_string(),
        pages,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.to_json()).map_err(|e| Error::io(&manifest_path, e))?;

    if !failures.is_empty() {
        let path = out_dir.join(FAILURES_FILE);
        let body = serde_json::to_string_pretty(&failures).expect("failures serialize");
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(SynthOutcome { manifest, failures })
}

/// Strips the extension and a trailing `_mask` so rasters, masks and
/// annotation image names pair up.
pub fn page_key(name: &str) -> String {
    let stem = Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    stem.strip_suffix("_mask").map(str::to_string).unwrap_or(stem)
}

/// Reads a single-channel mask of raw class codes.
pub fn read_mask(path: &Path) -> Result<ClassMask> {
    let img = image::open(path).map_err(|e| Error::load(path, e))?;
    match img {
        DynamicImage::ImageLuma8(gray) => ClassMask::from_code_image(&gray),
        other => Err(Error::load(
            path,
            format!("expected a single-channel mask, found {:?}", other.color()),
        )),
    }
}

pub fn write_mask(mask: &ClassMask, path: &Path) -> Result<()> {
    save_png(DynamicImage::ImageLuma8(mask.to_code_image()), path)
}

/// PNG masks in `dir`, keyed by [`page_key`]. When any `*_mask.png` file is
/// present only those are used, so synthesis output directories work as-is.
fn mask_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut pngs = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            pngs.push(path);
        }
    }
    let has_masks = pngs
        .iter()
        .any(|p| p.file_stem().is_some_and(|s| s.to_string_lossy().ends_with("_mask")));
    Ok(pngs
        .into_iter()
        .filter(|p| !has_masks || p.file_stem().is_some_and(|s| s.to_string_lossy().ends_with("_mask")))
        .map(|p| (page_key(&p.file_name().unwrap().to_string_lossy()), p))
        .collect())
}

enum TruthSource {
    Masks(BTreeMap<String, PathBuf>),
    Annotations(BTreeMap<String, ImageAnnotation>),
}

impl TruthSource {
    fn open(path: &Path) -> Result<Self> {
        if path.is_dir() {
            return Ok(TruthSource::Masks(mask_files(path)?));
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let parsed = annotation::read_cvat_xml(&bytes)?;
        Ok(TruthSource::Annotations(
            parsed
                .doc
                .images
                .into_iter()
                .map(|img| (page_key(&img.name), img))
                .collect(),
        ))
    }

    fn keys(&self) -> Vec<String> {
        match self {
            TruthSource::Masks(m) => m.keys().cloned().collect(),
            TruthSource::Annotations(a) => a.keys().cloned().collect(),
        }
    }

    fn mask(&self, key: &str) -> Result<ClassMask> {
        match self {
            TruthSource::Masks(m) => read_mask(&m[key]),
            TruthSource::Annotations(a) => Ok(annotation::rasterize_image(&a[key])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEvaluation {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEvaluation {
    pub pages_evaluated: usize,
    pub pages_failed: usize,
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pages: Vec<PageEvaluation>,
    pub unmatched_predictions: Vec<String>,
    pub unmatched_truth: Vec<String>,
    pub corpus: CorpusEvaluation,
}

/// Scores every predicted mask in `pred_dir` against the matching ground
/// truth (a mask directory or a CVAT XML file) and writes a JSON report.
pub fn cmd_evaluate(pred_dir: &Path, truth: &Path, report_path: &Path) -> Result<EvaluationReport> {
    let preds = mask_files(pred_dir)?;
    let truth = TruthSource::open(truth)?;
    let truth_keys = truth.keys();

    let matched: Vec<&String> = preds.keys().filter(|k| truth_keys.contains(k)).collect();
    let unmatched_predictions: Vec<String> = preds.keys().filter(|k| !truth_keys.contains(k)).cloned().collect();
    let unmatched_truth: Vec<String> = truth_keys.iter().filter(|k| !preds.contains_key(*k)).cloned().collect();
    if matched.is_empty() {
        return Err(Error::Lookup(format!(
            "no prediction matches any ground-truth page ({} predictions, {} ground-truth pages)",
            preds.len(),
            truth_keys.len()
        )));
    }
    for name in unmatched_predictions.iter().chain(&unmatched_truth) {
        log::warn!("unmatched page {name}");
    }

    let pages: Vec<PageEvaluation> = matched
        .par_iter()
        .map(|key| {
            let scored = read_mask(&preds[*key])
                .and_then(|pred| Ok((pred, truth.mask(key)?)))
                .and_then(|(pred, gt)| confusion(&pred, &gt))
                .and_then(|cm| Ok((metrics(&cm)?, cm)));
            match scored {
                Ok((m, cm)) => PageEvaluation {
                    name: (*key).clone(),
                    error: None,
                    metrics: Some(m),
                    confusion: Some(cm),
                },
                Err(e) => PageEvaluation {
                    name: (*key).clone(),
                    error: Some(e.to_string()),
                    metrics: None,
                    confusion: None,
                },
            }
        })
        .collect();

    let mut total = ConfusionMatrix::default();
    for cm in pages.iter().filter_map(|p| p.confusion.as_ref()) {
        total.add(cm);
    }
    let evaluated = pages.iter().filter(|p| p.error.is_none()).count();
    let report = EvaluationReport {
        corpus: CorpusEvaluation {
            pages_evaluated: evaluated,
            pages_failed: pages.len() - evaluated,
            confusion: total,
            metrics: metrics(&total).ok(),
        },
        pages,
        unmatched_predictions,
        unmatched_truth,
    };
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(report_path, body).map_err(|e| Error::io(report_path, e))?;
    Ok(report)
}

/// Upper edges of the scale histogram bins, in steps of 0.1 up to 1.3.
pub const SCALE_BIN_WIDTH: f64 = 0.1;
pub const SCALE_BINS: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectSummary {
    pub page_count: usize,
    pub total_pixels: u64,
    /// Fraction of all pixels per class code.
    pub class_pixel_share: [f64; 4],
    /// Pages per image count.
    pub image_count_histogram: BTreeMap<usize, usize>,
    /// Image placements per scale bin `[k * 0.1, (k + 1) * 0.1)`; both axes
    /// are counted when they differ.
    pub scale_histogram: Vec<usize>,
    pub placements_total: usize,
    pub relaxed_total: usize,
    pub similarity_evaluations_total: u64,
}

pub fn summarize(manifest: &DatasetManifest) -> InspectSummary {
    let mut pixels = [0u64; 4];
    let mut counts = BTreeMap::new();
    let mut scales = vec![0usize; SCALE_BINS];
    let mut bin = |s: f64| {
        let k = ((s / SCALE_BIN_WIDTH + 1e-9).floor() as usize).min(SCALE_BINS - 1);
        scales[k] += 1;
    };
    for page in &manifest.pages {
        for (acc, n) in pixels.iter_mut().zip(page.class_pixels) {
            *acc += n;
        }
        *counts.entry(page.placement_count).or_insert(0) += 1;
        for img in &page.images {
            bin(img.scale);
            if img.scale_y != img.scale {
                bin(img.scale_y);
            }
        }
    }
    let total: u64 = pixels.iter().sum();
    InspectSummary {
        page_count: manifest.pages.len(),
        total_pixels: total,
        class_pixel_share: pixels.map(|n| if total == 0 { 0.0 } else { n as f64 / total as f64 }),
        image_count_histogram: counts,
        scale_histogram: scales,
        placements_total: manifest.pages.iter().map(|p| p.placement_count).sum(),
        relaxed_total: manifest.pages.iter().map(|p| p.relaxed_count).sum(),
        similarity_evaluations_total: manifest.pages.iter().map(|p| p.similarity_evaluations).sum(),
    }
}

pub fn cmd_inspect(manifest_path: &Path) -> Result<InspectSummary> {
    Ok(summarize(&DatasetManifest::load(manifest_path)?))
}

impl fmt::Display for InspectSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pages: {}", self.page_count)?;
        writeln!(f, "pixels: {}", self.total_pixels)?;
        writeln!(f, "class pixel share:")?;
        for class in ClassLabel::ALL {
            writeln!(f, "  {:<10} {:.4}", class.name(), self.class_pixel_share[class.code() as usize])?;
        }
        writeln!(f, "images per page:")?;
        for (count, pages) in &self.image_count_histogram {
            writeln!(f, "  {count:>2}: {pages}")?;
        }
        writeln!(f, "image scales:")?;
        for (k, n) in self.scale_histogram.iter().enumerate() {
            let lo = k as f64 * SCALE_BIN_WIDTH;
            writeln!(f, "  [{:.1}, {:.1}): {n}", lo, lo + SCALE_BIN_WIDTH)?;
        }
        writeln!(f, "image placements: {}", self.placements_total)?;
        writeln!(f, "relaxed selections: {}", self.relaxed_total)?;
        write!(f, "similarity evaluations: {}", self.similarity_evaluations_total)
    }
}
