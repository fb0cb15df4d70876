//! Synthetic document-layout pages built by stacking image layers.
//!
//! The pipeline runs catalog -> planner -> compositor -> annotation, and the
//! evaluation module scores predicted masks against ground truth.

pub mod annotation;
pub mod catalog;
pub mod class;
pub mod compositor;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod planner;
pub mod rng;
pub mod samples;
pub mod similarity;

pub use annotation::{
    mask_to_polygons, rasterize, read_cvat_xml, write_cvat_xml, AnnotationDoc, ImageAnnotation, Shape, ShapeKind,
};
pub use catalog::{load_catalog, Asset, Catalog};
pub use class::ClassLabel;
pub use compositor::{region_components, render, ClassMask, Page, Region};
pub use config::SynthConfig;
pub use error::{Error, Result};
pub use evaluation::{confusion, metrics, ConfusionMatrix, Metrics};
pub use planner::{plan_page, sample_image_count, sample_scale, select_images, PageSpec, Placement};
pub use similarity::{gray_histogram, similarity, GrayHistogram};
