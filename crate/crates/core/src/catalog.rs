//! Class-labeled source crops and the manifest that lists them.
//!
//! A catalog manifest is a TOML file with one `[[asset]]` table per crop:
//!
//! ```toml
//! [[asset]]
//! path = "text/block_000.png"
//! class = "text"
//!
//! [[asset]]
//! id = "chart-7"          # optional, defaults to the path
//! path = "figures/chart_7.jpg"
//! class = "figure"
//! ```
//!
//! Paths are resolved against the catalog root directory.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::class::ClassLabel;
use crate::error::{Error, Result};
use crate::similarity::{gray_histogram, GrayHistogram};

#[derive(Debug, Clone)]
pub struct Asset {
    id: String,
    class: ClassLabel,
    raster: RgbImage,
    gray_hist: GrayHistogram,
}

impl Asset {
    pub fn new(id: impl Into<String>, class: ClassLabel, raster: RgbImage) -> Result<Self> {
        let id = id.into();
        if class == ClassLabel::Background {
            return Err(Error::Validation(format!("asset {id:?}: background is not an asset class")));
        }
        if raster.width() == 0 || raster.height() == 0 {
            return Err(Error::Validation(format!("asset {id:?} has an empty raster")));
        }
        let gray_hist = gray_histogram(&raster)?;
        Ok(Asset {
            id,
            class,
            raster,
            gray_hist,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn class(&self) -> ClassLabel {
        self.class
    }

    pub fn raster(&self) -> &RgbImage {
        &self.raster
    }

    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    pub fn gray_hist(&self) -> &GrayHistogram {
        &self.gray_hist
    }
}

/// Immutable, ordered set of assets with unique ids.
#[derive(Debug, Clone)]
pub struct Catalog {
    assets: Vec<Asset>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn from_assets(assets: Vec<Asset>) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::Validation("catalog contains no assets".into()));
        }
        let mut index = HashMap::with_capacity(assets.len());
        for (i, asset) in assets.iter().enumerate() {
            if index.insert(asset.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate asset id {:?}", asset.id)));
            }
        }
        Ok(Catalog { assets, index })
    }

    /// Loads the manifest at `manifest_path`, resolving asset paths against
    /// its parent directory.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        load_catalog(root, manifest_path)
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Asset> {
        self.index.get(id).map(|&i| &self.assets[i])
    }

    pub fn by_class(&self, class: ClassLabel) -> impl Iterator<Item = &Asset> + '_ {
        self.assets.iter().filter(move |a| a.class == class)
    }

    pub fn count(&self, class: ClassLabel) -> usize {
        self.by_class(class).count()
    }

    /// Figure and table assets, in catalog order.
    pub fn images(&self) -> impl Iterator<Item = &Asset> + '_ {
        self.assets.iter().filter(|a| a.class.is_image())
    }

    /// Planning needs at least one text asset and one figure or table.
    pub fn check_plannable(&self) -> Result<()> {
        if self.count(ClassLabel::Text) == 0 {
            return Err(Error::Planning("catalog has no text assets".into()));
        }
        if self.images().next().is_none() {
            return Err(Error::Planning("catalog has no figure or table assets".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub path: String,
    pub class: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogManifest {
    #[serde(default, rename = "asset")]
    pub assets: Vec<ManifestEntry>,
}

impl CatalogManifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest entries are plain strings")
    }
}

pub fn load_catalog(root: &Path, manifest_path: &Path) -> Result<Catalog> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::load(manifest_path, e))?;
    let manifest = CatalogManifest::parse(&text)?;
    if manifest.assets.is_empty() {
        return Err(Error::Validation(format!(
            "catalog manifest {} lists no assets",
            manifest_path.display()
        )));
    }

    let mut assets = Vec::with_capacity(manifest.assets.len());
    for entry in &manifest.assets {
        let class: ClassLabel = entry.class.parse()?;
        if class == ClassLabel::Background {
            return Err(Error::Schema(format!("{}: background is not an asset class", entry.path)));
        }
        let path = root.join(&entry.path);
        if !path.is_file() {
            return Err(Error::load(&path, "file not found"));
        }
        let raster = image::open(&path).map_err(|e| Error::load(&path, e))?.to_rgb8();
        let id = entry.id.clone().unwrap_or_else(|| entry.path.clone());
        assets.push(Asset::new(id, class, raster)?);
    }
    Catalog::from_assets(assets)
}
