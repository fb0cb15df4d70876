use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generation parameters. Every field has a default, so an empty config file
/// is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub page_width: u32,
    pub page_height: u32,
    pub scale_min: f64,
    pub scale_max: f64,
    pub count_min: u32,
    pub count_max: u32,
    pub similarity_threshold: f64,
    pub max_attempts: u32,
    pub aesthetic_guidance: bool,
    pub text_columns_min: u32,
    pub text_columns_max: u32,
    pub column_gutter: u32,
    pub master_seed: u64,
}

/// Per-axis scale interval used when aesthetic guidance is off.
pub const UNGUIDED_SCALE_RANGE: (f64, f64) = (0.3, 1.2);

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            // A4 at 100 dpi
            page_width: 827,
            page_height: 1169,
            scale_min: 0.6,
            scale_max: 1.0,
            count_min: 1,
            count_max: 8,
            similarity_threshold: 0.5,
            max_attempts: 50,
            aesthetic_guidance: true,
            text_columns_min: 1,
            text_columns_max: 3,
            column_gutter: 16,
            master_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.page_width == 0 || self.page_height == 0 {
            return fail(format!("page size {}x{} is empty", self.page_width, self.page_height));
        }
        if self.aesthetic_guidance
            && !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max <= 1.0)
        {
            return fail(format!(
                "scale interval [{}, {}] must satisfy 0 < min <= max <= 1",
                self.scale_min, self.scale_max
            ));
        }
        if self.count_min < 1 || self.count_min > self.count_max {
            return fail(format!(
                "image count interval [{}, {}] must satisfy 1 <= min <= max",
                self.count_min, self.count_max
            ));
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return fail(format!("similarity threshold {} outside [0, 1]", self.similarity_threshold));
        }
        if self.max_attempts < 1 {
            return fail("max_attempts must be at least 1".into());
        }
        if self.text_columns_min < 1 || self.text_columns_min > self.text_columns_max {
            return fail(format!(
                "text column interval [{}, {}] must satisfy 1 <= min <= max",
                self.text_columns_min, self.text_columns_max
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SynthConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SynthConfig::from_toml(&text)
    }

    /// Fails only when `master_seed` exceeds the TOML integer range.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
