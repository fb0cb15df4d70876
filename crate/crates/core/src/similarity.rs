//! Gray-level histograms and the histogram similarity measure that gates
//! which images may be stacked on the same page.
//!
//! For two images `s` and `g` with normalized 256-bin gray histograms the
//! similarity is
//!
//! ```text
//! f(s, g) = 1/256 * sum_{i=0}^{255} (1 - |s_i - g_i| / max(s_i, g_i))
//! ```
//!
//! A bin that is empty in both histograms contributes 1.

use image::RgbImage;

use crate::error::{Error, Result};

pub const GRAY_LEVELS: usize = 256;

/// Normalized distribution of gray values; `bins[i]` is the fraction of
/// pixels whose gray value equals `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayHistogram {
    bins: [f64; GRAY_LEVELS],
}

impl GrayHistogram {
    /// Builds a histogram from raw bin values, checking that they form a
    /// distribution.
    pub fn from_bins(bins: [f64; GRAY_LEVELS]) -> Result<Self> {
        if bins.iter().any(|b| !b.is_finite() || *b < 0.0 || *b > 1.0) {
            return Err(Error::Domain("histogram bins must lie in [0, 1]".into()));
        }
        let total: f64 = bins.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("histogram bins sum to {total}, expected 1")));
        }
        Ok(GrayHistogram { bins })
    }

    /// Normalizes per-level pixel counts.
    pub fn from_counts(counts: &[u64; GRAY_LEVELS]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Domain("cannot build a histogram from zero pixels".into()));
        }
        let mut bins = [0.0; GRAY_LEVELS];
        for (bin, &count) in bins.iter_mut().zip(counts) {
            *bin = count as f64 / total as f64;
        }
        Ok(GrayHistogram { bins })
    }

    pub fn bins(&self) -> &[f64; GRAY_LEVELS] {
        &self.bins
    }

    pub fn bin(&self, level: u8) -> f64 {
        self.bins[level as usize]
    }
}

/// BT.601 luma, rounded half-up. Integer arithmetic keeps it bit-exact.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    let scaled = 299 * r + 587 * g + 114 * b;
    ((scaled + 500) / 1000).min(255) as u8
}

pub fn gray_histogram(raster: &RgbImage) -> Result<GrayHistogram> {
    if raster.width() == 0 || raster.height() == 0 {
        return Err(Error::Domain("cannot build a histogram of an empty raster".into()));
    }
    let mut counts = [0u64; GRAY_LEVELS];
    for px in raster.pixels() {
        counts[luma(px.0) as usize] += 1;
    }
    GrayHistogram::from_counts(&counts)
}

/// Histogram similarity in `[0, 1]`. Symmetric, and exactly 1 for identical
/// histograms.
pub fn similarity(s: &GrayHistogram, g: &GrayHistogram) -> f64 {
    let mut sum = 0.0;
    for (&a, &b) in s.bins.iter().zip(&g.bins) {
        let hi = a.max(b);
        sum += if hi > 0.0 { 1.0 - (a - b).abs() / hi } else { 1.0 };
    }
    sum / GRAY_LEVELS as f64
}
