use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dct_filters::{FrequencyAxis, ScanPolicy};
use crate::network::BlockSize;
use crate::{Error, Result};

/// Where the pipeline's filter banks come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FilterSource {
    /// Precomputed 2D DCT bases.
    #[default]
    Dct,
    /// PCA filters learned from the gallery images.
    PcaLearn,
    /// Banks read from a `.dctb` file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScanOrder {
    #[default]
    HorizontalMajor,
    Zigzag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub source: FilterSource,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Filters per layer; the number of entries is the layer count.
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default)]
    pub order: ScanOrder,
    /// Lead each antidiagonal with the row frequency instead of the column
    /// frequency.
    #[serde(default)]
    pub flip_axis: bool,
    /// Bank file for `source = "file"`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<PathBuf>,
}

fn default_k() -> usize {
    5
}

fn default_p() -> Vec<usize> {
    vec![8, 8]
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            source: FilterSource::Dct,
            k: default_k(),
            p: default_p(),
            order: ScanOrder::HorizontalMajor,
            flip_axis: false,
            bank: None,
        }
    }
}

impl FilterConfig {
    pub fn scan_policy(&self) -> ScanPolicy {
        match self.order {
            ScanOrder::Zigzag => ScanPolicy::ZigZag,
            ScanOrder::HorizontalMajor if self.flip_axis => ScanPolicy::HorizontalMajor(FrequencyAxis::Rows),
            ScanOrder::HorizontalMajor => ScanPolicy::HorizontalMajor(FrequencyAxis::Columns),
        }
    }
}

/// Everything needed to turn an image file into a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Short label echoed into reports.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Target `[rows, cols]` after center crop and resize.
    pub crop: [usize; 2],
    /// Histogram block `[height, width]`.
    pub block: [usize; 2],
    #[serde(default = "default_true")]
    pub tr_norm: bool,
    /// Whitening-PCA output dimension; absent means no compression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wpca_dim: Option<usize>,
    #[serde(default)]
    pub filters: FilterConfig,
}

fn default_true() -> bool {
    true
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            crop: [64, 64],
            block: [16, 16],
            tr_norm: true,
            wpca_dim: None,
            filters: FilterConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses a config file; a relative `filters.bank` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(bank), Some(dir)) = (config.filters.bank.as_mut(), path.parent()) {
            if bank.is_relative() {
                *bank = dir.join(&*bank);
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn block_size(&self) -> BlockSize {
        BlockSize::new(self.block[0], self.block[1])
    }

    /// One-line summary used as the report's config echo.
    pub fn summary(&self) -> String {
        let f = &self.filters;
        let source = match f.source {
            FilterSource::Dct => "dct",
            FilterSource::PcaLearn => "pca-learn",
            FilterSource::File => "file",
        };
        let order = match (f.order, f.flip_axis) {
            (ScanOrder::Zigzag, _) => "zigzag",
            (ScanOrder::HorizontalMajor, false) => "horizontal-major",
            (ScanOrder::HorizontalMajor, true) => "horizontal-major (rows first)",
        };
        let mut s = String::new();
        if !self.name.is_empty() {
            s.push_str(&self.name);
            s.push_str(": ");
        }
        s.push_str(&format!(
            "crop {}x{}, filters {source} k={} p={:?} {order}, block {}x{}, tr_norm {}, wpca {}",
            self.crop[0],
            self.crop[1],
            f.k,
            f.p,
            self.block[0],
            self.block[1],
            if self.tr_norm { "on" } else { "off" },
            self.wpca_dim.map_or_else(|| "none".to_string(), |d| d.to_string()),
        ));
        s
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        let f = &self.filters;
        if self.crop.contains(&0) {
            return err("crop dimensions must be positive".into());
        }
        if self.block.contains(&0) || self.block[0] > self.crop[0] || self.block[1] > self.crop[1] {
            return err(format!("block {:?} does not fit crop {:?}", self.block, self.crop));
        }
        if f.source != FilterSource::File {
            if f.k == 0 || f.k.is_multiple_of(2) {
                return err(format!("filter size k = {} must be odd", f.k));
            }
            if f.p.is_empty() {
                return err("at least one layer is required".into());
            }
            let max = match f.source {
                FilterSource::Dct => f.k * f.k - 1,
                _ => f.k * f.k,
            };
            if let Some(&p) = f.p.iter().find(|&&p| p == 0 || p > max) {
                return err(format!("{p} filters per layer outside 1..={max} for k = {}", f.k));
            }
            if *f.p.last().unwrap() > crate::network::MAX_CODE_BITS {
                return err("last layer has too many filters to encode".into());
            }
        } else if f.bank.is_none() {
            return err("filters.source = \"file\" requires filters.bank".into());
        }
        if self.wpca_dim == Some(0) {
            return err("wpca_dim must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_setup() {
        let c = PipelineConfig::from_toml_str("crop = [64, 64]\nblock = [16, 16]\n").unwrap();
        assert_eq!(c.filters.k, 5);
        assert_eq!(c.filters.p, vec![8, 8]);
        assert!(c.tr_norm);
        assert_eq!(c.wpca_dim, None);
        assert_eq!(c.filters.scan_policy(), ScanPolicy::HorizontalMajor(FrequencyAxis::Columns));
    }

    #[test]
    fn round_trip() {
        let mut c = PipelineConfig {
            name: "x".into(),
            wpca_dim: Some(150),
            ..Default::default()
        };
        c.filters.order = ScanOrder::Zigzag;
        c.filters.source = FilterSource::PcaLearn;
        let text = c.to_toml_string();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "crop = [64, 64]\nblock = [65, 16]\n",
            "crop = [64, 64]\nblock = [16, 16]\n[filters]\nk = 4\n",
            "crop = [64, 64]\nblock = [16, 16]\n[filters]\np = [25]\n",
            "crop = [64, 64]\nblock = [16, 16]\n[filters]\nsource = \"file\"\n",
            "crop = [64, 64]\nblock = [16, 16]\nwpca_dim = 0\n",
            "crop = [64, 64]\nblock = [16, 16]\nunknown = 1\n",
        ] {
            assert!(PipelineConfig::from_toml_str(text).is_err(), "{text}");
        }
    }
}
