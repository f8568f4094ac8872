use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dirank::ingest::{load_series, SeriesFormat};
use dirank::{EstimatorConfig, RawSeries, Region};
use serde::{Deserialize, Serialize};

pub const MANIFEST_NAME: &str = "dirank.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub series: Vec<ManifestEntry>,
    #[serde(default)]
    pub format: SeriesFormat,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub blocks: BlocksConfig,
    /// Directory the config was read from; manifest paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default = "other_region")]
    pub region: String,
}

fn other_region() -> String {
    Region::Other.as_str().to_string()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub src: Option<String>,
    pub dst: Option<String>,
    pub length: Option<usize>,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlocksConfig {
    pub min_samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            bail!("manifest lists no series");
        }
        for (i, e) in self.series.iter().enumerate() {
            if self.series[..i].iter().any(|o| o.id == e.id) {
                bail!("duplicate series id `{}`", e.id);
            }
            e.region.parse::<Region>().map_err(anyhow::Error::msg)?;
        }
        self.estimator.validate()?;
        Ok(())
    }

    pub fn load_all(&self) -> Result<Vec<RawSeries>> {
        self.series
            .iter()
            .map(|e| {
                let region = e.region.parse::<Region>().map_err(anyhow::Error::msg)?;
                let path = self.base_dir.join(&e.path);
                load_series(&path, &e.id, region, &self.format).with_context(|| format!("loading series `{}`", e.id))
            })
            .collect()
    }
}
