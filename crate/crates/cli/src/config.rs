//! Experiment configuration files.
//!
//! A config is a TOML document with an `[experiment]` table plus one table per
//! environment. Unknown keys are rejected and every error names the offending
//! field path. The config hash is taken over the canonical re-serialisation of the
//! parsed config (defaults filled in), so formatting and comments do not change it.

use std::path::{Path, PathBuf};

use actmask::env::inventory::{InvConfig, InvMaskKind, LeadMode};
use actmask::env::lms::{self, LmsConfig};
use actmask::env::paintshop::{MaskLevel, PaintShopConfig};
use actmask::ppo::PpoConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUTPUT_ROOT_VAR: &str = "ACTMASK_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid TOML: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        field: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Paintshop,
    Lms,
    Inventory,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paintshop => "paintshop",
            Self::Lms => "lms",
            Self::Inventory => "inventory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub env: EnvKind,
    /// Paint shop: a mask level (`none`, `inv`, `inv+gr`, `inv+gr+ft`, `all`).
    /// Inventory: `none`, `int` or `thr`. LMS: `none` or `thr` (needs `lms.theta`).
    pub mask: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_timesteps")]
    pub total_timesteps: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_eval_seed")]
    pub eval_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_timesteps() -> usize {
    1_000_000
}

fn default_eval_episodes() -> usize {
    100
}

fn default_eval_seed() -> u64 {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaintShopSection {
    pub lanes: usize,
    pub width: usize,
    pub colors: usize,
    pub sequence_length: usize,
}

impl Default for PaintShopSection {
    fn default() -> Self {
        let c = PaintShopConfig::default();
        Self {
            lanes: c.lanes,
            width: c.width,
            colors: c.colors,
            sequence_length: c.sequence_length,
        }
    }
}

impl PaintShopSection {
    pub fn build(&self) -> PaintShopConfig {
        PaintShopConfig::new(self.lanes, self.width, self.colors).with_sequence_length(self.sequence_length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LmsSection {
    pub sigma: f64,
    pub theta: Option<f64>,
    /// Replaces the shipped reference curve; relative paths are resolved against
    /// the config file's directory.
    pub curve_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InventorySection {
    pub lost_sales_cost: f64,
    pub lead_mode: String,
    /// Defaults to the published level for the lost-sales cost.
    pub base_stock: Option<f64>,
    pub horizon: Option<usize>,
}

impl Default for InventorySection {
    fn default() -> Self {
        Self {
            lost_sales_cost: 1.0,
            lead_mode: "det".into(),
            base_stock: None,
            horizon: None,
        }
    }
}

/// Small instances for `actmask oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Paint shop: explicit car colours; when empty, `cars` cars are drawn from
    /// `instance_seed` using the `[paintshop]` buffer and colour count.
    pub sequence: Vec<u8>,
    pub cars: usize,
    pub instance_seed: u64,
    /// Inventory: demand support is truncated at this value.
    pub max_demand: u32,
    /// Inventory: overrides for the small DP instance.
    pub max_lead: usize,
    pub demand_mean: f64,
    pub grid_points: usize,
    pub horizon: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            sequence: Vec::new(),
            cars: 8,
            instance_seed: 0,
            max_demand: 25,
            max_lead: 1,
            demand_mean: 1.0,
            grid_points: 2,
            horizon: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub paintshop: PaintShopSection,
    #[serde(default)]
    pub lms: LmsSection,
    #[serde(default)]
    pub inventory: InventorySection,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub oracle: OracleSection,
}

/// The mask selected by `experiment.mask`, typed per environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskChoice {
    PaintShop(MaskLevel),
    Lms(Option<f64>),
    Inventory(InvMaskKind),
}

impl MaskChoice {
    pub fn label(&self) -> String {
        match self {
            Self::PaintShop(level) => level.to_string(),
            Self::Lms(None) => "none".into(),
            Self::Lms(Some(theta)) => format!("thr{theta}"),
            Self::Inventory(kind) => kind.to_string(),
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config = parse(&text, path)?;
        let loaded = Self {
            hash: config_hash(&config),
            config,
            source: path.to_path_buf(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn field_error(&self, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Field {
            path: self.source.clone(),
            field: field.into(),
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.config.experiment;
        if e.seeds.is_empty() {
            return Err(self.field_error("experiment.seeds", "at least one seed is required"));
        }
        if e.eval_episodes == 0 {
            return Err(self.field_error("experiment.eval_episodes", "must be positive"));
        }
        self.mask()?;
        self.config.ppo.validate().map_err(|m| self.field_error("ppo", m))?;
        match e.env {
            EnvKind::Paintshop => {
                self.paintshop().validate().map_err(|m| self.field_error("paintshop", m))?;
            }
            EnvKind::Lms => {
                self.lms()?.validate().map_err(|m| self.field_error("lms", m))?;
            }
            EnvKind::Inventory => {
                self.inventory()?.validate().map_err(|m| self.field_error("inventory", m))?;
            }
        }
        Ok(())
    }

    pub fn mask(&self) -> Result<MaskChoice, ConfigError> {
        let raw = self.config.experiment.mask.as_str();
        let bad = |m: String| self.field_error("experiment.mask", m);
        match self.config.experiment.env {
            EnvKind::Paintshop => raw.parse().map(MaskChoice::PaintShop).map_err(bad),
            EnvKind::Inventory => raw.parse().map(MaskChoice::Inventory).map_err(bad),
            EnvKind::Lms => match (raw, self.config.lms.theta) {
                ("none", _) => Ok(MaskChoice::Lms(None)),
                ("thr", Some(theta)) if theta.is_finite() => Ok(MaskChoice::Lms(Some(theta))),
                ("thr", _) => Err(self.field_error("lms.theta", "the threshold mask needs a finite theta")),
                (other, _) => Err(bad(format!("unknown LMS mask `{other}` (expected none or thr)"))),
            },
        }
    }

    pub fn paintshop(&self) -> PaintShopConfig {
        self.config.paintshop.build()
    }

    pub fn lms(&self) -> Result<LmsConfig, ConfigError> {
        let section = &self.config.lms;
        let mut config = LmsConfig::with_sigma(section.sigma);
        if let Some(file) = &section.curve_file {
            let path = self.source.parent().unwrap_or(Path::new(".")).join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|err| self.field_error("lms.curve_file", format!("{}: {err}", path.display())))?;
            config.curve = lms::parse_curve(&text, config.periods)
                .map_err(|err| self.field_error("lms.curve_file", err.to_string()))?;
        }
        Ok(config)
    }

    pub fn inventory(&self) -> Result<InvConfig, ConfigError> {
        let section = &self.config.inventory;
        let mode: LeadMode = section
            .lead_mode
            .parse()
            .map_err(|m| self.field_error("inventory.lead_mode", m))?;
        let mut config = InvConfig::standard(section.lost_sales_cost, mode);
        if let Some(s) = section.base_stock {
            config.base_stock = s;
        }
        if let Some(h) = section.horizon {
            config.horizon = h;
        }
        Ok(config)
    }

    /// The configured output directory, placed under `ACTMASK_OUTPUT_ROOT` when
    /// that is set and the directory is relative.
    pub fn output_dir(&self) -> PathBuf {
        let dir = &self.config.experiment.output_dir;
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir.clone(),
        }
    }
}

pub fn parse(text: &str, path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|err| ConfigError::Syntax {
        path: path.to_path_buf(),
        message: err.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        ConfigError::Field {
            path: path.to_path_buf(),
            field,
            message: err.into_inner().message().trim().to_string(),
        }
    })
}

pub fn to_canonical_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config serialises")
}

/// First 12 hex digits of the SHA-256 of the canonical serialisation.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(to_canonical_toml(config).as_bytes());
    hex::encode(digest)[..12].to_string()
}
