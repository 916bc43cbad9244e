//! Result files. Every write goes to a temporary file in the target directory
//! and is renamed into place, so readers never see a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use actmask::ppo::PolicyBundle;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::EnvKind;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CHECKPOINT_FORMAT: u32 = 1;

/// Columns that prefix every CSV row.
pub const PROVENANCE: [&str; 3] = ["config_hash", "seed", "version"];

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// A CSV table whose rows all start with the provenance columns.
pub struct Table {
    hash: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(hash: &str, columns: &[&str]) -> Self {
        Self {
            hash: hash.to_string(),
            header: PROVENANCE.iter().chain(columns).map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, seed: u64, values: Vec<String>) {
        assert_eq!(values.len() + PROVENANCE.len(), self.header.len(), "row width");
        let mut row = vec![self.hash.clone(), seed.to_string(), VERSION.to_string()];
        row.extend(values);
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        Ok(writer.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub env: EnvKind,
    pub mask: String,
    pub timesteps: usize,
    pub policy: PolicyBundle,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
        let checkpoint: Checkpoint =
            serde_json::from_str(&text).with_context(|| format!("parsing checkpoint {}", path.display()))?;
        if checkpoint.format_version != CHECKPOINT_FORMAT {
            bail!(
                "{}: checkpoint format {} is not supported (expected {CHECKPOINT_FORMAT})",
                path.display(),
                checkpoint.format_version
            );
        }
        Ok(checkpoint)
    }
}

/// File names for one configuration.
pub struct Layout {
    pub dir: PathBuf,
    pub hash: String,
}

impl Layout {
    fn file(&self, name: String) -> PathBuf {
        self.dir.join(format!("{}_{name}", self.hash))
    }

    pub fn checkpoint(&self, seed: u64) -> PathBuf {
        self.file(format!("seed{seed}_checkpoint.json"))
    }

    pub fn curve(&self, seed: u64) -> PathBuf {
        self.file(format!("seed{seed}_curve.csv"))
    }

    pub fn eval(&self, seed: u64) -> PathBuf {
        self.file(format!("seed{seed}_eval.csv"))
    }

    pub fn baseline(&self) -> PathBuf {
        self.file("baseline.csv".into())
    }

    pub fn oracle(&self) -> PathBuf {
        self.file("oracle.csv".into())
    }

    pub fn curves(&self) -> PathBuf {
        self.file("curves.csv".into())
    }
}
