//! Output files stamped with the configuration that produced them.
//!
//! CSV and text outputs open with `#` comment lines holding the command, the
//! master seed and the resolved configuration as one-line JSON. JSON outputs
//! wrap their payload as `{"provenance": ..., "data": ...}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            seed: config.experiment.seed,
            config: config.clone(),
        }
    }

    pub fn header(&self) -> Result<String> {
        Ok(format!(
            "# command: {}\n# seed: {}\n# config: {}\n",
            self.command,
            self.seed,
            serde_json::to_string(&self.config)?
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub provenance: Provenance,
    pub data: T,
}

/// Writes files into one output directory, creating it on first use.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>, provenance: Provenance) -> Self {
        Self {
            root: root.into(),
            provenance,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.root)?;
        let path = self.root.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    /// Text or CSV body behind the comment header.
    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write(name, &format!("{}{body}", self.provenance.header()?))
    }

    /// Graymap with the header comments placed after the magic number.
    pub fn pgm(&self, name: &str, image: &str) -> Result<PathBuf> {
        let (magic, rest) = image
            .split_once('\n')
            .ok_or_else(|| Error::domain("graymap without a header line"))?;
        self.write(name, &format!("{magic}\n{}{rest}", self.provenance.header()?))
    }

    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf> {
        let stamped = Stamped {
            provenance: self.provenance.clone(),
            data,
        };
        self.write(name, &(serde_json::to_string_pretty(&stamped)? + "\n"))
    }
}

/// Reads a JSON file written by [`OutputDir::json`].
pub fn read_stamped<T: DeserializeOwned>(path: &Path) -> Result<Stamped<T>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_embeds_seed_and_config() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.seed = 9;
        let h = Provenance::new("run", &cfg).header().unwrap();
        let lines: Vec<&str> = h.lines().collect();
        assert_eq!(lines[..2], ["# command: run", "# seed: 9"]);
        let json = lines[2].strip_prefix("# config: ").unwrap();
        let back: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(back, cfg);
    }
}
