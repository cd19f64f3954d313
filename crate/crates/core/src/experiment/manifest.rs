use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{read_events, EventFormat, EventStream, Geometry};
use crate::synth::Split;

/// One line of a dataset manifest. `path` is relative to the manifest's
/// directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub label: u16,
    pub split: Split,
    pub seed: u64,
    /// Whether the recording carries hotspot noise.
    #[serde(default)]
    pub hotspot: bool,
    /// Needed for CSV recordings, which carry no geometry of their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

/// Which manifest entries a command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFilter {
    Train,
    Test,
    All,
}

impl SplitFilter {
    pub fn admits(self, split: Split) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Train => split == Split::Train,
            SplitFilter::Test => split == Split::Test,
        }
    }
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            location: format!("{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { dir, entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.entries).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.dir.join(&entry.path)
    }

    /// Label count implied by the whole manifest, independent of any split.
    pub fn classes(&self) -> usize {
        self.entries.iter().map(|e| e.label as usize + 1).max().unwrap_or(0)
    }

    pub fn select(&self, filter: SplitFilter) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| filter.admits(e.split)).collect()
    }

    /// Reads the selected recordings in manifest order. `fallback` is used for
    /// CSV entries without a geometry of their own.
    pub fn read(&self, filter: SplitFilter, fallback: Geometry) -> Result<Vec<(ManifestEntry, EventStream)>> {
        self.select(filter)
            .into_par_iter()
            .map(|e| {
                let path = self.resolve(e);
                let format = EventFormat::from_path(&path);
                let geometry = match format {
                    EventFormat::Csv => Some(e.geometry.unwrap_or(fallback)),
                    EventFormat::PackedBinary => e.geometry,
                };
                let stream = read_events(&path, format, geometry)?.with_label(e.label);
                Ok((e.clone(), stream))
            })
            .collect()
    }
}
