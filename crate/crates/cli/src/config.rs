//! Run configuration, read from TOML. Every field has a default so an empty
//! file is a valid configuration.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use blowups::tiling::Containment;
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "BLOWUPS_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Cells across the attractor for tops, tilings and suites.
    pub resolution: usize,
    /// Cells across the attractor for figures.
    pub figure_resolution: usize,
    /// Deepest top field or tiling level computed by the suites.
    pub depth: usize,
    /// Depth reached by the exact line oracle.
    pub exact_depth: usize,
    /// Priority order such as `"2>1"`; the IFS file's order when absent.
    pub order: Option<String>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Share of a child tile within one cell of its parent.
    pub contain_dilated: f64,
    /// Share of a child tile inside its parent.
    pub contain_undilated: f64,
    /// Hausdorff bound, in cells, for blowup decompositions.
    pub hausdorff_cells: f64,
    /// Relative tolerance on projected gap lengths.
    pub gap: f64,
    /// Relative tolerance on the long/short gap count ratio.
    pub count_ratio: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            resolution: 1024,
            figure_resolution: 384,
            depth: 6,
            exact_depth: 8,
            order: None,
            seed: 7,
            tolerances: Tolerances::default(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = Containment::default();
        Tolerances {
            contain_dilated: c.dilated,
            contain_undilated: c.undilated,
            hausdorff_cells: 2.0,
            gap: 1e-9,
            count_ratio: 0.1,
        }
    }
}

impl Tolerances {
    pub fn containment(&self) -> Containment {
        Containment {
            dilated: self.contain_dilated,
            undilated: self.contain_undilated,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// `explicit`, else `$BLOWUPS_OUT`, else `fallback`.
pub fn out_dir(explicit: Option<PathBuf>, fallback: &str) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn partial_tables() {
        let c = Config::parse("depth = 4\n[tolerances]\ngap = 1e-6\n").unwrap();
        assert_eq!(c.depth, 4);
        assert_eq!(c.tolerances.gap, 1e-6);
        assert_eq!(c.tolerances.hausdorff_cells, 2.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("resolutoin = 3").is_err());
    }
}
