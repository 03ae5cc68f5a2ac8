use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covering::{self, RowCovering};
use crate::error::{Error, Result};
use crate::graph::{self, Graph};

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Er { n: usize, p: f64, seed: u64 },
    Lattice { rows: usize, cols: usize },
    Complete { n: usize },
    Path { n: usize },
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Er { n, p, seed } => graph::generate_erdos_renyi(*n, *p, *seed),
            GraphSpec::Lattice { rows, cols } => graph::generate_square_lattice(*rows, *cols),
            GraphSpec::Complete { n } => graph::generate_complete(*n),
            GraphSpec::Path { n } => graph::generate_path(*n),
            GraphSpec::File { path } => Graph::load(path),
        }
    }
}

/// How blocks are built. `count` defaults to the edge count and `seed` to
/// the experiment's base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoveringSpec {
    Ies,
    Clique,
    Path {
        length: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Random {
        size: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

impl CoveringSpec {
    pub fn build(&self, g: &Graph, default_seed: u64) -> Result<RowCovering> {
        let covering = match self {
            CoveringSpec::Ies => covering::greedy_ies_cover(g)?,
            CoveringSpec::Clique => covering::greedy_clique_cover(g)?,
            CoveringSpec::Path { length, count, seed } => covering::random_path_cover(
                g,
                *length,
                count.unwrap_or(g.edge_count()),
                seed.unwrap_or(default_seed),
            )?,
            CoveringSpec::Random { size, count, seed } => {
                covering::random_block_cover(g, *size, count.unwrap_or(g.edge_count()), seed.unwrap_or(default_seed))?
            }
            CoveringSpec::File { path } => RowCovering::load(path)?,
        };
        if covering.edge_count() != g.edge_count() {
            return Err(Error::DimensionMismatch(format!(
                "covering is over {} edges, graph has {}",
                covering.edge_count(),
                g.edge_count()
            )));
        }
        covering::validate(&covering)?;
        Ok(covering)
    }

    pub fn is_clique(&self) -> bool {
        matches!(self, CoveringSpec::Clique)
    }
}

impl fmt::Display for CoveringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoveringSpec::Ies => write!(f, "ies"),
            CoveringSpec::Clique => write!(f, "clique"),
            CoveringSpec::Path { length, .. } => write!(f, "path{length}"),
            CoveringSpec::Random { size, .. } => write!(f, "random{size}"),
            CoveringSpec::File { .. } => write!(f, "file"),
        }
    }
}

/// Edge communication model. `std` is a standard deviation, so `0.1`
/// corresponds to variance `0.01`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Consistent,
    /// Fixed `m`: drawn once from `N(0, std²)` per edge, or read from a file
    /// of whitespace-separated values in edge order.
    Cece {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        std: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Vece {
        std: f64,
    },
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_trials() -> usize {
    1
}

/// One JSON document drives `run`, `compare` and `sweep`.
///
/// `run` needs `covering`; `compare` needs `coverings`; `sweep` needs
/// `covering`, an `er` graph and a nonempty `p_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coverings: Vec<CoveringSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub iterations: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub record_collapse: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub exclude_trivial: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::from_json(&fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        match &self.noise {
            NoiseSpec::Cece {
                std: None,
                m_file: None,
                ..
            } => return Err(Error::Config("cece noise needs `std` or `m_file`".into())),
            NoiseSpec::Cece {
                std: Some(_),
                m_file: Some(_),
                ..
            } => return Err(Error::Config("cece noise takes `std` or `m_file`, not both".into())),
            NoiseSpec::Cece { std: Some(s), .. } | NoiseSpec::Vece { std: s } if !(*s >= 0.0) => {
                return Err(Error::Config(format!("noise std {s} must be ≥ 0")))
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn single_covering(&self) -> Result<&CoveringSpec> {
        self.covering
            .as_ref()
            .ok_or_else(|| Error::Config("`covering` is required".into()))
    }
}
