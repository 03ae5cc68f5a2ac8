//! Experiment orchestration: build a graph and covering from a config, run
//! seeded gossip trials, aggregate error curves, and write CSV/JSON files.
//!
//! Trial `t` uses seed `base_seed + t` for its block and noise streams. The
//! initial values are drawn once, uniformly on `[0, 100]`, from the base
//! seed. Trials run on the rayon pool and are merged in trial order, so
//! output bytes never depend on scheduling.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{CoveringSpec, ExperimentConfig, GraphSpec, NoiseSpec};
pub use output::{format_float, write_collapse_csv, write_error_csv};

use crate::covering::{self, CoveringConstants, RowCovering};
use crate::error::{Error, Result};
use crate::gossip::{self, ConsensusProblem, NoiseModel, Simulator};
use crate::graph::{self, Graph};
use crate::linalg::Vector;
use crate::rng::{self, Stream};
use crate::stats;

/// Initial secret values: i.i.d. uniform on `[0, 100]`.
pub fn initial_values(n: usize, seed: u64) -> Vector {
    let mut rng = rng::stream(seed, Stream::Values);
    Vector::from_fn(n, |_, _| rng.random_range(0.0..=100.0))
}

/// Materialises a noise spec for a graph with `edge_count` edges.
pub fn build_noise(spec: &NoiseSpec, edge_count: usize, base_seed: u64) -> Result<NoiseModel> {
    Ok(match spec {
        NoiseSpec::Consistent => NoiseModel::Consistent,
        NoiseSpec::Cece {
            std: Some(std), seed, ..
        } => NoiseModel::ConstantEdgeError {
            m: draw_edge_errors(edge_count, *std, seed.unwrap_or(base_seed))?,
        },
        NoiseSpec::Cece { m_file: Some(path), .. } => {
            let m = read_values(path)?;
            if m.len() != edge_count {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} values, graph has {edge_count} edges",
                    path.display(),
                    m.len()
                )));
            }
            NoiseModel::ConstantEdgeError { m }
        }
        NoiseSpec::Cece { .. } => {
            return Err(Error::Config("cece noise needs `std` or `m_file`".into()));
        }
        NoiseSpec::Vece { std } => NoiseModel::VaryingEdgeError {
            std: vec![*std; edge_count],
        },
    })
}

/// Fixed edge miscommunication values, i.i.d. `N(0, std²)`.
pub fn draw_edge_errors(edge_count: usize, std: f64, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(format!("noise std {std}: {e}")))?;
    let mut rng = rng::stream(seed, Stream::EdgeErrors);
    Ok((0..edge_count).map(|_| normal.sample(&mut rng)).collect())
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|e| Error::Parse {
                line: 0,
                message: format!("{}: {tok:?}: {e}", path.display()),
            })
        })
        .collect()
}

/// Per-iteration mean and 5%/95% quantiles across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl Aggregate {
    pub fn from_trials(series: &[Vec<f64>]) -> Self {
        let len = series.first().map_or(0, Vec::len);
        let mut out = Aggregate {
            mean: Vec::with_capacity(len),
            q05: Vec::with_capacity(len),
            q95: Vec::with_capacity(len),
        };
        let mut column = Vec::with_capacity(series.len());
        for k in 0..len {
            column.clear();
            column.extend(series.iter().map(|s| s[k]));
            out.mean.push(stats::mean(&column));
            column.sort_by(f64::total_cmp);
            out.q05.push(stats::quantile_sorted(&column, 0.05));
            out.q95.push(stats::quantile_sorted(&column, 0.95));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
}

/// Everything a single-protocol run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub protocol: String,
    pub graph: GraphSummary,
    pub algebraic_connectivity: f64,
    pub constants: CoveringConstants,
    pub rate: f64,
    pub horizon: f64,
    pub initial_error: f64,
    pub aggregate: Aggregate,
    /// `sqrt(rate^k · ‖c₀ − c*‖² + horizon)`, comparable with the norms.
    pub bound: Vec<f64>,
    pub trials: Vec<Vec<f64>>,
    #[serde(skip)]
    pub collapse: Option<Vec<Vector>>,
}

/// Bound on `‖c_k − c*‖` as the square root of the squared-error bound.
pub fn bound_curve(rate: f64, initial_error: f64, horizon: f64, iterations: usize) -> Vec<f64> {
    let e0 = initial_error * initial_error;
    let mut factor = 1.0;
    (0..=iterations)
        .map(|k| {
            if k > 0 {
                factor *= rate;
            }
            (factor * e0 + horizon).sqrt()
        })
        .collect()
}

/// Graph-level context shared by every protocol of an experiment.
struct Setup {
    problem: ConsensusProblem,
    algebraic_connectivity: f64,
}

impl Setup {
    fn new(graph: Graph, base_seed: u64) -> Result<Self> {
        let values = initial_values(graph.node_count(), base_seed);
        let problem = ConsensusProblem::new(graph, values)?;
        let algebraic_connectivity = graph::algebraic_connectivity(problem.graph())?;
        Ok(Setup {
            problem,
            algebraic_connectivity,
        })
    }
}

fn run_protocol(
    config: &ExperimentConfig,
    setup: &Setup,
    spec: &CoveringSpec,
    covering: &RowCovering,
    noise: &NoiseModel,
) -> Result<ExperimentResult> {
    let g = setup.problem.graph();
    let constants = covering::constants(covering, g)?;
    let rate = crate::kaczmarz::theoretical_rate(&constants, setup.algebraic_connectivity)?;
    let horizon = match noise {
        NoiseModel::Consistent => 0.0,
        _ => crate::kaczmarz::theoretical_horizon(&constants, setup.algebraic_connectivity, noise.magnitude())?,
    };
    let sim = Simulator::new(&setup.problem, covering)?;
    let record = config.record_collapse;
    let runs = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.base_seed.wrapping_add(t as u64);
            sim.run(noise, config.iterations, seed, record && t == 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let initial_error = runs[0].errors[0];
    let mut collapse = None;
    let mut trials = Vec::with_capacity(runs.len());
    for (t, run) in runs.into_iter().enumerate() {
        if t == 0 && record {
            collapse = Some(run.values);
        }
        trials.push(run.errors);
    }
    Ok(ExperimentResult {
        config: config.clone(),
        protocol: spec.to_string(),
        graph: GraphSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
        },
        algebraic_connectivity: setup.algebraic_connectivity,
        constants,
        rate,
        horizon,
        initial_error,
        aggregate: Aggregate::from_trials(&trials),
        bound: bound_curve(rate, initial_error, horizon, config.iterations),
        trials,
        collapse,
    })
}

/// Runs the single protocol of `config` without touching the filesystem.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.check()?;
    let spec = config.single_covering()?;
    let setup = Setup::new(config.graph.build()?, config.base_seed)?;
    let g = setup.problem.graph();
    let covering = spec.build(g, config.base_seed)?;
    let noise = build_noise(&config.noise, g.edge_count(), config.base_seed)?;
    run_protocol(config, &setup, spec, &covering, &noise)
}

/// Paths of the files a command wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `run`: `errors.csv`, `result.json`, and `collapse.csv` when requested.
pub fn cmd_run(config: &ExperimentConfig) -> Result<(ExperimentResult, Written)> {
    let result = run_experiment(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut written = Written::default();

    let errors = dir.join("errors.csv");
    output::write_error_csv(&errors, &result.aggregate, &result.bound)?;
    written.files.push(errors);

    if let Some(values) = &result.collapse {
        let collapse = dir.join("collapse.csv");
        output::write_collapse_csv(&collapse, values)?;
        written.files.push(collapse);
    }

    let json = dir.join("result.json");
    write_json(&json, &result)?;
    written.files.push(json);
    Ok((result, written))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolSummary {
    pub label: String,
    pub covering: CoveringSpec,
    pub constants: CoveringConstants,
    pub rate: f64,
    pub horizon: f64,
    pub final_mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareResult {
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub algebraic_connectivity: f64,
    pub initial_error: f64,
    pub excluded: Vec<String>,
    pub protocols: Vec<ProtocolSummary>,
    #[serde(skip)]
    pub series: Vec<(String, Aggregate, Vec<f64>)>,
}

/// Runs every covering of `config.coverings` on the same graph, initial
/// values and trial seeds.
///
/// With `exclude_trivial`, a clique protocol whose covering collapses to a
/// single block (one-step consensus) is skipped.
pub fn compare_protocols(config: &ExperimentConfig) -> Result<CompareResult> {
    config.check()?;
    if config.coverings.is_empty() {
        return Err(Error::Config("`coverings` must list at least one protocol".into()));
    }
    let setup = Setup::new(config.graph.build()?, config.base_seed)?;
    let g = setup.problem.graph();
    let noise = build_noise(&config.noise, g.edge_count(), config.base_seed)?;

    let mut excluded = Vec::new();
    let mut protocols = Vec::new();
    let mut series = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for spec in &config.coverings {
        let covering = spec.build(g, config.base_seed)?;
        let mut label = spec.to_string();
        if labels.contains(&label) {
            label = format!("{label}_{}", labels.len());
        }
        labels.push(label.clone());
        if config.exclude_trivial && spec.is_clique() && covering.len() == 1 {
            excluded.push(label);
            continue;
        }
        let result = run_protocol(config, &setup, spec, &covering, &noise)?;
        protocols.push(ProtocolSummary {
            label: label.clone(),
            covering: spec.clone(),
            constants: result.constants,
            rate: result.rate,
            horizon: result.horizon,
            final_mean_error: *result.aggregate.mean.last().expect("nonempty series"),
        });
        series.push((label, result.aggregate, result.bound));
    }
    Ok(CompareResult {
        config: config.clone(),
        graph: GraphSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
        },
        algebraic_connectivity: setup.algebraic_connectivity,
        initial_error: (setup.problem.initial_values() - gossip::consensus_target(&setup.problem)).norm(),
        excluded,
        protocols,
        series,
    })
}

/// `compare`: `compare.csv` (one mean and one bound column per protocol)
/// and `compare.json`.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<(CompareResult, Written)> {
    let result = compare_protocols(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let csv = dir.join("compare.csv");
    output::write_compare_csv(&csv, &result.series)?;
    let json = dir.join("compare.json");
    write_json(&json, &result)?;
    Ok((result, Written { files: vec![csv, json] }))
}

/// Output file for one grid point, e.g. `errors_p0.6.csv`.
pub fn sweep_file_name(p: f64) -> String {
    format!("errors_p{p}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub file: String,
    pub graph: GraphSummary,
    pub algebraic_connectivity: f64,
    pub constants: CoveringConstants,
    pub rate: f64,
    pub final_mean_error: f64,
}

/// `sweep`: the configured protocol on `ER(n, p)` for every `p` in the grid,
/// with the graph seed and trial seeds held fixed. Writes one CSV per grid
/// point and `sweep.json`.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<(Vec<SweepPoint>, Written)> {
    config.check()?;
    if config.p_grid.is_empty() {
        return Err(Error::Config("`p_grid` must not be empty".into()));
    }
    let GraphSpec::Er { n, seed, .. } = config.graph else {
        return Err(Error::Config("sweep needs an `er` graph".into()));
    };
    config.single_covering()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut points = Vec::with_capacity(config.p_grid.len());
    let mut written = Written::default();
    for &p in &config.p_grid {
        let mut point_config = config.clone();
        point_config.graph = GraphSpec::Er { n, p, seed };
        point_config.p_grid.clear();
        point_config.record_collapse = false;
        let result = run_experiment(&point_config)?;
        let file = sweep_file_name(p);
        let path = dir.join(&file);
        output::write_error_csv(&path, &result.aggregate, &result.bound)?;
        written.files.push(path);
        points.push(SweepPoint {
            p,
            file,
            graph: result.graph,
            algebraic_connectivity: result.algebraic_connectivity,
            constants: result.constants,
            rate: result.rate,
            final_mean_error: *result.aggregate.mean.last().expect("nonempty series"),
        });
    }
    let json = dir.join("sweep.json");
    write_json(&json, &points)?;
    written.files.push(json);
    Ok((points, written))
}
