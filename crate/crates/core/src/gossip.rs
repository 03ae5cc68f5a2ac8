//! Block gossip for average consensus.
//!
//! Consistent steps average the values of every connected component of the
//! sampled block. Under edge miscommunication the update is the Kaczmarz
//! projection `c ← c + Q_τ†(m_τ − Q_τc)` with either a fixed `m` or a fresh
//! `m_k` per iteration. For blocks larger than one edge the noisy update is
//! a linear-algebraic model and does not correspond to a simple local
//! protocol.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::covering::{self, CoveringConstants, RowCovering};
use crate::error::{Error, Result};
use crate::graph::{self, EdgeSubset, Graph};
use crate::kaczmarz::{self, BlockProjector};
use crate::linalg::{self, Vector};
use crate::rng::{self, Stream};

/// Connected graph plus the nodes' secret values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProblem {
    graph: Graph,
    initial_values: Vector,
}

impl ConsensusProblem {
    pub fn new(graph: Graph, initial_values: Vector) -> Result<Self> {
        if initial_values.len() != graph.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                initial_values.len(),
                graph.node_count()
            )));
        }
        if initial_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial values must be finite".into()));
        }
        if !graph.is_connected() {
            let components = graph::connected_components(&graph, &graph.all_edges())?.len();
            return Err(Error::Disconnected {
                components: components.max(2),
            });
        }
        Ok(ConsensusProblem { graph, initial_values })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn initial_values(&self) -> &Vector {
        &self.initial_values
    }
}

/// Edge communication model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Consistent,
    /// Fixed miscommunication `m`, one entry per edge.
    ConstantEdgeError {
        m: Vec<f64>,
    },
    /// Fresh `m_k ~ N(0, diag(std²))` every iteration.
    VaryingEdgeError {
        std: Vec<f64>,
    },
}

impl NoiseModel {
    fn check(&self, edge_count: usize) -> Result<()> {
        let (len, values) = match self {
            NoiseModel::Consistent => return Ok(()),
            NoiseModel::ConstantEdgeError { m } => (m.len(), m),
            NoiseModel::VaryingEdgeError { std } => {
                if std.iter().any(|&s| s < 0.0) {
                    return Err(Error::InvalidParameter("noise std must be ≥ 0".into()));
                }
                (std.len(), std)
            }
        };
        if len != edge_count {
            return Err(Error::DimensionMismatch(format!(
                "noise has {len} entries, graph has {edge_count} edges"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("noise entries must be finite".into()));
        }
        Ok(())
    }

    /// `‖m‖²` for constant noise, `tr Σ` for varying noise, 0 otherwise.
    pub fn magnitude(&self) -> f64 {
        match self {
            NoiseModel::Consistent => 0.0,
            NoiseModel::ConstantEdgeError { m } => m.iter().map(|v| v * v).sum(),
            NoiseModel::VaryingEdgeError { std } => std.iter().map(|s| s * s).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GossipTrajectory {
    /// `c_0 … c_k` when recorded, otherwise empty.
    pub values: Vec<Vector>,
    /// `‖c_k − c*‖` for `k = 0 … iterations`.
    pub errors: Vec<f64>,
    pub block_ids: Vec<usize>,
}

/// `c̄·1` with `c̄` the mean of the initial values.
pub fn consensus_target(p: &ConsensusProblem) -> Vector {
    let n = p.initial_values.len();
    let all: Vec<usize> = (0..n).collect();
    Vector::from_element(n, group_mean(p.initial_values.as_slice(), &all))
}

/// `c[g₀] + Σ(c[g] − c[g₀])/|g|`, exact when all values agree, so a
/// consensus vector is a fixed point bit for bit.
fn group_mean(c: &[f64], group: &[usize]) -> f64 {
    let base = c[group[0]];
    base + group.iter().map(|&i| c[i] - base).sum::<f64>() / group.len() as f64
}

fn average_groups(c: &mut [f64], groups: &[Vec<usize>]) {
    for group in groups {
        let mean = group_mean(c, group);
        for &i in group {
            c[i] = mean;
        }
    }
}

/// Every connected component of the block's subgraph replaces its values
/// by their mean; untouched nodes keep theirs.
pub fn gossip_step(c: &Vector, g: &Graph, block: &EdgeSubset) -> Result<Vector> {
    if c.len() != g.node_count() {
        return Err(Error::DimensionMismatch(
            "value vector length differs from node count".into(),
        ));
    }
    let groups = graph::connected_components(g, block)?;
    let mut next = c.clone();
    average_groups(next.as_mut_slice(), &groups);
    Ok(next)
}

/// Incidence block `Q_τ` restricted to the nodes it touches, with those
/// nodes in ascending order.
fn restricted_incidence(g: &Graph, block: &EdgeSubset) -> (Vec<usize>, DMatrix<f64>) {
    let nodes = g.touched_nodes(block);
    let local = |node: usize| nodes.binary_search(&node).expect("touched node");
    let mut sub = DMatrix::zeros(block.len(), nodes.len());
    for (row, &id) in block.ids().iter().enumerate() {
        let (i, j) = g.edge(id);
        sub[(row, local(i))] = 1.0;
        sub[(row, local(j))] = -1.0;
    }
    (nodes, sub)
}

fn incidence_projector(g: &Graph, block: &EdgeSubset) -> BlockProjector {
    let (nodes, sub) = restricted_incidence(g, block);
    BlockProjector::new(block.ids().to_vec(), nodes, sub)
}

/// `c + Q_τ†(m_τ − Q_τc)` with `m` indexed by edge id.
pub fn gossip_step_noisy(c: &Vector, g: &Graph, block: &EdgeSubset, m: &Vector) -> Result<Vector> {
    if m.len() != g.edge_count() {
        return Err(Error::DimensionMismatch(format!(
            "miscommunication vector has {} entries, graph has {} edges",
            m.len(),
            g.edge_count()
        )));
    }
    if c.len() != g.node_count() {
        return Err(Error::DimensionMismatch(
            "value vector length differs from node count".into(),
        ));
    }
    g.check_subset(block)?;
    let (nodes, sub) = restricted_incidence(g, block);
    let residual = Vector::from_fn(block.len(), |row, _| {
        let (i, j) = g.edge(block.ids()[row]);
        m[block.ids()[row]] - (c[i] - c[j])
    });
    let delta = linalg::min_norm_lstsq(&sub, &residual)?;
    let mut next = c.clone();
    for (k, &node) in nodes.iter().enumerate() {
        next[node] += delta[k];
    }
    Ok(next)
}

/// A problem and covering prepared for repeated runs: block components are
/// computed once, incidence pseudoinverses on first noisy use. Shareable
/// across threads.
#[derive(Debug)]
pub struct Simulator<'a> {
    problem: &'a ConsensusProblem,
    covering: &'a RowCovering,
    target: Vector,
    groups: Vec<Vec<Vec<usize>>>,
    projectors: OnceLock<Vec<BlockProjector>>,
}

impl<'a> Simulator<'a> {
    pub fn new(problem: &'a ConsensusProblem, covering: &'a RowCovering) -> Result<Self> {
        let g = problem.graph();
        if covering.edge_count() != g.edge_count() {
            return Err(Error::DimensionMismatch(format!(
                "covering is over {} edges, graph has {}",
                covering.edge_count(),
                g.edge_count()
            )));
        }
        covering::validate(covering)?;
        let groups = covering
            .blocks()
            .iter()
            .map(|b| graph::connected_components(g, b))
            .collect::<Result<_>>()?;
        Ok(Simulator {
            problem,
            covering,
            target: consensus_target(problem),
            groups,
            projectors: OnceLock::new(),
        })
    }

    pub fn target(&self) -> &Vector {
        &self.target
    }

    fn projectors(&self) -> &[BlockProjector] {
        self.projectors.get_or_init(|| {
            let g = self.problem.graph();
            self.covering
                .blocks()
                .iter()
                .map(|b| incidence_projector(g, b))
                .collect()
        })
    }

    /// One trial of `iterations` steps. Blocks come from the seed's block
    /// stream and noise from its noise stream, so the block sequence for a
    /// seed does not depend on the noise model.
    pub fn run(
        &self,
        noise: &NoiseModel,
        iterations: usize,
        seed: u64,
        record_values: bool,
    ) -> Result<GossipTrajectory> {
        noise.check(self.problem.graph().edge_count())?;
        let d = self.covering.len();
        let mut block_rng = rng::stream(seed, Stream::Blocks);
        let mut noise_rng = rng::stream(seed, Stream::Noise);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let projectors = match noise {
            NoiseModel::Consistent => &[][..],
            _ => self.projectors(),
        };

        let mut c = self.problem.initial_values().clone();
        let mut out = GossipTrajectory {
            values: Vec::new(),
            errors: Vec::with_capacity(iterations + 1),
            block_ids: Vec::with_capacity(iterations),
        };
        out.errors.push((&c - &self.target).norm());
        if record_values {
            out.values.push(c.clone());
        }
        for _ in 0..iterations {
            let idx = block_rng.random_range(0..d);
            let x = c.as_mut_slice();
            match noise {
                NoiseModel::Consistent => average_groups(x, &self.groups[idx]),
                NoiseModel::ConstantEdgeError { m } => projectors[idx].project(x, m),
                NoiseModel::VaryingEdgeError { std } => {
                    // only the sampled block's entries of m_k enter the update
                    let proj = &projectors[idx];
                    let draws: Vec<f64> = proj
                        .rows()
                        .iter()
                        .map(|&e| std[e] * unit.sample(&mut noise_rng))
                        .collect();
                    proj.project_with(x, |i| draws[i]);
                }
            }
            out.block_ids.push(idx);
            out.errors.push((&c - &self.target).norm());
            if record_values {
                out.values.push(c.clone());
            }
        }
        Ok(out)
    }
}

/// Runs block gossip on `p` with blocks drawn uniformly from `covering`.
pub fn run(
    p: &ConsensusProblem,
    covering: &RowCovering,
    noise: &NoiseModel,
    iterations: usize,
    seed: u64,
    record_values: bool,
) -> Result<GossipTrajectory> {
    Simulator::new(p, covering)?.run(noise, iterations, seed, record_values)
}

/// `1 − r·α(G)/(β·d)`, the expected per-iteration contraction of
/// `‖c_k − c*‖²`.
pub fn gossip_rate_bound(consts: &CoveringConstants, g: &Graph) -> Result<f64> {
    kaczmarz::theoretical_rate(consts, graph::algebraic_connectivity(g)?)
}

/// Closed-form rate caps for structured coverings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCaps {
    /// Blocks are independent edge sets: `β = 2`.
    pub independent_edge_sets: f64,
    /// Path blocks (or clique blocks via their spanning paths) with at most
    /// `M` edges: `β = 2 − 2cos(Mπ/(M+1))`.
    pub paths: f64,
    /// Any path or clique covering: `β < 4`.
    pub paths_uniform: f64,
    /// Connected blocks reduced to spanning trees of at most `M` edges:
    /// `β ≤ M + 1`, the node count of the largest tree (a star on `M`
    /// edges attains it).
    pub connected: f64,
}

pub fn path_block_beta(edges: usize) -> f64 {
    let m = edges as f64;
    2.0 - 2.0 * (m * std::f64::consts::PI / (m + 1.0)).cos()
}

/// The four structured caps for the given `d`, `r`, `M` and `α(G)`.
/// A cap is only meaningful when the covering has the matching structure.
pub fn rate_caps(consts: &CoveringConstants, algebraic_connectivity: f64) -> RateCaps {
    let scaled = consts.min_multiplicity as f64 * algebraic_connectivity / consts.block_count as f64;
    let m = consts.max_block_size;
    RateCaps {
        independent_edge_sets: 1.0 - scaled / 2.0,
        paths: 1.0 - scaled / path_block_beta(m),
        paths_uniform: 1.0 - scaled / 4.0,
        connected: 1.0 - scaled / (m + 1) as f64,
    }
}

/// Horizon on `E‖c_k − c*‖²`: `β·R/(α·r·α(G))` times `‖m‖²` (constant
/// noise) or `tr Σ` (varying noise); zero without noise.
pub fn gossip_horizon_bound(consts: &CoveringConstants, g: &Graph, noise: &NoiseModel) -> Result<f64> {
    let alpha_g = graph::algebraic_connectivity(g)?;
    match noise {
        NoiseModel::Consistent => Ok(0.0),
        _ => kaczmarz::theoretical_horizon(consts, alpha_g, noise.magnitude()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::greedy_ies_cover;
    use crate::graph::{generate_complete, generate_path};

    fn v(values: &[f64]) -> Vector {
        Vector::from_vec(values.to_vec())
    }

    fn block(ids: &[usize]) -> EdgeSubset {
        EdgeSubset::new(ids.to_vec())
    }

    #[test]
    fn consensus_target_examples() {
        let p = ConsensusProblem::new(generate_path(3).unwrap(), v(&[10.0, 20.0, 30.0])).unwrap();
        assert_eq!(consensus_target(&p), v(&[20.0, 20.0, 20.0]));
        let flat = ConsensusProblem::new(generate_path(3).unwrap(), v(&[4.0; 3])).unwrap();
        assert_eq!(consensus_target(&flat), v(&[4.0; 3]));
    }

    #[test]
    fn consensus_target_is_kernel_projection() {
        let g = crate::graph::generate_erdos_renyi(12, 0.5, 1).unwrap();
        let c = v(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0, 8.0]);
        let q = crate::graph::incidence_matrix(&g).to_dense();
        let projected = &c - linalg::min_norm_lstsq(&q, &(&q * &c)).unwrap();
        let p = ConsensusProblem::new(g, c).unwrap();
        assert!((projected - consensus_target(&p)).amax() < 1e-10);
    }

    #[test]
    fn problem_rejects_bad_input() {
        let disconnected = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(ConsensusProblem::new(disconnected, v(&[0.0; 4])).is_err());
        assert!(ConsensusProblem::new(generate_path(3).unwrap(), v(&[0.0; 2])).is_err());
    }

    #[test]
    fn gossip_step_examples() {
        let p3 = generate_path(3).unwrap();
        let c = v(&[10.0, 20.0, 30.0]);
        assert_eq!(gossip_step(&c, &p3, &block(&[0, 1])).unwrap(), v(&[20.0; 3]));
        assert_eq!(gossip_step(&c, &p3, &block(&[0])).unwrap(), v(&[15.0, 15.0, 30.0]));

        let p4 = generate_path(4).unwrap();
        let c = v(&[0.0, 4.0, 10.0, 20.0]);
        assert_eq!(
            gossip_step(&c, &p4, &block(&[0, 2])).unwrap(),
            v(&[2.0, 2.0, 15.0, 15.0])
        );
    }

    #[test]
    fn noisy_step_examples() {
        let g = generate_complete(4).unwrap();
        let c = v(&[1.0, -2.0, 7.5, 3.0]);
        let zero = Vector::zeros(g.edge_count());
        for ids in [&[0usize][..], &[0, 5], &[0, 1, 3], &[0, 1, 2, 3, 4, 5]] {
            let b = block(ids);
            let exact = gossip_step(&c, &g, &b).unwrap();
            let noisy = gossip_step_noisy(&c, &g, &b, &zero).unwrap();
            assert!((exact - noisy).amax() < 1e-12, "block {ids:?}");
        }

        // single edge (0, 1), m = δ
        let delta = 0.8;
        let mut m = Vector::zeros(g.edge_count());
        m[0] = delta;
        let next = gossip_step_noisy(&c, &g, &block(&[0]), &m).unwrap();
        let mid = (c[0] + c[1]) / 2.0;
        assert!((next[0] - (mid + delta / 2.0)).abs() < 1e-13);
        assert!((next[1] - (mid - delta / 2.0)).abs() < 1e-13);
        assert_eq!((next[2], next[3]), (c[2], c[3]));

        // fixed point
        let again = gossip_step_noisy(&next, &g, &block(&[0]), &m).unwrap();
        assert!((again - &next).amax() < 1e-13);

        assert!(gossip_step_noisy(&c, &g, &block(&[0]), &Vector::zeros(2)).is_err());
    }

    #[test]
    fn one_block_covering_reaches_consensus_in_one_step() {
        let g = generate_complete(5).unwrap();
        let covering = RowCovering::new(g.edge_count(), vec![g.all_edges()]);
        let p = ConsensusProblem::new(g, v(&[1.0, 2.0, 3.0, 4.0, 50.0])).unwrap();
        let t = run(&p, &covering, &NoiseModel::Consistent, 3, 0, false).unwrap();
        assert!(t.errors[0] > 0.0);
        assert!(t.errors[1..].iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn run_records_values_when_asked() {
        let g = generate_path(5).unwrap();
        let covering = greedy_ies_cover(&g).unwrap();
        let p = ConsensusProblem::new(g, v(&[0.0, 1.0, 2.0, 3.0, 4.0])).unwrap();
        let t = run(&p, &covering, &NoiseModel::Consistent, 7, 1, true).unwrap();
        assert_eq!(t.values.len(), 8);
        assert_eq!(t.errors.len(), 8);
        assert_eq!(t.block_ids.len(), 7);
        let t = run(&p, &covering, &NoiseModel::Consistent, 7, 1, false).unwrap();
        assert!(t.values.is_empty());
    }

    #[test]
    fn block_sequence_is_independent_of_noise_model() {
        let g = crate::graph::generate_erdos_renyi(15, 0.4, 2).unwrap();
        let covering = greedy_ies_cover(&g).unwrap();
        let m = g.edge_count();
        let p = ConsensusProblem::new(g, Vector::from_fn(15, |i, _| i as f64)).unwrap();
        let sim = Simulator::new(&p, &covering).unwrap();
        let a = sim.run(&NoiseModel::Consistent, 40, 9, false).unwrap();
        let b = sim
            .run(&NoiseModel::VaryingEdgeError { std: vec![0.1; m] }, 40, 9, false)
            .unwrap();
        assert_eq!(a.block_ids, b.block_ids);
    }

    #[test]
    fn rate_and_horizon_examples() {
        let k3 = generate_complete(3).unwrap();
        let ies = greedy_ies_cover(&k3).unwrap();
        let k = covering::constants(&ies, &k3).unwrap();
        assert!((gossip_rate_bound(&k, &k3).unwrap() - 0.5).abs() < 1e-12);

        assert_eq!(gossip_horizon_bound(&k, &k3, &NoiseModel::Consistent).unwrap(), 0.0);
        let m = NoiseModel::ConstantEdgeError { m: vec![1.0, 0.0, 0.0] };
        assert!((gossip_horizon_bound(&k, &k3, &m).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let std = NoiseModel::VaryingEdgeError { std: vec![0.1; 3] };
        assert!((gossip_horizon_bound(&k, &k3, &std).unwrap() - 0.03 / 3.0).abs() < 1e-12);

        let disconnected = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(gossip_rate_bound(&k, &disconnected).is_err());
    }

    #[test]
    fn caps_for_ies_and_paths() {
        let k = CoveringConstants {
            block_count: 4,
            alpha: 2.0,
            beta: 2.0,
            min_multiplicity: 1,
            max_multiplicity: 1,
            max_block_size: 3,
        };
        let caps = rate_caps(&k, 2.0);
        assert!((caps.independent_edge_sets - 0.75).abs() < 1e-15);
        assert!((caps.paths - (1.0 - 0.5 / (2.0 + 2f64.sqrt()))).abs() < 1e-12);
        assert!(caps.paths <= caps.paths_uniform);
        assert!((caps.connected - (1.0 - 0.5 / 4.0)).abs() < 1e-15);
    }
}
