//! Row coverings of the incidence matrix and their `(d, α, β, r, R)`
//! constants.
//!
//! A covering is a list of nonempty edge blocks such that every edge sits in
//! at least one block. `α` and `β` bound the nonzero spectrum of every block
//! Gram matrix `Q_τQ_τᵀ`; `r` and `R` are the smallest and largest number of
//! blocks any single edge belongs to.
//!
//! The spectrum of `Q_τQ_τᵀ` equals that of the block's Laplacian `L_τ` up to
//! zeros, and `L_τ` is a direct sum over the block's connected components,
//! so constants are computed per component on small local Laplacians.
//!
//! Constructions follow the greedy/random recipes used for experiments. The
//! greedy "largest" searches are heuristics (maximal matching, greedy clique
//! growth), not exact maximum matching or maximum clique.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::{fs, io};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, EdgeSubset, Graph};
use crate::linalg;
use crate::rng::{self, Stream};

/// Blocks of edge ids over a graph with `edge_count` edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowCovering {
    edge_count: usize,
    blocks: Vec<EdgeSubset>,
}

impl RowCovering {
    /// Unvalidated constructor; see [`validate`].
    pub fn new(edge_count: usize, blocks: Vec<EdgeSubset>) -> Self {
        RowCovering { edge_count, blocks }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn blocks(&self) -> &[EdgeSubset] {
        &self.blocks
    }

    pub fn block(&self, idx: usize) -> &EdgeSubset {
        &self.blocks[idx]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of blocks containing each edge.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.edge_count];
        for block in &self.blocks {
            for &id in block.ids() {
                if let Some(c) = counts.get_mut(id) {
                    *c += 1;
                }
            }
        }
        counts
    }

    /// Writes `m d`, then one line of space-separated edge ids per block.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = String::new();
        let _ = writeln!(buf, "{} {}", self.edge_count, self.blocks.len());
        for block in &self.blocks {
            let mut first = true;
            for id in block.ids() {
                if !first {
                    buf.push(' ');
                }
                first = false;
                let _ = write!(buf, "{id}");
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(idx, line)| (idx + 1, line));
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "missing header".into(),
                    })
                }
            }
        };
        let head = parse_ids(&header, 1)?;
        let [m, d] = head[..] else {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected `m d`, got {header:?}"),
            });
        };
        let mut blocks = Vec::with_capacity(d);
        for (line_no, line) in lines {
            let line = line?;
            if blocks.len() == d {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("more than {d} blocks"),
                });
            }
            blocks.push(EdgeSubset::new(parse_ids(&line, line_no)?));
        }
        if blocks.len() != d {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {d} blocks, found {}", blocks.len()),
            });
        }
        Ok(RowCovering::new(m, blocks))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_to(io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        RowCovering::read_from(io::BufReader::new(file))
    }
}

fn parse_ids(line: &str, line_no: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("{tok:?}: {e}"),
            })
        })
        .collect()
}

/// The `(d, α, β, r, R)` constants of a covering, plus the largest block
/// size `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringConstants {
    #[serde(rename = "d")]
    pub block_count: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "r")]
    pub min_multiplicity: usize,
    #[serde(rename = "R")]
    pub max_multiplicity: usize,
    #[serde(rename = "M")]
    pub max_block_size: usize,
}

/// Checks that every block is nonempty and every edge is covered.
pub fn validate(c: &RowCovering) -> Result<()> {
    if let Some(idx) = c.blocks.iter().position(EdgeSubset::is_empty) {
        return Err(Error::EmptyBlock(idx));
    }
    for block in &c.blocks {
        if let Some(&id) = block.ids().last() {
            if id >= c.edge_count {
                return Err(Error::EdgeOutOfRange {
                    id,
                    edge_count: c.edge_count,
                });
            }
        }
    }
    if let Some(id) = c.multiplicities().iter().position(|&k| k == 0) {
        return Err(Error::UncoveredEdge(id));
    }
    Ok(())
}

fn validate_for(c: &RowCovering, g: &Graph) -> Result<()> {
    if c.edge_count != g.edge_count() {
        return Err(Error::DimensionMismatch(format!(
            "covering is over {} edges, graph has {}",
            c.edge_count,
            g.edge_count()
        )));
    }
    validate(c)
}

/// Nonzero spectral range `(λ_min+, λ_max)` of `Q_τQ_τᵀ`, computed per
/// connected component of the block.
pub fn block_spectrum_range(g: &Graph, block: &EdgeSubset) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for component in graph::connected_components(g, block)? {
        let edges: EdgeSubset = block
            .ids()
            .iter()
            .copied()
            .filter(|&id| component.binary_search(&g.edge(id).0).is_ok())
            .collect();
        let local = graph::local_laplacian(g, &edges, &component);
        let spectrum = linalg::symmetric_eigenvalues(&local)?;
        let top = *spectrum.last().expect("component has at least two nodes");
        lo = lo.min(linalg::min_nonzero(&spectrum, top)?);
        hi = hi.max(top);
    }
    if hi == 0.0 {
        return Err(Error::RankZero);
    }
    Ok((lo, hi))
}

fn constants_from_blocks<'a>(
    g: &Graph,
    blocks: impl Iterator<Item = &'a EdgeSubset>,
    block_count: usize,
    multiplicities: &[usize],
) -> Result<CoveringConstants> {
    let mut alpha = f64::INFINITY;
    let mut beta = 0.0f64;
    let mut max_block_size = 0;
    for block in blocks {
        let (lo, hi) = block_spectrum_range(g, block)?;
        alpha = alpha.min(lo);
        beta = beta.max(hi);
        max_block_size = max_block_size.max(block.len());
    }
    Ok(CoveringConstants {
        block_count,
        alpha,
        beta,
        min_multiplicity: multiplicities.iter().copied().min().unwrap_or(0),
        max_multiplicity: multiplicities.iter().copied().max().unwrap_or(0),
        max_block_size,
    })
}

/// Covering constants; `α`/`β` are the extreme nonzero eigenvalues over all
/// block Gram matrices.
pub fn constants(c: &RowCovering, g: &Graph) -> Result<CoveringConstants> {
    validate_for(c, g)?;
    constants_from_blocks(g, c.blocks.iter(), c.len(), &c.multiplicities())
}

/// Constants after replacing every block by its spanning forest.
///
/// A block and its spanning forest produce the same consistent gossip update,
/// so `α`, `β` and `M` are taken from the forests while `d`, `r` and `R` stay
/// those of the original covering (the forests alone need not cover every
/// edge). Only meaningful for consistent gossip; noisy updates differ
/// between a block and its forest.
pub fn spanning_constants(c: &RowCovering, g: &Graph) -> Result<CoveringConstants> {
    validate_for(c, g)?;
    let reduced = reduce_to_spanning_forests(c, g)?;
    constants_from_blocks(g, reduced.blocks.iter(), c.len(), &c.multiplicities())
}

fn require_edges(g: &Graph) -> Result<()> {
    if g.edge_count() == 0 {
        Err(Error::EdgelessGraph)
    } else {
        Ok(())
    }
}

/// Partitions the edges into matchings: repeatedly take a greedy maximal
/// matching of the remaining edges in ascending id order.
pub fn greedy_ies_cover(g: &Graph) -> Result<RowCovering> {
    require_edges(g)?;
    let mut remaining: Vec<usize> = (0..g.edge_count()).collect();
    let mut blocks = Vec::new();
    let mut matched = vec![false; g.node_count()];
    while !remaining.is_empty() {
        matched.fill(false);
        let mut block = Vec::new();
        remaining.retain(|&id| {
            let (i, j) = g.edge(id);
            if matched[i] || matched[j] {
                return true;
            }
            matched[i] = true;
            matched[j] = true;
            block.push(id);
            false
        });
        blocks.push(EdgeSubset::new(block));
    }
    Ok(RowCovering::new(g.edge_count(), blocks))
}

/// Partitions the edges into cliques. Each clique is seeded at the lowest-id
/// uncovered edge and grown by the lowest-id node joined to every current
/// member through uncovered edges.
pub fn greedy_clique_cover(g: &Graph) -> Result<RowCovering> {
    require_edges(g)?;
    let mut covered = vec![false; g.edge_count()];
    let mut blocks = Vec::new();
    let uncovered_neighbors = |node: usize, covered: &[bool]| -> BTreeSet<usize> {
        g.neighbors(node)
            .iter()
            .filter(|&&(_, id)| !covered[id])
            .map(|&(nb, _)| nb)
            .collect()
    };
    let mut next_seed = 0;
    while next_seed < g.edge_count() {
        if covered[next_seed] {
            next_seed += 1;
            continue;
        }
        let (u, v) = g.edge(next_seed);
        let mut members = vec![u, v];
        let mut candidates: BTreeSet<usize> = uncovered_neighbors(u, &covered)
            .intersection(&uncovered_neighbors(v, &covered))
            .copied()
            .collect();
        while let Some(&w) = candidates.iter().next() {
            members.push(w);
            let reach = uncovered_neighbors(w, &covered);
            candidates = candidates.intersection(&reach).copied().collect();
        }
        let mut block = Vec::with_capacity(members.len() * (members.len() - 1) / 2);
        for (a, &x) in members.iter().enumerate() {
            for &y in &members[a + 1..] {
                let id = g.edge_between(x, y).expect("clique members are adjacent");
                block.push(id);
            }
        }
        for &id in &block {
            covered[id] = true;
        }
        blocks.push(EdgeSubset::new(block));
    }
    Ok(RowCovering::new(g.edge_count(), blocks))
}

/// Appends a singleton block for every edge no block covers yet.
fn patch_uncovered(edge_count: usize, mut blocks: Vec<EdgeSubset>) -> RowCovering {
    let mut seen = vec![false; edge_count];
    for block in &blocks {
        for &id in block.ids() {
            seen[id] = true;
        }
    }
    blocks.extend(
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(id, _)| EdgeSubset::new(vec![id])),
    );
    RowCovering::new(edge_count, blocks)
}

/// `count` self-avoiding random walks of up to `length` edges, each started
/// at a uniform node and extended by uniform unvisited neighbours. Walks
/// that get stuck are kept short. Uncovered edges are patched with
/// singleton blocks.
pub fn random_path_cover(g: &Graph, length: usize, count: usize, seed: u64) -> Result<RowCovering> {
    require_edges(g)?;
    if length == 0 || count == 0 {
        return Err(Error::InvalidParameter("path length and count must be positive".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected {
            components: graph::connected_components(g, &g.all_edges())?.len(),
        });
    }
    let mut rng = rng::stream(seed, Stream::Covering);
    let mut visited = vec![false; g.node_count()];
    let mut blocks = Vec::with_capacity(count);
    let mut open: Vec<(usize, usize)> = Vec::new();
    while blocks.len() < count {
        let start = rng.random_range(0..g.node_count());
        let mut path_nodes = vec![start];
        let mut edges = Vec::with_capacity(length);
        visited[start] = true;
        let mut current = start;
        while edges.len() < length {
            open.clear();
            open.extend(g.neighbors(current).iter().filter(|&&(nb, _)| !visited[nb]));
            if open.is_empty() {
                break;
            }
            let (next, id) = open[rng.random_range(0..open.len())];
            visited[next] = true;
            path_nodes.push(next);
            edges.push(id);
            current = next;
        }
        for node in path_nodes {
            visited[node] = false;
        }
        blocks.push(EdgeSubset::new(edges));
    }
    Ok(patch_uncovered(g.edge_count(), blocks))
}

/// `count` blocks of `size` distinct uniformly sampled edges, patched with
/// singleton blocks for any edge left uncovered.
pub fn random_block_cover(g: &Graph, size: usize, count: usize, seed: u64) -> Result<RowCovering> {
    require_edges(g)?;
    if size == 0 || size > g.edge_count() || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "block size must lie in [1, {}] and count must be positive",
            g.edge_count()
        )));
    }
    let mut rng = rng::stream(seed, Stream::Covering);
    let blocks = (0..count)
        .map(|_| EdgeSubset::new(index::sample(&mut rng, g.edge_count(), size).into_vec()))
        .collect();
    Ok(patch_uncovered(g.edge_count(), blocks))
}

/// Union of blocks whose touched node sets are pairwise disjoint.
pub fn merge_disjoint(blocks: &[EdgeSubset], g: &Graph) -> Result<EdgeSubset> {
    let mut owner = vec![usize::MAX; g.node_count()];
    for (idx, block) in blocks.iter().enumerate() {
        g.check_subset(block)?;
        for node in g.touched_nodes(block) {
            if owner[node] != usize::MAX {
                return Err(Error::OverlappingBlocks {
                    first: owner[node],
                    second: idx,
                    node,
                });
            }
            owner[node] = idx;
        }
    }
    Ok(blocks.iter().flat_map(|b| b.ids().iter().copied()).collect())
}

/// Replaces every block by its spanning forest. The result is generally not
/// a covering and is never re-validated.
pub fn reduce_to_spanning_forests(c: &RowCovering, g: &Graph) -> Result<RowCovering> {
    let blocks = c
        .blocks
        .iter()
        .map(|b| graph::spanning_forest(g, b))
        .collect::<Result<_>>()?;
    Ok(RowCovering::new(c.edge_count, blocks))
}
