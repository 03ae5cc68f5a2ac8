//! Undirected graphs, synthetic generators, incidence and Laplacian matrices,
//! and the structural queries block gossip needs (components of an
//! edge-induced subgraph, spanning forests, algebraic connectivity).
//!
//! Edge ids are positions in [`Graph::edges`]; incidence row `l` belongs to
//! edge `l`. Generators emit edges sorted by `(i, j)` so ids are reproducible.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::{fs, io};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, Stream};

pub type Edge = (usize, usize);

/// Simple undirected graph with a stable edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    // (neighbour, edge id), ascending by neighbour
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph, normalising every pair to `(min, max)`.
    ///
    /// Rejects self-loops, duplicate edges and out-of-range endpoints.
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalised = Vec::with_capacity(edges.len());
        for (id, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(Error::InvalidGraph(format!("edge {id} is a self-loop on node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} = ({a}, {b}) references a node outside [0, {node_count})"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) appears twice")));
            }
            normalised.push((i, j));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for (id, &(i, j)) in normalised.iter().enumerate() {
            adjacency[i].push((j, id));
            adjacency[j].push((i, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            node_count,
            edges: normalised,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    /// `(neighbour, edge id)` pairs of `node`, ascending by neighbour.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Id of the edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(nb, _)| nb).ok().map(|pos| list[pos].1)
    }

    /// Every edge id, as a subset.
    pub fn all_edges(&self) -> EdgeSubset {
        EdgeSubset((0..self.edges.len()).collect())
    }

    /// Checks that every id in `subset` is a valid edge id.
    pub fn check_subset(&self, subset: &EdgeSubset) -> Result<()> {
        match subset.ids().last() {
            Some(&id) if id >= self.edges.len() => Err(Error::EdgeOutOfRange {
                id,
                edge_count: self.edges.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Nodes touched by the edges of `subset`, ascending.
    pub fn touched_nodes(&self, subset: &EdgeSubset) -> Vec<usize> {
        let mut nodes: Vec<usize> = subset
            .ids()
            .iter()
            .flat_map(|&id| {
                let (i, j) = self.edges[id];
                [i, j]
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn is_connected(&self) -> bool {
        self.node_count == 1 || component_count(self) == 1
    }

    /// Writes the plain-text edge list: `n m`, then one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = String::with_capacity(16 * (self.edges.len() + 1));
        let _ = writeln!(buf, "{} {}", self.node_count, self.edges.len());
        for &(i, j) in &self.edges {
            let _ = writeln!(buf, "{i} {j}");
        }
        out.write_all(buf.as_bytes())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(idx, line)| (idx + 1, line))
            .filter(|(_, line)| line.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let [n, m] = parse_pair(&header?, line_no)?;
        let mut edges = Vec::with_capacity(m);
        for (line_no, line) in lines {
            edges.push(parse_pair(&line?, line_no).map(|[i, j]| (i, j))?);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_edge_list(io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        Graph::read_edge_list(io::BufReader::new(file))
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<[usize; 2]> {
    let parse_err = |message: String| Error::Parse { line: line_no, message };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(format!("expected two integers, got {line:?}")));
    }
    let a = fields[0]
        .parse()
        .map_err(|e| parse_err(format!("{:?}: {e}", fields[0])))?;
    let b = fields[1]
        .parse()
        .map_err(|e| parse_err(format!("{:?}: {e}", fields[1])))?;
    Ok([a, b])
}

/// Sorted, deduplicated set of edge ids. Serves both as a covering block and
/// as the selector of an edge-induced subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EdgeSubset(Vec<usize>);

impl EdgeSubset {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        EdgeSubset(ids)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }
}

impl FromIterator<usize> for EdgeSubset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        EdgeSubset::new(iter.into_iter().collect())
    }
}

/// Edge-node incidence matrix with entries in `{-1, 0, 1}`.
///
/// Row `l` has `+1` at the smaller endpoint of edge `l` and `-1` at the larger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| f64::from(self.get(r, c)))
    }

    /// `Q_τ Q_τᵀ` in exact integer arithmetic, row-major `|τ| × |τ|`.
    pub fn block_gram(&self, block: &EdgeSubset) -> Vec<i64> {
        let ids = block.ids();
        let k = ids.len();
        let mut gram = vec![0i64; k * k];
        for (a, &ra) in ids.iter().enumerate() {
            for (b, &rb) in ids.iter().enumerate() {
                gram[a * k + b] = self
                    .row(ra)
                    .iter()
                    .zip(self.row(rb))
                    .map(|(&x, &y)| i64::from(x) * i64::from(y))
                    .sum();
            }
        }
        gram
    }

    /// `QᵀQ` in exact integer arithmetic, row-major `n × n`.
    pub fn normal_product(&self) -> Vec<i64> {
        let n = self.cols;
        let mut out = vec![0i64; n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            let nz: Vec<usize> = (0..n).filter(|&c| row[c] != 0).collect();
            for &a in &nz {
                for &b in &nz {
                    out[a * n + b] += i64::from(row[a]) * i64::from(row[b]);
                }
            }
        }
        out
    }
}

pub fn incidence_matrix(g: &Graph) -> IncidenceMatrix {
    let (rows, cols) = (g.edge_count(), g.node_count());
    let mut data = vec![0i8; rows * cols];
    for (l, &(i, j)) in g.edges().iter().enumerate() {
        data[l * cols + i] = 1;
        data[l * cols + j] = -1;
    }
    IncidenceMatrix { rows, cols, data }
}

/// Dense Laplacian `L = D − A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

/// Laplacian of the subgraph induced by `subset`, restricted to the nodes it
/// touches (in the order of `nodes`, which must contain every touched node).
pub(crate) fn local_laplacian(g: &Graph, subset: &EdgeSubset, nodes: &[usize]) -> DMatrix<f64> {
    let k = nodes.len();
    let local = |node: usize| nodes.binary_search(&node).expect("node outside local index");
    let mut l = DMatrix::zeros(k, k);
    for &id in subset.ids() {
        let (i, j) = g.edge(id);
        let (a, b) = (local(i), local(j));
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
        l[(a, b)] -= 1.0;
        l[(b, a)] -= 1.0;
    }
    l
}

/// Union-find over node indices with path halving.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

fn component_count(g: &Graph) -> usize {
    let mut sets = DisjointSets::new(g.node_count());
    let mut count = g.node_count();
    for &(i, j) in g.edges() {
        if sets.union(i, j) {
            count -= 1;
        }
    }
    count
}

/// Connected components of the subgraph induced by `subset`.
///
/// Only nodes touched by the subset appear. Each component is ascending and
/// components are ordered by their smallest node.
pub fn connected_components(g: &Graph, subset: &EdgeSubset) -> Result<Vec<Vec<usize>>> {
    g.check_subset(subset)?;
    let nodes = g.touched_nodes(subset);
    let local = |node: usize| nodes.binary_search(&node).unwrap();
    let mut sets = DisjointSets::new(nodes.len());
    for &id in subset.ids() {
        let (i, j) = g.edge(id);
        sets.union(local(i), local(j));
    }
    let mut root_slot = vec![usize::MAX; nodes.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for (idx, &node) in nodes.iter().enumerate() {
        let root = sets.find(idx);
        if root_slot[root] == usize::MAX {
            root_slot[root] = components.len();
            components.push(Vec::new());
        }
        components[root_slot[root]].push(node);
    }
    Ok(components)
}

/// Spanning forest of the subgraph induced by `subset`, built by depth-first
/// search that starts at the lowest unvisited node and always steps to the
/// lowest unvisited neighbour. On a clique component the tree is a
/// Hamiltonian path.
pub fn spanning_forest(g: &Graph, subset: &EdgeSubset) -> Result<EdgeSubset> {
    g.check_subset(subset)?;
    let mut local: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.node_count()];
    for &id in subset.ids() {
        let (i, j) = g.edge(id);
        local[i].push((j, id));
        local[j].push((i, id));
    }
    for list in &mut local {
        list.sort_unstable();
    }
    let mut visited = vec![false; g.node_count()];
    let mut next = vec![0usize; g.node_count()];
    let mut kept = Vec::new();
    let mut stack = Vec::new();
    for root in 0..g.node_count() {
        if visited[root] || local[root].is_empty() {
            continue;
        }
        visited[root] = true;
        stack.push(root);
        while let Some(&node) = stack.last() {
            match local[node][next[node]..].iter().position(|&(nb, _)| !visited[nb]) {
                Some(offset) => {
                    next[node] += offset + 1;
                    let (nb, id) = local[node][next[node] - 1];
                    visited[nb] = true;
                    kept.push(id);
                    stack.push(nb);
                }
                None => {
                    next[node] = local[node].len();
                    stack.pop();
                }
            }
        }
    }
    Ok(EdgeSubset::new(kept))
}

/// Smallest nonzero Laplacian eigenvalue `α(G)`.
///
/// Fails for disconnected graphs and for the single-node graph, whose
/// Laplacian has no nonzero eigenvalue.
pub fn algebraic_connectivity(g: &Graph) -> Result<f64> {
    let components = component_count(g);
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let spectrum = linalg::symmetric_eigenvalues(&laplacian(g))?;
    let scale = spectrum.last().copied().unwrap_or(0.0).abs();
    linalg::min_nonzero(&spectrum, scale)
}

pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
    }
    let mut rng = rng::stream(seed, Stream::Graph);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges)
}

/// `rows × cols` grid; node `(r, c)` has index `r * cols + c`.
pub fn generate_square_lattice(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("lattice dimensions must be positive".into()));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    edges.sort_unstable();
    Graph::new(rows * cols, edges)
}

pub fn generate_complete(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    Graph::new(n, edges)
}

pub fn generate_path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Graph::new(n, (1..n).map(|j| (j - 1, j)).collect())
}
