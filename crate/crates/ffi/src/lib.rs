//! C ABI over `block_gossip`.
//!
//! Graphs and coverings are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`BgStatus`]; on failure the
//! message is available from [`bg_last_error`] on the same thread until the
//! next failing call. Panics are caught at the boundary and reported as
//! [`BgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::slice;

use block_gossip::covering::{self, CoveringConstants, RowCovering};
use block_gossip::gossip::{self, ConsensusProblem, NoiseModel};
use block_gossip::graph::{self, Graph};
use block_gossip::kaczmarz::{self, BkOptions, LinearSystem};
use block_gossip::linalg::{DenseMatrix, Vector};
use block_gossip::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidGraph = 3,
    Disconnected = 4,
    InvalidCovering = 5,
    DimensionMismatch = 6,
    Numerical = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
}

/// Edge noise model for [`bg_gossip_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgNoiseKind {
    Consistent = 0,
    /// `noise` holds the fixed per-edge error `m`.
    ConstantEdge = 1,
    /// `noise` holds per-edge standard deviations.
    VaryingEdge = 2,
}

/// Covering constants `(d, α, β, r, R, M)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgConstants {
    pub block_count: usize,
    pub alpha: f64,
    pub beta: f64,
    pub min_multiplicity: usize,
    pub max_multiplicity: usize,
    pub max_block_size: usize,
}

impl From<CoveringConstants> for BgConstants {
    fn from(k: CoveringConstants) -> Self {
        BgConstants {
            block_count: k.block_count,
            alpha: k.alpha,
            beta: k.beta,
            min_multiplicity: k.min_multiplicity,
            max_multiplicity: k.max_multiplicity,
            max_block_size: k.max_block_size,
        }
    }
}

/// Opaque graph handle.
pub struct BgGraph(Graph);

/// Opaque row covering handle.
pub struct BgCovering(RowCovering);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|&b| b != 0);
    let text = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn status_of(e: &Error) -> BgStatus {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::OutOfRange { .. } => BgStatus::InvalidParameter,
        Error::InvalidGraph(_) | Error::EdgelessGraph | Error::EdgeOutOfRange { .. } => BgStatus::InvalidGraph,
        Error::Disconnected { .. } => BgStatus::Disconnected,
        Error::UncoveredEdge(_) | Error::EmptyBlock(_) | Error::OverlappingBlocks { .. } => BgStatus::InvalidCovering,
        Error::DimensionMismatch(_) => BgStatus::DimensionMismatch,
        Error::NotSquareSymmetric(_) | Error::RankZero => BgStatus::Numerical,
        Error::Io(_) => BgStatus::Io,
        Error::Parse { .. } | Error::Json(_) => BgStatus::Parse,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), BgStatus>) -> BgStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BgStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {message}"));
            BgStatus::Panic
        }
    }
}

fn check<T>(r: block_gossip::Result<T>) -> Result<T, BgStatus> {
    r.map_err(|e| {
        set_last_error(e.to_string());
        status_of(&e)
    })
}

fn null(name: &str) -> BgStatus {
    set_last_error(format!("{name} is null"));
    BgStatus::NullPointer
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, BgStatus> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], BgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], BgStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, BgStatus> {
    if p.is_null() {
        return Err(null("path"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(e) => {
            set_last_error(format!("path is not UTF-8: {e}"));
            Err(BgStatus::InvalidParameter)
        }
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), BgStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn bg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Seeded Erdős–Rényi graph `G(n, p)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_erdos_renyi(n: usize, p: f64, seed: u64, out: *mut *mut BgGraph) -> BgStatus {
    guard(|| emit(out, BgGraph(check(graph::generate_erdos_renyi(n, p, seed))?)))
}

/// `rows × cols` grid graph.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_lattice(rows: usize, cols: usize, out: *mut *mut BgGraph) -> BgStatus {
    guard(|| emit(out, BgGraph(check(graph::generate_square_lattice(rows, cols))?)))
}

/// Complete graph `K_n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_complete(n: usize, out: *mut *mut BgGraph) -> BgStatus {
    guard(|| emit(out, BgGraph(check(graph::generate_complete(n))?)))
}

/// Path graph `P_n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_path(n: usize, out: *mut *mut BgGraph) -> BgStatus {
    guard(|| emit(out, BgGraph(check(graph::generate_path(n))?)))
}

/// Graph from `edge_count` node pairs stored as `endpoints[2k], endpoints[2k+1]`.
///
/// # Safety
/// `endpoints` must point to `2 * edge_count` readable values and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_from_edges(
    node_count: usize,
    endpoints: *const usize,
    edge_count: usize,
    out: *mut *mut BgGraph,
) -> BgStatus {
    guard(|| {
        let pairs = if edge_count == 0 {
            &[][..]
        } else if endpoints.is_null() {
            return Err(null("endpoints"));
        } else {
            slice::from_raw_parts(endpoints, 2 * edge_count)
        };
        let edges = pairs.chunks_exact(2).map(|e| (e[0], e[1])).collect();
        emit(out, BgGraph(check(Graph::new(node_count, edges))?))
    })
}

/// Reads an edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_load(path: *const c_char, out: *mut *mut BgGraph) -> BgStatus {
    guard(|| emit(out, BgGraph(check(Graph::load(path_arg(path)?))?)))
}

/// Writes an edge-list file.
///
/// # Safety
/// `graph` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_save(graph: *const BgGraph, path: *const c_char) -> BgStatus {
    guard(|| check(borrow(graph, "graph")?.0.save(path_arg(path)?)))
}

/// Releases a graph; null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_free(graph: *mut BgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Node count, or 0 for null.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_node_count(graph: *const BgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// Edge count, or 0 for null.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_edge_count(graph: *const BgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Second-smallest Laplacian eigenvalue of a connected graph.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for one `double`.
#[no_mangle]
pub unsafe extern "C" fn bg_graph_algebraic_connectivity(graph: *const BgGraph, out: *mut f64) -> BgStatus {
    guard(|| {
        let value = check(graph::algebraic_connectivity(&borrow(graph, "graph")?.0))?;
        *out.as_mut().ok_or_else(|| null("out"))? = value;
        Ok(())
    })
}

/// Greedy partition into independent edge sets.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_ies(graph: *const BgGraph, out: *mut *mut BgCovering) -> BgStatus {
    guard(|| {
        let c = check(covering::greedy_ies_cover(&borrow(graph, "graph")?.0))?;
        emit(out, BgCovering(c))
    })
}

/// Greedy partition into cliques.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_clique(graph: *const BgGraph, out: *mut *mut BgCovering) -> BgStatus {
    guard(|| {
        let c = check(covering::greedy_clique_cover(&borrow(graph, "graph")?.0))?;
        emit(out, BgCovering(c))
    })
}

/// `count` random simple paths of up to `length` edges, patched to cover
/// every edge.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_random_paths(
    graph: *const BgGraph,
    length: usize,
    count: usize,
    seed: u64,
    out: *mut *mut BgCovering,
) -> BgStatus {
    guard(|| {
        let c = check(covering::random_path_cover(
            &borrow(graph, "graph")?.0,
            length,
            count,
            seed,
        ))?;
        emit(out, BgCovering(c))
    })
}

/// `count` random edge sets of `size` edges, patched to cover every edge.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_random_blocks(
    graph: *const BgGraph,
    size: usize,
    count: usize,
    seed: u64,
    out: *mut *mut BgCovering,
) -> BgStatus {
    guard(|| {
        let c = check(covering::random_block_cover(
            &borrow(graph, "graph")?.0,
            size,
            count,
            seed,
        ))?;
        emit(out, BgCovering(c))
    })
}

/// Covering of `row_count` rows from `block_count` blocks. Block `k` holds
/// `ids[offsets[k] .. offsets[k + 1]]`, so `offsets` has `block_count + 1`
/// entries.
///
/// # Safety
/// `offsets` must point to `block_count + 1` values and `ids` to
/// `offsets[block_count]` values; `out` must be valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_from_blocks(
    row_count: usize,
    offsets: *const usize,
    block_count: usize,
    ids: *const usize,
    out: *mut *mut BgCovering,
) -> BgStatus {
    guard(|| {
        if offsets.is_null() {
            return Err(null("offsets"));
        }
        let offsets = slice::from_raw_parts(offsets, block_count + 1);
        let total = offsets[block_count];
        if offsets.windows(2).any(|w| w[0] > w[1]) || offsets[0] != 0 {
            set_last_error("offsets must start at 0 and be nondecreasing");
            return Err(BgStatus::InvalidParameter);
        }
        let ids = if total == 0 {
            &[][..]
        } else if ids.is_null() {
            return Err(null("ids"));
        } else {
            slice::from_raw_parts(ids, total)
        };
        let blocks = offsets
            .windows(2)
            .map(|w| ids[w[0]..w[1]].iter().copied().collect())
            .collect();
        let c = RowCovering::new(row_count, blocks);
        check(covering::validate(&c))?;
        emit(out, BgCovering(c))
    })
}

/// Reads a covering file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_load(path: *const c_char, out: *mut *mut BgCovering) -> BgStatus {
    guard(|| emit(out, BgCovering(check(RowCovering::load(path_arg(path)?))?)))
}

/// Writes a covering file.
///
/// # Safety
/// `c` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_save(c: *const BgCovering, path: *const c_char) -> BgStatus {
    guard(|| check(borrow(c, "covering")?.0.save(path_arg(path)?)))
}

/// Releases a covering; null is ignored.
///
/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_free(c: *mut BgCovering) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of blocks, or 0 for null.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_block_count(c: *const BgCovering) -> usize {
    c.as_ref().map_or(0, |c| c.0.len())
}

/// Constants of a covering of `graph`'s edges.
///
/// # Safety
/// `c` and `graph` must be live handles and `out` valid for one struct.
#[no_mangle]
pub unsafe extern "C" fn bg_covering_constants(
    c: *const BgCovering,
    graph: *const BgGraph,
    out: *mut BgConstants,
) -> BgStatus {
    guard(|| {
        let k = check(covering::constants(
            &borrow(c, "covering")?.0,
            &borrow(graph, "graph")?.0,
        ))?;
        *out.as_mut().ok_or_else(|| null("out"))? = k.into();
        Ok(())
    })
}

/// Expected per-iteration contraction `1 − r·α(G)/(β·d)` of the squared
/// gossip error.
///
/// # Safety
/// `c` and `graph` must be live handles and `out` valid for one `double`.
#[no_mangle]
pub unsafe extern "C" fn bg_gossip_rate_bound(c: *const BgCovering, graph: *const BgGraph, out: *mut f64) -> BgStatus {
    guard(|| {
        let g = &borrow(graph, "graph")?.0;
        let k = check(covering::constants(&borrow(c, "covering")?.0, g))?;
        let rate = check(gossip::gossip_rate_bound(&k, g))?;
        *out.as_mut().ok_or_else(|| null("out"))? = rate;
        Ok(())
    })
}

/// Runs `iterations` block gossip steps from `values` (length node count)
/// and writes `‖c_k − c*‖` for `k = 0 … iterations` into `errors`. When
/// `final_values` is non-null it receives `c_iterations`. `noise` holds one
/// value per edge and may be null for [`BgNoiseKind::Consistent`].
///
/// # Safety
/// Handles must be live; `values` and (if non-null) `final_values` must
/// hold node-count entries, `noise` edge-count entries, and `errors`
/// `iterations + 1` entries.
#[no_mangle]
pub unsafe extern "C" fn bg_gossip_run(
    graph: *const BgGraph,
    c: *const BgCovering,
    values: *const f64,
    noise_kind: BgNoiseKind,
    noise: *const f64,
    iterations: usize,
    seed: u64,
    errors: *mut f64,
    final_values: *mut f64,
) -> BgStatus {
    guard(|| {
        let g = &borrow(graph, "graph")?.0;
        let cov = &borrow(c, "covering")?.0;
        let (n, m) = (g.node_count(), g.edge_count());
        let c0 = Vector::from_column_slice(input(values, n, "values")?);
        let model = match noise_kind {
            BgNoiseKind::Consistent => NoiseModel::Consistent,
            BgNoiseKind::ConstantEdge => NoiseModel::ConstantEdgeError {
                m: input(noise, m, "noise")?.to_vec(),
            },
            BgNoiseKind::VaryingEdge => NoiseModel::VaryingEdgeError {
                std: input(noise, m, "noise")?.to_vec(),
            },
        };
        let errors = output(errors, iterations + 1, "errors")?;
        let problem = check(ConsensusProblem::new(g.clone(), c0))?;
        let record = !final_values.is_null();
        let run = check(gossip::run(&problem, cov, &model, iterations, seed, record))?;
        errors.copy_from_slice(&run.errors);
        if let Some(last) = run.values.last() {
            output(final_values, n, "final_values")?.copy_from_slice(last.as_slice());
        }
        Ok(())
    })
}

/// Block Kaczmarz on `A x = b` with `A` given row-major (`rows × cols`) and
/// a covering of its rows. Writes `‖x_k − x*‖` for `k = 0 … iterations` into
/// `errors` (may be null) and the final iterate into `x_out`, where
/// `x* = (I − A†A)x₀ + A†b̂` and `b̂` is the projection of `b` onto the
/// range of `A`.
///
/// # Safety
/// `a` must hold `rows * cols` entries, `b` `rows`, `x0` and `x_out`
/// `cols`, and `errors` (if non-null) `iterations + 1`; `c` must be live.
#[no_mangle]
pub unsafe extern "C" fn bg_kaczmarz_run(
    a: *const f64,
    rows: usize,
    cols: usize,
    b: *const f64,
    x0: *const f64,
    c: *const BgCovering,
    iterations: usize,
    seed: u64,
    x_out: *mut f64,
    errors: *mut f64,
) -> BgStatus {
    guard(|| {
        let a = DenseMatrix::from_row_slice(rows, cols, input(a, rows * cols, "a")?);
        let b = Vector::from_column_slice(input(b, rows, "b")?);
        let x0 = Vector::from_column_slice(input(x0, cols, "x0")?);
        let cov = &borrow(c, "covering")?.0;
        let sys = check(LinearSystem::new(a, b))?;
        let options = BkOptions {
            iterations,
            seed,
            record_iterates: false,
        };
        let run = check(kaczmarz::bk_run(&sys, cov, &x0, options, None, None))?;
        output(x_out, cols, "x_out")?.copy_from_slice(run.final_x.as_slice());
        if !errors.is_null() {
            output(errors, iterations + 1, "errors")?.copy_from_slice(&run.errors);
        }
        Ok(())
    })
}
