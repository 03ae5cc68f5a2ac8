//! Block gossip protocols for average consensus and the block randomized
//! Kaczmarz solver underneath them.
//!
//! A block gossip step picks a set of edges from a row covering of the
//! graph's incidence matrix and lets every connected component of the
//! induced subgraph average its values. With `A = Q`, `b = 0` and
//! `x0 = c` this is exactly a block Kaczmarz projection, so every rate and
//! noise horizon for the solver transfers to the protocol.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | graphs, generators, incidence/Laplacian, components, algebraic connectivity |
//! | [`linalg`] | symmetric eigenvalues, numerical rank, min-norm least squares |
//! | [`covering`] | row coverings, their `(d, α, β, r, R)` constants, greedy/random constructions |
//! | [`kaczmarz`] | block randomized Kaczmarz, theoretical rate and horizon |
//! | [`gossip`] | block gossip runs under consistent / constant / varying edge noise |
//! | [`harness`] | experiment configs, multi-trial runs, CSV/JSON outputs |

// `!(x >= 0.0)` is deliberate: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covering;
pub mod error;
pub mod gossip;
pub mod graph;
pub mod harness;
pub mod kaczmarz;
pub mod linalg;
pub mod rng;
mod stats;

pub use covering::{CoveringConstants, RowCovering};
pub use error::{Error, Result};
pub use gossip::{ConsensusProblem, GossipTrajectory, NoiseModel};
pub use graph::{EdgeSubset, Graph, IncidenceMatrix};
pub use kaczmarz::{BkState, LinearSystem};
