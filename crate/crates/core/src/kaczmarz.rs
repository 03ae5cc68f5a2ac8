//! Block randomized Kaczmarz for rectangular, possibly rank-deficient and
//! possibly inconsistent systems.
//!
//! Each step draws a block `τ` uniformly from a row covering and sets
//! `x ← x + A_τ†(b_τ − A_τx)`. Iterates converge linearly in expectation to
//! `x* = (I − A†A)x₀ + A†(b + e)` up to a horizon proportional to `‖e‖²`
//! (or `tr Σ` when the right-hand side is redrawn every iteration).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::covering::{self, CoveringConstants, RowCovering};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, Vector};
use crate::rng::{self, SimRng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DenseMatrix,
    b: Vector,
}

impl LinearSystem {
    pub fn new(a: DenseMatrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}×{}, b has {} entries",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("system has non-finite entries".into()));
        }
        Ok(LinearSystem { a, b })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Minimum-norm residual `e* = AA†b − b`.
    pub fn min_norm_residual(&self) -> Result<Vector> {
        let x_ls = linalg::min_norm_lstsq(&self.a, &self.b)?;
        Ok(&self.a * x_ls - &self.b)
    }

    /// `x* = (I − A†A)x₀ + A†(b + e)`; `e` defaults to the minimum-norm
    /// residual.
    pub fn solution_target(&self, x0: &Vector, residual: Option<&Vector>) -> Result<Vector> {
        self.check_iterate(x0)?;
        let shifted = match residual {
            Some(e) if e.len() != self.rows() => {
                return Err(Error::DimensionMismatch(
                    "residual length differs from row count".into(),
                ))
            }
            Some(e) => &self.b + e,
            None => &self.a * linalg::min_norm_lstsq(&self.a, &self.b)?,
        };
        Ok(x0 - linalg::min_norm_lstsq(&self.a, &(&self.a * x0 - shifted))?)
    }

    fn check_iterate(&self, x: &Vector) -> Result<()> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "iterate has {} entries, system has {} columns",
                x.len(),
                self.cols()
            )));
        }
        Ok(())
    }

    fn check_block(&self, block: &[usize]) -> Result<()> {
        if block.is_empty() {
            return Err(Error::InvalidParameter("block is empty".into()));
        }
        match block.iter().find(|&&r| r >= self.rows()) {
            Some(&id) => Err(Error::EdgeOutOfRange {
                id,
                edge_count: self.rows(),
            }),
            None => Ok(()),
        }
    }
}

/// Kaczmarz iterate plus the block-sampling stream that drives it.
#[derive(Debug, Clone)]
pub struct BkState {
    pub x: Vector,
    pub iteration: usize,
    rng: SimRng,
}

impl BkState {
    pub fn new(x0: Vector, seed: u64) -> Self {
        BkState {
            x: x0,
            iteration: 0,
            rng: rng::stream(seed, Stream::Blocks),
        }
    }

    /// Uniform block index in `[0, block_count)`.
    pub fn sample_block(&mut self, block_count: usize) -> usize {
        self.rng.random_range(0..block_count)
    }
}

/// Columns with a nonzero entry in any of `rows`, ascending.
fn touched_columns(a: &DenseMatrix, rows: &[usize]) -> Vec<usize> {
    (0..a.ncols())
        .filter(|&c| rows.iter().any(|&r| a[(r, c)] != 0.0))
        .collect()
}

/// One projection `x ← x + A_τ†(b_τ − A_τx)`.
///
/// `A_τ` is restricted to its nonzero columns before the least-squares solve;
/// zero columns of `A_τ` are zero rows of `A_τ†`, so this is exact. When
/// `rhs_override` is given its entries replace `b`.
pub fn bk_step(state: &mut BkState, sys: &LinearSystem, block: &[usize], rhs_override: Option<&Vector>) -> Result<()> {
    sys.check_block(block)?;
    sys.check_iterate(&state.x)?;
    let rhs = rhs_override.unwrap_or(&sys.b);
    if rhs.len() != sys.rows() {
        return Err(Error::DimensionMismatch(
            "right-hand side length differs from row count".into(),
        ));
    }
    let cols = touched_columns(&sys.a, block);
    let sub = DMatrix::from_fn(block.len(), cols.len(), |i, j| sys.a[(block[i], cols[j])]);
    let residual = DVector::from_fn(block.len(), |i, _| {
        rhs[block[i]]
            - cols
                .iter()
                .enumerate()
                .map(|(j, &c)| sub[(i, j)] * state.x[c])
                .sum::<f64>()
    });
    let delta = linalg::min_norm_lstsq(&sub, &residual)?;
    for (j, &c) in cols.iter().enumerate() {
        state.x[c] += delta[j];
    }
    state.iteration += 1;
    Ok(())
}

/// A block with its restricted submatrix and pseudoinverse precomputed, so
/// repeated projections cost one small matrix-vector product.
#[derive(Debug, Clone)]
pub struct BlockProjector {
    rows: Vec<usize>,
    cols: Vec<usize>,
    sub: DenseMatrix,
    pinv: DenseMatrix,
}

impl BlockProjector {
    /// `sub` is `A` restricted to `rows` × `cols`.
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, sub: DenseMatrix) -> Self {
        debug_assert_eq!(sub.shape(), (rows.len(), cols.len()));
        let pinv = linalg::pseudo_inverse(&sub);
        BlockProjector { rows, cols, sub, pinv }
    }

    pub fn from_dense(a: &DenseMatrix, rows: &[usize]) -> Self {
        let cols = touched_columns(a, rows);
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
        BlockProjector::new(rows.to_vec(), cols, sub)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// `x ← x + A_τ†(rhs_τ − A_τx)`, where `rhs_at(i)` is the right-hand
    /// side for local row `i` (global row `rows[i]`).
    pub fn project_with(&self, x: &mut [f64], rhs_at: impl Fn(usize) -> f64) {
        let k = self.rows.len();
        let mut residual = DVector::zeros(k);
        for i in 0..k {
            let ax: f64 = self
                .cols
                .iter()
                .enumerate()
                .map(|(j, &c)| self.sub[(i, j)] * x[c])
                .sum();
            residual[i] = rhs_at(i) - ax;
        }
        let delta = &self.pinv * residual;
        for (j, &c) in self.cols.iter().enumerate() {
            x[c] += delta[j];
        }
    }

    /// Projection with a full-length right-hand side.
    pub fn project(&self, x: &mut [f64], rhs: &[f64]) {
        self.project_with(x, |i| rhs[self.rows[i]]);
    }
}

/// Per-iteration right-hand side sampler `b_k = b + e_k`.
pub trait RhsSampler {
    fn sample(&mut self, base: &Vector, rng: &mut SimRng) -> Vector;
}

/// Independent mean-zero Gaussian perturbation with per-row standard
/// deviations; covariance `diag(std²)`.
#[derive(Debug, Clone)]
pub struct GaussianRhsNoise {
    std: Vec<f64>,
}

impl GaussianRhsNoise {
    pub fn new(std: Vec<f64>) -> Result<Self> {
        if std.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(
                "standard deviations must be finite and ≥ 0".into(),
            ));
        }
        Ok(GaussianRhsNoise { std })
    }

    /// `tr Σ = Σ std²`.
    pub fn trace(&self) -> f64 {
        self.std.iter().map(|s| s * s).sum()
    }
}

impl RhsSampler for GaussianRhsNoise {
    fn sample(&mut self, base: &Vector, rng: &mut SimRng) -> Vector {
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        Vector::from_fn(base.len(), |i, _| base[i] + self.std[i] * unit.sample(rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BkOptions {
    pub iterations: usize,
    pub seed: u64,
    pub record_iterates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BkTrajectory {
    /// `x_0 … x_k` when recorded, otherwise empty.
    pub iterates: Vec<Vector>,
    /// `‖x_k − x*‖` for `k = 0 … iterations`.
    pub errors: Vec<f64>,
    pub block_ids: Vec<usize>,
    pub target: Vector,
    pub final_x: Vector,
}

/// Runs block Kaczmarz with blocks drawn uniformly from `covering`.
///
/// The error is measured against [`LinearSystem::solution_target`] with the
/// given residual (minimum-norm residual when `None`). With a sampler, each
/// iteration projects against a freshly drawn right-hand side.
pub fn bk_run(
    sys: &LinearSystem,
    covering: &RowCovering,
    x0: &Vector,
    options: BkOptions,
    residual: Option<&Vector>,
    mut noise: Option<&mut dyn RhsSampler>,
) -> Result<BkTrajectory> {
    if covering.edge_count() != sys.rows() {
        return Err(Error::DimensionMismatch(format!(
            "covering is over {} rows, system has {}",
            covering.edge_count(),
            sys.rows()
        )));
    }
    covering::validate(covering)?;
    let target = sys.solution_target(x0, residual)?;
    let projectors: Vec<BlockProjector> = covering
        .blocks()
        .iter()
        .map(|b| BlockProjector::from_dense(&sys.a, b.ids()))
        .collect();

    let mut state = BkState::new(x0.clone(), options.seed);
    let mut noise_rng = rng::stream(options.seed, Stream::Noise);
    let mut errors = Vec::with_capacity(options.iterations + 1);
    let mut block_ids = Vec::with_capacity(options.iterations);
    let mut iterates = Vec::new();
    errors.push((&state.x - &target).norm());
    if options.record_iterates {
        iterates.push(state.x.clone());
    }
    for _ in 0..options.iterations {
        let idx = state.sample_block(projectors.len());
        let proj = &projectors[idx];
        match noise.as_deref_mut() {
            Some(sampler) => {
                let rhs = sampler.sample(&sys.b, &mut noise_rng);
                proj.project(state.x.as_mut_slice(), rhs.as_slice());
            }
            None => proj.project(state.x.as_mut_slice(), sys.b.as_slice()),
        }
        state.iteration += 1;
        block_ids.push(idx);
        errors.push((&state.x - &target).norm());
        if options.record_iterates {
            iterates.push(state.x.clone());
        }
    }
    Ok(BkTrajectory {
        iterates,
        errors,
        block_ids,
        target,
        final_x: state.x,
    })
}

/// Covering constants of a general matrix: `α`/`β` are the extreme nonzero
/// eigenvalues over all `A_τA_τᵀ`, `r`/`R` the extreme row multiplicities.
/// Blocks of all-zero rows are rejected.
pub fn matrix_constants(a: &DenseMatrix, covering: &RowCovering) -> Result<CoveringConstants> {
    if covering.edge_count() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "covering is over {} rows, matrix has {}",
            covering.edge_count(),
            a.nrows()
        )));
    }
    covering::validate(covering)?;
    let mut alpha = f64::INFINITY;
    let mut beta = 0.0f64;
    let mut max_block_size = 0;
    for block in covering.blocks() {
        let rows = block.ids();
        let sub = DMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)]);
        let spectrum = linalg::symmetric_eigenvalues(&(&sub * sub.transpose()))?;
        let top = spectrum.last().copied().unwrap_or(0.0);
        if !(top > 0.0) {
            return Err(Error::RankZero);
        }
        alpha = alpha.min(linalg::min_nonzero(&spectrum, top)?);
        beta = beta.max(top);
        max_block_size = max_block_size.max(rows.len());
    }
    let multiplicities = covering.multiplicities();
    Ok(CoveringConstants {
        block_count: covering.len(),
        alpha,
        beta,
        min_multiplicity: multiplicities.iter().copied().min().unwrap_or(0),
        max_multiplicity: multiplicities.iter().copied().max().unwrap_or(0),
        max_block_size,
    })
}

/// Expected squared-error contraction per iteration,
/// `1 − r·σ²_min+(A)/(β·d)`.
///
/// Values below zero by more than rounding signal inconsistent inputs and are
/// rejected; tiny negative rounding is clamped to zero.
pub fn theoretical_rate(consts: &CoveringConstants, sigma_min_plus_sq: f64) -> Result<f64> {
    if !(sigma_min_plus_sq > 0.0) || !(consts.beta > 0.0) || consts.block_count == 0 {
        return Err(Error::OutOfRange {
            quantity: "rate input",
            value: sigma_min_plus_sq,
        });
    }
    let rate = 1.0 - consts.min_multiplicity as f64 * sigma_min_plus_sq / (consts.beta * consts.block_count as f64);
    if !(-1e-12..1.0).contains(&rate) {
        return Err(Error::OutOfRange {
            quantity: "convergence rate",
            value: rate,
        });
    }
    Ok(rate.max(0.0))
}

/// Convergence horizon `β·R/(α·r·σ²_min+)` times `‖e‖²` (fixed residual) or
/// `tr Σ` (redrawn right-hand side).
pub fn theoretical_horizon(
    consts: &CoveringConstants,
    sigma_min_plus_sq: f64,
    residual_sq_or_trace: f64,
) -> Result<f64> {
    if !(sigma_min_plus_sq > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "σ²_min+",
            value: sigma_min_plus_sq,
        });
    }
    if !(residual_sq_or_trace >= 0.0) {
        return Err(Error::OutOfRange {
            quantity: "noise magnitude",
            value: residual_sq_or_trace,
        });
    }
    if consts.min_multiplicity == 0 || !(consts.alpha > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "covering constant",
            value: consts.alpha,
        });
    }
    Ok(consts.beta * consts.max_multiplicity as f64
        / (consts.alpha * consts.min_multiplicity as f64 * sigma_min_plus_sq)
        * residual_sq_or_trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSubset;

    #[test]
    fn matrix_constants_of_incidence_match_graph_constants() {
        let g = crate::graph::generate_erdos_renyi(12, 0.5, 2).unwrap();
        let c = covering::random_block_cover(&g, 4, 10, 2).unwrap();
        let q = crate::graph::incidence_matrix(&g).to_dense();
        let from_matrix = matrix_constants(&q, &c).unwrap();
        let from_graph = covering::constants(&c, &g).unwrap();
        assert!((from_matrix.alpha - from_graph.alpha).abs() < 1e-9);
        assert!((from_matrix.beta - from_graph.beta).abs() < 1e-9);
        assert_eq!(from_matrix.block_count, from_graph.block_count);
        assert_eq!(from_matrix.min_multiplicity, from_graph.min_multiplicity);
        assert_eq!(from_matrix.max_multiplicity, from_graph.max_multiplicity);

        let zero_row = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let rows = RowCovering::new(2, vec![EdgeSubset::new(vec![0]), EdgeSubset::new(vec![1])]);
        assert!(matches!(matrix_constants(&zero_row, &rows), Err(Error::RankZero)));
    }

    fn consts(d: usize, alpha: f64, beta: f64, r: usize, big_r: usize) -> CoveringConstants {
        CoveringConstants {
            block_count: d,
            alpha,
            beta,
            min_multiplicity: r,
            max_multiplicity: big_r,
            max_block_size: 1,
        }
    }

    fn singletons(m: usize) -> RowCovering {
        RowCovering::new(m, (0..m).map(|i| EdgeSubset::new(vec![i])).collect())
    }

    #[test]
    fn single_incidence_row_projection() {
        let sys = LinearSystem::new(
            DenseMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            Vector::from_vec(vec![0.0]),
        )
        .unwrap();
        let mut state = BkState::new(Vector::from_vec(vec![3.0, 1.0]), 0);
        bk_step(&mut state, &sys, &[0], None).unwrap();
        assert!((state.x[0] - 2.0).abs() < 1e-14 && (state.x[1] - 2.0).abs() < 1e-14);
        assert_eq!(state.iteration, 1);

        // already feasible: fixed point
        bk_step(&mut state, &sys, &[0], None).unwrap();
        assert!((state.x[0] - 2.0).abs() < 1e-14 && (state.x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn full_block_reaches_target_in_one_step() {
        let a = DenseMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let b = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let sys = LinearSystem::new(a, b).unwrap();
        let x0 = Vector::from_vec(vec![5.0, -5.0, 0.5]);
        let covering = RowCovering::new(3, vec![EdgeSubset::new(vec![0, 1, 2])]);
        let opts = BkOptions {
            iterations: 1,
            seed: 3,
            record_iterates: false,
        };
        let run = bk_run(&sys, &covering, &x0, opts, None, None).unwrap();
        assert!(run.errors[1] < 1e-12, "{:?}", run.errors);
    }

    #[test]
    fn step_matches_rank_one_closed_form() {
        let a = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.0, 1.0, 1.0]);
        let sys = LinearSystem::new(a.clone(), Vector::from_vec(vec![4.0, -1.0])).unwrap();
        let x = Vector::from_vec(vec![0.5, 0.25, 2.0]);
        let mut state = BkState::new(x.clone(), 0);
        bk_step(&mut state, &sys, &[0], None).unwrap();
        let row = a.row(0).transpose();
        let expected = &x + &row * ((4.0 - row.dot(&x)) / row.norm_squared());
        assert!((state.x - expected).norm() < 1e-13);
    }

    #[test]
    fn step_rejects_bad_blocks() {
        let sys = LinearSystem::new(DenseMatrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let mut state = BkState::new(Vector::zeros(2), 0);
        assert!(bk_step(&mut state, &sys, &[2], None).is_err());
        assert!(bk_step(&mut state, &sys, &[], None).is_err());
        assert!(bk_step(&mut state, &sys, &[0], Some(&Vector::zeros(3))).is_err());
    }

    #[test]
    fn override_rhs_is_used() {
        let sys = LinearSystem::new(DenseMatrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let mut state = BkState::new(Vector::zeros(2), 0);
        let rhs = Vector::from_vec(vec![7.0, -3.0]);
        bk_step(&mut state, &sys, &[0, 1], Some(&rhs)).unwrap();
        assert_eq!(state.x, rhs);
    }

    #[test]
    fn projector_matches_step() {
        let a = DenseMatrix::from_row_slice(
            4,
            5,
            &[
                1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, -1.0,
            ],
        );
        let b = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let sys = LinearSystem::new(a.clone(), b.clone()).unwrap();
        let block = [0, 2, 3];
        let x0 = Vector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let mut state = BkState::new(x0.clone(), 0);
        bk_step(&mut state, &sys, &block, None).unwrap();
        let mut x = x0;
        BlockProjector::from_dense(&a, &block).project(x.as_mut_slice(), b.as_slice());
        assert!((state.x - x).norm() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        // K3 with its IES cover: d = 3, r = 1, β = 2, α(G) = 3
        assert!((theoretical_rate(&consts(3, 2.0, 2.0, 1, 1), 3.0).unwrap() - 0.5).abs() < 1e-15);
        // K3 as one spanning-path block: β = 3
        assert_eq!(theoretical_rate(&consts(1, 1.0, 3.0, 1, 1), 3.0).unwrap(), 0.0);
        assert!(theoretical_rate(&consts(1, 1.0, 2.0, 1, 1), 3.0).is_err());
        assert!(theoretical_rate(&consts(1, 1.0, 2.0, 1, 1), 0.0).is_err());
        // r = 0 can only come from a non-covering; the rate degenerates to 1
        assert!(theoretical_rate(&consts(2, 1.0, 2.0, 0, 1), 1.0).is_err());
    }

    #[test]
    fn horizon_examples() {
        let ies = consts(5, 2.0, 2.0, 1, 1);
        assert_eq!(theoretical_horizon(&ies, 3.0, 0.0).unwrap(), 0.0);
        assert!((theoretical_horizon(&ies, 4.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        let general = consts(5, 0.5, 3.0, 1, 2);
        let m = 100.0;
        let expected = 3.0 * 2.0 * m * 0.01 / (0.5 * 1.0 * 1.5);
        assert!((theoretical_horizon(&general, 1.5, m * 0.01).unwrap() - expected).abs() < 1e-12);
        assert!(theoretical_horizon(&ies, 0.0, 1.0).is_err());
        assert!(theoretical_horizon(&ies, 1.0, -1.0).is_err());
    }

    #[test]
    fn target_uses_min_norm_residual() {
        // inconsistent 3×2 system
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = Vector::from_vec(vec![1.0, 1.0, 3.0]);
        let sys = LinearSystem::new(a.clone(), b.clone()).unwrap();
        let x0 = Vector::from_vec(vec![10.0, -4.0]);
        let target = sys.solution_target(&x0, None).unwrap();
        // full column rank: target is the least-squares solution
        let ls = linalg::min_norm_lstsq(&a, &b).unwrap();
        assert!((target - ls).norm() < 1e-12);
        let e = sys.min_norm_residual().unwrap();
        assert!((a.transpose() * e).norm() < 1e-12);
    }

    #[test]
    fn single_row_blocks_are_classical_kaczmarz() {
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 1.0, 0.5, 0.0]);
        let b = Vector::from_vec(vec![1.0, 0.0, 2.0]);
        let sys = LinearSystem::new(a.clone(), b.clone()).unwrap();
        let x0 = Vector::from_vec(vec![0.0, 0.0]);
        let opts = BkOptions {
            iterations: 30,
            seed: 11,
            record_iterates: true,
        };
        let run = bk_run(&sys, &singletons(3), &x0, opts, None, None).unwrap();
        let mut x = x0;
        for (k, &i) in run.block_ids.iter().enumerate() {
            let row = a.row(i).transpose();
            x += &row * ((b[i] - row.dot(&x)) / row.norm_squared());
            assert!((&x - &run.iterates[k + 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_noise_trace() {
        let noise = GaussianRhsNoise::new(vec![0.1; 50]).unwrap();
        assert!((noise.trace() - 0.5).abs() < 1e-12);
        assert!(GaussianRhsNoise::new(vec![-1.0]).is_err());
    }
}
