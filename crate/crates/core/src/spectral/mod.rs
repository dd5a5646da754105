//! Matrix-free symmetric operators and extreme-eigenvalue solvers.
//!
//! Operators cover the adjacency matrix `A` of a sampled graph, the
//! expectation matrix `E[A] = (p_ij)` of a model (structured apply: O(n)
//! homogeneous, O(n + blocks²) SBM), their difference `A − E[A]`, and
//! explicit dense matrices for tests. All applies accumulate in a fixed
//! order, so results are bit-deterministic for any thread count.

pub mod dense;
mod lanczos;
mod structured;

pub use lanczos::{
    extreme_eigenpairs_with, extreme_eigenvalues, extreme_eigenvalues_with, ExtremeVectors,
    LanczosParams,
};
pub use structured::{adjacency_extremes, centered_homogeneous_extremes};

use crate::error::{Error, Result};
use crate::model::{EdgeProbabilityModel, ModelKind, SampledGraph};
use crate::par::{for_each_chunk_mut, Parallelism};

/// Default dimension guard for [`dense_spectrum`].
pub const DEFAULT_DENSE_SPECTRUM_LIMIT: usize = 2000;

/// A symmetric linear operator `v ↦ Mv`.
pub enum SymmetricOperator<'a> {
    /// Adjacency matrix of a sampled graph (loop ⇒ diagonal 1).
    Adjacency(&'a SampledGraph),
    /// Expectation matrix `(p_ij)` of a model.
    Expectation(&'a EdgeProbabilityModel),
    /// Centered adjacency `A − E[A]`.
    Centered {
        graph: &'a SampledGraph,
        model: &'a EdgeProbabilityModel,
    },
    /// Explicit dense symmetric matrix, row-major.
    Dense { n: usize, a: Vec<f64> },
}

/// Adjacency operator of `graph`; apply cost O(#edges).
pub fn adjacency_operator(graph: &SampledGraph) -> SymmetricOperator<'_> {
    SymmetricOperator::Adjacency(graph)
}

/// Expectation operator of `model`.
pub fn expectation_operator(model: &EdgeProbabilityModel) -> SymmetricOperator<'_> {
    SymmetricOperator::Expectation(model)
}

/// Centered operator `A − E[A]`; errors on dimension mismatch.
pub fn centered_operator<'a>(
    graph: &'a SampledGraph,
    model: &'a EdgeProbabilityModel,
) -> Result<SymmetricOperator<'a>> {
    if graph.n() != model.n() {
        return Err(Error::Argument(format!(
            "graph has n = {}, model has n = {}",
            graph.n(),
            model.n()
        )));
    }
    Ok(SymmetricOperator::Centered { graph, model })
}

impl SymmetricOperator<'_> {
    pub fn dim(&self) -> usize {
        match self {
            SymmetricOperator::Adjacency(g) => g.n(),
            SymmetricOperator::Expectation(m) => m.n(),
            SymmetricOperator::Centered { graph, .. } => graph.n(),
            SymmetricOperator::Dense { n, .. } => *n,
        }
    }

    /// `y = M x`. Deterministic for any `mode`.
    pub fn apply(&self, x: &[f64], y: &mut [f64], mode: Parallelism) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        match self {
            SymmetricOperator::Adjacency(g) => adjacency_apply(g, x, y, mode),
            SymmetricOperator::Expectation(m) => {
                y.fill(0.0);
                expectation_apply(m, x, y, 1.0, mode);
            }
            SymmetricOperator::Centered { graph, model } => {
                adjacency_apply(graph, x, y, mode);
                expectation_apply(model, x, y, -1.0, mode);
            }
            SymmetricOperator::Dense { n, a } => {
                let n = *n;
                for_each_chunk_mut(mode, y, 512, |off, chunk| {
                    for (r, yi) in chunk.iter_mut().enumerate() {
                        let row = &a[(off + r) * n..(off + r + 1) * n];
                        *yi = dot(row, x);
                    }
                });
            }
        }
    }

    /// Materializes the operator column by column into a dense matrix.
    pub fn to_dense(&self, mode: Parallelism) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0f64; n * n];
        let mut e = vec![0.0f64; n];
        let mut col = vec![0.0f64; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col, mode);
            e[j] = 0.0;
            for i in 0..n {
                a[i * n + j] = col[i];
            }
        }
        a
    }
}

fn adjacency_apply(g: &SampledGraph, x: &[f64], y: &mut [f64], mode: Parallelism) {
    for_each_chunk_mut(mode, y, 2048, |off, chunk| {
        for (r, yi) in chunk.iter_mut().enumerate() {
            let i = off + r;
            let mut acc = 0.0;
            for &j in g.neighbors(i) {
                acc += x[j as usize];
            }
            *yi = acc;
        }
    });
}

/// `y += coef · E[A] x`, using the structured form of the model.
fn expectation_apply(
    m: &EdgeProbabilityModel,
    x: &[f64],
    y: &mut [f64],
    coef: f64,
    mode: Parallelism,
) {
    let n = m.n();
    match m.kind() {
        ModelKind::Homogeneous { p } => {
            // E[A] = p (J − I), plus p I when loops are allowed.
            // The global sum is accumulated in fixed order for determinism.
            let s: f64 = sum_fixed(x);
            let p = *p;
            let diag = if m.allow_loops() { 0.0 } else { p };
            for_each_chunk_mut(mode, y, 4096, |off, chunk| {
                for (r, yi) in chunk.iter_mut().enumerate() {
                    *yi += coef * (p * s - diag * x[off + r]);
                }
            });
        }
        ModelKind::Sbm {
            block_sizes,
            block_offsets,
            block_of,
            block_matrix,
        } => {
            let blocks = block_sizes.len();
            let mut block_sums = vec![0.0f64; blocks];
            for b in 0..blocks {
                block_sums[b] = sum_fixed(&x[block_offsets[b]..block_offsets[b + 1]]);
            }
            let loops = m.allow_loops();
            for_each_chunk_mut(mode, y, 4096, |off, chunk| {
                for (r, yi) in chunk.iter_mut().enumerate() {
                    let i = off + r;
                    let bi = block_of[i] as usize;
                    let mut acc = 0.0;
                    for b in 0..blocks {
                        acc += block_matrix[bi][b] * block_sums[b];
                    }
                    if !loops {
                        acc -= block_matrix[bi][bi] * x[i];
                    }
                    *yi += coef * acc;
                }
            });
        }
        ModelKind::General { matrix } => {
            for_each_chunk_mut(mode, y, 512, |off, chunk| {
                for (r, yi) in chunk.iter_mut().enumerate() {
                    let row = &matrix[(off + r) * n..(off + r + 1) * n];
                    *yi += coef * dot(row, x);
                }
            });
        }
    }
}

/// Fixed-order 8-lane dot product (deterministic, vectorizable).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let i = c * 8;
        for l in 0..8 {
            acc[l] += a[i + l] * b[i + l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    (((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))) + tail
}

/// Fixed-order 8-lane sum.
pub(crate) fn sum_fixed(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let i = c * 8;
        for l in 0..8 {
            acc[l] += a[i + l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i];
    }
    (((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))) + tail
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Converged extreme eigenvalues with residual certificates.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// `(eigenvalue, ‖Mv − λv‖ / max(1, |λ|))`, sorted nonincreasing.
    pub top: Vec<(f64, f64)>,
    /// Same, sorted nondecreasing (most negative first).
    pub bottom: Vec<(f64, f64)>,
    /// Total block-Lanczos steps across restarts.
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Full spectrum via the dense oracle, sorted nonincreasing.
pub fn dense_spectrum_with_limit(
    op: &SymmetricOperator<'_>,
    limit: usize,
    mode: Parallelism,
) -> Result<Vec<f64>> {
    let n = op.dim();
    if n > limit {
        return Err(Error::Capacity(format!(
            "dense spectrum of dimension {n} exceeds limit {limit}"
        )));
    }
    let a = op.to_dense(mode);
    let mut vals = dense::sym_eigenvalues(a, n);
    vals.reverse();
    Ok(vals)
}

/// [`dense_spectrum_with_limit`] at the default limit, sequential mode.
pub fn dense_spectrum(op: &SymmetricOperator<'_>) -> Result<Vec<f64>> {
    dense_spectrum_with_limit(op, DEFAULT_DENSE_SPECTRUM_LIMIT, Parallelism::Sequential)
}

/// Closed-form star-graph spectrum: a star with central degree `D ≥ 1` has
/// nonzero eigenvalues `±√D` (eigenvectors `(±√D, 1, …, 1)`, center first)
/// and `D − 1` zeros.
pub fn star_spectrum(d: usize) -> Result<(Vec<f64>, usize)> {
    if d < 1 {
        return Err(Error::Domain("star central degree must be >= 1".into()));
    }
    let s = (d as f64).sqrt();
    Ok((vec![s, -s], d - 1))
}
