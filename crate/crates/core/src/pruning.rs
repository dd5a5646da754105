//! Star decomposition of a graph at a degree threshold.
//!
//! Fix a threshold `t` and call the vertices of degree ≥ t *centers*. The
//! star subgraph keeps each edge `{i, j}` whose center endpoint `i` is its
//! only center neighbor of `j` — i.e. `j` is neither a center nor adjacent
//! to a second center. What remains is the residual graph: its adjacency
//! spectrum is controlled by the pruned-graph operator-norm bound
//! `C (√(n p_max) + √d′)` with `d′` the maximal residual row sum, while the
//! star part contributes the closed-form `±√(D_i^star)` eigenvalues.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{EdgeProbabilityModel, SampledGraph};
use crate::par::Parallelism;
use crate::spectral::{
    adjacency_operator, dense_spectrum_with_limit, extreme_eigenvalues_with, LanczosParams,
    SymmetricOperator,
};

/// The star/residual split of a graph at threshold `t`.
#[derive(Debug, Clone)]
pub struct StarDecomposition {
    pub t: u32,
    /// Vertices of degree ≥ t, ascending.
    pub centers: Vec<u32>,
    /// Star edges as (center, leaf) pairs.
    pub star_edges: Vec<(u32, u32)>,
    /// All remaining edges, as (i, j) with i ≤ j.
    pub residual_edges: Vec<(u32, u32)>,
    /// Star degree `D_i^star` per center (same order as `centers`).
    pub central_degrees: Vec<u32>,
    /// `D_i − D_i^star` per center.
    pub removed_per_center: Vec<u32>,
}

/// Exact neighbor set `N(S) = {j : A_ij = 1 for some i ∈ S}`; cost
/// `O(Σ_{i∈S} deg i)`. Errors on an out-of-range vertex.
pub fn neighborhood(graph: &SampledGraph, s: &[u32]) -> Result<Vec<u32>> {
    let n = graph.n() as u32;
    let mut out = BTreeSet::new();
    for &i in s {
        if i >= n {
            return Err(Error::Argument(format!("vertex {i} out of range (n={n})")));
        }
        for &j in graph.neighbors(i as usize) {
            out.insert(j);
        }
    }
    Ok(out.into_iter().collect())
}

/// Number of center-neighbors of every vertex, used to answer membership in
/// `N(V_{≥t} ∖ {i})` in O(1) per query.
fn center_neighbor_counts(graph: &SampledGraph, is_center: &[bool]) -> Vec<u32> {
    let mut counts = vec![0u32; graph.n()];
    for (i, &c) in is_center.iter().enumerate() {
        if c {
            for &j in graph.neighbors(i) {
                counts[j as usize] += 1;
            }
        }
    }
    counts
}

/// For each center `i`, the number of its neighbors lying in
/// `V_{≥t} ∪ N(V_{≥t} ∖ {i})`; returns the maximum and the per-center map.
pub fn overlap_statistic(graph: &SampledGraph, t: u32) -> (u32, Vec<(u32, u32)>) {
    assert!(t >= 1, "threshold must be >= 1");
    let n = graph.n();
    let mut is_center = vec![false; n];
    for (i, &d) in graph.degrees().iter().enumerate() {
        if d >= t {
            is_center[i] = true;
        }
    }
    let counts = center_neighbor_counts(graph, &is_center);
    let mut per_center = Vec::new();
    let mut max_overlap = 0u32;
    for i in 0..n {
        if !is_center[i] {
            continue;
        }
        let mut overlap = 0u32;
        for &j in graph.neighbors(i) {
            let j = j as usize;
            let in_other_neighborhood = if is_center[j] {
                true
            } else {
                // j is a leaf: it lies in N(V_{≥t} ∖ {i}) iff some center
                // besides i is adjacent to it.
                counts[j] >= 2
            };
            if in_other_neighborhood {
                overlap += 1;
            }
        }
        max_overlap = max_overlap.max(overlap);
        per_center.push((i as u32, overlap));
    }
    (max_overlap, per_center)
}

/// Splits the edges of the graph into the star subgraph and the residual.
pub fn star_decomposition(graph: &SampledGraph, t: u32) -> StarDecomposition {
    assert!(t >= 1, "threshold must be >= 1");
    let n = graph.n();
    let mut is_center = vec![false; n];
    let mut centers = Vec::new();
    for (i, &d) in graph.degrees().iter().enumerate() {
        if d >= t {
            is_center[i] = true;
            centers.push(i as u32);
        }
    }
    let counts = center_neighbor_counts(graph, &is_center);

    let mut star_edges = Vec::new();
    let mut residual_edges = Vec::new();
    let mut star_degree = vec![0u32; n];
    for (i, j) in graph.edges() {
        let (iu, ju) = (i as usize, j as usize);
        // A star edge has exactly one center endpoint whose leaf end sees
        // no other center.
        let keep = if i == j {
            false
        } else if is_center[iu] && !is_center[ju] && counts[ju] == 1 {
            star_degree[iu] += 1;
            star_edges.push((i, j));
            true
        } else if is_center[ju] && !is_center[iu] && counts[iu] == 1 {
            star_degree[ju] += 1;
            star_edges.push((j, i));
            true
        } else {
            false
        };
        if !keep {
            residual_edges.push((i, j));
        }
    }
    let central_degrees: Vec<u32> = centers.iter().map(|&c| star_degree[c as usize]).collect();
    let removed_per_center: Vec<u32> = centers
        .iter()
        .zip(&central_degrees)
        .map(|(&c, &sd)| graph.degrees()[c as usize] - sd)
        .collect();
    StarDecomposition {
        t,
        centers,
        star_edges,
        residual_edges,
        central_degrees,
        removed_per_center,
    }
}

/// Two-route check of the star-subgraph spectrum: closed form
/// `{±√(D_i^star)}` versus a numerical eigensolve of the star-edge
/// adjacency. Returns the maximal absolute discrepancy over the nonzero
/// spectrum. The non-isolated part of the star subgraph must fit the dense
/// oracle (4000 vertices).
pub fn decomposition_spectrum_check(decomp: &StarDecomposition) -> Result<f64> {
    let mut closed: Vec<f64> = Vec::new();
    for &d in &decomp.central_degrees {
        if d >= 1 {
            let s = (d as f64).sqrt();
            closed.push(s);
            closed.push(-s);
        }
    }
    if closed.is_empty() {
        return Ok(0.0);
    }
    closed.sort_by(f64::total_cmp);

    // The star subgraph restricted to its non-isolated vertices is small:
    // relabel and solve densely.
    let mut used: Vec<u32> = Vec::new();
    for &(c, l) in &decomp.star_edges {
        used.push(c);
        used.push(l);
    }
    used.sort_unstable();
    used.dedup();
    let index_of = |v: u32| used.binary_search(&v).expect("relabeled vertex") as u32;
    let edges: Vec<(u32, u32)> = decomp
        .star_edges
        .iter()
        .map(|&(c, l)| {
            let (a, b) = (index_of(c), index_of(l));
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let sub = SampledGraph::from_edges(used.len(), &edges, 0, 0);
    let op = adjacency_operator(&sub);
    let spectrum = dense_spectrum_with_limit(&op, 4000, Parallelism::default())?;

    // Compare the nonzero parts: |closed| entries at both ends.
    let mut numerical: Vec<f64> = spectrum;
    numerical.sort_by(f64::total_cmp);
    let half = closed.len() / 2;
    let mut disc = 0.0f64;
    for i in 0..half {
        disc = disc.max((numerical[i] - closed[i]).abs());
        let top_n = numerical[numerical.len() - 1 - i];
        let top_c = closed[closed.len() - 1 - i];
        disc = disc.max((top_n - top_c).abs());
    }
    Ok(disc)
}

/// Residual-norm report: `‖A′ − E[A]‖` against the `√(n p_max) + √d′` shape.
#[derive(Debug, Clone)]
pub struct ResidualNormReport {
    pub norm: f64,
    /// Maximal residual row sum (residual degrees; 0/1 weights).
    pub d_prime: u32,
    pub bound_shape: f64,
    pub ratio: f64,
    pub converged: bool,
}

/// Spectral norm of the centered residual `A′ − E[A]` via the iterative
/// solver, with the pruning-bound shape for constant fitting.
pub fn residual_norm_check(
    graph: &SampledGraph,
    model: &EdgeProbabilityModel,
    decomp: &StarDecomposition,
    tol: f64,
    seed: u64,
) -> Result<ResidualNormReport> {
    if graph.n() != model.n() {
        return Err(Error::Argument("graph/model dimension mismatch".into()));
    }
    let residual = SampledGraph::from_edges(graph.n(), &decomp.residual_edges, seed, 0);
    let d_prime = residual.degrees().iter().copied().max().unwrap_or(0);
    let op = SymmetricOperator::Centered {
        graph: &residual,
        model,
    };
    let params = LanczosParams::new(1, 1, tol, 4000, seed);
    let rep = extreme_eigenvalues_with(&op, &params)?;
    let top = rep.top.first().map(|&(v, _)| v).unwrap_or(0.0);
    let bottom = rep.bottom.first().map(|&(v, _)| v).unwrap_or(0.0);
    let norm = top.abs().max(bottom.abs());
    let shape = (graph.n() as f64 * model.p_max()).sqrt() + (d_prime as f64).sqrt();
    Ok(ResidualNormReport {
        norm,
        d_prime,
        bound_shape: shape,
        ratio: if shape > 0.0 { norm / shape } else { 0.0 },
        converged: rep.converged,
    })
}
