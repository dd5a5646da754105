//! Edge-probability models and reproducible graph sampling.
//!
//! A model is the symmetric matrix `(p_ij)` of edge probabilities, given in
//! one of three forms: homogeneous (single `p`), stochastic block model
//! (block sizes plus a symmetric block matrix), or a general symmetric
//! matrix (guarded by a dense size limit). Sampling draws every edge
//! independently and is bit-reproducible from `(model, seed, replica)`.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Default guard on the vertex count of `general` models (O(n²) storage).
pub const DEFAULT_DENSE_LIMIT: usize = 5000;

/// Input description for [`build_model`].
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// Every off-diagonal pair has probability `p`.
    Homogeneous { n: usize, p: f64 },
    /// Vertices partitioned into blocks; `block_matrix[a][b]` is the edge
    /// probability between a vertex of block `a` and one of block `b`.
    Sbm {
        block_sizes: Vec<usize>,
        block_matrix: Vec<Vec<f64>>,
    },
    /// Explicit symmetric probability matrix, row-major.
    General { n: usize, matrix: Vec<f64> },
}

#[derive(Debug, Clone)]
pub(crate) enum ModelKind {
    Homogeneous {
        p: f64,
    },
    Sbm {
        block_sizes: Vec<usize>,
        /// Vertex index at which each block starts (len = blocks + 1).
        block_offsets: Vec<usize>,
        /// Block of each vertex.
        block_of: Vec<u32>,
        block_matrix: Vec<Vec<f64>>,
    },
    General {
        matrix: Vec<f64>,
    },
}

/// Validated edge-probability model with cached degree data.
#[derive(Debug, Clone)]
pub struct EdgeProbabilityModel {
    n: usize,
    kind: ModelKind,
    allow_loops: bool,
    mean_degrees: Vec<f64>,
    max_mean_degree: f64,
    p_max: f64,
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!(
            "{what} must lie in [0,1], got {p}"
        )));
    }
    Ok(())
}

/// Builds and validates a model; diagonal probabilities require `allow_loops`.
pub fn build_model(spec: ModelSpec, allow_loops: bool) -> Result<EdgeProbabilityModel> {
    build_model_with_limit(spec, allow_loops, DEFAULT_DENSE_LIMIT)
}

/// [`build_model`] with an explicit dense-size guard for the general kind.
pub fn build_model_with_limit(
    spec: ModelSpec,
    allow_loops: bool,
    dense_limit: usize,
) -> Result<EdgeProbabilityModel> {
    let (n, kind) = match spec {
        ModelSpec::Homogeneous { n, p } => {
            check_probability(p, "edge probability")?;
            if n == 0 {
                return Err(Error::Validation("vertex count must be positive".into()));
            }
            (n, ModelKind::Homogeneous { p })
        }
        ModelSpec::Sbm {
            block_sizes,
            block_matrix,
        } => {
            if block_sizes.is_empty() || block_sizes.iter().any(|&s| s == 0) {
                return Err(Error::Validation(
                    "block sizes must be positive and nonempty".into(),
                ));
            }
            let blocks = block_sizes.len();
            if block_matrix.len() != blocks || block_matrix.iter().any(|r| r.len() != blocks) {
                return Err(Error::Validation(format!(
                    "block matrix must be {blocks}x{blocks}"
                )));
            }
            for a in 0..blocks {
                for b in 0..blocks {
                    check_probability(block_matrix[a][b], "block probability")?;
                    if block_matrix[a][b] != block_matrix[b][a] {
                        return Err(Error::Validation(format!(
                            "block matrix asymmetric at ({a},{b}): {} vs {}",
                            block_matrix[a][b], block_matrix[b][a]
                        )));
                    }
                }
            }
            let n: usize = block_sizes.iter().sum();
            let mut block_offsets = Vec::with_capacity(blocks + 1);
            let mut block_of = Vec::with_capacity(n);
            let mut off = 0usize;
            for (b, &s) in block_sizes.iter().enumerate() {
                block_offsets.push(off);
                off += s;
                block_of.extend(std::iter::repeat(b as u32).take(s));
            }
            block_offsets.push(off);
            (
                n,
                ModelKind::Sbm {
                    block_sizes,
                    block_offsets,
                    block_of,
                    block_matrix,
                },
            )
        }
        ModelSpec::General { n, matrix } => {
            if n == 0 {
                return Err(Error::Validation("vertex count must be positive".into()));
            }
            if n > dense_limit {
                return Err(Error::Capacity(format!(
                    "general model with n={n} exceeds dense limit {dense_limit}"
                )));
            }
            if matrix.len() != n * n {
                return Err(Error::Validation(format!(
                    "probability matrix must have {} entries, got {}",
                    n * n,
                    matrix.len()
                )));
            }
            for i in 0..n {
                for j in i..n {
                    check_probability(matrix[i * n + j], "edge probability")?;
                    if matrix[i * n + j] != matrix[j * n + i] {
                        return Err(Error::Validation(format!(
                            "probability matrix asymmetric at ({i},{j}): {} vs {}",
                            matrix[i * n + j],
                            matrix[j * n + i]
                        )));
                    }
                }
                if !allow_loops && matrix[i * n + i] != 0.0 {
                    return Err(Error::Validation(format!(
                        "nonzero diagonal p({i},{i}) with loops disabled"
                    )));
                }
            }
            (n, ModelKind::General { matrix })
        }
    };

    let mut model = EdgeProbabilityModel {
        n,
        kind,
        allow_loops,
        mean_degrees: Vec::new(),
        max_mean_degree: 0.0,
        p_max: 0.0,
    };
    model.cache_degree_data();
    Ok(model)
}

impl EdgeProbabilityModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allow_loops(&self) -> bool {
        self.allow_loops
    }

    /// Edge probability `p(i,j)`; symmetric, zero diagonal unless loops.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "vertex index out of range");
        if i == j && !self.allow_loops {
            return 0.0;
        }
        match &self.kind {
            ModelKind::Homogeneous { p } => *p,
            ModelKind::Sbm {
                block_of,
                block_matrix,
                ..
            } => block_matrix[block_of[i] as usize][block_of[j] as usize],
            ModelKind::General { matrix } => matrix[i * self.n + j],
        }
    }

    /// Mean degree `d_i = Σ_j p(i,j)` of vertex `i`.
    pub fn mean_degree(&self, i: usize) -> f64 {
        self.mean_degrees[i]
    }

    pub fn mean_degrees(&self) -> &[f64] {
        &self.mean_degrees
    }

    /// Maximal mean degree `d = max_i d_i`.
    pub fn max_mean_degree(&self) -> f64 {
        self.max_mean_degree
    }

    /// Maximal off-diagonal probability.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub(crate) fn kind(&self) -> &ModelKind {
        &self.kind
    }

    fn cache_degree_data(&mut self) {
        let n = self.n;
        let loops = self.allow_loops;
        let (degrees, p_max) = match &self.kind {
            ModelKind::Homogeneous { p } => {
                let d = (n - 1) as f64 * p + if loops { *p } else { 0.0 };
                let p_max = if n >= 2 { *p } else { 0.0 };
                (vec![d; n], p_max)
            }
            ModelKind::Sbm {
                block_sizes,
                block_of,
                block_matrix,
                ..
            } => {
                let blocks = block_sizes.len();
                // Mean degree depends only on the block.
                let mut per_block = vec![0.0f64; blocks];
                for a in 0..blocks {
                    let mut d = 0.0;
                    for b in 0..blocks {
                        let same = a == b;
                        let count = block_sizes[b] as f64 - if same { 1.0 } else { 0.0 };
                        d += block_matrix[a][b] * count;
                    }
                    if loops {
                        d += block_matrix[a][a];
                    }
                    per_block[a] = d;
                }
                let mut p_max = 0.0f64;
                for a in 0..blocks {
                    for b in a..blocks {
                        let pair_exists = if a == b {
                            block_sizes[a] >= 2
                        } else {
                            true
                        };
                        if pair_exists {
                            p_max = p_max.max(block_matrix[a][b]);
                        }
                    }
                }
                let degrees = block_of
                    .iter()
                    .map(|&b| per_block[b as usize])
                    .collect::<Vec<_>>();
                (degrees, p_max)
            }
            ModelKind::General { matrix } => {
                let mut degrees = vec![0.0f64; n];
                let mut p_max = 0.0f64;
                for i in 0..n {
                    let mut d = 0.0;
                    for j in 0..n {
                        if i == j && !loops {
                            continue;
                        }
                        let pij = matrix[i * n + j];
                        d += pij;
                        if i != j {
                            p_max = p_max.max(pij);
                        }
                    }
                    degrees[i] = d;
                }
                (degrees, p_max)
            }
        };
        self.max_mean_degree = degrees.iter().cloned().fold(0.0, f64::max);
        self.mean_degrees = degrees;
        self.p_max = p_max;
    }
}

/// Outcome of checking the sparsity hypotheses `κ ≤ d ≤ η log n` and
/// `p_max ≤ n^{−1+η}`.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub kappa: f64,
    pub eta: f64,
    pub satisfied: bool,
    pub violations: Vec<String>,
}

/// Checks the model against the sparsity window parametrized by `(κ, η)`.
/// A failing check is a valid result, not an error.
pub fn check_hypotheses(model: &EdgeProbabilityModel, kappa: f64, eta: f64) -> HypothesisCheck {
    assert!(kappa > 0.0, "kappa must be positive");
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0,1)");
    let n = model.n() as f64;
    let d = model.max_mean_degree();
    let p_max = model.p_max();
    let log_n = n.ln();
    let mut violations = Vec::new();
    if d < kappa {
        violations.push(format!("d < kappa: d = {d}, kappa = {kappa}"));
    }
    if d > eta * log_n {
        violations.push(format!(
            "d > eta*log(n): d = {d}, eta*log(n) = {}",
            eta * log_n
        ));
    }
    let p_cap = n.powf(-1.0 + eta);
    if p_max > p_cap {
        violations.push(format!(
            "p_max > n^(-1+eta): p_max = {p_max}, n^(-1+eta) = {p_cap}"
        ));
    }
    HypothesisCheck {
        kappa,
        eta,
        satisfied: violations.is_empty(),
        violations,
    }
}

/// One sampled realization, stored as a symmetric CSR adjacency structure.
///
/// Neighbor lists are sorted ascending; a loop appears once in its own row
/// and contributes 1 to the degree.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    degrees: Vec<u32>,
    edge_count: usize,
    loop_count: usize,
    pub seed: u64,
    pub replica_index: u64,
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges, loops included.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn loop_count(&self) -> usize {
        self.loop_count
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Neighbors of `i`, sorted ascending (contains `i` itself for a loop).
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Iterates edges as pairs `(i, j)` with `i ≤ j`, each edge once.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j as usize >= i)
                .map(move |&j| (i as u32, j))
        })
    }

    /// Builds a graph directly from an edge list (pairs `i ≤ j`, loops as
    /// `(i,i)`). Intended for fixtures and for subgraphs.
    pub fn from_edges(n: usize, edges: &[(u32, u32)], seed: u64, replica_index: u64) -> Self {
        build_graph(n, edges, seed, replica_index)
    }

    /// Writes the edge-list text format: header `# n=<n> seed=<seed>
    /// replica=<r>`, then one `i j` pair per line, 0-based.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# n={} seed={} replica={}",
            self.n, self.seed, self.replica_index
        )?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    /// Connected components as sorted vertex lists (loops are irrelevant).
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n];
        let mut comps = Vec::new();
        let mut queue = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.clear();
            queue.push(start as u32);
            let mut comp = vec![start as u32];
            while let Some(v) = queue.pop() {
                for &w in self.neighbors(v as usize) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        queue.push(w);
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

/// 64-bit finalizer used to derive independent replica streams.
///
/// splitmix64 output mixing (Steele, Lea & Flood 2014): the replica stream is
/// `splitmix64(splitmix64(seed) ^ (replica + 1) * 0x9E3779B97F4A7C15)`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for `(seed, replica)`; replicas are order-insensitive.
pub fn replica_stream(seed: u64, replica: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ (replica.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_stream(seed, replica))
}

/// Samples a realization of the model. Bit-identical output for identical
/// `(model, seed, replica_index)` regardless of thread count; cost
/// `O(n + #edges)` in expectation for homogeneous and SBM kinds.
pub fn sample_graph(model: &EdgeProbabilityModel, seed: u64, replica_index: u64) -> SampledGraph {
    let mut rng = replica_rng(seed, replica_index);
    let n = model.n();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    match model.kind() {
        ModelKind::Homogeneous { p } => {
            let pairs = n as u64 * (n as u64 - 1) / 2;
            sample_pair_region(&mut rng, *p, pairs, &mut edges, |u| unrank_triangular(u, n as u64));
            if model.allow_loops() {
                sample_pair_region(&mut rng, *p, n as u64, &mut edges, |u| (u as u32, u as u32));
            }
        }
        ModelKind::Sbm {
            block_sizes,
            block_offsets,
            block_matrix,
            ..
        } => {
            let blocks = block_sizes.len();
            for a in 0..blocks {
                let sa = block_sizes[a] as u64;
                let oa = block_offsets[a] as u64;
                for b in a..blocks {
                    let p = block_matrix[a][b];
                    if b == a {
                        let pairs = sa * (sa - 1) / 2;
                        sample_pair_region(&mut rng, p, pairs, &mut edges, |u| {
                            let (i, j) = unrank_triangular(u, sa);
                            ((oa + i as u64) as u32, (oa + j as u64) as u32)
                        });
                    } else {
                        let sb = block_sizes[b] as u64;
                        let ob = block_offsets[b] as u64;
                        sample_pair_region(&mut rng, p, sa * sb, &mut edges, |u| {
                            ((oa + u / sb) as u32, (ob + u % sb) as u32)
                        });
                    }
                }
                if model.allow_loops() {
                    let p = block_matrix[a][a];
                    sample_pair_region(&mut rng, p, sa, &mut edges, |u| {
                        ((oa + u) as u32, (oa + u) as u32)
                    });
                }
            }
        }
        ModelKind::General { matrix } => {
            for i in 0..n {
                let lo = if model.allow_loops() { i } else { i + 1 };
                for j in lo..n {
                    let p = matrix[i * n + j];
                    if p > 0.0 && rng.gen::<f64>() < p {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
        }
    }

    build_graph(n, &edges, seed, replica_index)
}

/// Draws `Binomial(pairs, p)` distinct pair indices from a region and decodes
/// them through `decode`. When more than half the region is occupied, the
/// complement is drawn instead, so the cost stays `O(#edges)`.
fn sample_pair_region<F>(
    rng: &mut ChaCha8Rng,
    p: f64,
    pairs: u64,
    edges: &mut Vec<(u32, u32)>,
    decode: F,
) where
    F: Fn(u64) -> (u32, u32),
{
    if pairs == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for u in 0..pairs {
            edges.push(decode(u));
        }
        return;
    }
    let count = Binomial::new(pairs, p)
        .expect("validated probability")
        .sample(rng);
    if count == 0 {
        return;
    }
    if count * 2 <= pairs {
        let mut chosen: HashSet<u64> = HashSet::with_capacity(count as usize * 2);
        while (chosen.len() as u64) < count {
            let u = rng.gen_range(0..pairs);
            if chosen.insert(u) {
                edges.push(decode(u));
            }
        }
    } else {
        // Dense region: pick the complement, then emit everything else.
        let excluded = pairs - count;
        let mut out: HashSet<u64> = HashSet::with_capacity(excluded as usize * 2);
        while (out.len() as u64) < excluded {
            let u = rng.gen_range(0..pairs);
            out.insert(u);
        }
        for u in 0..pairs {
            if !out.contains(&u) {
                edges.push(decode(u));
            }
        }
    }
}

/// Decodes a lexicographic pair index `u ∈ [0, n(n−1)/2)` into `(i, j)`,
/// `i < j`, where pairs with smaller `i` come first.
fn unrank_triangular(u: u64, n: u64) -> (u32, u32) {
    // Pairs with first coordinate < i occupy i*n - i*(i+1)/2 slots.
    // Invert with a float guess, then fix up exactly.
    let uf = u as f64;
    let nf = n as f64;
    let mut i = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0) * (2.0 * nf - 1.0) - 8.0 * uf).sqrt()) / 2.0)
        .floor() as u64;
    i = i.min(n - 2);
    let base = |i: u64| i * n - i * (i + 1) / 2;
    while base(i) > u {
        i -= 1;
    }
    while i + 1 <= n - 2 && base(i + 1) <= u {
        i += 1;
    }
    let j = i + 1 + (u - base(i));
    debug_assert!(j < n);
    (i as u32, j as u32)
}

fn build_graph(n: usize, edges: &[(u32, u32)], seed: u64, replica_index: u64) -> SampledGraph {
    let mut degrees = vec![0u32; n];
    let mut row_len = vec![0u32; n];
    let mut loop_count = 0usize;
    for &(i, j) in edges {
        degrees[i as usize] += 1;
        row_len[i as usize] += 1;
        if i == j {
            loop_count += 1;
        } else {
            degrees[j as usize] += 1;
            row_len[j as usize] += 1;
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0usize;
    offsets.push(0);
    for i in 0..n {
        acc += row_len[i] as usize;
        offsets.push(acc);
    }
    let mut neighbors = vec![0u32; acc];
    let mut cursor: Vec<usize> = offsets[..n].to_vec();
    for &(i, j) in edges {
        neighbors[cursor[i as usize]] = j;
        cursor[i as usize] += 1;
        if i != j {
            neighbors[cursor[j as usize]] = i;
            cursor[j as usize] += 1;
        }
    }
    for i in 0..n {
        neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    SampledGraph {
        n,
        offsets,
        neighbors,
        degrees,
        edge_count: edges.len(),
        loop_count,
        seed,
        replica_index,
    }
}

/// Degrees sorted nonincreasing (`D↓`).
pub fn ordered_degrees(graph: &SampledGraph) -> Vec<u32> {
    let mut d = graph.degrees().to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    d
}

/// Vertex sets `V_{≥t} = {i : D_i ≥ t}` and `V_{=t} = {i : D_i = t}`,
/// both sorted ascending.
pub fn threshold_sets(graph: &SampledGraph, t: u32) -> (Vec<u32>, Vec<u32>) {
    let mut geq = Vec::new();
    let mut eq = Vec::new();
    for (i, &d) in graph.degrees().iter().enumerate() {
        if d >= t {
            geq.push(i as u32);
            if d == t {
                eq.push(i as u32);
            }
        }
    }
    (geq, eq)
}

/// Builds a star graph: vertex 0 is the center, joined to `d` leaves.
pub fn star_graph(d: usize) -> SampledGraph {
    let edges: Vec<(u32, u32)> = (1..=d as u32).map(|j| (0, j)).collect();
    SampledGraph::from_edges(d + 1, &edges, 0, 0)
}

/// Builds the complete graph on `n` vertices.
pub fn complete_graph(n: usize) -> SampledGraph {
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            edges.push((i, j));
        }
    }
    SampledGraph::from_edges(n, &edges, 0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(n: usize, p: f64) -> EdgeProbabilityModel {
        build_model(ModelSpec::Homogeneous { n, p }, false).unwrap()
    }

    #[test]
    fn homogeneous_cached_degrees() {
        let m = homogeneous(4, 0.5);
        assert_eq!(m.mean_degree(0), 1.5);
        assert_eq!(m.max_mean_degree(), 1.5);
        assert_eq!(m.p_max(), 0.5);
    }

    #[test]
    fn sbm_identity_blocks() {
        let m = build_model(
            ModelSpec::Sbm {
                block_sizes: vec![2, 2],
                block_matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            false,
        )
        .unwrap();
        for i in 0..4 {
            assert_eq!(m.mean_degree(i), 1.0);
        }
        assert_eq!(m.p(0, 1), 1.0);
        assert_eq!(m.p(0, 2), 0.0);
        assert_eq!(m.p(1, 0), 1.0);
    }

    #[test]
    fn general_asymmetric_rejected() {
        let mut matrix = vec![0.0; 9];
        matrix[1 * 3 + 2] = 0.3;
        matrix[2 * 3 + 1] = 0.4;
        let err = build_model(ModelSpec::General { n: 3, matrix }, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn general_over_dense_limit_rejected() {
        let err = build_model_with_limit(
            ModelSpec::General {
                n: 11,
                matrix: vec![0.0; 121],
            },
            false,
            10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn probability_out_of_range_rejected() {
        assert!(build_model(ModelSpec::Homogeneous { n: 3, p: 1.2 }, false).is_err());
        assert!(build_model(ModelSpec::Homogeneous { n: 3, p: f64::NAN }, false).is_err());
    }

    #[test]
    fn hypothesis_check_examples() {
        // n = round(e^10), d = 2 via p = d/(n-1).
        let n = (10.0f64).exp().round() as usize;
        let m = homogeneous(n, 2.0 / (n as f64 - 1.0));
        let hc = check_hypotheses(&m, 1.0, 0.5);
        assert!(hc.satisfied, "violations: {:?}", hc.violations);

        let zero = homogeneous(100, 0.0);
        let hc = check_hypotheses(&zero, 1.0, 0.5);
        assert!(!hc.satisfied);
        assert!(hc.violations.iter().any(|v| v.contains("d < kappa")));

        let dense = homogeneous(100, 1.0);
        let hc = check_hypotheses(&dense, 1.0, 0.1);
        assert!(!hc.satisfied);
        assert!(hc.violations.iter().any(|v| v.contains("p_max")));
    }

    #[test]
    fn sample_extremes() {
        let empty = sample_graph(&homogeneous(5, 0.0), 1, 0);
        assert_eq!(empty.edge_count(), 0);
        assert!(empty.degrees().iter().all(|&d| d == 0));

        let full = sample_graph(&homogeneous(4, 1.0), 1, 0);
        assert_eq!(full.edge_count(), 6);
        assert!(full.degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = homogeneous(200, 0.02);
        let a = sample_graph(&m, 42, 3);
        let b = sample_graph(&m, 42, 3);
        assert_eq!(a.neighbors, b.neighbors);
        assert_eq!(a.offsets, b.offsets);
        let c = sample_graph(&m, 42, 4);
        assert_ne!(a.neighbors, c.neighbors);
    }

    #[test]
    fn degree_sum_is_twice_edges() {
        let m = homogeneous(500, 0.01);
        for r in 0..5 {
            let g = sample_graph(&m, 7, r);
            let sum: u64 = g.degrees().iter().map(|&d| d as u64).sum();
            assert_eq!(
                sum,
                2 * (g.edge_count() - g.loop_count()) as u64 + g.loop_count() as u64
            );
        }
    }

    #[test]
    fn loops_contribute_one_degree() {
        let m = build_model(ModelSpec::Homogeneous { n: 3, p: 1.0 }, true).unwrap();
        let g = sample_graph(&m, 0, 0);
        // K3 plus a loop at every vertex.
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.loop_count(), 3);
        assert!(g.degrees().iter().all(|&d| d == 3));
        assert!(g.neighbors(0).contains(&0));
    }

    #[test]
    fn mean_edge_count_matches_binomial() {
        // Monte Carlo mean over 10^4 seeds vs the exact binomial mean,
        // within 3 standard errors of the exact binomial variance.
        let n = 1000usize;
        let p = 3.0 / 1000.0;
        let m = homogeneous(n, p);
        let pairs = (n * (n - 1) / 2) as f64;
        let runs = 10_000u64;
        let mut total = 0u64;
        for r in 0..runs {
            total += sample_graph(&m, 20_240_601, r).edge_count() as u64;
        }
        let mean = total as f64 / runs as f64;
        let exact_mean = pairs * p;
        let se = (pairs * p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (mean - exact_mean).abs() <= 3.0 * se,
            "mean {mean} vs {exact_mean} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn fast_sampler_distribution_matches_theory() {
        // Chi-squared over all 64 edge sets of n = 4 at p = 0.3, 10^5 seeds.
        // The per-pair Bernoulli law gives each set probability
        // p^|E| (1-p)^(6-|E|); rejection fails only above the 1e-3 level.
        let n = 4usize;
        let p = 0.3f64;
        let m = homogeneous(n, p);
        let runs = 100_000u64;
        let mut counts = [0u64; 64];
        for r in 0..runs {
            let g = sample_graph(&m, 99, r);
            let mut mask = 0usize;
            for (i, j) in g.edges() {
                let u = pair_rank(i as usize, j as usize, n);
                mask |= 1 << u;
            }
            counts[mask] += 1;
        }
        let mut chi2 = 0.0;
        for (mask, &c) in counts.iter().enumerate() {
            let e = mask.count_ones() as i32;
            let prob = p.powi(e) * (1.0 - p).powi(6 - e);
            let expected = prob * runs as f64;
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // Wilson-Hilferty: chi2 critical value at significance 1e-3, 63 dof.
        let dof = 63.0f64;
        let z = 3.090_232_306_167_813; // standard normal quantile at 0.999
        let crit = dof * (1.0 - 2.0 / (9.0 * dof) + z * (2.0 / (9.0 * dof)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 = {chi2:.2} over critical {crit:.2}");
    }

    fn pair_rank(i: usize, j: usize, n: usize) -> usize {
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    #[test]
    fn unrank_roundtrip() {
        let n = 37u64;
        let mut u = 0u64;
        for i in 0..n - 1 {
            for j in i + 1..n {
                assert_eq!(unrank_triangular(u, n), (i as u32, j as u32));
                u += 1;
            }
        }
    }

    #[test]
    fn ordered_degrees_examples() {
        let star = star_graph(5);
        assert_eq!(ordered_degrees(&star), vec![5, 1, 1, 1, 1, 1]);
        let k4 = complete_graph(4);
        assert_eq!(ordered_degrees(&k4), vec![3, 3, 3, 3]);
        let empty = SampledGraph::from_edges(3, &[], 0, 0);
        assert_eq!(ordered_degrees(&empty), vec![0, 0, 0]);
    }

    #[test]
    fn threshold_sets_examples() {
        let star = star_graph(5);
        let (geq, eq) = threshold_sets(&star, 2);
        assert_eq!(geq, vec![0]);
        assert!(eq.is_empty());

        let (geq, _) = threshold_sets(&star, 0);
        assert_eq!(geq.len(), 6);

        let k4 = complete_graph(4);
        let (geq, eq) = threshold_sets(&k4, 3);
        assert_eq!(geq, vec![0, 1, 2, 3]);
        assert_eq!(eq, vec![0, 1, 2, 3]);
    }

    #[test]
    fn threshold_matches_ordered_degrees() {
        let m = homogeneous(300, 0.01);
        for r in 0..10 {
            let g = sample_graph(&m, 5, r);
            let ord = ordered_degrees(&g);
            for t in 0..10u32 {
                let (geq, _) = threshold_sets(&g, t);
                for k in 1..=g.n() {
                    let via_order = ord[k - 1] >= t;
                    let via_count = geq.len() >= k;
                    assert_eq!(via_order, via_count, "t={t} k={k}");
                }
            }
        }
    }

    #[test]
    fn edge_list_export_format() {
        let g = star_graph(2);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# n=3 seed=0 replica=0\n0 1\n0 2\n");
    }

    #[test]
    fn components_of_disjoint_stars() {
        let mut edges = vec![(0u32, 1), (0, 2)];
        edges.push((3, 4));
        let g = SampledGraph::from_edges(6, &edges, 0, 0);
        let comps = g.components();
        assert_eq!(comps.len(), 3);
        assert_eq!(comps[0], vec![0, 1, 2]);
        assert_eq!(comps[1], vec![3, 4]);
        assert_eq!(comps[2], vec![5]);
    }
}
