//! Dense symmetric eigensolver: Householder tridiagonalization, Sturm
//! bisection for eigenvalues, inverse iteration for selected eigenvectors.
//!
//! Bisection locates the k-th smallest eigenvalue through the Sturm count
//! (number of negative pivots of the shifted LDLᵀ factorization), which is
//! exact for clustered and multiple eigenvalues — every copy is found at its
//! own index. Eigenvectors come from shifted inverse iteration on the
//! tridiagonal form with per-member perturbations inside clusters, then a
//! back-transform through the stored Householder reflectors.

use crate::model::splitmix64;

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// keeping the reflectors for applying `Q` and `Qᵀ` later.
pub struct SymTridiagonalized {
    pub n: usize,
    pub diag: Vec<f64>,
    /// Subdiagonal, length `n − 1`.
    pub off: Vec<f64>,
    /// Reflector vectors (normalized so `v[0] = 1`) and their `β`,
    /// one per elimination step `k`, acting on rows `k+1..n`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

/// Reduces row-major symmetric `a` (n×n, overwritten) to tridiagonal form.
pub fn tridiagonalize(a: &mut [f64], n: usize) -> SymTridiagonalized {
    assert_eq!(a.len(), n * n);
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut off = vec![0.0f64; n.saturating_sub(1)];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1; // length of the column below the diagonal
        let mut x = vec![0.0f64; m];
        for i in 0..m {
            x[i] = a[(k + 1 + i) * n + k];
        }
        let sigma: f64 = x[1..].iter().map(|&v| v * v).sum();
        let x0 = x[0];

        if sigma == 0.0 {
            // Already in tridiagonal position for this column.
            off[k] = x0;
            reflectors.push((vec![0.0; m], 0.0));
            continue;
        }

        let mu = (x0 * x0 + sigma).sqrt();
        let v0 = if x0 <= 0.0 { x0 - mu } else { -sigma / (x0 + mu) };
        let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
        let mut v = x;
        v[0] = 1.0;
        for w in v[1..].iter_mut() {
            *w /= v0;
        }

        // p = beta * A_sub * v over the trailing (m x m) block.
        let mut p = vec![0.0f64; m];
        for i in 0..m {
            let row = (k + 1 + i) * n + (k + 1);
            let mut acc = 0.0;
            for j in 0..m {
                acc += a[row + j] * v[j];
            }
            p[i] = beta * acc;
        }
        let pv: f64 = p.iter().zip(&v).map(|(&pi, &vi)| pi * vi).sum();
        let half = 0.5 * beta * pv;
        let w: Vec<f64> = p
            .iter()
            .zip(&v)
            .map(|(&pi, &vi)| pi - half * vi)
            .collect();
        for i in 0..m {
            let row = (k + 1 + i) * n + (k + 1);
            for j in 0..m {
                a[row + j] -= v[i] * w[j] + w[i] * v[j];
            }
        }

        // The reflected column is (mu, 0, ..., 0): with v0 = x0 − mu
        // (computed stably for either sign of x0), Hx = +mu e1.
        off[k] = mu;
        a[(k + 1) * n + k] = mu;
        for i in 1..m {
            a[(k + 1 + i) * n + k] = 0.0;
        }
        reflectors.push((v, beta));
    }
    if n >= 2 {
        off[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    SymTridiagonalized {
        n,
        diag,
        off,
        reflectors,
    }
}

impl SymTridiagonalized {
    /// Applies `Q = H_0 H_1 ⋯` to `y` in place (tridiagonal basis → original).
    pub fn apply_q(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let seg = &mut y[k + 1..self.n];
            let dot: f64 = seg.iter().zip(v).map(|(&a, &b)| a * b).sum();
            let s = beta * dot;
            for (yi, &vi) in seg.iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
    }

    /// Applies `Qᵀ` to `y` in place (original basis → tridiagonal).
    pub fn apply_qt(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            if *beta == 0.0 {
                continue;
            }
            let seg = &mut y[k + 1..self.n];
            let dot: f64 = seg.iter().zip(v).map(|(&a, &b)| a * b).sum();
            let s = beta * dot;
            for (yi, &vi) in seg.iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
    }
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`
/// (negative pivots of the shifted LDLᵀ factorization).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < 1e-300 {
            if q >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            q
        };
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of the tridiagonal matrix, ascending, via bisection.
pub fn tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    // Gershgorin interval.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let scale = hi.abs().max(lo.abs()).max(1e-300);
    lo -= 1e-12 * scale + 1e-300;
    hi += 1e-12 * scale + 1e-300;

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // Shrink the initial bracket using already-found values: eigenvalue
        // k is at least the previous one.
        let mut a = out.last().copied().unwrap_or(lo);
        let mut b = hi;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if b - a <= 2.0 * f64::EPSILON * mid.abs().max(1e-300) {
                break;
            }
            if sturm_count(diag, off, mid) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Solves `(T − shift I) x = b` for a tridiagonal `T` with partial pivoting
/// (two superdiagonals of fill-in). Returns false when a pivot underflows.
fn shifted_tridiag_solve(diag: &[f64], off: &[f64], shift: f64, b: &mut [f64]) -> bool {
    let n = diag.len();
    if n == 0 {
        return false;
    }
    // Working bands: sub (below), d (main), c1 (first super), c2 (second).
    let mut d: Vec<f64> = diag.iter().map(|&v| v - shift).collect();
    let mut c1 = vec![0.0f64; n];
    let mut c2 = vec![0.0f64; n];
    for i in 0..n - 1 {
        c1[i] = off[i];
    }
    let mut sub: Vec<f64> = off.to_vec();

    for i in 0..n - 1 {
        if sub[i].abs() > d[i].abs() {
            // Pivot: swap rows i and i+1 of the working factorization.
            // Row i holds (d[i], c1[i], c2[i]=0); row i+1 holds
            // (sub[i], d[i+1], c1[i+1]) at columns (i, i+1, i+2).
            let next_sup = if i + 1 < n - 1 { c1[i + 1] } else { 0.0 };
            let (s_i, d_i, d_next, c_i) = (sub[i], d[i], d[i + 1], c1[i]);
            d[i] = s_i;
            c1[i] = d_next;
            c2[i] = next_sup;
            sub[i] = d_i;
            d[i + 1] = c_i;
            if i + 1 < n - 1 {
                c1[i + 1] = 0.0;
            }
            b.swap(i, i + 1);
        }
        let piv = if d[i].abs() < 1e-300 {
            if d[i] >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            d[i]
        };
        let factor = sub[i] / piv;
        d[i + 1] -= factor * c1[i];
        if i + 1 < n - 1 {
            c1[i + 1] -= factor * c2[i];
        }
        b[i + 1] -= factor * b[i];
        sub[i] = 0.0;
    }
    // Back substitution.
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= c1[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= c2[i] * b[i + 2];
        }
        let piv = if d[i].abs() < 1e-300 {
            if d[i] >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            d[i]
        };
        b[i] = acc / piv;
    }
    true
}

fn seeded_unit_vector(n: usize, tag: u64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let mut state = splitmix64(0xD1F7_AC31 ^ tag);
    for _ in 0..n {
        state = splitmix64(state);
        v.push(((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
    }
    let norm = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Eigenvectors of the tridiagonal matrix for the given (sorted-consecutive)
/// eigenvalue indices into `values`. Handles clusters by perturbed shifts
/// plus Gram-Schmidt within the cluster.
pub fn tridiag_eigenvectors(
    diag: &[f64],
    off: &[f64],
    values: &[f64],
    wanted: &[usize],
) -> Vec<Vec<f64>> {
    let n = diag.len();
    let scale = values
        .iter()
        .fold(1e-300f64, |m, &v| m.max(v.abs()))
        .max(off.iter().fold(0.0f64, |m, &v| m.max(v.abs())));
    let cluster_tol = 1e-8 * scale;

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(wanted.len());
    let mut cluster_start = 0usize;
    for (pos, &idx) in wanted.iter().enumerate() {
        // A new cluster starts when the eigenvalue is separated from the
        // previous wanted one, or indices are non-consecutive.
        if pos > 0 {
            let prev = wanted[pos - 1];
            if idx != prev + 1 || (values[idx] - values[prev]).abs() > cluster_tol {
                cluster_start = pos;
            }
        }
        let in_cluster = pos - cluster_start;
        let theta = values[idx];
        let mut vec = None;
        for attempt in 0..4u64 {
            let pert = (in_cluster as f64) * 1e-12 * scale
                + attempt as f64 * 3e-12 * scale;
            let shift = theta + pert;
            let mut x = seeded_unit_vector(n, (idx as u64) << 8 | attempt);
            for _ in 0..3 {
                if !shifted_tridiag_solve(diag, off, shift, &mut x) {
                    break;
                }
                // Orthogonalize inside the cluster before normalizing.
                for prev in &out[cluster_start..pos] {
                    let d: f64 = x.iter().zip(prev).map(|(&a, &b)| a * b).sum();
                    for (xi, &pi) in x.iter_mut().zip(prev) {
                        *xi -= d * pi;
                    }
                }
                let norm = x.iter().map(|&v| v * v).sum::<f64>().sqrt();
                if norm < 1e-280 {
                    break;
                }
                for v in &mut x {
                    *v /= norm;
                }
            }
            let norm = x.iter().map(|&v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() < 1e-6 {
                vec = Some(x);
                break;
            }
        }
        out.push(vec.unwrap_or_else(|| seeded_unit_vector(n, idx as u64)));
    }
    out
}

/// All eigenvalues of a row-major symmetric matrix, ascending.
pub fn sym_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[0]];
    }
    let tri = tridiagonalize(&mut a, n);
    tridiag_eigenvalues(&tri.diag, &tri.off)
}

/// Eigen-decomposition helper for the projected (block-tridiagonal) problem
/// inside the Lanczos solver: all eigenvalues plus eigenvectors on demand.
pub struct ProjectedEigen {
    tri: SymTridiagonalized,
    /// Ascending.
    pub values: Vec<f64>,
}

impl ProjectedEigen {
    pub fn new(mut a: Vec<f64>, n: usize) -> Self {
        let tri = tridiagonalize(&mut a, n);
        let values = tridiag_eigenvalues(&tri.diag, &tri.off);
        ProjectedEigen { tri, values }
    }

    /// Eigenvectors (original basis) for the given sorted value indices.
    pub fn vectors(&self, wanted: &[usize]) -> Vec<Vec<f64>> {
        let mut vecs = tridiag_eigenvectors(&self.tri.diag, &self.tri.off, &self.values, wanted);
        for v in &mut vecs {
            self.tri.apply_q(v);
        }
        vecs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from_rows(rows: &[&[f64]]) -> (Vec<f64>, usize) {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            a.extend_from_slice(r);
        }
        (a, n)
    }

    #[test]
    fn diagonal_matrix() {
        let (a, n) = dense_from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -2.0]]);
        let vals = sym_eigenvalues(a, n);
        for (got, want) in vals.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.abs());
        }
    }

    #[test]
    fn complete_graph_spectrum() {
        // K4 adjacency: eigenvalues 3, -1, -1, -1.
        let mut a = vec![1.0; 16];
        for i in 0..4 {
            a[i * 4 + i] = 0.0;
        }
        let vals = sym_eigenvalues(a, 4);
        assert!((vals[3] - 3.0).abs() < 1e-12);
        for k in 0..3 {
            assert!((vals[k] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clean_chain_spectrum() {
        // Tridiagonal chain (0 diagonal, 1 off): 2 cos(k pi / (n+1)).
        let n = 40;
        let diag = vec![0.0; n];
        let off = vec![1.0; n - 1];
        let vals = tridiag_eigenvalues(&diag, &off);
        for k in 1..=n {
            let exact = 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            let best = vals
                .iter()
                .map(|&v| (v - exact).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-11, "k={k} err={best:e}");
        }
    }

    #[test]
    fn trace_preserved_random() {
        let n = 100usize;
        let mut state = 1u64;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                state = crate::model::splitmix64(state);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let vals = sym_eigenvalues(a, n);
        let sum: f64 = vals.iter().sum();
        assert!((sum - trace).abs() < 1e-9, "{sum} vs {trace}");
    }

    #[test]
    fn eigenvectors_satisfy_residual() {
        let n = 60usize;
        let mut state = 9u64;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                state = crate::model::splitmix64(state);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let eig = ProjectedEigen::new(a.clone(), n);
        let wanted: Vec<usize> = (0..n).collect();
        let vecs = eig.vectors(&wanted);
        for (idx, v) in wanted.iter().zip(&vecs) {
            let theta = eig.values[*idx];
            let mut res = 0.0f64;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a[i * n + j] * v[j];
                }
                res += (acc - theta * v[i]).powi(2);
            }
            assert!(res.sqrt() < 1e-9, "idx {idx}: residual {}", res.sqrt());
        }
        // Pairwise orthogonality.
        for i in 0..n {
            for j in 0..i {
                let d: f64 = vecs[i].iter().zip(&vecs[j]).map(|(&a, &b)| a * b).sum();
                assert!(d.abs() < 1e-8, "({i},{j}) overlap {d:e}");
            }
        }
    }

    #[test]
    fn multiple_eigenvalues_all_found() {
        // Two disjoint 3-stars: eigenvalues ±sqrt(3) each with multiplicity 2,
        // zeros elsewhere.
        let n = 8usize;
        let mut a = vec![0.0f64; n * n];
        for (c, leaves) in [(0usize, [1usize, 2, 3]), (4, [5, 6, 7])] {
            for l in leaves {
                a[c * n + l] = 1.0;
                a[l * n + c] = 1.0;
            }
        }
        let vals = sym_eigenvalues(a.clone(), n);
        let s3 = 3.0f64.sqrt();
        assert!((vals[0] + s3).abs() < 1e-12);
        assert!((vals[1] + s3).abs() < 1e-12);
        assert!((vals[6] - s3).abs() < 1e-12);
        assert!((vals[7] - s3).abs() < 1e-12);

        let eig = ProjectedEigen::new(a.clone(), n);
        let vecs = eig.vectors(&[6, 7]);
        let overlap: f64 = vecs[0].iter().zip(&vecs[1]).map(|(&x, &y)| x * y).sum();
        assert!(overlap.abs() < 1e-8);
        for v in &vecs {
            let mut res = 0.0f64;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a[i * n + j] * v[j];
                }
                res += (acc - s3 * v[i]).powi(2);
            }
            assert!(res.sqrt() < 1e-9);
        }
    }

    #[test]
    fn sturm_count_consistent_with_values() {
        let diag = vec![1.0, -0.5, 2.0, 0.0, -1.0];
        let off = vec![0.3, -0.7, 0.2, 0.9];
        let vals = tridiag_eigenvalues(&diag, &off);
        for (k, &v) in vals.iter().enumerate() {
            assert!(sturm_count(&diag, &off, v - 1e-9) <= k);
            assert!(sturm_count(&diag, &off, v + 1e-9) >= k + 1);
        }
    }
}
