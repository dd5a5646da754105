//! Block Lanczos with full reorthogonalization and deflated restarts.
//!
//! The solver converges extreme eigenpairs in batches: each restart builds a
//! block Krylov basis (full reorthogonalization, two-pass on drift), locks
//! the converged extreme Ritz pairs, and restarts with a fresh seeded random
//! block orthogonal to everything locked. Blocking plus restarting handles
//! clustered and genuinely multiple eigenvalues, which single-vector Lanczos
//! cannot see; the sparse graph spectra targeted here are full of exact
//! multiplicities (isomorphic components) and √degree clusters.
//!
//! Determinism: every inner product and update accumulates in a fixed order,
//! so results are bit-identical for any `Parallelism` mode or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::ProjectedEigen;
use super::{dot, norm2, SpectralReport, SymmetricOperator};
use crate::error::{Error, Result};
use crate::par::Parallelism;

/// Tuning knobs for [`extreme_eigenvalues_with`].
#[derive(Debug, Clone)]
pub struct LanczosParams {
    pub num_top: usize,
    pub num_bottom: usize,
    /// Relative residual tolerance: accept when `‖Av−θv‖ ≤ tol·max(1,|θ|)`.
    pub tol: f64,
    /// Budget on total block steps across restarts.
    pub max_steps: usize,
    pub start_seed: u64,
    /// Columns per Krylov block (multiplicity resolution per pass).
    pub block_size: usize,
    /// Per-restart acceptance target per side.
    pub batch: usize,
    /// Basis cap multiplier: the Krylov dimension per restart is
    /// `max(basis_mult · wanted_now, 60)` columns.
    pub basis_mult: usize,
    pub mode: Parallelism,
}

impl LanczosParams {
    pub fn new(num_top: usize, num_bottom: usize, tol: f64, max_steps: usize, seed: u64) -> Self {
        LanczosParams {
            num_top,
            num_bottom,
            tol,
            max_steps,
            start_seed: seed,
            block_size: 8,
            batch: 200,
            basis_mult: 4,
            mode: Parallelism::default(),
        }
    }
}

/// Extreme eigenvalues with residual certificates; deterministic in
/// `(op, parameters, start_seed)`. Non-convergence within the step budget
/// returns a report with `converged = false`, not an error.
pub fn extreme_eigenvalues(
    op: &SymmetricOperator<'_>,
    num_top: usize,
    num_bottom: usize,
    tol: f64,
    max_iter: usize,
    start_seed: u64,
) -> Result<SpectralReport> {
    extreme_eigenvalues_with(
        op,
        &LanczosParams::new(num_top, num_bottom, tol, max_iter, start_seed),
    )
}

/// Converged eigenvectors, aligned with the report's `top`/`bottom` lists.
pub struct ExtremeVectors {
    pub top: Vec<Vec<f64>>,
    pub bottom: Vec<Vec<f64>>,
}

/// [`extreme_eigenvalues_with`] that also hands back the Ritz vectors.
pub fn extreme_eigenpairs_with(
    op: &SymmetricOperator<'_>,
    p: &LanczosParams,
) -> Result<(SpectralReport, ExtremeVectors)> {
    solve(op, p, true).map(|(rep, vecs)| (rep, vecs.expect("vectors requested")))
}

pub fn extreme_eigenvalues_with(
    op: &SymmetricOperator<'_>,
    p: &LanczosParams,
) -> Result<SpectralReport> {
    solve(op, p, false).map(|(rep, _)| rep)
}

struct Locked {
    /// Column-major n×k storage of locked Ritz vectors.
    vectors: Vec<f64>,
    values: Vec<f64>,
    /// `true` = accepted from the top end.
    is_top: Vec<bool>,
}

impl Locked {
    fn count(&self) -> usize {
        self.values.len()
    }
    fn col(&self, n: usize, k: usize) -> &[f64] {
        &self.vectors[k * n..(k + 1) * n]
    }
}

fn solve(
    op: &SymmetricOperator<'_>,
    p: &LanczosParams,
    want_vectors: bool,
) -> Result<(SpectralReport, Option<ExtremeVectors>)> {
    let n = op.dim();
    if p.num_top + p.num_bottom > n {
        return Err(Error::Argument(format!(
            "requested {} + {} eigenvalues of a dimension-{n} operator",
            p.num_top, p.num_bottom
        )));
    }
    if !(p.tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    if p.num_top + p.num_bottom == 0 {
        return Ok((
            SpectralReport {
                top: vec![],
                bottom: vec![],
                iterations: 0,
                converged: true,
                seed: p.start_seed,
            },
            want_vectors.then(|| ExtremeVectors {
                top: vec![],
                bottom: vec![],
            }),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.start_seed);
    let mut locked = Locked {
        vectors: Vec::new(),
        values: Vec::new(),
        is_top: Vec::new(),
    };
    let mut total_steps = 0usize;
    let mut stagnant_cycles = 0usize;
    // Locked pairs leak their residuals into every later certificate: a
    // vector kept orthogonal to the locked set cannot certify below
    // sqrt(sum r_k^2). Converging each pair to ~tol/sqrt(K) keeps that
    // floor under tol for the whole run; admission stays at tol itself.
    let k_total = (p.num_top + p.num_bottom) as f64;
    let accept_tol = p.tol / (4.0 * (2.0 * k_total).sqrt());
    let admit_tol = p.tol;
    let mut carry: Option<Carry> = None;

    loop {
        let got_top = locked.is_top.iter().filter(|&&t| t).count();
        let got_bottom = locked.count() - got_top;
        let rem_top = p.num_top - got_top.min(p.num_top);
        let rem_bottom = p.num_bottom - got_bottom.min(p.num_bottom);
        if rem_top == 0 && rem_bottom == 0 {
            break;
        }
        let avail = n - locked.count();
        if avail == 0 || total_steps >= p.max_steps || stagnant_cycles >= 6 {
            break;
        }

        let wt = rem_top.min(p.batch);
        let wb = rem_bottom.min(p.batch);
        // Keep room for at least two blocks so the Krylov space can grow.
        let b = p.block_size.max(1).min((avail / 2).max(1));
        // The cap needs a floor in block *steps*: each step raises the
        // Krylov polynomial degree by one. Thick restarts carry the frontier
        // between cycles, so a moderate per-cycle depth suffices; a cycle
        // that leaves a needed side without progress still doubles the cap.
        let grow = stagnant_cycles.min(2);
        let mult = p.basis_mult << grow;
        let m_cap = (mult * (wt + wb))
            .max(60)
            .max((32 << grow) * b)
            .min(avail);

        if std::env::var("LANCZOS_DEBUG").is_ok() {
            eprintln!(
                "cycle: locked={} rem=({rem_top},{rem_bottom}) m_cap={m_cap} b={b} steps={total_steps}",
                locked.count()
            );
        }
        let (acc_top, acc_bottom) = run_cycle(
            op,
            p,
            &mut rng,
            &mut locked,
            &mut carry,
            wt,
            wb,
            b,
            m_cap,
            accept_tol,
            admit_tol,
            &mut total_steps,
        );
        if std::env::var("LANCZOS_NO_CARRY").is_ok() {
            carry = None;
        }
        let starved = (rem_top > 0 && acc_top == 0) || (rem_bottom > 0 && acc_bottom == 0);
        if starved {
            stagnant_cycles += 1;
        } else {
            stagnant_cycles = 0;
        }
    }

    // Exact residual certificates for everything locked.
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    let mut all_ok = true;
    let mut av = vec![0.0f64; n];
    for k in 0..locked.count() {
        let z = locked.col(n, k);
        op.apply(z, &mut av, p.mode);
        let theta = locked.values[k];
        let mut res2 = 0.0f64;
        for i in 0..n {
            let r = av[i] - theta * z[i];
            res2 += r * r;
        }
        let res = res2.sqrt() / theta.abs().max(1.0);
        if res > p.tol {
            all_ok = false;
        }
        if locked.is_top[k] {
            top.push((theta, res, k));
        } else {
            bottom.push((theta, res, k));
        }
    }
    top.sort_by(|a, b| b.0.total_cmp(&a.0));
    bottom.sort_by(|a, b| a.0.total_cmp(&b.0));
    top.truncate(p.num_top);
    bottom.truncate(p.num_bottom);
    let converged = all_ok && top.len() == p.num_top && bottom.len() == p.num_bottom;
    let vectors = want_vectors.then(|| ExtremeVectors {
        top: top.iter().map(|&(_, _, k)| locked.col(n, k).to_vec()).collect(),
        bottom: bottom
            .iter()
            .map(|&(_, _, k)| locked.col(n, k).to_vec())
            .collect(),
    });
    Ok((
        SpectralReport {
            top: top.into_iter().map(|(v, r, _)| (v, r)).collect(),
            bottom: bottom.into_iter().map(|(v, r, _)| (v, r)).collect(),
            iterations: total_steps,
            converged,
            seed: p.start_seed,
        },
        vectors,
    ))
}

/// Frontier state carried between thick-restart cycles: the unconverged
/// extreme Ritz vectors plus the orthonormal residual block that continues
/// the Krylov recurrence.
struct Carry {
    /// Column-major n×k kept Ritz vectors.
    vectors: Vec<f64>,
    values: Vec<f64>,
    /// Residual norm of each kept pair (its Krylov convergence state).
    res_norms: Vec<f64>,
    /// Column-major n×rb residual block (empty after rank exhaustion).
    residual: Vec<f64>,
    rb: usize,
}

/// One thick-restart cycle: seed the basis with the carried frontier, grow
/// the block Krylov space to `m_cap` columns, lock the converged extreme
/// pairs, and store the new frontier in `carry`. Returns locks per side.
///
/// Each step Gram-Schmidts `W = A·V_last` against the locked set and the
/// whole basis, recording the projection coefficients into T. T is therefore
/// exactly `Vᵀ(A − locked)V` — correct through breakdown replacements,
/// through the shrunken final block that lets the basis exhaust the space,
/// and for carried Ritz vectors (whose mutual couplings are exactly their
/// diagonal Ritz values).
#[allow(clippy::too_many_arguments)]
fn run_cycle(
    op: &SymmetricOperator<'_>,
    p: &LanczosParams,
    rng: &mut ChaCha8Rng,
    locked: &mut Locked,
    carry: &mut Option<Carry>,
    wt: usize,
    wb: usize,
    b: usize,
    m_cap: usize,
    accept_tol: f64,
    admit_tol: f64,
    total_steps: &mut usize,
) -> (usize, usize) {
    let n = op.dim();
    let mode = p.mode;
    let mut basis = vec![0.0f64; n * m_cap];
    let mut tmat = vec![0.0f64; m_cap * m_cap];
    let mut tscale = 1e-300f64;

    // Seed with the carried frontier when available, otherwise start fresh.
    let mut m = 0usize;
    let mut cur_b = b;
    let mut seeded = false;
    let mut kept_res: Vec<f64> = Vec::new();
    if let Some(c) = carry.take() {
        let keep = c.values.len().min(m_cap.saturating_sub(2 * b));
        if keep > 0 && c.rb > 0 {
            // Seed the kept frontier, re-orthogonalizing each vector against
            // the locked set (which grew at the end of the previous cycle)
            // and the vectors seeded so far. A vector that loses most of its
            // norm is a ghost of a locked pair and is dropped.
            let mut kcount = 0usize;
            for i in 0..keep {
                let dst = kcount * n;
                basis.copy_within(0..0, 0); // no-op, keeps borrowck simple
                basis[dst..dst + n].copy_from_slice(&c.vectors[i * n..(i + 1) * n]);
                let mut ok = true;
                for _pass in 0..2 {
                    project_out_single(locked, n, &mut basis, kcount);
                    reorth_single_prefix(n, &mut basis, kcount);
                    let nn = norm2(&basis[dst..dst + n]);
                    if nn < 0.7 {
                        ok = false;
                        break;
                    }
                    let col = &mut basis[dst..dst + n];
                    for v in col.iter_mut() {
                        *v /= nn;
                    }
                }
                if ok {
                    tmat[kcount * m_cap + kcount] = c.values[i];
                    tscale = tscale.max(c.values[i].abs());
                    kept_res.push(c.res_norms[i]);
                    kcount += 1;
                }
            }
            // Carried residual block, same hygiene (rank loss tolerated).
            let rb = c.rb.min(m_cap - kcount);
            if rb > 0 {
                basis[kcount * n..(kcount + rb) * n].copy_from_slice(&c.residual[..rb * n]);
                let mut rkeep = 0usize;
                for i in 0..rb {
                    let src = (kcount + i) * n;
                    let dst = (kcount + rkeep) * n;
                    if i != rkeep {
                        basis.copy_within(src..src + n, dst);
                    }
                    let mut ok = true;
                    for _pass in 0..2 {
                        project_out_single(locked, n, &mut basis, kcount + rkeep);
                        reorth_single_prefix(n, &mut basis, kcount + rkeep);
                        let nn = norm2(&basis[dst..dst + n]);
                        if nn < 0.7 {
                            ok = false;
                            break;
                        }
                        let col = &mut basis[dst..dst + n];
                        for v in col.iter_mut() {
                            *v /= nn;
                        }
                    }
                    if ok {
                        rkeep += 1;
                    }
                }
                if kcount + rkeep > 0 && rkeep > 0 {
                    m = kcount + rkeep;
                    cur_b = rkeep;
                    seeded = true;
                } else if kcount > 0 {
                    // No usable residual block: continue from a random one.
                    fill_random_block(&mut basis[kcount * n..(kcount + b.min(m_cap - kcount)) * n], rng);
                    let nb = b.min(m_cap - kcount);
                    for i in 0..nb {
                        for _pass in 0..2 {
                            project_out_single(locked, n, &mut basis, kcount + i);
                            reorth_single_prefix(n, &mut basis, kcount + i);
                            let dst = (kcount + i) * n;
                            let nn = norm2(&basis[dst..dst + n]);
                            if nn > 1e-12 {
                                let col = &mut basis[dst..dst + n];
                                for v in col.iter_mut() {
                                    *v /= nn;
                                }
                            }
                        }
                    }
                    m = kcount + nb;
                    cur_b = nb;
                    seeded = true;
                }
            }
        }
    }
    if !seeded {
        fill_random_block(&mut basis[0..n * b], rng);
        project_out(locked, n, &mut basis[0..n * b], b);
        project_out(locked, n, &mut basis[0..n * b], b);
        let mut scratch_r = vec![0.0f64; b * b];
        mgs_qr_with_replacement(
            &mut basis[0..n * b],
            n,
            b,
            &mut scratch_r,
            locked,
            &[],
            rng,
            1e-12,
        );
        m = b;
        cur_b = b;
    }

    let mut w = vec![0.0f64; n * b];
    let mut bnext = vec![0.0f64; b * b];
    let check1 = (m_cap * 3 / 5 / b).max(1) * b;
    let check2 = (m_cap * 17 / 20 / b).max(1) * b;

    loop {
        // W = A · V_last (the last cur_b columns).
        let j0 = m - cur_b;
        for t in 0..cur_b {
            let (head, tail) = w.split_at_mut(t * n);
            let _ = head;
            let wcol = &mut tail[..n];
            op.apply(&basis[(j0 + t) * n..(j0 + t + 1) * n], wcol, mode);
        }
        let w_act = &mut w[..cur_b * n];
        *total_steps += 1;

        // One classical Gram-Schmidt pass over [locked | basis]; the basis
        // coefficients are the new T column block (couplings to every older
        // column plus the diagonal block).
        project_out(locked, n, w_act, cur_b);
        let coeff = gemm_tn(&basis[..m * n], n, m, w_act, cur_b);
        for j in 0..j0 {
            for c in 0..cur_b {
                let v = coeff[j * cur_b + c];
                tmat[j * m_cap + (j0 + c)] = v;
                tmat[(j0 + c) * m_cap + j] = v;
                tscale = tscale.max(v.abs());
            }
        }
        for r in 0..cur_b {
            for c in 0..cur_b {
                let v = 0.5 * (coeff[(j0 + r) * cur_b + c] + coeff[(j0 + c) * cur_b + r]);
                tmat[(j0 + r) * m_cap + (j0 + c)] = v;
                tscale = tscale.max(v.abs());
            }
        }
        gemm_nn_sub(w_act, n, cur_b, &basis[..m * n], m, &coeff);

        // Unconditional second sweep ("twice is enough"): keeps the basis
        // orthonormal to machine precision at any depth, which is what makes
        // T a faithful projection. Corrections are O(ε) and not recorded.
        full_reorth(&basis[..m * n], n, m, w_act, cur_b);
        project_out(locked, n, w_act, cur_b);

        let replaced = mgs_qr_with_replacement(
            w_act,
            n,
            cur_b,
            &mut bnext[..cur_b * cur_b],
            locked,
            &basis[..m * n],
            rng,
            1e-13 * tscale.max(1.0),
        );

        let exhausted = replaced == cur_b;
        let next_b = b.min(m_cap - m);
        let at_cap = next_b == 0;
        let checkpoint =
            at_cap || exhausted || m == check1 || m == check2 || *total_steps >= p.max_steps;

        if checkpoint {
            let bview = if exhausted {
                None
            } else {
                Some(&bnext[..cur_b * cur_b])
            };
            let final_here = at_cap || exhausted || *total_steps >= p.max_steps;
            let accepted = try_accept(
                &tmat, m_cap, m, cur_b, bview, &kept_res, wt, wb, accept_tol,
                if final_here { b + b / 2 + 2 } else { 0 },
            );
            let top_done = accepted.top_count >= wt;
            let bottom_done = accepted.bottom_count >= wb;
            if (top_done && bottom_done) || final_here {
                let counts = (accepted.top_count, accepted.bottom_count);
                // New frontier: kept Ritz vectors plus the residual block.
                *carry = if exhausted || accepted.kept.is_empty() {
                    None
                } else {
                    let kcount = accepted.kept.len();
                    let mut kvecs = vec![0.0f64; kcount * n];
                    let mut kvals = Vec::with_capacity(kcount);
                    let mut kres = Vec::with_capacity(kcount);
                    for (i, (theta, res, s)) in accepted.kept.iter().enumerate() {
                        gemv_cols_add(&basis[..m * n], n, m, s, &mut kvecs[i * n..(i + 1) * n]);
                        kvals.push(*theta);
                        kres.push(*res);
                    }
                    Some(Carry {
                        vectors: kvecs,
                        values: kvals,
                        res_norms: kres,
                        residual: w[..cur_b * n].to_vec(),
                        rb: cur_b,
                    })
                };
                if counts.0 + counts.1 > 0 {
                    let (lt, lb) = lock_pairs(op, p, admit_tol, locked, &basis[..m * n], accepted);
                    return (lt, lb);
                }
                return counts;
            }
        }

        // Append the next block (possibly shrunk near the cap). Its T
        // couplings are written when it is processed on the next step.
        basis[m * n..(m + next_b) * n].copy_from_slice(&w[..next_b * n]);
        m += next_b;
        cur_b = next_b;
    }
}

struct Accepted {
    top_count: usize,
    bottom_count: usize,
    /// `(θ, is_top, eigenvector of T)` for every accepted pair.
    picks: Vec<(f64, bool, Vec<f64>)>,
    /// Unconverged frontier pairs `(θ, residual estimate, eigenvector of T)`
    /// to carry into the next cycle.
    kept: Vec<(f64, f64, Vec<f64>)>,
}

/// Scans the projected spectrum for contiguously converged extreme pairs,
/// and (when `keep_pad > 0`) collects the unconverged frontier on each
/// needed side for the thick restart.
#[allow(clippy::too_many_arguments)]
fn try_accept(
    tmat: &[f64],
    m_cap: usize,
    m: usize,
    b: usize,
    bnext: Option<&[f64]>,
    kept_res: &[f64],
    wt: usize,
    wb: usize,
    accept_tol: f64,
    keep_pad: usize,
) -> Accepted {
    // Dense copy of the leading m×m block of T.
    let mut a = vec![0.0f64; m * m];
    for r in 0..m {
        for c in 0..m {
            a[r * m + c] = tmat[r * m_cap + c];
        }
    }
    let eig = ProjectedEigen::new(a, m);

    let mut wanted_idx: Vec<usize> = Vec::new();
    let want_top = (wt + if wt > 0 { keep_pad } else { 0 }).min(m);
    let want_bottom = (wb + if wb > 0 { keep_pad } else { 0 }).min(m);
    for i in 0..want_top {
        wanted_idx.push(m - 1 - i);
    }
    for i in 0..want_bottom {
        wanted_idx.push(i);
    }
    wanted_idx.sort_unstable();
    wanted_idx.dedup();
    let vecs = eig.vectors(&wanted_idx);
    let residual_of = |pos: usize| -> f64 {
        let s = &vecs[pos];
        let mut est = match bnext {
            None => 0.0,
            Some(bn) => {
                let mut r2 = 0.0f64;
                let s_last = &s[m - b..m];
                for r in 0..b {
                    let mut acc = 0.0;
                    for c in 0..b {
                        acc += bn[r * b + c] * s_last[c];
                    }
                    r2 += acc * acc;
                }
                r2.sqrt()
            }
        };
        let _ = kept_res;
        est
    };
    let pos_of = |idx: usize| wanted_idx.binary_search(&idx).expect("requested index");

    if std::env::var("LANCZOS_DEBUG").is_ok() && keep_pad > 0 {
        let tops: Vec<String> = (0..3.min(want_top))
            .map(|i| {
                let idx = m - 1 - i;
                format!("{:.6}/{:.1e}", eig.values[idx], residual_of(pos_of(idx)))
            })
            .collect();
        let bots: Vec<String> = (0..3.min(want_bottom))
            .map(|idx| format!("{:.6}/{:.1e}", eig.values[idx], residual_of(pos_of(idx))))
            .collect();
        eprintln!("  final m={m}: top {tops:?} bottom {bots:?} tol={accept_tol:.1e}");
    }
    let mut picks: Vec<(f64, bool, Vec<f64>)> = Vec::new();
    let mut taken: Vec<usize> = Vec::new();
    let mut top_count = 0usize;
    for i in 0..wt.min(m) {
        let idx = m - 1 - i;
        let theta = eig.values[idx];
        let pos = pos_of(idx);
        if residual_of(pos) <= accept_tol * theta.abs().max(1.0) {
            picks.push((theta, true, vecs[pos].clone()));
            taken.push(idx);
            top_count += 1;
        } else {
            break;
        }
    }
    let mut bottom_count = 0usize;
    for idx in 0..wb.min(m) {
        if taken.contains(&idx) {
            break;
        }
        let theta = eig.values[idx];
        let pos = pos_of(idx);
        if residual_of(pos) <= accept_tol * theta.abs().max(1.0) {
            picks.push((theta, false, vecs[pos].clone()));
            taken.push(idx);
            bottom_count += 1;
        } else {
            break;
        }
    }
    // Frontier to carry: the next unaccepted indices on each needed side.
    let mut kept: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    if keep_pad > 0 {
        let keep_top = (wt + keep_pad / 2).min(want_top);
        for i in top_count..keep_top {
            let idx = m - 1 - i;
            if taken.contains(&idx) {
                break;
            }
            let pos = pos_of(idx);
            kept.push((eig.values[idx], residual_of(pos), vecs[pos].clone()));
        }
        let keep_bottom = (wb + keep_pad / 2).min(want_bottom);
        for idx in bottom_count..keep_bottom {
            if taken.contains(&idx) {
                break;
            }
            let pos = pos_of(idx);
            kept.push((eig.values[idx], residual_of(pos), vecs[pos].clone()));
        }
    }
    Accepted {
        top_count,
        bottom_count,
        picks,
        kept,
    }
}

/// Builds Ritz vectors for the accepted pairs, certifies each against the
/// operator, and appends the genuine ones to the locked set. A candidate
/// nearly parallel to the locked set is a ghost copy of an already-locked
/// pair (deflation leakage) and is dropped, as is anything whose true
/// residual exceeds the tolerance. Returns certified locks per side.
fn lock_pairs(
    op: &SymmetricOperator<'_>,
    p: &LanczosParams,
    admit_tol: f64,
    locked: &mut Locked,
    basis: &[f64],
    accepted: Accepted,
) -> (usize, usize) {
    let n = op.dim();
    let mut av = vec![0.0f64; n];
    let mut taken = (0usize, 0usize);
    for (theta, is_top, s) in accepted.picks {
        let m = s.len();
        let mut z = vec![0.0f64; n];
        gemv_cols_add(&basis[..m * n], n, m, &s, &mut z);
        // Orthogonalize against the locked set; a genuinely new eigenvector
        // keeps nearly all of its norm here.
        let dots: Vec<f64> = (0..locked.count())
            .map(|k| dot(locked.col(n, k), &z))
            .collect();
        for (k, &d) in dots.iter().enumerate() {
            let col = &locked.vectors[k * n..(k + 1) * n];
            for i in 0..n {
                z[i] -= d * col[i];
            }
        }
        let nz = norm2(&z);
        if nz < 0.5 {
            if std::env::var("LANCZOS_DEBUG").is_ok() {
                eprintln!("  reject ghost: theta={theta} nz={nz:e}");
            }
            continue;
        }
        for zi in z.iter_mut() {
            *zi /= nz;
        }
        op.apply(&z, &mut av, p.mode);
        let mut res2 = 0.0f64;
        for i in 0..n {
            let r = av[i] - theta * z[i];
            res2 += r * r;
        }
        if res2.sqrt() > admit_tol * theta.abs().max(1.0) {
            if std::env::var("LANCZOS_DEBUG").is_ok() {
                eprintln!("  reject residual: theta={theta} r={:e} nz={nz}", res2.sqrt());
            }
            continue;
        }
        locked.vectors.extend_from_slice(&z);
        locked.values.push(theta);
        locked.is_top.push(is_top);
        if is_top {
            taken.0 += 1;
        } else {
            taken.1 += 1;
        }
    }
    taken
}

fn fill_random_block(block: &mut [f64], rng: &mut ChaCha8Rng) {
    for v in block.iter_mut() {
        *v = rng.gen::<f64>() - 0.5;
    }
}

/// `W -= Y (Yᵀ W)` against the locked set, fixed order.
fn project_out(locked: &Locked, n: usize, w: &mut [f64], b: usize) {
    let k = locked.count();
    if k == 0 {
        return;
    }
    let coeff = gemm_tn(&locked.vectors, n, k, w, b);
    gemm_nn_sub(w, n, b, &locked.vectors, k, &coeff);
}

/// `W -= V (Vᵀ W)` over the active basis.
fn full_reorth(basis: &[f64], n: usize, m: usize, w: &mut [f64], b: usize) {
    let coeff = gemm_tn(basis, n, m, w, b);
    gemm_nn_sub(w, n, b, basis, m, &coeff);
}

/// `C = Vᵀ W` where `V` is n×m and `W` is n×b, both column-major.
/// Returns row-major m×b. L1-chunked, fixed accumulation order.
fn gemm_tn(v: &[f64], n: usize, m: usize, w: &[f64], b: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; m * b];
    const CHUNK: usize = 2048;
    for j in 0..m {
        let vj = &v[j * n..(j + 1) * n];
        let mut acc = vec![0.0f64; b];
        let mut start = 0usize;
        while start < n {
            let end = (start + CHUNK).min(n);
            for (t, a) in acc.iter_mut().enumerate() {
                *a += dot(&vj[start..end], &w[t * n + start..t * n + end]);
            }
            start = end;
        }
        c[j * b..(j + 1) * b].copy_from_slice(&acc);
    }
    c
}

/// `W -= V C` where `V` is n×m column-major, `C` is m×b row-major.
fn gemm_nn_sub(w: &mut [f64], n: usize, b: usize, v: &[f64], m: usize, c: &[f64]) {
    const CHUNK: usize = 2048;
    let mut start = 0usize;
    while start < n {
        let end = (start + CHUNK).min(n);
        for j in 0..m {
            let vj = &v[j * n + start..j * n + end];
            for t in 0..b {
                let coeff = c[j * b + t];
                if coeff == 0.0 {
                    continue;
                }
                let wt = &mut w[t * n + start..t * n + end];
                for (wi, &vi) in wt.iter_mut().zip(vj) {
                    *wi -= coeff * vi;
                }
            }
        }
        start = end;
    }
}

/// `z += Σ_j s[j] · V_j` with fixed order.
fn gemv_cols_add(v: &[f64], n: usize, m: usize, s: &[f64], z: &mut [f64]) {
    const CHUNK: usize = 4096;
    let mut start = 0usize;
    while start < n {
        let end = (start + CHUNK).min(n);
        for j in 0..m {
            let coeff = s[j];
            if coeff == 0.0 {
                continue;
            }
            let vj = &v[j * n + start..j * n + end];
            let zc = &mut z[start..end];
            for (zi, &vi) in zc.iter_mut().zip(vj) {
                *zi += coeff * vi;
            }
        }
        start = end;
    }
}

/// Modified Gram-Schmidt QR of the n×b block `w`; columns falling below
/// `breakdown_tol` are replaced by fresh random directions orthogonal to the
/// locked set, the active basis, and the block so far (their R column stays
/// zero). Returns the number of replaced columns.
#[allow(clippy::too_many_arguments)]
fn mgs_qr_with_replacement(
    w: &mut [f64],
    n: usize,
    b: usize,
    r_out: &mut [f64],
    locked: &Locked,
    basis: &[f64],
    rng: &mut ChaCha8Rng,
    breakdown_tol: f64,
) -> usize {
    r_out.fill(0.0);
    let m = basis.len() / n.max(1);
    let mut replaced = 0usize;
    for cidx in 0..b {
        // MGS against previous block columns (twice; both corrections
        // belong to the same R entry).
        for _pass in 0..2 {
            for prev in 0..cidx {
                let (head, tail) = w.split_at_mut(cidx * n);
                let pcol = &head[prev * n..(prev + 1) * n];
                let col = &mut tail[..n];
                let d = dot(pcol, col);
                r_out[prev * b + cidx] += d;
                for (ci, &pi) in col.iter_mut().zip(pcol) {
                    *ci -= d * pi;
                }
            }
        }
        let nn = norm2(&w[cidx * n..(cidx + 1) * n]);
        if nn > breakdown_tol {
            r_out[cidx * b + cidx] = nn;
            let col = &mut w[cidx * n..(cidx + 1) * n];
            for v in col.iter_mut() {
                *v /= nn;
            }
            continue;
        }
        // Breakdown: substitute a fresh direction; R column reads zero.
        replaced += 1;
        r_out[cidx * b + cidx] = 0.0;
        let mut ok = false;
        for _attempt in 0..4 {
            {
                let col = &mut w[cidx * n..(cidx + 1) * n];
                for v in col.iter_mut() {
                    *v = rng.gen::<f64>() - 0.5;
                }
            }
            for _pass in 0..2 {
                project_out_single(locked, n, w, cidx);
                if m > 0 {
                    reorth_single(basis, n, m, w, cidx);
                }
                for prev in 0..cidx {
                    let (head, tail) = w.split_at_mut(cidx * n);
                    let pcol = &head[prev * n..(prev + 1) * n];
                    let col = &mut tail[..n];
                    let d = dot(pcol, col);
                    for (ci, &pi) in col.iter_mut().zip(pcol) {
                        *ci -= d * pi;
                    }
                }
            }
            let nn = norm2(&w[cidx * n..(cidx + 1) * n]);
            if nn > 1e-8 {
                let col = &mut w[cidx * n..(cidx + 1) * n];
                for v in col.iter_mut() {
                    *v /= nn;
                }
                ok = true;
                break;
            }
        }
        if !ok {
            // Space exhausted; zero the column.
            w[cidx * n..(cidx + 1) * n].fill(0.0);
        }
    }
    replaced
}

fn project_out_single(locked: &Locked, n: usize, w: &mut [f64], cidx: usize) {
    for k in 0..locked.count() {
        let d = {
            let col = &w[cidx * n..(cidx + 1) * n];
            dot(locked.col(n, k), col)
        };
        let lcol = &locked.vectors[k * n..(k + 1) * n];
        let col = &mut w[cidx * n..(cidx + 1) * n];
        for (ci, &li) in col.iter_mut().zip(lcol) {
            *ci -= d * li;
        }
    }
}

/// MGS of basis column `cidx` against all earlier basis columns.
fn reorth_single_prefix(n: usize, basis: &mut [f64], cidx: usize) {
    for j in 0..cidx {
        let d = {
            let col = &basis[cidx * n..(cidx + 1) * n];
            dot(&basis[j * n..(j + 1) * n], col)
        };
        let (head, tail) = basis.split_at_mut(cidx * n);
        let bcol = &head[j * n..(j + 1) * n];
        let col = &mut tail[..n];
        for (ci, &bi) in col.iter_mut().zip(bcol) {
            *ci -= d * bi;
        }
    }
}

fn reorth_single(basis: &[f64], n: usize, m: usize, w: &mut [f64], cidx: usize) {
    for j in 0..m {
        let d = {
            let col = &w[cidx * n..(cidx + 1) * n];
            dot(&basis[j * n..(j + 1) * n], col)
        };
        let bcol = &basis[j * n..(j + 1) * n];
        let col = &mut w[cidx * n..(cidx + 1) * n];
        for (ci, &bi) in col.iter_mut().zip(bcol) {
            *ci -= d * bi;
        }
    }
}
