//! Exact Poisson-binomial distribution engine with Poisson and binomial
//! references.
//!
//! `Bin(p_1, …, p_n)` is the law of a sum of independent Bernoulli variables
//! with success probabilities `p_i`. The pmf is computed by the standard
//! O(n · k_max) convolution recurrence, truncated at `k_max` states plus the
//! tail mass beyond. Reference laws: Poisson with the same mean
//! `d = Σ p_i`, and the homogenized binomial `Bin(n, d/n)`.
//!
//! [`bound_report`] packages, for one threshold `k`, every quantity needed
//! to certify the tail bounds: the Poisson-approximation deviation and its
//! `p_max k^{5/2} / d` shape, the tail-to-pmf ratio against `d/k + shape`,
//! the Bennett bound `exp(−d h((k−d)/d))`, and the Lindeberg comparison
//! bounds `2 d p_max exp(−d h(((k−2−d)/d)_+))` (pmf) and half that (tail).
//! Bennett and Lindeberg are constant-free theorems: any violation beyond
//! float slack is a bug, and callers treat it as fatal.

use crate::error::{Error, Result};
use crate::theory::{bennett_h_pos, rate_function};

/// Truncated exact distribution of `Bin(p_1, …, p_n)`.
#[derive(Debug, Clone)]
pub struct TailDistribution {
    /// The inputs, sorted descending (sorting fixes the accumulation order,
    /// making the result bit-identical under permutation of the input).
    pub probabilities: Vec<f64>,
    /// Mean `d = Σ p_i`.
    pub d: f64,
    /// Largest single probability.
    pub p_max: f64,
    /// Truncation index: pmf stored for `k = 0..=k_max`.
    pub k_max: usize,
    /// `log P(X = k)` for `k = 0..=k_max` (−∞ where the pmf underflows).
    pub log_pmf: Vec<f64>,
    /// `log P(X > k_max)`.
    pub log_tail_at_kmax: f64,
}

impl TailDistribution {
    /// `P(X = k)`, zero beyond the truncation.
    pub fn pmf(&self, k: usize) -> f64 {
        if k <= self.k_max {
            self.log_pmf[k].exp()
        } else {
            0.0
        }
    }

    /// Upper tail `P(X ≥ t)` for `t ≤ k_max + 1`.
    ///
    /// Summed from the truncation end downward together with the stored
    /// tail mass, so small tails keep full relative precision.
    pub fn upper_tail(&self, t: usize) -> f64 {
        assert!(
            t <= self.k_max + 1,
            "tail at {t} not covered by truncation {}",
            self.k_max
        );
        let mut sum = Sum::new();
        sum.add(self.log_tail_at_kmax.exp());
        for k in (t..=self.k_max).rev() {
            sum.add(self.log_pmf[k].exp());
        }
        sum.value().min(1.0)
    }
}

/// Neumaier compensated accumulator.
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn new() -> Self {
        Sum { s: 0.0, c: 0.0 }
    }
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Exact truncated pmf of `Bin(p_1, …, p_n)`.
///
/// Errors when a probability is outside `[0,1]` or `k_max > n`. The linear
/// convolution has no cancellation (all terms nonnegative), so relative
/// error stays O(n·ε); when the tail mass at the truncation falls below
/// 1e−15 it is recomputed by a log-space pass with an absorbing state.
pub fn exact_pmf(probabilities: &[f64], k_max: usize) -> Result<TailDistribution> {
    let n = probabilities.len();
    for &p in probabilities {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0,1]")));
        }
    }
    if k_max > n {
        return Err(Error::Argument(format!(
            "k_max = {k_max} exceeds the number of trials {n}"
        )));
    }
    let mut probs = probabilities.to_vec();
    probs.sort_unstable_by(|a, b| b.partial_cmp(a).expect("no NaN after validation"));

    let mut dp = vec![0.0f64; k_max + 1];
    dp[0] = 1.0;
    let mut reach = 0usize; // highest index that can be nonzero so far
    for &p in &probs {
        let q = 1.0 - p;
        let hi = (reach + 1).min(k_max);
        let mut k = hi;
        while k > 0 {
            dp[k] = dp[k] * q + dp[k - 1] * p;
            k -= 1;
        }
        dp[0] *= q;
        reach = hi;
    }

    let mut total = Sum::new();
    for &v in dp.iter() {
        total.add(v);
    }
    let mut tail = 1.0 - total.value();
    if tail < 0.0 {
        tail = 0.0;
    }
    // The complement is only meaningful well above the accumulated rounding
    // of the n-step convolution; below that, rerun in log space.
    let log_tail = if k_max == n {
        f64::NEG_INFINITY
    } else if tail < 1e-6 {
        log_tail_by_logspace_dp(&probs, k_max)
    } else {
        tail.ln()
    };

    let mut d_sum = Sum::new();
    for &p in &probs {
        d_sum.add(p);
    }
    Ok(TailDistribution {
        d: d_sum.value(),
        p_max: probs.first().copied().unwrap_or(0.0),
        k_max,
        log_pmf: dp.iter().map(|&v| v.ln()).collect(),
        log_tail_at_kmax: log_tail,
        probabilities: probs,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-space convolution with an absorbing state at `k_max + 1`; returns
/// `log P(X > k_max)` without underflow.
fn log_tail_by_logspace_dp(probs_sorted: &[f64], k_max: usize) -> f64 {
    let mut lp = vec![f64::NEG_INFINITY; k_max + 1];
    lp[0] = 0.0;
    let mut labsorb = f64::NEG_INFINITY;
    for &p in probs_sorted {
        let lq = (-p).ln_1p();
        let lpn = p.ln();
        // Absorbed mass stays absorbed; it only grows from the boundary state.
        labsorb = log_add(labsorb, lp[k_max] + lpn);
        let mut k = k_max;
        while k > 0 {
            lp[k] = log_add(lp[k] + lq, lp[k - 1] + lpn);
            k -= 1;
        }
        lp[0] += lq;
    }
    labsorb
}

/// Iterative `log k!` for small `k`, Stirling's series beyond.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k <= 256 {
        let mut acc = 0.0f64;
        for i in 2..=k {
            acc += (i as f64).ln();
        }
        return acc;
    }
    // Stirling series for ln Γ(z+1) at z = k; six correction terms give
    // absolute error below 1e-16 for z > 256.
    let z = k as f64;
    let zi = 1.0 / z;
    let zi2 = zi * zi;
    (z + 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + zi * (1.0 / 12.0
            + zi2 * (-1.0 / 360.0
                + zi2 * (1.0 / 1260.0 + zi2 * (-1.0 / 1680.0 + zi2 * (1.0 / 1188.0)))))
}

/// Poisson reference: `(log P(Y = k), log P(Y > k))` for `Y ~ Poisson(d)`.
pub fn poisson_reference(d: f64, k: u64) -> Result<(f64, f64)> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("poisson mean must be > 0, got {d}")));
    }
    let kf = k as f64;
    let log_pmf = kf * d.ln() - d - ln_factorial(k);
    let log_tail = if kf >= d {
        // Forward sum of the decaying terms beyond k, factored by P(Y = k).
        let mut term = 1.0f64;
        let mut acc = 0.0f64;
        let mut j = k + 1;
        loop {
            term *= d / j as f64;
            let prev = acc;
            acc += term;
            if acc == prev || j > k + 2000 {
                break;
            }
            j += 1;
        }
        log_pmf + acc.ln()
    } else {
        // Below the mode the tail is Θ(1): complement of the lower sum.
        let mut lower = Sum::new();
        let mut lterm = (-d).exp();
        lower.add(lterm);
        for j in 1..=k {
            lterm *= d / j as f64;
            lower.add(lterm);
        }
        (1.0 - lower.value()).max(0.0).ln()
    };
    Ok((log_pmf, log_tail))
}

/// Stirling approximation to the Poisson log-pmf: `−f_d(k)`. Exposed for
/// validating the `e^{−f}` tail predictor against the exact reference.
pub fn poisson_log_pmf_stirling(d: f64, k: u64) -> Result<f64> {
    Ok(-rate_function(k as f64, d)?)
}

/// Binomial reference `Bin(n, d/n)`: `(log P(Z = k), log P(Z > k))`.
pub fn binomial_reference(n: usize, d: f64, k: u64) -> Result<(f64, f64)> {
    if !(d >= 0.0) || d > n as f64 {
        return Err(Error::Domain(format!(
            "binomial mean must lie in [0, n] = [0, {n}], got {d}"
        )));
    }
    let nf = n as f64;
    let p = d / nf;
    if k as usize > n {
        return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }
    let log_choose = |k: u64| -> f64 {
        ln_factorial(n as u64) - ln_factorial(k) - ln_factorial(n as u64 - k)
    };
    let log_pmf_at = |k: u64| -> f64 {
        if p == 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        if p == 1.0 {
            return if k as usize == n { 0.0 } else { f64::NEG_INFINITY };
        }
        log_choose(k) + k as f64 * p.ln() + (nf - k as f64) * (-p).ln_1p()
    };
    let log_pmf = log_pmf_at(k);
    let log_tail = if k as usize == n {
        f64::NEG_INFINITY
    } else if k as f64 >= d {
        // Forward sum with ratio (n-j)p / ((j+1)(1-p)), decreasing past the mode.
        let mut term = 1.0f64;
        let mut acc = 0.0f64;
        for j in k..n as u64 {
            term *= (nf - j as f64) * p / ((j as f64 + 1.0) * (1.0 - p));
            let prev = acc;
            acc += term;
            if acc == prev {
                break;
            }
        }
        log_pmf + acc.ln()
    } else {
        let mut lower = Sum::new();
        for j in 0..=k {
            lower.add(log_pmf_at(j).exp());
        }
        (1.0 - lower.value()).max(0.0).ln()
    };
    Ok((log_pmf, log_tail))
}

/// Every certified quantity for one `(distribution, k)` pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: u64,
    pub d: f64,
    pub p_max: f64,
    pub exact_pmf: f64,
    pub exact_tail: f64,
    pub poisson_pmf: f64,
    pub poisson_tail: f64,
    /// `|P(X=k)/P(Y=k) − 1|`.
    pub ratio_deviation: f64,
    /// `p_max k^{5/2} / d`.
    pub theorem_pmf_shape: f64,
    /// `P(X>k) / P(X=k)`.
    pub tail_ratio: f64,
    /// `d/k + p_max k^{5/2} / d`.
    pub tail_ratio_shape: f64,
    /// `exp(−d h((k−d)/d))`, bound on `P(X ≥ k)`.
    pub bennett_bound: f64,
    /// `2 d p_max exp(−d h(((k−2−d)/d)_+))`, bound on `|P(X=k) − Q(k)|`.
    pub lindeberg_pmf_bound: f64,
    /// `d p_max exp(−d h(((k−2−d)/d)_+))`, bound on `|P(X>k) − Q(>k)|`.
    pub lindeberg_tail_bound: f64,
    pub bennett_holds: bool,
    pub lindeberg_pmf_holds: bool,
    pub lindeberg_tail_holds: bool,
    /// Whether `2d ≤ k ≤ (d/p_max)^{2/5}` (unit-constant regime proxy).
    pub in_regime: bool,
}

/// Float slack allowed on the hard inequalities.
pub const HARD_SLACK: f64 = 1e-12;

/// Builds a [`BoundReport`] for threshold `k` over the given probabilities.
pub fn bound_report(probabilities: &[f64], k: u64) -> Result<BoundReport> {
    let n = probabilities.len();
    if (k as usize) > n {
        return Err(Error::Argument(format!("k = {k} exceeds n = {n}")));
    }
    let dist = exact_pmf(probabilities, k as usize)?;
    let d = dist.d;
    if !(d > 0.0) {
        return Err(Error::Domain("bound_report needs d > 0".into()));
    }
    let p_max = dist.p_max;
    let exact_pmf_v = dist.pmf(k as usize);
    let exact_tail = dist.log_tail_at_kmax.exp();
    let (lp, lt) = poisson_reference(d, k)?;
    let poisson_pmf = lp.exp();
    let poisson_tail = lt.exp();

    let ratio_deviation = (exact_pmf_v / poisson_pmf - 1.0).abs();
    let kf = k as f64;
    let theorem_pmf_shape = p_max * kf.powf(2.5) / d;
    let tail_ratio = if exact_pmf_v > 0.0 {
        exact_tail / exact_pmf_v
    } else {
        f64::INFINITY
    };
    let tail_ratio_shape = d / kf + theorem_pmf_shape;

    let bennett_bound = (-d * bennett_h_pos((kf - d) / d)).exp();
    let exact_geq = dist.upper_tail(k as usize);
    let bennett_holds = exact_geq <= bennett_bound + HARD_SLACK;

    let lind_exp = (-d * bennett_h_pos((kf - 2.0 - d) / d)).exp();
    let lindeberg_pmf_bound = 2.0 * d * p_max * lind_exp;
    let lindeberg_tail_bound = d * p_max * lind_exp;
    let (qlp, qlt) = binomial_reference(n, d, k)?;
    let lindeberg_pmf_holds =
        (exact_pmf_v - qlp.exp()).abs() <= lindeberg_pmf_bound + HARD_SLACK;
    let lindeberg_tail_holds =
        (exact_tail - qlt.exp()).abs() <= lindeberg_tail_bound + HARD_SLACK;

    let in_regime = 2.0 * d <= kf && (p_max == 0.0 || kf <= (d / p_max).powf(0.4));

    Ok(BoundReport {
        n,
        k,
        d,
        p_max,
        exact_pmf: exact_pmf_v,
        exact_tail,
        poisson_pmf,
        poisson_tail,
        ratio_deviation,
        theorem_pmf_shape,
        tail_ratio,
        tail_ratio_shape,
        bennett_bound,
        lindeberg_pmf_bound,
        lindeberg_tail_bound,
        bennett_holds,
        lindeberg_pmf_holds,
        lindeberg_tail_holds,
        in_regime,
    })
}

/// Which fitted constant to extract from a set of reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWhich {
    /// Poisson-approximation deviation vs `p_max k^{5/2}/d`.
    PmfDeviation,
    /// Tail-to-pmf ratio vs `d/k + p_max k^{5/2}/d`.
    TailRatio,
}

/// Smallest constant making the selected inequality hold on the sample:
/// `max` over reports of measured/shape.
pub fn fit_constant(reports: &[BoundReport], which: FitWhich) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Argument("fit_constant needs at least one report".into()));
    }
    let mut c = 0.0f64;
    for r in reports {
        let (measured, shape) = match which {
            FitWhich::PmfDeviation => (r.ratio_deviation, r.theorem_pmf_shape),
            FitWhich::TailRatio => (r.tail_ratio, r.tail_ratio_shape),
        };
        if shape <= 0.0 {
            return Err(Error::Argument("nonpositive shape in fit_constant".into()));
        }
        c = c.max(measured / shape);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::splitmix64;
    use crate::theory::bennett_h;

    fn uniform_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn tiny_pmfs_by_hand() {
        let d = exact_pmf(&[0.5], 1).unwrap();
        assert!((d.pmf(0) - 0.5).abs() < 1e-15);
        assert!((d.pmf(1) - 0.5).abs() < 1e-15);

        let d = exact_pmf(&[0.1, 0.2, 0.3], 3).unwrap();
        assert!((d.pmf(0) - 0.9 * 0.8 * 0.7).abs() < 1e-15);
        assert!((d.pmf(3) - 0.006).abs() < 1e-15);

        let d = exact_pmf(&[0.5, 0.5, 0.5], 3).unwrap();
        // Binomial-coefficient oracle: C(3,k) / 8.
        let oracle = [1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0];
        for (k, &o) in oracle.iter().enumerate() {
            assert!((d.pmf(k) - o).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(exact_pmf(&[1.2], 1).is_err());
        assert!(exact_pmf(&[f64::NAN], 1).is_err());
        assert!(exact_pmf(&[0.5, 0.5], 3).is_err());
    }

    #[test]
    fn normalization_and_tail() {
        let mut u = uniform_stream(11);
        for n in [5usize, 50, 500] {
            let probs: Vec<f64> = (0..n).map(|_| u()).collect();
            let k_max = (n / 2).max(1);
            let d = exact_pmf(&probs, k_max).unwrap();
            let total: f64 = (0..=k_max).map(|k| d.pmf(k)).sum::<f64>()
                + d.log_tail_at_kmax.exp();
            assert!((total - 1.0).abs() < 1e-12, "n={n}: total {total}");
        }
    }

    #[test]
    fn permutation_invariance_bitwise() {
        let mut u = uniform_stream(23);
        let probs: Vec<f64> = (0..64).map(|_| u()).collect();
        let mut shuffled = probs.clone();
        shuffled.reverse();
        shuffled.swap(3, 40);
        let a = exact_pmf(&probs, 30).unwrap();
        let b = exact_pmf(&shuffled, 30).unwrap();
        assert_eq!(a.log_pmf, b.log_pmf);
        assert_eq!(a.log_tail_at_kmax.to_bits(), b.log_tail_at_kmax.to_bits());
    }

    #[test]
    fn zero_probability_entries_are_noops() {
        let probs = vec![0.2, 0.4, 0.1];
        let mut padded = probs.clone();
        padded.extend([0.0; 7]);
        let a = exact_pmf(&probs, 3).unwrap();
        let b = exact_pmf(&padded, 3).unwrap();
        for k in 0..=3 {
            assert_eq!(a.pmf(k).to_bits(), b.pmf(k).to_bits());
        }
        let ra = bound_report(&probs, 2).unwrap();
        let rb = bound_report(&padded, 2).unwrap();
        assert_eq!(ra.exact_pmf.to_bits(), rb.exact_pmf.to_bits());
        assert_eq!(ra.ratio_deviation.to_bits(), rb.ratio_deviation.to_bits());
    }

    #[test]
    fn homogeneous_matches_binomial_closed_form() {
        for n in [10usize, 100, 1000] {
            let d = (n as f64 / 5.0).min(20.0);
            let p = d / n as f64;
            let probs = vec![p; n];
            let k_max = n.min(200);
            let dist = exact_pmf(&probs, k_max).unwrap();
            for k in 0..=k_max {
                let (lp, _) = binomial_reference(n, d, k as u64).unwrap();
                let got = dist.log_pmf[k];
                let rel = (got - lp).abs() / lp.abs().max(1.0);
                assert!(rel <= 1e-10, "n={n} k={k}: {got} vs {lp} rel={rel}");
            }
        }
    }

    #[test]
    fn logspace_tail_fallback_is_accurate() {
        // d = 20 at n = 10^4: P(X > 200) ~ 1e-285 underflows the linear pass.
        let n = 10_000usize;
        let d = 20.0;
        let probs = vec![d / n as f64; n];
        let dist = exact_pmf(&probs, 200).unwrap();
        assert!(dist.log_tail_at_kmax.is_finite());
        let (_, lt) = binomial_reference(n, d, 200).unwrap();
        let rel = (dist.log_tail_at_kmax - lt).abs() / lt.abs();
        assert!(rel <= 1e-8, "log tail {} vs {lt}", dist.log_tail_at_kmax);
    }

    #[test]
    fn poisson_reference_values() {
        let (lp, _) = poisson_reference(1.5, 0).unwrap();
        assert!((lp - (-1.5)).abs() < 1e-14);
        let (lp, _) = poisson_reference(1.0, 1).unwrap();
        assert!((lp - (-1.0)).abs() < 1e-14);
        // Tail vs brute-force partial sum.
        let d = 3.0;
        let (_, lt) = poisson_reference(d, 7).unwrap();
        let mut acc = 0.0;
        for j in 8..200u64 {
            acc += (j as f64 * d.ln() - d - ln_factorial(j)).exp();
        }
        assert!((lt.exp() - acc).abs() < 1e-14);
    }

    #[test]
    fn poisson_tail_below_mode() {
        let d = 50.0;
        let (_, lt) = poisson_reference(d, 3).unwrap();
        // P(Y > 3) is essentially 1.
        assert!(lt <= 0.0 && lt > -1e-6);
    }

    #[test]
    fn stirling_comparison_decreasing_in_k() {
        // |log P(Y=k) + f_d(k)| is the Stirling-series remainder ~ 1/(12k):
        // bounded by c0/(10k) with c0 < 1, and decreasing in k.
        let d = 3.0;
        let mut prev = f64::INFINITY;
        for k in [10u64, 20, 40] {
            let (lp, _) = poisson_reference(d, k).unwrap();
            let err = (lp - poisson_log_pmf_stirling(d, k).unwrap()).abs();
            assert!(err <= 0.9 / (10.0 * k as f64), "k={k}: err {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn binomial_reference_values() {
        let (lp, _) = binomial_reference(3, 1.5, 1).unwrap();
        assert!((lp.exp() - 0.375).abs() < 1e-14);
        let (lp, lt) = binomial_reference(5, 2.0, 9).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
        assert_eq!(lt, f64::NEG_INFINITY);
        assert!(binomial_reference(5, 7.0, 1).is_err());
    }

    #[test]
    fn binomial_vs_poisson_deviation_shrinks_like_k2_over_n() {
        // Fitted C over k for each n stays stable while the deviation falls
        // like 1/n.
        let d = 2.0;
        let mut fitted = Vec::new();
        for n in [1000usize, 10_000, 100_000] {
            let mut c: f64 = 0.0;
            for k in 4..=20u64 {
                let (lp, _) = binomial_reference(n, d, k).unwrap();
                let (ly, _) = poisson_reference(d, k).unwrap();
                let dev = (lp.exp() / ly.exp() - 1.0).abs();
                c = c.max(dev * n as f64 / (k * k) as f64);
            }
            fitted.push(c);
        }
        let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fitted.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 3.0, "fitted C unstable: {fitted:?}");
    }

    #[test]
    fn bennett_holds_on_randomized_instances() {
        let mut u = uniform_stream(5);
        for trial in 0..100 {
            let n = 5 + (u() * 295.0) as usize;
            let scale = u();
            let probs: Vec<f64> = (0..n).map(|_| (u() * scale).min(1.0)).collect();
            let d: f64 = probs.iter().sum();
            if d <= 0.0 {
                continue;
            }
            let dist = exact_pmf(&probs, n).unwrap();
            for m in (d.ceil() as usize)..=n {
                let t = (m as f64 - d) / d;
                let bound = (-d * bennett_h(t).unwrap()).exp();
                let exact = dist.upper_tail(m);
                assert!(
                    exact <= bound + HARD_SLACK,
                    "trial {trial}: P(X >= {m}) = {exact} > {bound}"
                );
            }
        }
    }

    #[test]
    fn lindeberg_holds_on_random_instance() {
        let mut u = uniform_stream(77);
        let n = 100usize;
        let probs: Vec<f64> = (0..n).map(|_| u() * 0.3).collect();
        for k in 0..=30u64 {
            let r = bound_report(&probs, k).unwrap();
            assert!(r.lindeberg_pmf_holds, "pmf form at k={k}: {r:?}");
            assert!(r.lindeberg_tail_holds, "tail form at k={k}: {r:?}");
        }
    }

    #[test]
    fn degenerate_homogeneous_report_matches_binomial_lemma() {
        // With p_i = d/n the exact law IS Bin(n, d/n): the report's
        // ratio_deviation equals the binomial-vs-Poisson deviation.
        let n = 500usize;
        let d = 2.0;
        let probs = vec![d / n as f64; n];
        let r = bound_report(&probs, 6).unwrap();
        let (lp, _) = binomial_reference(n, d, 6).unwrap();
        let (ly, _) = poisson_reference(d, 6).unwrap();
        let oracle = (lp.exp() / ly.exp() - 1.0).abs();
        assert!((r.ratio_deviation - oracle).abs() <= 1e-10 * oracle.max(1e-30));
    }

    #[test]
    fn fit_constant_examples() {
        let mut r = bound_report(&vec![0.01; 200], 6).unwrap();
        r.ratio_deviation = 0.01;
        r.theorem_pmf_shape = 0.005;
        assert_eq!(fit_constant(&[r.clone()], FitWhich::PmfDeviation).unwrap(), 2.0);
        let mut zero = r.clone();
        zero.ratio_deviation = 0.0;
        let c = fit_constant(&[r, zero], FitWhich::PmfDeviation).unwrap();
        assert_eq!(c, 2.0);
        assert!(fit_constant(&[], FitWhich::PmfDeviation).is_err());
    }

    #[test]
    fn fitted_constant_stable_across_grid() {
        // Homogeneous grid n in {1e3, 1e4, 1e5}, d = 2, k = 6.
        let mut fitted = Vec::new();
        for n in [1000usize, 10_000, 100_000] {
            let probs = vec![2.0 / n as f64; n];
            let r = bound_report(&probs, 6).unwrap();
            fitted.push(fit_constant(&[r], FitWhich::PmfDeviation).unwrap());
        }
        let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fitted.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi.is_finite() && lo > 0.0);
        assert!(hi / lo < 3.0, "fitted constants: {fitted:?}");
    }

    #[test]
    fn deviation_shrinks_as_p_max_drops() {
        // Fixed d and k; homogeneous families with growing n have shrinking
        // p_max and the Poisson deviation must fall, staying under the
        // fitted-C x shape envelope.
        let d = 2.0;
        let k = 6u64;
        let mut prev = f64::INFINITY;
        let mut reports = Vec::new();
        for n in [500usize, 5_000, 50_000] {
            let probs = vec![d / n as f64; n];
            let r = bound_report(&probs, k).unwrap();
            assert!(r.ratio_deviation < prev);
            prev = r.ratio_deviation;
            reports.push(r);
        }
        let c = fit_constant(&reports, FitWhich::PmfDeviation).unwrap();
        for r in &reports {
            assert!(r.ratio_deviation <= c * r.theorem_pmf_shape + 1e-15);
        }
    }
}
