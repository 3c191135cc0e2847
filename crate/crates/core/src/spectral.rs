//! Smallest eigenvalues `α_n(q)` of `R_n²`, the spectral bounds that
//! sandwich them, the Gauss product/theta identity, the truncated-series
//! bound condition and its root, and the contraction data controlling norm
//! convergence of the level iterates.
//!
//! `α_n(q)` equals the smallest eigenvalue of `M_n`, read off the
//! Gram-symmetrized form `S = Γ^{1/2} [M_n] Γ^{-1/2}`. Every `α_n` lies in
//! `[gauss_product(|q|) / (1-|q|), 1 / (1-|q|)]`, and the iterates
//! `X_n = R_0 ⊕ … ⊕ R_n ⊕ (R_n ⊗ I) ⊕ …` contract with factor
//! `|q| / sqrt((1-|q|) · min(α_{n+1}, α_{n+2}))`, so the convergence
//! criterion compares the computed `α`'s against the threshold
//! `q² / (1-|q|)`. Reports never claim a limit: only finitely many levels
//! are computed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::basis::MultisetClass;
use crate::gram::{gram_levels, BlockCache, GramMatrix};
use crate::linalg;
use crate::operators::{m_matrix, r_family, OperatorFamily};

/// Default truncation threshold for the q-series and the infinite product.
pub const DEFAULT_TAIL_TOL: f64 = 1e-16;

fn alpha_from(gram: &GramMatrix, m: &DMatrix<f64>) -> Option<f64> {
    let (gs, gsi, floored) = linalg::sqrt_pair_floored(gram.matrix());
    if floored > 0 {
        return None;
    }
    let s = linalg::symmetrize(&(gs * m * gsi));
    let val = linalg::smallest_eigenvalue(&s);
    assert!(
        val > 0.0,
        "smallest eigenvalue {val:e} is not positive; upstream bug"
    );
    Some(val)
}

fn alpha_from_r(r_n: &DMatrix<f64>) -> f64 {
    let least = linalg::sym_eigenvalues(r_n)[0];
    assert!(least > 0.0, "R is singular off the vacuum; upstream bug");
    least * least
}

/// `α_n(q)`: the smallest eigenvalue of `M_n` (equivalently of `R_n²`),
/// strictly positive for `|q| < 1`.
///
/// Near `|q| → 1` at deep levels the Gram matrix exhausts double
/// precision; the value is then read from the orthonormal-basis `R` family
/// instead, which stays well conditioned.
pub fn alpha(d: usize, n: usize, q: f64) -> f64 {
    assert!(n >= 1, "alpha starts at level 1");
    assert!(q.abs() < 1.0);
    let gram = gram_levels(d, n, q).pop().expect("nonempty");
    match alpha_from(&gram, m_matrix(d, n, q).matrix()) {
        Some(val) => val,
        None => alpha_from_r(r_family(d, n, q).matrix(n)),
    }
}

/// Infinite product `Π_{k≥1} (1-q^k)/(1+q^k)` for `0 ≤ q < 1`, with
/// factors appended until `|1 - factor| < tail_tol`.
pub fn gauss_product(q: f64, tail_tol: f64) -> f64 {
    gauss_product_with_tail(q, tail_tol).0
}

/// As [`gauss_product`], also returning a first-order bound on the
/// truncation error: the dropped factors multiply to `1 - ε` with
/// `ε ≤ 2 q^{K+1} / ((1-q)(1-q^{K+1}))`.
pub fn gauss_product_with_tail(q: f64, tail_tol: f64) -> (f64, f64) {
    assert!((0.0..1.0).contains(&q), "product needs 0 ≤ q < 1");
    assert!(tail_tol > 0.0);
    let mut value = 1.0;
    let mut power = 1.0;
    loop {
        power *= q; // q^k
        let deviation = 2.0 * power / (1.0 + power);
        if deviation < tail_tol {
            let tail = 2.0 * power / ((1.0 - q) * (1.0 - power));
            return (value, value * tail);
        }
        value *= (1.0 - power) / (1.0 + power);
    }
}

/// Theta-series form `1 + 2 Σ_{k≥1} (-1)^k q^{k²}` of the same product,
/// truncated once `q^{k²} < tail_tol`. Equality of the two routes is the
/// Gauss identity.
pub fn gauss_theta(q: f64, tail_tol: f64) -> f64 {
    assert!((0.0..1.0).contains(&q), "series needs 0 ≤ q < 1");
    assert!(tail_tol > 0.0);
    let mut sum = 1.0;
    let mut k = 1u32;
    loop {
        let term = q.powi((k * k) as i32);
        if term < tail_tol {
            return sum;
        }
        sum += 2.0 * if k % 2 == 1 { -term } else { term };
        k += 1;
    }
}

/// Uniform spectral bounds for every `α_n(q)`, `n ≥ 1`:
/// `lower = gauss_product(|q|) / (1-|q|)`, `upper = 1 / (1-|q|)`.
/// The lower bound is strictly positive. Depends on `q` only through
/// `|q|`.
pub fn alpha_bounds(q: f64, tail_tol: f64) -> (f64, f64) {
    assert!(q.abs() < 1.0);
    let a = q.abs();
    let lower = gauss_product(a, tail_tol) / (1.0 - a);
    let upper = 1.0 / (1.0 - a);
    (lower, upper)
}

/// Margin of the truncated bound condition
/// `q² < 1 - 2|q| + 2|q|⁴ - 2|q|⁹ + …` at the first `terms` terms of the
/// alternating series; positive means the condition holds at that
/// truncation (sufficient when the truncation ends on a negative term).
pub fn theta_condition_margin(q: f64, terms: usize) -> f64 {
    assert!(q.abs() < 1.0);
    assert!(terms >= 1);
    let x = q.abs();
    let mut sum = 1.0;
    for k in 1..terms {
        let term = 2.0 * x.powi((k * k) as i32);
        sum += if k % 2 == 1 { -term } else { term };
    }
    sum - q * q
}

/// The unique root in `(0, 1)` of the truncated bound-condition margin,
/// located by bisection to `root_tol`. Two terms reproduce `√2 - 1`; four
/// terms give 0.44005651…, and more terms move the root only in the sixth
/// significant figure.
pub fn theta_condition_root(terms: usize, root_tol: f64) -> f64 {
    assert!(terms >= 2, "the root needs at least two series terms");
    assert!(root_tol > 0.0);
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-12;
    assert!(
        theta_condition_margin(hi, terms) < 0.0,
        "no sign change on (0, 1)"
    );
    while hi - lo > root_tol {
        let mid = 0.5 * (lo + hi);
        if theta_condition_margin(mid, terms) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Contraction factor `c_n = |q| / sqrt((1-|q|) · min(α_{n+1}, α_{n+2}))`
/// bounding `‖X_{n+2} - X_{n+1}‖ / ‖X_{n+1} - X_n‖`.
pub fn contraction_factor(d: usize, n: usize, q: f64) -> f64 {
    assert!(n >= 1);
    let a1 = alpha(d, n + 1, q);
    let a2 = alpha(d, n + 2, q);
    contraction_factor_from(q, a1, a2)
}

fn contraction_factor_from(q: f64, alpha_next: f64, alpha_next2: f64) -> f64 {
    q.abs() / ((1.0 - q.abs()) * alpha_next.min(alpha_next2)).sqrt()
}

/// Distance `‖X_{n+1} - X_n‖ = ‖(R_n ⊗ I) - R_{n+1}‖` between successive
/// iterates, which concentrates on one level, so the full-space iterates
/// never need assembling.
pub fn iterate_distance(d: usize, n: usize, q: f64) -> f64 {
    assert!(n >= 1);
    let fam = r_family(d, n + 1, q);
    iterate_distance_from(&fam, n)
}

fn iterate_distance_from(fam: &OperatorFamily, n: usize) -> f64 {
    let lifted = linalg::kron_identity_right(fam.matrix(n), fam.d());
    linalg::sym_operator_norm(&(lifted - fam.matrix(n + 1)))
}

/// Empirical trend of the computed `α` sequence.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Decreasing,
    Increasing,
    Mixed,
    Constant,
}

fn trend_of(alphas: &[f64]) -> Trend {
    let tol = 1e-12;
    let mut increased = false;
    let mut decreased = false;
    for pair in alphas.windows(2) {
        let diff = pair[1] - pair[0];
        if diff > tol {
            increased = true;
        } else if diff < -tol {
            decreased = true;
        }
    }
    match (increased, decreased) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

/// Outcome of the convergence criterion at the computed levels. Never a
/// limit claim: `HoldsEmpirically` says every computed `α_n` clears the
/// threshold, `Fails` says some computed `α_n` sits below it and the
/// uniform lower bound cannot rescue it, and anything else is
/// `Inconclusive`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsEmpirically,
    Fails,
    Inconclusive,
}

/// Per-level spectral record for one `(d, q, n_max)`: the `α` sequence,
/// the uniform bounds, contraction factors, iterate distances, the
/// convergence threshold `q²/(1-|q|)`, and the resulting margin/verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub d: usize,
    pub q: f64,
    pub n_max: usize,
    /// `alphas[k]` is `α_{k+1}(q)`, for levels `1..=n_max`.
    pub alphas: Vec<f64>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// First-order truncation-error bound of the product in `lower_bound`.
    pub product_tail_bound: f64,
    /// `contraction_factors[k]` is `c_{k+1}`, for `n = 1..=n_max-2`.
    pub contraction_factors: Vec<f64>,
    /// `iterate_distances[k]` is `‖X_{k+2} - X_{k+1}‖`, for `n = 1..=n_max-1`.
    pub iterate_distances: Vec<f64>,
    pub threshold: f64,
    /// `min_n α_n - threshold`.
    pub margin: f64,
    pub trend: Trend,
    pub verdict: Verdict,
}

impl SpectralReport {
    /// `α_n(q)` for `1 ≤ n ≤ n_max`.
    pub fn alpha_at(&self, n: usize) -> f64 {
        self.alphas[n - 1]
    }

    pub fn min_alpha(&self) -> f64 {
        self.alphas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Assembles the full spectral record at one parameter point.
pub fn convergence_report(d: usize, n_max: usize, q: f64) -> SpectralReport {
    assert!(n_max >= 2, "the report needs n_max ≥ 2");
    assert!(q.abs() < 1.0);
    let grams = gram_levels(d, n_max, q);
    let fam = r_family(d, n_max, q);
    let alphas: Vec<f64> = (1..=n_max)
        .map(|n| {
            alpha_from(&grams[n], m_matrix(d, n, q).matrix())
                .unwrap_or_else(|| alpha_from_r(fam.matrix(n)))
        })
        .collect();
    let (product, product_tail_bound) = gauss_product_with_tail(q.abs(), DEFAULT_TAIL_TOL);
    let lower_bound = product / (1.0 - q.abs());
    let upper_bound = 1.0 / (1.0 - q.abs());
    let contraction_factors: Vec<f64> = (1..=n_max.saturating_sub(2))
        .map(|n| contraction_factor_from(q, alphas[n], alphas[n + 1]))
        .collect();
    let iterate_distances: Vec<f64> = (1..n_max)
        .map(|n| iterate_distance_from(&fam, n))
        .collect();
    let threshold = q * q / (1.0 - q.abs());
    let min_alpha = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = min_alpha - threshold;
    let verdict = if margin > 0.0 {
        Verdict::HoldsEmpirically
    } else if min_alpha < threshold && lower_bound < threshold {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    let trend = trend_of(&alphas);
    SpectralReport {
        d,
        q,
        n_max,
        alphas,
        lower_bound,
        upper_bound,
        product_tail_bound,
        contraction_factors,
        iterate_distances,
        threshold,
        margin,
        trend,
        verdict,
    }
}

/// Result of the blockwise `α` computation over multiset classes.
#[derive(Clone, Copy, Debug)]
pub struct BlockAlpha {
    pub alpha: f64,
    /// Largest block dimension materialized.
    pub peak_dim: usize,
    /// Cumulative `f64` entries of all blocks materialized, across every
    /// recursion level touched.
    pub entries_touched: u64,
}

/// `α_n(q)` computed block by block over the multiset classes of level
/// `n`, never materializing a full `d^n × d^n` matrix. The level operators
/// are block diagonal across classes, so the minimum over blocks is the
/// level minimum.
pub fn alpha_blockwise(d: usize, n: usize, q: f64) -> BlockAlpha {
    let mut cache = BlockCache::new(d, q);
    let alpha = alpha_blockwise_cached(&mut cache, n);
    BlockAlpha {
        alpha,
        peak_dim: cache.peak_dim(),
        entries_touched: cache.entries_touched(),
    }
}

/// As [`alpha_blockwise`], reusing a caller-held cache so that sweeps over
/// several levels share the lower-level blocks.
pub fn alpha_blockwise_cached(cache: &mut BlockCache, n: usize) -> f64 {
    assert!(n >= 1);
    let d = cache.d();
    let mut best = f64::INFINITY;
    for class in MultisetClass::classes_at_level(d, n) {
        let (gamma, m) = cache.pair(&class);
        let (gs, gsi, floored) = linalg::sqrt_pair_floored(&gamma);
        assert!(
            floored == 0,
            "block Gram exhausted double precision at class {:?}",
            class.counts()
        );
        let s = linalg::symmetrize(&(gs * m * gsi));
        best = best.min(linalg::smallest_eigenvalue(&s));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_level1_is_one() {
        for q in [-0.9, -0.3, 0.0, 0.5, 0.9] {
            assert!((alpha(2, 1, q) - 1.0).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn alpha_level2_is_one_minus_abs_q() {
        assert!((alpha(2, 2, 0.5) - 0.5).abs() < 1e-12);
        assert!((alpha(2, 2, -0.3) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_one_at_q_zero() {
        for n in 1..=5 {
            assert!((alpha(2, n, 0.0) - 1.0).abs() < 1e-14, "level {n}");
        }
    }

    #[test]
    fn bounds_at_endpoints() {
        let (lo, hi) = alpha_bounds(0.0, DEFAULT_TAIL_TOL);
        assert_eq!((lo, hi), (1.0, 1.0));
        let (_, hi) = alpha_bounds(0.5, DEFAULT_TAIL_TOL);
        assert!((hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_depend_only_on_abs_q() {
        for q in [0.3, 0.62, 0.9] {
            assert_eq!(
                alpha_bounds(q, DEFAULT_TAIL_TOL),
                alpha_bounds(-q, DEFAULT_TAIL_TOL)
            );
        }
    }

    #[test]
    fn alphas_contained_in_bounds() {
        for q in [-0.5, 0.5] {
            let (lo, hi) = alpha_bounds(q, DEFAULT_TAIL_TOL);
            for n in 1..=6 {
                let a = alpha(2, n, q);
                assert!(lo <= a && a <= hi, "q={q} n={n} alpha={a}");
            }
        }
    }

    #[test]
    fn gauss_product_trivial_at_zero() {
        assert_eq!(gauss_product(0.0, DEFAULT_TAIL_TOL), 1.0);
        assert_eq!(gauss_theta(0.0, DEFAULT_TAIL_TOL), 1.0);
    }

    #[test]
    fn gauss_identity_on_samples() {
        for q in [0.44, 0.5] {
            let p = gauss_product(q, DEFAULT_TAIL_TOL);
            let t = gauss_theta(q, DEFAULT_TAIL_TOL);
            assert!((p - t).abs() < 1e-12, "q={q}: {p} vs {t}");
        }
    }

    #[test]
    fn gauss_product_monotone_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 0..=9 {
            let q = 0.1 * k as f64;
            let v = gauss_product(q, DEFAULT_TAIL_TOL);
            assert!(v < prev || (k == 0 && v == 1.0));
            prev = v;
        }
    }

    #[test]
    fn theta_partial_sums_bracket_the_limit() {
        let q = 0.6;
        let limit = gauss_theta(q, DEFAULT_TAIL_TOL);
        let mut sum = 1.0;
        for k in 1..=8u32 {
            let term = 2.0 * q.powi((k * k) as i32);
            sum += if k % 2 == 1 { -term } else { term };
            if k % 2 == 1 {
                assert!(sum <= limit + 1e-15, "odd partial below");
            } else {
                assert!(sum >= limit - 1e-15, "even partial above");
            }
        }
    }

    #[test]
    fn margin_examples() {
        assert_eq!(theta_condition_margin(0.0, 4), 1.0);
        assert!(theta_condition_margin(0.44, 4) > 0.0);
        assert!(theta_condition_margin(0.5, 20) < 0.0);
    }

    #[test]
    fn root_two_terms_is_sqrt2_minus_one() {
        let root = theta_condition_root(2, 1e-10);
        assert!((root - (2.0f64.sqrt() - 1.0)).abs() < 1e-7);
    }

    #[test]
    fn root_four_terms() {
        let root = theta_condition_root(4, 1e-10);
        assert!((root - 0.44005651).abs() < 1e-7);
    }

    #[test]
    fn root_stabilizes_quickly() {
        let r4 = theta_condition_root(4, 1e-10);
        let r8 = theta_condition_root(8, 1e-10);
        assert!((r4 - r8).abs() < 1e-5);
    }

    #[test]
    fn contraction_factor_vanishes_at_q_zero() {
        assert_eq!(contraction_factor(2, 1, 0.0), 0.0);
    }

    #[test]
    fn contraction_factor_formula() {
        let q = 0.3;
        let a2 = alpha(2, 2, q);
        let a3 = alpha(2, 3, q);
        assert!((a2 - 0.7).abs() < 1e-12);
        let expected = q / ((1.0 - q) * a2.min(a3)).sqrt();
        assert!((contraction_factor(2, 1, q) - expected).abs() < 1e-12);
    }

    #[test]
    fn contraction_factors_below_one_in_the_good_regime() {
        let report = convergence_report(2, 6, 0.44);
        for (k, c) in report.contraction_factors.iter().enumerate() {
            assert!(*c < 1.0, "c_{} = {c}", k + 1);
        }
    }

    #[test]
    fn iterate_distance_at_q_zero() {
        for n in 1..=3 {
            assert!(iterate_distance(2, n, 0.0) < 1e-14, "n={n}");
        }
    }

    #[test]
    fn first_iterate_distance_formula() {
        // ‖I - R_2‖ = 1 - sqrt(1-q) for q in (0,1)
        for q in [0.2f64, 0.6] {
            let expected = 1.0 - (1.0 - q).sqrt();
            assert!((iterate_distance(2, 1, q) - expected).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn distances_obey_contraction_bound() {
        let q = 0.3;
        let d1 = iterate_distance(2, 1, q);
        let d2 = iterate_distance(2, 2, q);
        let c1 = contraction_factor(2, 1, q);
        assert!(d2 <= c1 * d1 * (1.0 + 1e-8));
    }

    #[test]
    fn report_at_q_zero() {
        let report = convergence_report(2, 4, 0.0);
        assert_eq!(report.verdict, Verdict::HoldsEmpirically);
        assert!((report.margin - 1.0).abs() < 1e-12);
        assert_eq!(report.trend, Trend::Constant);
        assert_eq!(report.alphas.len(), 4);
        assert_eq!(report.contraction_factors.len(), 2);
        assert_eq!(report.iterate_distances.len(), 3);
    }

    #[test]
    fn report_holds_at_small_q() {
        let report = convergence_report(2, 5, 0.44);
        assert_eq!(report.verdict, Verdict::HoldsEmpirically);
        assert!(report.margin > 0.0);
        assert!((report.alpha_at(1) - 1.0).abs() < 1e-12);
        for (k, a) in report.alphas.iter().enumerate() {
            assert!(
                report.lower_bound <= *a && *a <= report.upper_bound,
                "level {} alpha {a}",
                k + 1
            );
        }
    }

    #[test]
    fn report_fails_at_large_q() {
        let report = convergence_report(2, 4, 0.8);
        assert_eq!(report.verdict, Verdict::Fails);
        assert!(report.margin < 0.0);
    }

    #[test]
    fn report_threshold_uses_abs_q() {
        let a = convergence_report(2, 3, 0.4);
        let b = convergence_report(2, 3, -0.4);
        assert!((a.threshold - b.threshold).abs() < 1e-15);
    }

    #[test]
    fn blockwise_alpha_matches_dense() {
        for (d, n, q) in [(2usize, 4usize, 0.5f64), (3, 3, -0.6)] {
            let dense = alpha(d, n, q);
            let block = alpha_blockwise(d, n, q);
            assert!(
                (dense - block.alpha).abs() < 1e-10,
                "d={d} n={n} q={q}: {dense} vs {}",
                block.alpha
            );
            assert!(block.peak_dim <= crate::basis::level_dim(d, n));
        }
    }

    #[test]
    fn blockwise_touches_fewer_entries() {
        let n = 8;
        let block = alpha_blockwise(2, n, 0.5);
        let dense_entries: u64 = (1..=n).map(|m| 4u64.pow(m as u32)).sum();
        assert!(block.entries_touched < dense_entries);
        assert_eq!(block.peak_dim, 70); // C(8,4)
    }
}
