//! The q-inner product on level spaces and its Gram matrices `Γ_n`.
//!
//! Two independent construction routes are provided. The production route
//! is the level recursion `Γ_n = diag(Γ_{n-1}, …, Γ_{n-1}) · [M_n]`, which
//! costs a dense product per level. The oracle route sums
//! `q^{inv(s)} · π(s)` over all of `S_n` and is capped at small levels
//! (the sum has `n!` terms); the scalar recursion [`q_inner`] gives a third
//! route for individual entries. Words with different letter multisets are
//! q-orthogonal, so `Γ_n` is block diagonal over multiset classes with
//! structural (exact) zeros across blocks; [`BlockCache`] exploits that to
//! build single blocks without touching the full `d^n` matrix.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::basis::{block_members, level_dim, MultisetClass, Word};
use crate::linalg;
use crate::symgroup::{all_permutations, cycle_sum_matrix, permutation_matrix};

/// Highest level accepted by [`gram_by_inversions`]; the permutation sum
/// has `n!` terms, so this is a cost guard, not a correctness limit.
pub const INVERSION_ROUTE_LEVEL_CAP: usize = 6;

/// Gram matrix of q-inner products of the natural basis of one level:
/// symmetric, positive definite for `|q| < 1`, block diagonal over
/// multiset classes.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    d: usize,
    q: f64,
    level: usize,
    mat: DMatrix<f64>,
}

impl GramMatrix {
    fn new(d: usize, q: f64, level: usize, mat: DMatrix<f64>) -> Self {
        assert_eq!(mat.nrows(), level_dim(d, level));
        assert_eq!(mat.ncols(), level_dim(d, level));
        GramMatrix { d, q, level, mat }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// The q-inner product of two words, evaluated by the defining recursion:
/// the product vanishes across different lengths, `⟨Ω|Ω⟩ = 1`, and one
/// step peels the first letter of `u` against every matching letter of `w`
/// with weight `q^{k-1}`. Exponential in the word length; test oracle, not
/// a production route.
pub fn q_inner(u: &Word, w: &Word, q: f64) -> f64 {
    if u.len() != w.len() {
        return 0.0;
    }
    let Some((head, u_rest)) = u.split_first() else {
        return 1.0;
    };
    let mut acc = 0.0;
    for (k, &letter) in w.letters().iter().enumerate() {
        if letter == head {
            let mut rest = w.letters().to_vec();
            rest.remove(k);
            acc += q.powi(k as i32) * q_inner(&u_rest, &Word::new(rest), q);
        }
    }
    acc
}

/// Gram matrices of levels `0..=n_max` by the level recursion; this is the
/// production route.
pub fn gram_levels(d: usize, n_max: usize, q: f64) -> Vec<GramMatrix> {
    assert!(d >= 2);
    assert!(q.abs() < 1.0, "the Gram matrices need |q| < 1");
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(GramMatrix::new(d, q, 0, DMatrix::from_element(1, 1, 1.0)));
    for n in 1..=n_max {
        let m = cycle_sum_matrix(d, n, q).into_matrix();
        let prev = out[n - 1].matrix();
        let sub = prev.nrows();
        let mut gamma = DMatrix::zeros(sub * d, sub * d);
        // block-diagonal left factor applied row-block by row-block
        for i in 0..d {
            let rows = m.rows(i * sub, sub);
            gamma.rows_mut(i * sub, sub).copy_from(&(prev * rows));
        }
        // symmetric up to roundoff; cross-class zeros are exact and
        // averaging two exact zeros keeps them exact
        let gamma = linalg::symmetrize(&gamma);
        out.push(GramMatrix::new(d, q, n, gamma));
    }
    out
}

/// The level-`n` Gram matrix by the recursion route.
pub fn gram_by_recursion(d: usize, n: usize, q: f64) -> GramMatrix {
    gram_levels(d, n, q).pop().expect("levels are non-empty")
}

/// The level-`n` Gram matrix as `Σ_{s ∈ S_n} q^{inv(s)} · π(s)`;
/// independent oracle for [`gram_by_recursion`], capped at
/// [`INVERSION_ROUTE_LEVEL_CAP`].
pub fn gram_by_inversions(d: usize, n: usize, q: f64) -> GramMatrix {
    assert!(
        n <= INVERSION_ROUTE_LEVEL_CAP,
        "inversion route is capped at level {INVERSION_ROUTE_LEVEL_CAP} (got {n})"
    );
    let dim = level_dim(d, n);
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for s in all_permutations(n) {
        let weight = q.powi(s.inversions() as i32);
        mat += permutation_matrix(&s, d).into_matrix() * weight;
    }
    GramMatrix::new(d, q, n, mat)
}

/// Memoized blockwise Gram construction over multiset classes.
///
/// For a class `α`, the block recursion mirrors the level recursion
/// restricted to the block: a first-letter-diagonal factor built from the
/// blocks of the classes `α - e_i`, times the cycle-sum action restricted
/// to the class. Only block-sized matrices are ever materialized; the
/// cumulative entry count is tracked for the block-versus-dense
/// comparison.
pub struct BlockCache {
    d: usize,
    q: f64,
    blocks: HashMap<Vec<usize>, (DMatrix<f64>, DMatrix<f64>)>,
    entries_touched: u64,
    peak_dim: usize,
}

impl BlockCache {
    pub fn new(d: usize, q: f64) -> Self {
        assert!(d >= 2);
        assert!(q.abs() < 1.0);
        BlockCache {
            d,
            q,
            blocks: HashMap::new(),
            entries_touched: 0,
            peak_dim: 0,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Total `f64` entries of all blocks materialized so far (Gram and
    /// cycle-sum blocks, across every recursion level touched).
    pub fn entries_touched(&self) -> u64 {
        self.entries_touched
    }

    /// Largest block dimension materialized so far.
    pub fn peak_dim(&self) -> usize {
        self.peak_dim
    }

    /// Gram block of `class`, cloned out of the cache.
    pub fn gram_block(&mut self, class: &MultisetClass) -> DMatrix<f64> {
        self.pair(class).0
    }

    /// `(Γ_α, M_α)` pair for `class`.
    pub fn pair(&mut self, class: &MultisetClass) -> (DMatrix<f64>, DMatrix<f64>) {
        assert_eq!(class.d(), self.d, "class arity must match d");
        if let Some(found) = self.blocks.get(class.counts()) {
            return found.clone();
        }
        let computed = self.compute(class);
        self.blocks
            .insert(class.counts().to_vec(), computed.clone());
        computed
    }

    fn compute(&mut self, class: &MultisetClass) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = class.level();
        if n == 0 {
            let one = DMatrix::from_element(1, 1, 1.0);
            self.entries_touched += 2;
            self.peak_dim = self.peak_dim.max(1);
            return (one.clone(), one);
        }
        let members = block_members(self.d, n, class);
        let dim = members.len();
        let local: HashMap<Vec<usize>, usize> = members
            .iter()
            .enumerate()
            .map(|(k, w)| (w.letters().to_vec(), k))
            .collect();

        // cycle-sum action restricted to the class: move the k-th letter to
        // the front with weight q^{k-1}
        let mut m_block = DMatrix::<f64>::zeros(dim, dim);
        for (col, w) in members.iter().enumerate() {
            let letters = w.letters();
            for k in 0..n {
                let mut moved = Vec::with_capacity(n);
                moved.push(letters[k]);
                moved.extend_from_slice(&letters[..k]);
                moved.extend_from_slice(&letters[(k + 1)..]);
                let row = local[&moved];
                m_block[(row, col)] += self.q.powi(k as i32);
            }
        }

        // first-letter-diagonal factor: entry (u, w) is the lower-level
        // Gram entry of the tails when the first letters agree
        let mut sub_locals: HashMap<usize, HashMap<Vec<usize>, usize>> = HashMap::new();
        let mut diag = DMatrix::<f64>::zeros(dim, dim);
        for (row, u) in members.iter().enumerate() {
            let (u_head, u_rest) = u.split_first().expect("level ≥ 1");
            let sub_class = class.remove_letter(u_head).expect("letter occurs");
            let sub_gram = self.pair(&sub_class).0;
            let sub_index = sub_locals.entry(u_head).or_insert_with(|| {
                block_members(self.d, n - 1, &sub_class)
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (w.letters().to_vec(), k))
                    .collect()
            });
            let u_local = sub_index[u_rest.letters()];
            for (col, w) in members.iter().enumerate() {
                let (w_head, w_rest) = w.split_first().expect("level ≥ 1");
                if w_head != u_head {
                    continue;
                }
                let w_local = sub_index[w_rest.letters()];
                diag[(row, col)] = sub_gram[(u_local, w_local)];
            }
        }

        let gamma = linalg::symmetrize(&(diag * &m_block));
        self.entries_touched += 2 * (dim as u64) * (dim as u64);
        self.peak_dim = self.peak_dim.max(dim);
        (gamma, m_block)
    }
}

/// Principal submatrix of `Γ_n` on the block of `class`, built blockwise
/// without materializing the full level matrix.
pub fn gram_block(d: usize, n: usize, q: f64, class: &MultisetClass) -> DMatrix<f64> {
    assert_eq!(class.level(), n, "class level must match n");
    BlockCache::new(d, q).gram_block(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_words, multiset_class, word_index};

    #[test]
    fn q_inner_vacuum() {
        assert_eq!(q_inner(&Word::empty(), &Word::empty(), 0.9), 1.0);
    }

    #[test]
    fn q_inner_single_step() {
        let u = Word::new(vec![1, 2]);
        let w = Word::new(vec![2, 1]);
        assert!((q_inner(&u, &w, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn q_inner_repeated_letter() {
        let u = Word::new(vec![1, 1]);
        for q in [-0.7, 0.0, 0.4] {
            assert!((q_inner(&u, &u, q) - (1.0 + q)).abs() < 1e-15);
        }
    }

    #[test]
    fn q_inner_mismatched_lengths_vanish() {
        assert_eq!(q_inner(&Word::empty(), &Word::new(vec![1]), 0.5), 0.0);
    }

    #[test]
    fn gram_level0_and_level1() {
        let g = gram_by_recursion(2, 0, 0.7);
        assert_eq!(g.matrix(), &DMatrix::from_element(1, 1, 1.0));
        let g = gram_by_recursion(2, 1, 0.7);
        assert_eq!(g.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn gram_level2_matches_cycle_sum() {
        let q = 0.43;
        let g = gram_by_recursion(2, 2, q);
        let m = cycle_sum_matrix(2, 2, q).into_matrix();
        assert!(linalg::max_abs_diff(g.matrix(), &m) < 1e-15);
    }

    #[test]
    fn gram_positive_definite() {
        let g = gram_by_recursion(2, 4, 0.5);
        let eigs = linalg::sym_eigenvalues(g.matrix());
        assert!(eigs[0] > 0.0, "smallest eigenvalue {:?}", eigs[0]);
    }

    #[test]
    fn inversion_route_level0() {
        let g = gram_by_inversions(2, 0, 0.5);
        assert_eq!(g.matrix(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn routes_agree_level2() {
        let a = gram_by_recursion(2, 2, 0.61);
        let b = gram_by_inversions(2, 2, 0.61);
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-14);
    }

    #[test]
    fn routes_agree_d3_negative_q() {
        let a = gram_by_recursion(3, 3, -0.4);
        let b = gram_by_inversions(3, 3, -0.4);
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    #[should_panic(expected = "capped at level")]
    fn inversion_route_rejects_large_level() {
        let _ = gram_by_inversions(2, 7, 0.5);
    }

    #[test]
    fn entries_match_scalar_recursion() {
        let (d, n, q) = (2, 3, -0.8);
        let g = gram_by_recursion(d, n, q);
        let words = enumerate_words(d, n);
        for (i, u) in words.iter().enumerate() {
            for (j, w) in words.iter().enumerate() {
                let expected = q_inner(u, w, q);
                assert!(
                    (g.matrix()[(i, j)] - expected).abs() < 1e-13,
                    "entry ({u}, {w})"
                );
            }
        }
    }

    #[test]
    fn cross_class_entries_are_exact_zeros() {
        let g = gram_by_recursion(2, 3, 0.9);
        let words = enumerate_words(2, 3);
        for (i, u) in words.iter().enumerate() {
            for (j, w) in words.iter().enumerate() {
                if multiset_class(u, 2) != multiset_class(w, 2) {
                    assert_eq!(g.matrix()[(i, j)], 0.0, "entry ({u}, {w})");
                }
            }
        }
    }

    #[test]
    fn q_zero_gram_is_identity() {
        for n in 0..=5 {
            let g = gram_by_recursion(2, n, 0.0);
            let dim = level_dim(2, n);
            assert_eq!(g.matrix(), &DMatrix::identity(dim, dim));
        }
    }

    #[test]
    fn block_of_mixed_class() {
        let q = 0.27;
        let block = gram_block(2, 2, q, &MultisetClass::new(vec![1, 1]));
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, q, q, 1.0]);
        assert!(linalg::max_abs_diff(&block, &expected) < 1e-15);
    }

    #[test]
    fn block_of_constant_class() {
        let q = 0.27;
        let block = gram_block(2, 2, q, &MultisetClass::new(vec![2, 0]));
        assert_eq!(block.shape(), (1, 1));
        assert!((block[(0, 0)] - (1.0 + q)).abs() < 1e-15);
    }

    #[test]
    fn blocks_are_principal_submatrices() {
        let (d, q) = (3, -0.6);
        for n in 0..=4usize {
            let full = gram_by_recursion(d, n, q);
            for class in MultisetClass::classes_at_level(d, n) {
                let members = block_members(d, n, &class);
                let block = gram_block(d, n, q, &class);
                for (bi, u) in members.iter().enumerate() {
                    for (bj, w) in members.iter().enumerate() {
                        let gi = word_index(u, d);
                        let gj = word_index(w, d);
                        assert!(
                            (block[(bi, bj)] - full.matrix()[(gi, gj)]).abs() < 1e-12,
                            "class {:?} entry ({u}, {w})",
                            class.counts()
                        );
                    }
                }
            }
        }
    }

    #[test]
    #[should_panic(expected = "class level")]
    fn gram_block_rejects_level_mismatch() {
        let _ = gram_block(2, 3, 0.5, &MultisetClass::new(vec![1, 1]));
    }
}
