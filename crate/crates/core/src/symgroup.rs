//! Permutations of `{1, …, n}`, the inversion statistic, the position
//! cycles `(k → l)`, and their action on natural-basis words.
//!
//! The action permutes tensor positions: position `p` of the input word
//! lands at position `s(p)` of the output. Composition is fixed once and
//! for all as `(s · t)(x) = s(t(x))` (apply `t` first); with that choice
//! the matrices multiply in the written order of group-algebra products,
//! and every permutation decomposes uniquely as `t · (1 → k)` with
//! `t(1) = 1` and `inv(s) = inv(t) + k - 1`. The decomposition test below
//! would fail under the opposite convention.

use nalgebra::DMatrix;

use crate::basis::{level_dim, LevelMatrix, SpaceKind};
use crate::linalg;

/// A permutation in one-line notation (0-based positions internally), with
/// its inversion count cached at construction.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Permutation {
    images: Vec<usize>,
    inversions: usize,
}

fn count_inversions(images: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            if images[i] > images[j] {
                count += 1;
            }
        }
    }
    count
}

impl Permutation {
    /// Identity of `S_n`.
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
            inversions: 0,
        }
    }

    /// Builds a permutation from 0-based images; panics unless they form a
    /// bijection of `{0, …, n-1}`.
    pub fn from_images(images: Vec<usize>) -> Self {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            assert!(x < n && !seen[x], "images are not a bijection of 0..{n}");
            seen[x] = true;
        }
        let inversions = count_inversions(&images);
        Permutation { images, inversions }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of the 0-based position `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// Number of pairs `i < j` with `s(i) > s(j)`.
    pub fn inversions(&self) -> usize {
        self.inversions
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self · other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        let images: Vec<usize> = (0..self.degree())
            .map(|i| self.apply(other.apply(i)))
            .collect();
        Permutation::from_images(images)
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0usize; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x] = i;
        }
        Permutation::from_images(images)
    }
}

/// The cycle `(k → l)` in `S_n` (1-based `k ≤ l ≤ n`): it maps
/// `k ↦ k+1, …, l-1 ↦ l, l ↦ k` and fixes everything else. `k = l` gives
/// the identity.
pub fn cycle(k: usize, l: usize, n: usize) -> Permutation {
    assert!(1 <= k && k <= l, "cycle needs 1 ≤ k ≤ l (got k={k}, l={l})");
    assert!(l <= n, "cycle endpoint l={l} exceeds degree n={n}");
    let mut images: Vec<usize> = (0..n).collect();
    for x in k..l {
        images[x - 1] = x; // x ↦ x+1, 0-based
    }
    images[l - 1] = k - 1;
    Permutation::from_images(images)
}

/// All of `S_n` in a deterministic order (lexicographic by one-line images).
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, current: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
        if current.len() == n {
            out.push(Permutation::from_images(current.clone()));
            return;
        }
        for x in 0..n {
            if !used[x] {
                used[x] = true;
                current.push(x);
                rec(n, current, used, out);
                current.pop();
                used[x] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

/// The 0/1 matrix of the position action of `s` on level-`n` words:
/// the letter at position `p` of the input moves to position `s(p)` of the
/// output. Independent of `q`; only the adjoint depends on the level's
/// inner product.
pub fn permutation_matrix(s: &Permutation, d: usize) -> LevelMatrix {
    let n = s.degree();
    let dim = level_dim(d, n);
    let mut mat = DMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; n];
    let mut permuted = vec![0usize; n];
    for source in 0..dim {
        let mut rest = source;
        for pos in (0..n).rev() {
            digits[pos] = rest % d;
            rest /= d;
        }
        for pos in 0..n {
            permuted[s.apply(pos)] = digits[pos];
        }
        let target = permuted.iter().fold(0usize, |acc, &x| acc * d + x);
        mat[(target, source)] = 1.0;
    }
    LevelMatrix::new(mat, d, n, n, SpaceKind::Twisted, SpaceKind::Twisted)
}

/// Unique factorization `s = t · (1 → k)` with `t(1) = 1`; returns
/// `(t, k)` with `k` 1-based. Satisfies `inv(s) = inv(t) + (k - 1)`.
pub fn canonical_decomposition(s: &Permutation) -> (Permutation, usize) {
    let n = s.degree();
    assert!(n >= 1, "decomposition needs degree ≥ 1");
    // (1 → k) sends k to 1, so k is the position s maps to 1.
    let k = s.inverse().apply(0) + 1;
    let t = s.compose(&cycle(1, k, n).inverse());
    debug_assert_eq!(t.apply(0), 0);
    debug_assert_eq!(s.inversions(), t.inversions() + (k - 1));
    (t, k)
}

/// The matrix `[M_n] = Σ_{k=1}^{n} q^{k-1} · π((1 → k))` on level `n`:
/// the position action of the weighted cycle sum, which moves the k-th
/// letter to the front with weight `q^{k-1}`.
pub fn cycle_sum_matrix(d: usize, n: usize, q: f64) -> LevelMatrix {
    assert!(n >= 1, "cycle sum starts at level 1");
    let dim = level_dim(d, n);
    let mut mat = DMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; n];
    let mut moved = vec![0usize; n];
    for source in 0..dim {
        let mut rest = source;
        for pos in (0..n).rev() {
            digits[pos] = rest % d;
            rest /= d;
        }
        for k in 0..n {
            // (1 → k+1) moves the letter at position k to the front.
            moved[0] = digits[k];
            moved[1..=k].copy_from_slice(&digits[..k]);
            if k + 1 < n {
                moved[(k + 1)..].copy_from_slice(&digits[(k + 1)..]);
            }
            let target = moved.iter().fold(0usize, |acc, &x| acc * d + x);
            mat[(target, source)] += q.powi(k as i32);
        }
    }
    LevelMatrix::new(mat, d, n, n, SpaceKind::Twisted, SpaceKind::Twisted)
}

/// Residual of the cycle-sum factorization
/// `Σ_k q^{k-1}(1→k) = Π_{j=0}^{n-2} (I - q^{n-j}(2→n-j)) · Π_{j=1}^{n-1} (I - q^j(1→j+1))^{-1}`
/// evaluated as matrices on level `n`; returns the operator norm of the
/// difference of the two sides. Each inverse factor is applied by a dense
/// linear solve.
pub fn factorization_residual(d: usize, n: usize, q: f64) -> f64 {
    assert!(n >= 2, "factorization needs n ≥ 2");
    assert!(q.abs() < 1.0, "factorization needs |q| < 1");
    let dim = level_dim(d, n);
    let identity = DMatrix::<f64>::identity(dim, dim);
    let lhs = cycle_sum_matrix(d, n, q).into_matrix();

    let mut rhs = identity.clone();
    for j in 0..=(n - 2) {
        let c = permutation_matrix(&cycle(2, n - j, n), d).into_matrix();
        let factor = &identity - c * q.powi((n - j) as i32);
        rhs *= factor;
    }
    for j in 1..=(n - 1) {
        let c = permutation_matrix(&cycle(1, j + 1, n), d).into_matrix();
        let factor = &identity - c * q.powi(j as i32);
        rhs = linalg::solve_right(&rhs, &factor);
    }
    linalg::operator_norm(&(lhs - rhs))
}
