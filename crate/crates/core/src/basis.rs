//! Words over the alphabet `{1, …, d}`, lexicographic indexing of the
//! natural basis, multiset blocks, and the annihilation/creation matrices
//! on the untwisted Fock space.
//!
//! Level `n` is spanned by the `d^n` words of length `n`; the empty word is
//! the vacuum. A word is read first tensor factor first, and lexicographic
//! order uses that reading order, so `word_index` is plain base-`d`
//! positional arithmetic. Everything in this module is exact: annihilators
//! are 0/1 matrices and the block decomposition is pure combinatorics.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Parameter set for a run: dimension `d ≥ 2`, deformation `q ∈ (-1, 1)`,
/// truncation level `n_max ≥ 1`, and a positive tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Config {
    pub d: usize,
    pub q: f64,
    pub n_max: usize,
    pub tol: f64,
}

/// Rejected [`Config`] parameters.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("dimension d must be at least 2 (got {0})")]
    Dimension(usize),
    #[error("q must lie strictly between -1 and 1 (got {0})")]
    Deformation(f64),
    #[error("truncation level n_max must be at least 1 (got {0})")]
    Truncation(usize),
    #[error("tolerance must be positive and finite (got {0})")]
    Tolerance(f64),
}

impl Config {
    /// Validates parameters, with the default tolerance.
    pub fn new(d: usize, q: f64, n_max: usize) -> Result<Self, ConfigError> {
        Self::with_tol(d, q, n_max, DEFAULT_TOL)
    }

    /// Validates parameters and an explicit tolerance.
    pub fn with_tol(d: usize, q: f64, n_max: usize, tol: f64) -> Result<Self, ConfigError> {
        if d < 2 {
            return Err(ConfigError::Dimension(d));
        }
        if !(q.is_finite() && q.abs() < 1.0) {
            return Err(ConfigError::Deformation(q));
        }
        if n_max < 1 {
            return Err(ConfigError::Truncation(n_max));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ConfigError::Tolerance(tol));
        }
        Ok(Config { d, q, n_max, tol })
    }
}

/// A finite sequence of letters in `{1, …, d}` labelling a natural-basis
/// tensor. The empty word labels the vacuum.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Word {
    letters: Vec<usize>,
}

impl Word {
    /// Builds a word; letters are 1-based and must be positive. Range
    /// validity against a concrete `d` is checked by the operations that
    /// take `d`.
    pub fn new(letters: Vec<usize>) -> Self {
        assert!(
            letters.iter().all(|&l| l >= 1),
            "word letters are 1-based and must be positive"
        );
        Word { letters }
    }

    /// The vacuum word.
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    /// First letter and remaining word, or `None` on the vacuum.
    pub fn split_first(&self) -> Option<(usize, Word)> {
        self.letters
            .split_first()
            .map(|(&head, tail)| (head, Word::new(tail.to_vec())))
    }

    fn valid_for(&self, d: usize) -> bool {
        self.letters.iter().all(|&l| 1 <= l && l <= d)
    }
}

impl From<Vec<usize>> for Word {
    fn from(letters: Vec<usize>) -> Self {
        Word::new(letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "Ω");
        }
        write!(f, "(")?;
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Letter-count vector `(α_1, …, α_d)` of a multiset block; the block
/// spans the words with exactly those letter multiplicities.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultisetClass {
    counts: Vec<usize>,
}

impl MultisetClass {
    pub fn new(counts: Vec<usize>) -> Self {
        assert!(!counts.is_empty(), "a multiset class needs d ≥ 1 counts");
        MultisetClass { counts }
    }

    /// The level `n = Σ α_i` the block lives on.
    pub fn level(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    /// Block dimension: the multinomial coefficient `n! / (α_1! … α_d!)`.
    pub fn dimension(&self) -> usize {
        let mut value: usize = 1;
        let mut placed = 0usize;
        // Product of binomials C(placed + α_i, α_i); each factor is integral.
        for &count in &self.counts {
            for k in 1..=count {
                placed += 1;
                value = value * placed / k;
            }
        }
        value
    }

    /// All classes of level `n` over `d` letters, ordered lexicographically
    /// by count vector.
    pub fn classes_at_level(d: usize, n: usize) -> Vec<MultisetClass> {
        assert!(d >= 1);
        let mut out = Vec::new();
        let mut counts = vec![0usize; d];
        fn rec(counts: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<MultisetClass>) {
            if pos + 1 == counts.len() {
                counts[pos] = remaining;
                out.push(MultisetClass::new(counts.clone()));
                return;
            }
            for c in 0..=remaining {
                counts[pos] = c;
                rec(counts, pos + 1, remaining - c, out);
            }
        }
        rec(&mut counts, 0, n, &mut out);
        out
    }

    /// The class with one occurrence of `letter` removed; `None` if the
    /// letter does not occur.
    pub fn remove_letter(&self, letter: usize) -> Option<MultisetClass> {
        if letter < 1 || letter > self.counts.len() || self.counts[letter - 1] == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[letter - 1] -= 1;
        Some(MultisetClass::new(counts))
    }
}

/// Which inner product a matrix is expressed against on a level: the plain
/// (orthonormal) one of the untwisted level, or the q-inner product of the
/// twisted level. The natural basis is the same in both conventions; only
/// adjoints differ.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum SpaceKind {
    Plain,
    Twisted,
}

/// Dense real matrix of an operator between two levels, tagged with the
/// dimension, the domain/codomain levels, and the basis convention on each
/// side.
#[derive(Clone, Debug)]
pub struct LevelMatrix {
    mat: DMatrix<f64>,
    d: usize,
    domain_level: usize,
    codomain_level: usize,
    domain_space: SpaceKind,
    codomain_space: SpaceKind,
}

impl LevelMatrix {
    pub fn new(
        mat: DMatrix<f64>,
        d: usize,
        domain_level: usize,
        codomain_level: usize,
        domain_space: SpaceKind,
        codomain_space: SpaceKind,
    ) -> Self {
        assert_eq!(mat.ncols(), level_dim(d, domain_level), "domain dimension");
        assert_eq!(mat.nrows(), level_dim(d, codomain_level), "codomain dimension");
        LevelMatrix {
            mat,
            d,
            domain_level,
            codomain_level,
            domain_space,
            codomain_space,
        }
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

    pub fn domain_level(&self) -> usize {
        self.domain_level
    }

    pub fn codomain_level(&self) -> usize {
        self.codomain_level
    }

    pub fn domain_space(&self) -> SpaceKind {
        self.domain_space
    }

    pub fn codomain_space(&self) -> SpaceKind {
        self.codomain_space
    }
}

/// Dimension `d^n` of level `n`.
pub fn level_dim(d: usize, n: usize) -> usize {
    d.checked_pow(n as u32).expect("level dimension overflows usize")
}

/// All `d^n` words of length `n` in strictly increasing lexicographic
/// order; `n = 0` yields the vacuum alone.
pub fn enumerate_words(d: usize, n: usize) -> Vec<Word> {
    assert!(d >= 2, "alphabet needs d ≥ 2");
    let dim = level_dim(d, n);
    let mut out = Vec::with_capacity(dim);
    for index in 0..dim {
        out.push(word_at_index(index, d, n));
    }
    out
}

/// The word at a given lexicographic index (inverse of [`word_index`]).
pub fn word_at_index(index: usize, d: usize, n: usize) -> Word {
    assert!(index < level_dim(d, n), "word index out of range");
    let mut letters = vec![0usize; n];
    let mut rest = index;
    for pos in (0..n).rev() {
        letters[pos] = rest % d + 1;
        rest /= d;
    }
    Word::new(letters)
}

/// 0-based position of `w` in `enumerate_words(d, |w|)`.
pub fn word_index(w: &Word, d: usize) -> usize {
    assert!(w.valid_for(d), "word {w} has letters outside 1..={d}");
    w.letters().iter().fold(0usize, |acc, &l| acc * d + (l - 1))
}

/// Letter-count vector of `w` over the alphabet `{1, …, d}`.
pub fn multiset_class(w: &Word, d: usize) -> MultisetClass {
    assert!(w.valid_for(d), "word {w} has letters outside 1..={d}");
    let mut counts = vec![0usize; d];
    for &l in w.letters() {
        counts[l - 1] += 1;
    }
    MultisetClass::new(counts)
}

/// All words of class `α` at level `n`, in lexicographic order. The union
/// over all classes of level `n` partitions `enumerate_words(d, n)`.
pub fn block_members(d: usize, n: usize, class: &MultisetClass) -> Vec<Word> {
    assert_eq!(class.d(), d, "class arity must match d");
    assert_eq!(class.level(), n, "class level must match n");
    enumerate_words(d, n)
        .into_iter()
        .filter(|w| multiset_class(w, d) == *class)
        .collect()
}

/// The 0/1 matrix of the annihilator `V_i : V_n → V_{n-1}` in natural
/// bases: a word starting with letter `i` maps to its tail, anything else
/// to zero. The creator matrix is the transpose (see [`creator_matrix`]).
pub fn annihilator_matrix(letter: usize, d: usize, n: usize) -> LevelMatrix {
    assert!(1 <= letter && letter <= d, "letter {letter} outside 1..={d}");
    assert!(n >= 1, "the vacuum level has no annihilator matrix");
    let sub = level_dim(d, n - 1);
    let mut mat = DMatrix::zeros(sub, sub * d);
    // words with first letter i occupy the contiguous column block i
    let offset = (letter - 1) * sub;
    for r in 0..sub {
        mat[(r, offset + r)] = 1.0;
    }
    LevelMatrix::new(mat, d, n, n - 1, SpaceKind::Plain, SpaceKind::Plain)
}

/// The 0/1 matrix of the creator `V_i* : V_{n-1} → V_n`, prepending the
/// letter `i`; transpose of [`annihilator_matrix`].
pub fn creator_matrix(letter: usize, d: usize, n: usize) -> LevelMatrix {
    let v = annihilator_matrix(letter, d, n);
    LevelMatrix::new(
        v.matrix().transpose(),
        d,
        n - 1,
        n,
        SpaceKind::Plain,
        SpaceKind::Plain,
    )
}
