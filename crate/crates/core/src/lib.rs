//! Numerical toolkit for the Fock representation of the q-commutation
//! relations at finite dimension `d` and truncation level `n_max`.
//!
//! The Fock space over a `d`-dimensional one-particle space decomposes into
//! levels spanned by words over `{1, …, d}`. For a deformation parameter
//! `q` in `(-1, 1)` the crate builds, level by level, the matrix objects
//! attached to the twisted inner product:
//!
//! - Gram matrices of the q-inner product in the natural word basis
//!   ([`gram`]), with two independent construction routes;
//! - the cycle-sum operator `M_n` and the symmetric-group machinery behind
//!   its factorization identities ([`symgroup`]);
//! - the canonical unitary family `U_n` identifying twisted and untwisted
//!   levels, and the positive operator `R = U M^{1/2} U*` whose dressed
//!   annihilators `V_i R` satisfy the q-commutation relations
//!   ([`operators`]);
//! - smallest eigenvalues `α_n(q)`, spectral bounds, the Gauss
//!   product/theta identity, and the contraction estimates that control
//!   norm convergence of the fixed-point iterates ([`spectral`]).
//!
//! All level matrices are dense `f64`; combinatorial objects (annihilators,
//! permutation actions) are built exactly. Everything is a pure function of
//! its arguments, so values can be shared freely across threads.

pub mod basis;
pub mod gram;
pub mod linalg;
pub mod operators;
pub mod spectral;
pub mod symgroup;

pub use basis::{Config, ConfigError, LevelMatrix, MultisetClass, SpaceKind, Word};
pub use gram::GramMatrix;
pub use operators::OperatorFamily;
pub use spectral::{SpectralReport, Trend, Verdict};
