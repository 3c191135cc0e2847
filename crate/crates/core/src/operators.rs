//! The operator `M` and its square root, the Gram-twisted adjoint rule,
//! the canonical unitary family `U_n`, the positive operator `R`, and the
//! numerical verification of the commutation and intertwining identities.
//!
//! The level recursion is `U_0 = [1]`, `U_n = (I ⊗ U_{n-1}) M_n^{1/2}`,
//! where `I ⊗ U_{n-1}` is block diagonal with `d` copies of `U_{n-1}`.
//! `R_n = U_n M_n^{1/2} U_n^{-1}` is symmetric positive semidefinite in
//! the orthonormal basis of the untwisted level, and the dressed
//! annihilators `V_i R` satisfy the q-commutation relations. An
//! independent route rebuilds `R` from the fixed-point identity
//! `R_{n+1}² = I + q Σ_{i,j} V_j* R_n V_i* V_j R_n V_i`, which by the
//! uniqueness of the positive solution must reproduce the same family.
//!
//! Square roots of `M_n` are taken in the Gram-symmetrized form
//! `S = Γ^{1/2} [M_n] Γ^{-1/2}`, which is symmetric positive definite
//! because `[M_n]^T Γ = Γ [M_n]`.

use nalgebra::DMatrix;

use crate::basis::{annihilator_matrix, creator_matrix, level_dim, LevelMatrix, SpaceKind};
use crate::gram::{gram_levels, GramMatrix};
use crate::linalg;
use crate::symgroup::cycle_sum_matrix;

/// Relative asymmetry above which a computed `R_n` is treated as an
/// internal fault rather than roundoff.
const ASYMMETRY_FAULT: f64 = 1e-6;

/// Per-level matrices `X_0, …, X_{n_max}` of one operator family, with the
/// `(d, q)` tag they were built for.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    d: usize,
    q: f64,
    levels: Vec<LevelMatrix>,
}

impl OperatorFamily {
    fn new(d: usize, q: f64, levels: Vec<LevelMatrix>) -> Self {
        assert!(!levels.is_empty());
        OperatorFamily { d, q, levels }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &LevelMatrix {
        &self.levels[n]
    }

    pub fn matrix(&self, n: usize) -> &DMatrix<f64> {
        self.levels[n].matrix()
    }
}

/// Inner-product convention on one side of an operator, for taking
/// adjoints: orthonormal (plain transpose contribution) or twisted by the
/// level's Gram matrix.
#[derive(Clone, Copy)]
pub enum Metric<'a> {
    Orthonormal,
    Twisted(&'a GramMatrix),
}

/// Matrix of the adjoint of `x` when its domain and codomain carry the
/// given metrics: `[X*] = Γ_dom^{-1} [X]^T Γ_cod`, with the identity in
/// place of a Gram factor on an orthonormal side. With both sides
/// orthonormal this is the plain transpose.
pub fn gamma_adjoint(x: &LevelMatrix, dom: Metric<'_>, cod: Metric<'_>) -> LevelMatrix {
    let xt = x.matrix().transpose();
    let twisted_cod = match cod {
        Metric::Orthonormal => xt,
        Metric::Twisted(g) => {
            assert_eq!(g.dim(), x.matrix().nrows(), "codomain Gram dimension");
            xt * g.matrix()
        }
    };
    let result = match dom {
        Metric::Orthonormal => twisted_cod,
        Metric::Twisted(g) => {
            assert_eq!(g.dim(), x.matrix().ncols(), "domain Gram dimension");
            linalg::solve(g.matrix(), &twisted_cod)
        }
    };
    LevelMatrix::new(
        result,
        x.d(),
        x.codomain_level(),
        x.domain_level(),
        x.codomain_space(),
        x.domain_space(),
    )
}

/// `[M_n]` in the natural basis: the weighted cycle sum for `n ≥ 1` and
/// the 1×1 zero on the vacuum level (every annihilator kills the vacuum).
pub fn m_matrix(d: usize, n: usize, q: f64) -> LevelMatrix {
    if n == 0 {
        return LevelMatrix::new(
            DMatrix::zeros(1, 1),
            d,
            0,
            0,
            SpaceKind::Twisted,
            SpaceKind::Twisted,
        );
    }
    cycle_sum_matrix(d, n, q)
}

fn m_sqrt_from(gram: &GramMatrix, m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (gs, gsi, floored) = linalg::sqrt_pair_floored(gram.matrix());
    let s = linalg::symmetrize(&(&gs * m * &gsi));
    let s_half = linalg::psd_sqrt(&s);
    (gsi * s_half * gs, floored)
}

/// `[M_n^{1/2}]`: the positive square root of `M_n` on the twisted level,
/// via the Gram-symmetrized form. Satisfies `[M_n^{1/2}]² = [M_n]` and is
/// self-adjoint for the q-inner product.
pub fn m_sqrt(d: usize, n: usize, q: f64) -> LevelMatrix {
    assert!(q.abs() < 1.0);
    if n == 0 {
        return m_matrix(d, 0, q);
    }
    let gram = gram_levels(d, n, q).pop().expect("nonempty");
    let (mat, _) = m_sqrt_from(&gram, m_matrix(d, n, q).matrix());
    LevelMatrix::new(mat, d, n, n, SpaceKind::Twisted, SpaceKind::Twisted)
}

struct Levels {
    m_sqrts: Vec<DMatrix<f64>>,
    u: Vec<DMatrix<f64>>,
    floored: Vec<usize>,
}

fn build_levels(d: usize, n_max: usize, q: f64) -> Levels {
    assert!(d >= 2);
    assert!(q.abs() < 1.0);
    let grams = gram_levels(d, n_max, q);
    let mut m_sqrts = vec![DMatrix::zeros(1, 1)];
    let mut u = vec![DMatrix::from_element(1, 1, 1.0)];
    let mut floored = vec![0usize];
    for n in 1..=n_max {
        let m = m_matrix(d, n, q);
        let (msq, fl) = m_sqrt_from(&grams[n], m.matrix());
        let u_n = linalg::kron_identity_left(&u[n - 1], d) * &msq;
        m_sqrts.push(msq);
        u.push(u_n);
        floored.push(fl);
    }
    Levels {
        m_sqrts,
        u,
        floored,
    }
}

/// The canonical unitary family `U_0, …, U_{n_max}` mapping each twisted
/// level onto the untwisted one; `[U_n]^T [U_n] = Γ_n`.
pub fn u_family(d: usize, n_max: usize, q: f64) -> OperatorFamily {
    let levels = build_levels(d, n_max, q);
    let mats = levels
        .u
        .into_iter()
        .enumerate()
        .map(|(n, mat)| LevelMatrix::new(mat, d, n, n, SpaceKind::Twisted, SpaceKind::Plain))
        .collect();
    OperatorFamily::new(d, q, mats)
}

fn annihilators(d: usize, n: usize) -> Vec<DMatrix<f64>> {
    (1..=d)
        .map(|i| annihilator_matrix(i, d, n).into_matrix())
        .collect()
}

fn fixed_point_rhs(d: usize, q: f64, r_prev: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    // right side of R_n² = I_n + q Σ_{i,j} V_j* R_{n-1} V_i* V_j R_{n-1} V_i
    let dim = level_dim(d, n);
    let mut rhs = DMatrix::<f64>::identity(dim, dim);
    if n >= 2 {
        let v_at_n = annihilators(d, n);
        let v_below = annihilators(d, n - 1);
        for i in 0..d {
            for j in 0..d {
                // (V_i R V_j)* (V_j R V_i) on level n
                let inner = &v_below[j] * r_prev * &v_at_n[i];
                let outer = v_at_n[j].transpose() * r_prev * v_below[i].transpose();
                rhs += (outer * inner) * q;
            }
        }
    }
    rhs
}

/// The family `R_0, …, R_{n_max}` of `R = U M^{1/2} U*`, level by level:
/// `R_0 = 0`, `R_1 = I`, and `[R_n] = [U_n][M_n^{1/2}][U_n]^{-1}`,
/// symmetric positive semidefinite in the orthonormal basis.
///
/// Near `|q| → 1` at deep levels the Gram matrices exhaust double
/// precision; when that is detected the affected level is continued by one
/// step of the fixed-point identity (which determines the same operator,
/// by uniqueness) instead of conjugating through a numerically singular
/// `Γ_n^{1/2}`.
pub fn r_family(d: usize, n_max: usize, q: f64) -> OperatorFamily {
    let levels = build_levels(d, n_max, q);
    let mut mats: Vec<LevelMatrix> = Vec::with_capacity(n_max + 1);
    let mut r_prev = DMatrix::zeros(1, 1);
    for n in 0..=n_max {
        let mat = if n == 0 {
            DMatrix::zeros(1, 1)
        } else if levels.floored[n] == 0 {
            let b = &levels.u[n] * &levels.m_sqrts[n];
            let r = linalg::solve_right(&b, &levels.u[n]);
            let scale = linalg::max_abs(&r).max(1.0);
            assert!(
                linalg::asymmetry(&r) <= ASYMMETRY_FAULT * scale,
                "R_{n} came out asymmetric beyond roundoff; upstream bug"
            );
            linalg::symmetrize(&r)
        } else {
            linalg::psd_sqrt(&linalg::symmetrize(&fixed_point_rhs(d, q, &r_prev, n)))
        };
        r_prev = mat.clone();
        mats.push(LevelMatrix::new(
            mat,
            d,
            n,
            n,
            SpaceKind::Plain,
            SpaceKind::Plain,
        ));
    }
    OperatorFamily::new(d, q, mats)
}

/// Independent route for the `R` family: starting from `R_0 = 0`,
/// `R_1 = I`, each level is the positive square root of the fixed-point
/// right side. Uniqueness of the positive solution forces agreement with
/// [`r_family`].
pub fn r_family_by_iteration(d: usize, n_max: usize, q: f64) -> OperatorFamily {
    assert!(n_max >= 1);
    assert!(q.abs() < 1.0);
    let mut mats: Vec<LevelMatrix> = Vec::with_capacity(n_max + 1);
    let mut r_prev = DMatrix::zeros(1, 1);
    for n in 0..=n_max {
        let mat = if n == 0 {
            DMatrix::zeros(1, 1)
        } else {
            let rhs = linalg::symmetrize(&fixed_point_rhs(d, q, &r_prev, n));
            linalg::psd_sqrt(&rhs)
        };
        r_prev = mat.clone();
        mats.push(LevelMatrix::new(
            mat,
            d,
            n,
            n,
            SpaceKind::Plain,
            SpaceKind::Plain,
        ));
    }
    OperatorFamily::new(d, q, mats)
}

/// Maximum over levels `1..=n_max` of the fixed-point residual
/// `‖R_n² - I - q Σ V_j* R_{n-1} V_i* V_j R_{n-1} V_i‖`.
pub fn fixed_point_residual(family: &OperatorFamily) -> f64 {
    let d = family.d();
    let q = family.q();
    let mut worst = 0.0f64;
    for n in 1..=family.n_max() {
        let r = family.matrix(n);
        let rhs = fixed_point_rhs(d, q, family.matrix(n - 1), n);
        worst = worst.max(linalg::sym_operator_norm(&linalg::symmetrize(
            &(r * r - rhs),
        )));
    }
    worst
}

/// Maximum defect of the shift relations `R_n V_i = V_i (I ⊗ R_n)` and
/// `V_j* R_n = (I ⊗ R_n) V_j*`, where `I ⊗ R_n` is block diagonal with
/// `d` copies of `R_n` (the annihilators strip the leading letter, so the
/// identity factor sits on that side).
pub fn commutant_residual(family: &OperatorFamily) -> f64 {
    let d = family.d();
    let mut worst = 0.0f64;
    for n in 1..family.n_max() {
        let r = family.matrix(n);
        let lifted = linalg::kron_identity_left(r, d);
        for v in annihilators(d, n + 1) {
            let left = r * &v;
            let right = &v * &lifted;
            worst = worst.max(linalg::operator_norm(&(left - &right)));
            let left_star = v.transpose() * r;
            let right_star = &lifted * v.transpose();
            worst = worst.max(linalg::operator_norm(&(left_star - right_star)));
        }
    }
    worst
}

/// The matrix of `T = Σ_{i,j} V_j* V_i* V_j V_i` on level `n`, built from
/// annihilator matrices. `T` vanishes below level 2, swaps the first two
/// tensor factors above, and satisfies the shift property
/// `T_{n} ⊗ I = T_{n+1}` exactly.
pub fn t_matrix(d: usize, n: usize) -> LevelMatrix {
    let dim = level_dim(d, n);
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    if n >= 2 {
        let v_at_n = annihilators(d, n);
        let v_below = annihilators(d, n - 1);
        for i in 0..d {
            for j in 0..d {
                mat += v_at_n[j].transpose() * v_below[i].transpose() * &v_below[j] * &v_at_n[i];
            }
        }
    }
    LevelMatrix::new(mat, d, n, n, SpaceKind::Plain, SpaceKind::Plain)
}

/// Maximum q-commutation defect of the dressed annihilators `B_i = V_i R`:
/// `max ‖(B_i B_j* - q B_j* B_i - δ_ij I)|_{V_n}‖` over `1 ≤ i, j ≤ d`
/// and `0 ≤ n ≤ n_max - 1`. The level cap keeps every term inside the
/// truncation (`B_i B_j*` on level `n` reaches up to `R_{n+1}`).
pub fn qcr_defect(d: usize, n_max: usize, q: f64) -> f64 {
    assert!(n_max >= 2, "q-commutation check needs n_max ≥ 2");
    qcr_defect_for(&r_family(d, n_max, q))
}

/// Same as [`qcr_defect`] for a prebuilt `R` family.
pub fn qcr_defect_for(family: &OperatorFamily) -> f64 {
    let d = family.d();
    let q = family.q();
    assert!(family.n_max() >= 2);
    let mut worst = 0.0f64;
    for n in 0..family.n_max() {
        let dim = level_dim(d, n);
        let identity = DMatrix::<f64>::identity(dim, dim);
        let r_above = family.matrix(n + 1);
        let v_above = annihilators(d, n + 1);
        let v_here = if n >= 1 { annihilators(d, n) } else { Vec::new() };
        for (i, vi) in v_above.iter().enumerate() {
            for (j, vj) in v_above.iter().enumerate() {
                let mut defect = vi * r_above * r_above * vj.transpose();
                if n >= 1 {
                    let r_here = family.matrix(n);
                    defect -= (r_here * v_here[j].transpose() * &v_here[i] * r_here) * q;
                }
                if i == j {
                    defect -= &identity;
                }
                worst = worst.max(linalg::operator_norm(&defect));
            }
        }
    }
    worst
}

/// Maximum defect of the intertwining identity in the form
/// `A_i* = M^{1/2} U^{-1} V_i* U`, checked per level against the creation
/// matrix (prepend letter `i`), over `1 ≤ i ≤ d` and levels
/// `0 ≤ n ≤ n_max - 1`.
pub fn intertwining_defect(d: usize, n_max: usize, q: f64) -> f64 {
    assert!(n_max >= 1);
    let levels = build_levels(d, n_max, q);
    let mut worst = 0.0f64;
    for n in 0..n_max {
        for i in 1..=d {
            let lhs = creator_matrix(i, d, n + 1).into_matrix();
            let vi_star = creator_matrix(i, d, n + 1).into_matrix();
            let rhs = &levels.m_sqrts[n + 1]
                * linalg::solve(&levels.u[n + 1], &(vi_star * &levels.u[n]));
            worst = worst.max(linalg::operator_norm(&(lhs - rhs)));
        }
    }
    worst
}
