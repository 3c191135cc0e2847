//! Dense symmetric linear algebra helpers shared across the crate.
//!
//! Thin wrappers over nalgebra: sorted symmetric eigensolves, positive
//! semidefinite square roots with roundoff clamping, operator norms, and
//! linear solves. Matrices that are exactly diagonal take a fast path so
//! that degenerate configurations (q = 0, level 1) stay exact.

use nalgebra::{DMatrix, DVector};

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entrywise difference; shapes must match.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Largest entrywise deviation from symmetry, `max |a - a^T|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square());
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric part `(a + a^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square());
    let mut s = a.clone();
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Operator norm (largest singular value). Works for rectangular inputs.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Operator norm of a symmetric matrix: largest absolute eigenvalue.
pub fn sym_operator_norm(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(a);
    vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// One cyclic Jacobi pass over `b`, rotating away off-diagonal mass and
/// accumulating the rotations into `vecs`. `b` is kept symmetric.
fn jacobi_sweep(b: &mut DMatrix<f64>, vecs: &mut DMatrix<f64>, tol: f64) {
    let n = b.nrows();
    for p in 0..n {
        for q in (p + 1)..n {
            let apq = b[(p, q)];
            if apq.abs() <= tol {
                continue;
            }
            let tau = (b[(q, q)] - b[(p, p)]) / (2.0 * apq);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let (app, aqq) = (b[(p, p)], b[(q, q)]);
            for k in 0..n {
                if k == p || k == q {
                    continue;
                }
                let (akp, akq) = (b[(k, p)], b[(k, q)]);
                b[(k, p)] = c * akp - s * akq;
                b[(p, k)] = b[(k, p)];
                b[(k, q)] = s * akp + c * akq;
                b[(q, k)] = b[(k, q)];
            }
            b[(p, p)] = app - t * apq;
            b[(q, q)] = aqq + t * apq;
            b[(p, q)] = 0.0;
            b[(q, p)] = 0.0;
            for k in 0..vecs.nrows() {
                let (vkp, vkq) = (vecs[(k, p)], vecs[(k, q)]);
                vecs[(k, p)] = c * vkp - s * vkq;
                vecs[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
}

fn max_offdiag(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    let mut worst = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            worst = worst.max(b[(p, q)].abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending and the
/// matching eigenvectors as columns. Exactly diagonal input is passed
/// through without an iterative solve, so its eigenvalues are bit-exact.
///
/// The tridiagonal QL solve loses a few digits on clustered spectra, which
/// the level operators here have in abundance, so the result is polished
/// by cyclic Jacobi sweeps on the nearly diagonal `Qᵀ A Q` until the
/// off-diagonal mass is at roundoff level.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    assert!(a.is_square());
    let n = a.nrows();
    if is_diagonal(a) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vecs = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vecs[(i, col)] = 1.0;
        }
        return (vals, vecs);
    }
    let eig = a.clone().symmetric_eigen();
    let mut vecs = eig.eigenvectors;
    let mut b = symmetrize(&(vecs.transpose() * a * &vecs));
    let scale = (0..n)
        .map(|i| b[(i, i)].abs())
        .fold(max_offdiag(&b), f64::max)
        .max(f64::MIN_POSITIVE);
    let target = 4.0 * f64::EPSILON * scale;
    for _ in 0..12 {
        if max_offdiag(&b) <= target {
            break;
        }
        jacobi_sweep(&mut b, &mut vecs, 0.1 * target);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b[(i, i)].partial_cmp(&b[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| b[(i, i)]).collect();
    let mut sorted = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        sorted.set_column(col, &vecs.column(i));
    }
    (vals, sorted)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen(a).0
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

fn rebuild(vals: &[f64], vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v)));
    // When sym_eigen took the diagonal fast path, vecs is a 0/1 permutation
    // matrix and this product is exact.
    vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose()
}

/// Positive semidefinite square root of a symmetric PSD matrix.
///
/// Eigenvalues in `(-clamp, 0)` with `clamp = 1e-12 * max(1, λ_max)` are
/// treated as roundoff and clamped to zero; anything more negative is a
/// hard error, since every matrix routed through here is PSD by
/// construction.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let clamp = 1e-12 * top;
    assert!(
        vals[0] > -clamp,
        "matrix is not positive semidefinite: min eigenvalue {:e}",
        vals[0]
    );
    rebuild(&vals, &vecs, |v| v.max(0.0).sqrt())
}

/// Square root and inverse square root of a symmetric positive definite
/// matrix, from a single eigensolve.
///
/// Eigenvalues below `floor = 64 ε λ_max` are raised to the floor before
/// inverting: they are indistinguishable from zero at working precision,
/// and flooring keeps the inverse finite instead of amplifying pure noise.
/// Returns the pair together with the number of floored eigenvalues, so
/// callers can tell when the result left the trustworthy regime.
pub fn sqrt_pair_floored(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, usize) {
    let (vals, vecs) = sym_eigen(a);
    let top = vals.last().copied().unwrap_or(0.0);
    assert!(top > 0.0, "matrix has no positive spectrum");
    let floor = 64.0 * f64::EPSILON * top;
    let floored = vals.iter().filter(|&&v| v < floor).count();
    let sqrt = rebuild(&vals, &vecs, |v| v.max(floor).sqrt());
    let inv_sqrt = rebuild(&vals, &vecs, |v| 1.0 / v.max(floor).sqrt());
    (sqrt, inv_sqrt, floored)
}

/// Square root and inverse square root of a symmetric positive definite
/// matrix; panics if the spectrum is numerically degenerate.
pub fn sqrt_pair(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (s, si, floored) = sqrt_pair_floored(a);
    assert!(
        floored == 0,
        "matrix is numerically singular: {floored} eigenvalue(s) at roundoff level"
    );
    (s, si)
}

/// Solves `a x = b` by LU with partial pivoting; panics on singular `a`.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone()
        .lu()
        .solve(b)
        .expect("linear solve hit a singular matrix")
}

/// Computes `b a^{-1}` as the solution of `x a = b`.
pub fn solve_right(b: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    solve(&a.transpose(), &b.transpose()).transpose()
}

/// `a ⊗ I_d`: the operator acting on the leading tensor factors, identity
/// on one trailing factor appended on the right.
pub fn kron_identity_right(a: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    a.kronecker(&DMatrix::identity(d, d))
}

/// `I_d ⊗ a`: block diagonal with `d` copies of `a`, one per leading letter.
pub fn kron_identity_left(a: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(r * d, c * d);
    for i in 0..d {
        out.view_mut((i * r, i * c), (r, c)).copy_from(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&a);
        assert!(max_abs_diff(&(&s * &s), &a) < 1e-14);
    }

    #[test]
    fn sqrt_pair_inverts() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 5.0]);
        let (s, si) = sqrt_pair(&a);
        assert!(max_abs_diff(&(&s * &si), &DMatrix::identity(2, 2)) < 1e-14);
    }

    #[test]
    fn diagonal_fast_path_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let s = psd_sqrt(&a);
        assert_eq!(s[(0, 0)], 2.0);
        assert_eq!(s[(1, 1)], 3.0);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn identity_sqrt_is_bitwise_identity() {
        let a = DMatrix::<f64>::identity(4, 4);
        let s = psd_sqrt(&a);
        assert_eq!(s, a);
    }

    #[test]
    #[should_panic(expected = "not positive semidefinite")]
    fn psd_sqrt_rejects_negative() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let _ = psd_sqrt(&a);
    }

    #[test]
    fn operator_norm_of_rectangular() {
        let a = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert!((operator_norm(&a) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn kron_conventions() {
        let a = DMatrix::from_row_slice(1, 1, &[2.0]);
        let right = kron_identity_right(&a, 3);
        let left = kron_identity_left(&a, 3);
        assert_eq!(right, DMatrix::from_diagonal_element(3, 3, 2.0));
        assert_eq!(left, DMatrix::from_diagonal_element(3, 3, 2.0));

        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let r = kron_identity_right(&b, 2);
        // entry (row block 0, col block 1) carries b[0,1] on the diagonal
        assert_eq!(r[(0, 2)], 1.0);
        assert_eq!(r[(1, 3)], 1.0);
        let l = kron_identity_left(&b, 2);
        assert_eq!(l[(0, 1)], 1.0);
        assert_eq!(l[(2, 3)], 1.0);
    }
}
