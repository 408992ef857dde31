//! Continuous Lyapunov equation via the Kronecker-product linear system.
//!
//! Sizes here top out near n = 41 (cyclic loops two species past the
//! instability threshold), so the dense (n^2 x n^2) formulation is fine and
//! keeps the solver free of Schur decompositions.

use super::linalg::{is_positive_definite, Lu, Mat};
use super::NumericsError;
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

/// Solves `A^T X + X A + Q = 0` for symmetric `Q`.
///
/// Unique solvability requires `A` and `-A` to share no eigenvalue; a
/// singular Kronecker matrix therefore reports a degenerate spectrum. The
/// result is symmetrized, refined once against the residual, and rejected if
/// the final residual exceeds [`tolerances::LYAPUNOV_RESIDUAL_REL`] relative
/// to `max(1, |Q|_F)` plus the `|A| |X|` roundoff floor.
pub fn lyapunov_solve<T: Real>(a: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>, NumericsError> {
    let n = a.rows();
    if !a.is_square() || !q.is_square() || q.rows() != n {
        return Err(NumericsError::Dimension { context: "lyapunov_solve needs square A, Q of equal size" });
    }
    let at = a.transpose();
    let eye = Mat::identity(n);
    // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X) with column-stacked vec.
    let m = eye.kron(&at).add(&at.kron(&eye));
    let lu = Lu::factor(&m).map_err(|_| NumericsError::SpectrumDegeneracy)?;
    let rhs: Vec<T> = (0..n * n)
        .map(|idx| {
            let (col, row) = (idx / n, idx % n);
            -q[(row, col)]
        })
        .collect();
    let sol = lu.solve_refined(&m, &rhs, 2);
    let mut x = Mat::zeros(n, n);
    for idx in 0..n * n {
        let (col, row) = (idx / n, idx % n);
        x[(row, col)] = sol[idx];
    }
    let x = x.symmetrize();

    let residual = at.matmul(&x).add(&x.matmul(a)).add(q).frobenius();
    let scale = T::one().max(q.frobenius());
    // |A| |X| eps is the roundoff floor of the residual itself; a stiff A
    // (closed loops under cheap control) pushes it far above |Q| eps.
    let floor = cast::<T>(tolerances::RESIDUAL_ROUNDOFF_MULT)
        * T::epsilon()
        * (T::one() + a.frobenius() * x.frobenius());
    let limit = cast::<T>(tolerances::LYAPUNOV_RESIDUAL_REL) * scale + floor;
    if !(residual <= limit) {
        return Err(NumericsError::ResidualTooLarge {
            residual: approx_f64(residual),
            limit: approx_f64(limit),
        });
    }
    Ok(x)
}

/// Lyapunov stability certificate: `A` is Hurwitz iff `A^T X + X A = -I` has
/// a positive definite solution. No eigenvalues are computed.
pub fn is_hurwitz<T: Real>(a: &Mat<T>) -> bool {
    let q = Mat::identity(a.rows());
    match lyapunov_solve(a, &q) {
        Ok(x) => is_positive_definite(&x),
        Err(_) => false,
    }
}
