//! Stabilizing solutions of single-input algebraic Riccati equations by
//! Newton iteration on Lyapunov solves.
//!
//!   A^T P + P A - (P b)(b^T P) / r + Q = 0
//!
//! Each Newton step is a closed-loop Lyapunov equation, so the whole solver
//! inherits the no-eigensolver policy: stability of intermediate loops is
//! certified, and the initial stabilizing gain is built by reflecting real
//! unstable modes one at a time with deadbeat rank-one corrections.

use super::linalg::{dot, Mat};
use super::lyapunov::{is_hurwitz, lyapunov_solve};
use super::NumericsError;
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

/// Dominant (largest real part) eigenvalue of `A` with its left eigenvector,
/// by power iteration on the shifted transpose. Converges only when that
/// eigenvalue is real and simple, which is exactly the regime the pathway
/// plants live in; a complex dominant pair shows up as non-convergence.
///
/// A larger shift orders eigenvalues more strictly by real part but slows
/// convergence, so the shift escalates only when the base attempt stalls.
fn dominant_left_mode<T: Real>(a: &Mat<T>) -> Result<(T, Vec<T>), NumericsError> {
    let base = a.inf_norm() + T::one();
    let mut last = NumericsError::Convergence { iterations: 0, residual: f64::NAN };
    for boost in 0..3 {
        let sigma = base * cast::<T>(4.0_f64.powi(boost));
        match dominant_left_mode_shifted(a, sigma) {
            Ok(pair) => return Ok(pair),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn dominant_left_mode_shifted<T: Real>(
    a: &Mat<T>,
    sigma: T,
) -> Result<(T, Vec<T>), NumericsError> {
    let n = a.rows();
    let shifted_t = a.transpose().add(&Mat::identity(n).scale(sigma));
    // Deterministic start with unequal components so no symmetry of the loop
    // can keep the iterate orthogonal to the dominant mode.
    let mut v: Vec<T> = (0..n).map(|i| T::one() + cast::<T>(i as f64 + 1.0).recip()).collect();
    normalize(&mut v);
    let mut last_res = T::infinity();
    for _ in 0..50_000 {
        let mut w = shifted_t.matvec(&v);
        let norm = normalize(&mut w);
        if !(norm > T::zero()) {
            return Err(NumericsError::NonFinite { context: "power iteration" });
        }
        let mv = shifted_t.matvec(&w);
        let mu = dot(&w, &mv);
        let res = mv
            .iter()
            .zip(&w)
            .map(|(&m, &x)| (m - mu * x).abs())
            .fold(T::zero(), T::max);
        v = w;
        // The f64 threshold, widened to stay reachable in narrower types.
        let tol = cast::<T>(1e-12).max(cast::<T>(4.0) * T::epsilon());
        if res <= tol * sigma.max(T::one()) {
            return Ok((mu - sigma, v));
        }
        last_res = res;
    }
    Err(NumericsError::Convergence { iterations: 50_000, residual: approx_f64(last_res) })
}

fn normalize<T: Real>(v: &mut [T]) -> T {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > T::zero() {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Builds a stabilizing state-feedback row `k` (so `A - b k` is Hurwitz) by
/// repeatedly reflecting the dominant real unstable mode. With left
/// eigenvector `v` of the current loop, the update `k += ((lambda + mu) /
/// v^T b) v^T` moves that eigenvalue to `-mu` and leaves the rest in place.
pub fn stabilizing_gain<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>, NumericsError> {
    let n = a.rows();
    if b.len() != n {
        return Err(NumericsError::Dimension { context: "stabilizing_gain: b length" });
    }
    let mut k = vec![T::zero(); n];
    let mut a_cl = a.clone();
    for _ in 0..n {
        if is_hurwitz(&a_cl) {
            return Ok(k);
        }
        let (lambda, v) = dominant_left_mode(&a_cl)?;
        if lambda <= T::zero() {
            // Dominant mode already in the closed left half-plane yet no
            // Lyapunov certificate: marginal spectrum, nothing to reflect.
            return Err(NumericsError::SynthesisFailure {
                reason: format!(
                    "marginally stable loop (dominant real part {:.3e})",
                    approx_f64(lambda)
                ),
            });
        }
        let vb = dot(&v, b);
        if vb.abs() <= cast(tolerances::CONTROL_DEGENERACY) {
            return Err(NumericsError::DegenerateControl { magnitude: approx_f64(vb.abs()) });
        }
        let mu = lambda + T::one();
        let gain = (lambda + mu) / vb;
        for i in 0..n {
            k[i] += gain * v[i];
            for j in 0..n {
                let d = b[i] * gain * v[j];
                a_cl[(i, j)] -= d;
            }
        }
        // Rebuild from the original to keep the reflections from accumulating
        // roundoff in a_cl.
        a_cl = close_loop(a, b, &k);
    }
    if is_hurwitz(&a_cl) {
        Ok(k)
    } else {
        Err(NumericsError::SynthesisFailure {
            reason: "unstable modes persist after n deadbeat reflections".to_string(),
        })
    }
}

fn close_loop<T: Real>(a: &Mat<T>, b: &[T], k: &[T]) -> Mat<T> {
    let n = a.rows();
    Mat::from_fn(n, n, |i, j| a[(i, j)] - b[i] * k[j])
}

/// Stabilizing solution of the single-input Riccati equation. `q` must be
/// symmetric positive semidefinite and `r` strictly positive.
pub fn riccati_solve<T: Real>(
    a: &Mat<T>,
    b: &[T],
    q: &Mat<T>,
    r: T,
) -> Result<Mat<T>, NumericsError> {
    let n = a.rows();
    if !a.is_square() || b.len() != n || !q.is_square() || q.rows() != n {
        return Err(NumericsError::Dimension { context: "riccati_solve operand sizes" });
    }
    if !(r > T::zero()) {
        return Err(NumericsError::SynthesisFailure {
            reason: "control weight r must be positive".to_string(),
        });
    }

    let mut k = stabilizing_gain(a, b)?;
    let mut p = Mat::<T>::zeros(n, n);
    let mut last_delta = T::infinity();
    for _ in 0..tolerances::RICCATI_MAX_ITER {
        let a_cl = close_loop(a, b, &k);
        // (A - b k)^T P + P (A - b k) = -(Q + r k^T k)
        let mut q_eff = q.clone();
        for i in 0..n {
            for j in 0..n {
                q_eff[(i, j)] += r * k[i] * k[j];
            }
        }
        let p_next = match lyapunov_solve(&a_cl, &q_eff) {
            Ok(x) => x,
            Err(e) => {
                return Err(NumericsError::SynthesisFailure {
                    reason: format!("newton step lyapunov solve failed: {e}"),
                })
            }
        };
        let delta = p_next.sub(&p).frobenius();
        p = p_next;
        let pb = p.matvec(b);
        k = pb.iter().map(|&x| x / r).collect();
        // Step sizes are not monotone far from the solution, so a plateau
        // only counts as the roundoff floor once the update is already tiny.
        // Both gates widen with the working precision so narrower types can
        // still exit.
        let scale = T::one() + p.frobenius();
        let hard = cast::<T>(1e-13).max(cast::<T>(450.0) * T::epsilon());
        let plateau = cast::<T>(1e-7).max(cast::<T>(6.0) * T::epsilon().sqrt());
        if delta <= hard * scale || (delta <= plateau * scale && delta >= last_delta) {
            break;
        }
        last_delta = delta;
    }

    // Independent acceptance: algebraic residual, symmetry, and a Lyapunov
    // certificate for the final closed loop.
    let pb = p.matvec(b);
    let quad = Mat::from_fn(n, n, |i, j| pb[i] * pb[j] / r);
    let residual = a
        .transpose()
        .matmul(&p)
        .add(&p.matmul(a))
        .sub(&quad)
        .add(q)
        .frobenius();
    // Roundoff in P enters the quadratic term amplified by the gain |P b|/r,
    // so the attainable residual floor is set by the cancelled magnitudes,
    // not by |P| alone. Dominant under cheap control where r = eps^2.
    let bnorm = dot(b, b).sqrt();
    let pbnorm = dot(&pb, &pb).sqrt();
    let two = cast::<T>(2.0);
    let cancel = q.frobenius()
        + two * a.frobenius() * p.frobenius()
        + quad.frobenius()
        + two * p.frobenius() * bnorm * pbnorm / r;
    let floor = cast::<T>(tolerances::RESIDUAL_ROUNDOFF_MULT) * T::epsilon() * cancel;
    let limit =
        cast::<T>(tolerances::RICCATI_RESIDUAL_REL) * (T::one() + p.frobenius()) + floor;
    if !(residual <= limit) {
        return Err(NumericsError::Convergence {
            iterations: tolerances::RICCATI_MAX_ITER,
            residual: approx_f64(residual),
        });
    }
    let asym = p.sub(&p.transpose()).max_abs();
    let sym_tol = cast::<T>(tolerances::RICCATI_SYMMETRY_TOL).max(cast::<T>(8.0) * T::epsilon());
    if !(asym <= sym_tol * (T::one() + p.max_abs())) {
        return Err(NumericsError::SynthesisFailure {
            reason: format!("solution asymmetry {:.3e}", approx_f64(asym)),
        });
    }
    let k_final: Vec<T> = p.matvec(b).iter().map(|&x| x / r).collect();
    if !is_hurwitz(&close_loop(a, b, &k_final)) {
        return Err(NumericsError::SynthesisFailure {
            reason: "converged solution does not stabilize the loop".to_string(),
        });
    }
    Ok(p.symmetrize())
}

/// Cost matrix of the minimum-energy stabilization problem (`Q = 0`,
/// `r = 1`): the minimal value of the integral of `u^2` from state `z0` is
/// `z0^T P z0`. Zero for a plant that is already stable.
pub fn min_energy_cost_matrix<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Mat<T>, NumericsError> {
    riccati_solve(a, b, &Mat::zeros(a.rows(), a.rows()), T::one())
}

/// Optimal quadratic cost from `z0` under output weight `c^T c` and control
/// weight `eps^2`. As `eps` shrinks this converges from above onto the
/// cheapest achievable output energy.
pub fn cheap_cost<T: Real>(
    a: &Mat<T>,
    b: &[T],
    c: &[T],
    z0: &[T],
    eps: T,
) -> Result<T, NumericsError> {
    let n = a.rows();
    if c.len() != n || z0.len() != n {
        return Err(NumericsError::Dimension { context: "cheap_cost vector lengths" });
    }
    let q = Mat::from_fn(n, n, |i, j| c[i] * c[j]);
    let p = riccati_solve(a, b, &q, eps * eps)?;
    Ok(dot(z0, &p.matvec(z0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::is_positive_definite;

    #[test]
    fn scalar_minimum_energy_matches_hand_value() {
        // a = 1, b = -2: P solves 2P - 4P^2 = 0, stabilizing root P = 1/2.
        let a = Mat::from_rows(&[vec![1.0_f64]]);
        let p = min_energy_cost_matrix(&a, &[-2.0]).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stable_plant_needs_no_energy() {
        let a = Mat::from_rows(&[vec![-1.0_f64]]);
        let p = min_energy_cost_matrix(&a, &[1.0]).unwrap();
        assert!(p[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn scalar_lqr_matches_quadratic_formula() {
        // a = -1, b = 1, q = 1, r = 1: P = sqrt(2) - 1.
        let a = Mat::from_rows(&[vec![-1.0_f64]]);
        let q = Mat::identity(1);
        let p = riccati_solve(&a, &[1.0], &q, 1.0).unwrap();
        assert!((p[(0, 0)] - (2.0_f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn uncontrollable_unstable_mode_is_a_synthesis_error() {
        let a = Mat::from_rows(&[vec![1.0_f64]]);
        let err = min_energy_cost_matrix(&a, &[0.0]).unwrap_err();
        assert!(matches!(err, NumericsError::DegenerateControl { .. }));
    }

    #[test]
    fn deflation_stabilizes_a_two_state_saddle() {
        let a = Mat::from_rows(&[vec![-1.0_f64, 3.0], vec![1.0, -1.0]]);
        let b = [1.0, -1.0];
        let k = stabilizing_gain(&a, &b).unwrap();
        let a_cl = close_loop(&a, &b, &k);
        assert!(is_hurwitz(&a_cl));
    }

    #[test]
    fn riccati_solution_is_symmetric_positive_semidefinite() {
        let a = Mat::from_rows(&[vec![0.2_f64, 1.0], vec![0.0, -0.5]]);
        let b = [0.0, 1.0];
        let q = Mat::identity(2);
        let p = riccati_solve(&a, &b, &q, 0.5).unwrap();
        assert!((p[(0, 1)] - p[(1, 0)]).abs() < 1e-12);
        assert!(is_positive_definite(&p));
    }
}
