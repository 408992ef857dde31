//! Peak frequency-response gain of a stable SISO state-space system.
//!
//! The norm is located by a dense logarithmic sweep plus golden-section
//! refinement around the best grid point. A sweep can only certify what it
//! samples, so the grid is deliberately dense (4000 points over eight
//! decades) and the window grows automatically while the maximum sits on an
//! endpoint; downstream verification compares the result against closed
//! forms, which would catch a missed resonance.

use num_complex::Complex;

use super::linalg::{Lu, Mat};
use super::lyapunov::is_hurwitz;
use super::NumericsError;
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HinfResult<T> {
    pub norm: T,
    /// Frequency achieving the peak; zero when the supremum sits at DC.
    pub omega_peak: T,
}

/// Gain |c (i w I - A)^-1 b| at one frequency.
pub fn gain_at<T: Real>(a: &Mat<T>, b: &[T], c: &[T], omega: T) -> Result<T, NumericsError> {
    let n = a.rows();
    let zero = Complex::new(T::zero(), T::zero());
    let m = Mat::<Complex<T>>::from_fn(n, n, |i, j| {
        let diag = if i == j { Complex::new(T::zero(), omega) } else { zero };
        diag - Complex::new(a[(i, j)], T::zero())
    });
    let lu = Lu::factor(&m).map_err(|_| NumericsError::SpectrumDegeneracy)?;
    let rhs: Vec<Complex<T>> = b.iter().map(|&x| Complex::new(x, T::zero())).collect();
    let x = lu.solve(&rhs);
    let mut acc = zero;
    for (ci, xi) in c.iter().zip(&x) {
        acc += Complex::new(*ci, T::zero()) * *xi;
    }
    let g = acc.norm();
    if g.is_finite() {
        Ok(g)
    } else {
        Err(NumericsError::NonFinite { context: "frequency response" })
    }
}

/// DC gain |c A^-1 b| (sign dropped), the omega = 0 candidate.
fn dc_gain<T: Real>(a: &Mat<T>, b: &[T], c: &[T]) -> Result<T, NumericsError> {
    let lu = Lu::factor(a).map_err(|_| NumericsError::SpectrumDegeneracy)?;
    let x = lu.solve(b);
    let g: T = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum::<T>().abs();
    if g.is_finite() {
        Ok(g)
    } else {
        Err(NumericsError::NonFinite { context: "dc gain" })
    }
}

/// Supremum over frequency of the disturbance-to-output gain for a Hurwitz
/// `A`. Errors with [`NumericsError::UnstablePlant`] otherwise, since the
/// norm is then infinite.
pub fn hinf_norm<T: Real>(a: &Mat<T>, b: &[T], c: &[T]) -> Result<HinfResult<T>, NumericsError> {
    let n = a.rows();
    if b.len() != n || c.len() != n {
        return Err(NumericsError::Dimension { context: "hinf_norm vector lengths" });
    }
    if !is_hurwitz(a) {
        return Err(NumericsError::UnstablePlant);
    }

    let dc = dc_gain(a, b, c)?;

    let mut lo: T = cast(tolerances::HINF_OMEGA_LO);
    let mut hi: T = cast(tolerances::HINF_OMEGA_HI);
    let mut grid: Vec<(T, T)> = Vec::with_capacity(tolerances::HINF_GRID_POINTS);
    sweep_into(a, b, c, lo, hi, tolerances::HINF_GRID_POINTS, &mut grid)?;

    let mut ext_up = 0usize;
    let mut ext_down = 0usize;
    loop {
        let (imax, &(w_max, g_max)) = grid
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .1.partial_cmp(&y.1 .1).unwrap())
            .expect("sweep grid is never empty");

        if imax + 1 == grid.len() {
            if ext_up >= tolerances::HINF_MAX_EXTENSIONS {
                return Err(NumericsError::RangeExhausted {
                    context: format!(
                        "gain still rising at omega = {:.3e}",
                        approx_f64(w_max)
                    ),
                });
            }
            let new_hi = hi * cast(10.0);
            let mut extra = Vec::new();
            sweep_into(a, b, c, hi, new_hi, tolerances::HINF_GRID_POINTS / 8, &mut extra)?;
            grid.extend(extra);
            hi = new_hi;
            ext_up += 1;
            continue;
        }
        if imax == 0 {
            // The lowest sample winning by a hair over DC is continuity, not
            // a sub-window resonance; only a clear excess forces extension.
            if g_max <= dc * (T::one() + cast(1e-9)) {
                return Ok(HinfResult { norm: dc.max(g_max), omega_peak: T::zero() });
            }
            if ext_down >= tolerances::HINF_MAX_EXTENSIONS {
                return Err(NumericsError::RangeExhausted {
                    context: format!(
                        "gain still rising toward omega = {:.3e}",
                        approx_f64(w_max)
                    ),
                });
            }
            let new_lo = lo / cast(10.0);
            let mut extra = Vec::new();
            sweep_into(a, b, c, new_lo, lo, tolerances::HINF_GRID_POINTS / 8, &mut extra)?;
            extra.extend(grid);
            grid = extra;
            lo = new_lo;
            ext_down += 1;
            continue;
        }

        let refined = golden_refine(a, b, c, grid[imax - 1].0, grid[imax + 1].0)?;
        let best = if refined.1 >= g_max { refined } else { (w_max, g_max) };
        return if dc >= best.1 {
            Ok(HinfResult { norm: dc, omega_peak: T::zero() })
        } else {
            Ok(HinfResult { norm: best.1, omega_peak: best.0 })
        };
    }
}

fn sweep_into<T: Real>(
    a: &Mat<T>,
    b: &[T],
    c: &[T],
    lo: T,
    hi: T,
    points: usize,
    out: &mut Vec<(T, T)>,
) -> Result<(), NumericsError> {
    let lt = lo.ln();
    let ht = hi.ln();
    for i in 0..points {
        let t = lt + (ht - lt) * cast(i as f64 / (points - 1) as f64);
        let w = t.exp();
        out.push((w, gain_at(a, b, c, w)?));
    }
    Ok(())
}

/// Golden-section maximization of the gain over log-frequency.
fn golden_refine<T: Real>(
    a: &Mat<T>,
    b: &[T],
    c: &[T],
    w_lo: T,
    w_hi: T,
) -> Result<(T, T), NumericsError> {
    let phi: T = (cast::<T>(5.0).sqrt() - T::one()) / cast(2.0);
    let mut lo = w_lo.ln();
    let mut hi = w_hi.ln();
    let mut t1 = hi - phi * (hi - lo);
    let mut t2 = lo + phi * (hi - lo);
    let mut f1 = gain_at(a, b, c, t1.exp())?;
    let mut f2 = gain_at(a, b, c, t2.exp())?;
    for _ in 0..200 {
        if hi - lo <= cast::<T>(tolerances::HINF_REFINE_RTOL) * (T::one() + lo.abs().max(hi.abs()))
        {
            break;
        }
        if f1 < f2 {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = gain_at(a, b, c, t2.exp())?;
        } else {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = gain_at(a, b, c, t1.exp())?;
        }
    }
    if f1 >= f2 {
        Ok((t1.exp(), f1))
    } else {
        Ok((t2.exp(), f2))
    }
}
