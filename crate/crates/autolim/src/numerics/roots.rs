//! Closed-form spectra for shifted power equations.

use num_complex::Complex;

use crate::real::{cast, Real};

/// All complex solutions of `(lambda + a)^n = r^n` for real `r > 0`, ordered
/// by ascending root index `j`: `lambda_j = r exp(2 pi i j / n) - a`.
///
/// This is the characteristic equation of every circulant-like loop in the
/// crate, so the dominant (largest real part) solution is always `j = 0`,
/// which is real.
pub fn shifted_power_roots<T: Real>(r: T, a: T, n: usize) -> Vec<Complex<T>> {
    assert!(n >= 1, "spectrum of an empty loop");
    let tau = cast::<T>(2.0) * T::PI();
    (0..n)
        .map(|j| {
            let theta = tau * cast(j as f64) / cast(n as f64);
            Complex::from_polar(r, theta) - Complex::new(a, T::zero())
        })
        .collect()
}
