//! Linearization at the operating point, and extraction of the internal
//! drift subsystem whose instability sets the control limits.
//!
//! Eliminating `u` through the combination `z1 = x1 + y/alpha` (whose drift
//! is input-free) and keeping the remaining species coordinates yields an
//! internal subsystem driven by the output `y` and the disturbance:
//!
//!   z' = A z + B y + C delta
//!
//! All three families make `A`'s spectrum a shifted scaled set of roots of
//! unity, so eigenvalues and left eigenvectors are written down in closed
//! form rather than computed. The dominant eigenvalue is always the real one
//! at root index zero.

use num_complex::Complex;
use thiserror::Error;

use crate::model::{ModelError, PathwayModel};
use crate::numerics::{shifted_power_roots, Mat};
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum LinearizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("node drain slopes differ at the operating point: {detail}")]
    NonUniformRates { detail: String },
    #[error("relay slope out of node {index} is {value:.3e}; the loop gain is degenerate")]
    DegenerateRelay { index: usize, value: f64 },
    #[error("internal drift is stable (dominant eigenvalue {lambda:.3e}); no floor on attenuation")]
    NoUnstableMode { lambda: f64 },
}

/// Linear time-invariant plant at the operating point: state deviations obey
/// `e' = A e + bu (u - u*) + bd delta`, output deviation is `cy . e`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPlant<T> {
    pub a: Mat<T>,
    pub bu: Vec<T>,
    pub bd: Vec<T>,
    pub cy: Vec<T>,
}

/// Internal drift subsystem in the `u`-free coordinates: `z' = A z + B y +
/// C delta` with `z1 = x1 + y/alpha` and the remaining species unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroDynamics<T> {
    pub a: Mat<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

/// Closed-form dominant eigenstructure of the internal drift matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DominantMode<T> {
    /// The largest-real-part eigenvalue; always real for these loops.
    pub lambda: T,
    /// Left eigenvector of `lambda`, unnormalized with first entry 1.
    pub v: Vec<T>,
    /// Full spectrum, ordered by ascending root index.
    pub spectrum: Vec<Complex<T>>,
    /// Eigenvalues with strictly positive real part.
    pub unstable_count: usize,
}

/// Central-difference Jacobian of `f` at `x0`. Steps scale with each
/// coordinate so the stencil stays admissible for strictly positive states.
pub fn jacobian_fd<T: Real, E>(
    f: impl Fn(&[T]) -> Result<Vec<T>, E>,
    x0: &[T],
) -> Result<Mat<T>, E> {
    let n = x0.len();
    let f0 = f(x0)?;
    let m = f0.len();
    let mut jac = Mat::zeros(m, n);
    // cbrt(eps) balances truncation against cancellation; the fixed step
    // wins in f64, the epsilon term keeps narrower types out of the noise.
    let rel = cast::<T>(tolerances::FD_STEP).max(cast::<T>(0.125) * T::epsilon().cbrt());
    for j in 0..n {
        let h = rel * (T::one() + x0[j].abs());
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (h + h);
        }
    }
    Ok(jac)
}

/// Analytic linearization of the full controlled model at its equilibrium.
pub fn linearize_full<T: Real>(model: &PathwayModel<T>) -> Result<LinearPlant<T>, LinearizeError> {
    Ok(match model {
        PathwayModel::TwoState(p) => two_state_plant(p.alpha, p.k, p.g, p.a),
        PathwayModel::Chain(p) => {
            if p.n == 1 {
                two_state_plant(p.alpha, p.k, p.g, p.a)
            } else {
                let n = p.n;
                let (alpha, k, g, a) = (p.alpha, p.k, p.g, p.a);
                let mut am = Mat::zeros(n + 1, n + 1);
                am[(0, 0)] = -k;
                am[(0, n)] = a;
                for i in 1..n {
                    am[(i, i - 1)] = k;
                    am[(i, i)] = -k;
                }
                am[(n - 1, n)] = g;
                am[(n, n - 1)] = (alpha + T::one()) * k;
                am[(n, n)] = -(alpha + T::one()) * g - alpha * a;
                let mut bu = vec![T::zero(); n + 1];
                bu[0] = T::one();
                bu[n] = -alpha;
                let mut bd = vec![T::zero(); n + 1];
                bd[n] = -T::one();
                let mut cy = vec![T::zero(); n + 1];
                cy[n] = T::one();
                LinearPlant { a: am, bu, bd, cy }
            }
        }
        PathwayModel::Cyclic(net) => {
            let n = net.n();
            let alpha = net.alpha();
            let x_star = net.x_star();
            let mut am = Mat::zeros(n + 1, n + 1);
            for (i, node) in net.nodes().iter().enumerate() {
                am[(i, i)] = -node.f.derivative(x_star[i]);
                if i > 0 {
                    am[(i, i - 1)] = net.nodes()[i - 1].g.derivative(x_star[i - 1]);
                }
            }
            am[(n, n - 1)] = net.nodes()[n - 1].g.derivative(x_star[n - 1]);
            am[(n, n)] = -net.sink().derivative(net.y_star());
            let mut bu = vec![T::zero(); n + 1];
            bu[0] = T::one();
            bu[n] = -alpha;
            let mut bd = vec![T::zero(); n + 1];
            bd[n] = -T::one();
            let mut cy = vec![T::zero(); n + 1];
            cy[n] = T::one();
            LinearPlant { a: am, bu, bd, cy }
        }
    })
}

fn two_state_plant<T: Real>(alpha: T, k: T, g: T, a: T) -> LinearPlant<T> {
    let am = Mat::from_rows(&[
        vec![-k, a + g],
        vec![(alpha + T::one()) * k, -alpha * a - (alpha + T::one()) * g],
    ]);
    LinearPlant { a: am, bu: vec![T::one(), -alpha], bd: vec![T::zero(), -T::one()], cy: vec![T::zero(), T::one()] }
}

/// Uniform drain slope and relay slopes of a cyclic network, with the loop
/// gain root `r`. Shared by [`zero_dynamics`] and [`dominant_mode`].
struct CyclicLoopData<T> {
    drain: T,
    relays: Vec<T>,
    sink_slope: T,
    r: T,
}

fn cyclic_loop_data<T: Real>(
    net: &crate::model::CyclicNetwork<T>,
) -> Result<CyclicLoopData<T>, LinearizeError> {
    let n = net.n();
    let x_star = net.x_star();
    let drains: Vec<T> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| node.f.derivative(x_star[i]))
        .collect();
    let mean = drains.iter().copied().sum::<T>() / cast(n as f64);
    let tol = cast::<T>(tolerances::UNIFORM_RATE_RTOL) * T::one().max(mean.abs());
    for (i, &d) in drains.iter().enumerate() {
        if (d - mean).abs() > tol {
            return Err(LinearizeError::NonUniformRates {
                detail: format!(
                    "node {} drains at {:.6e}, mean is {:.6e}",
                    i + 1,
                    approx_f64(d),
                    approx_f64(mean)
                ),
            });
        }
    }
    let relays: Vec<T> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| node.g.derivative(x_star[i]))
        .collect();
    for (i, &gp) in relays.iter().enumerate() {
        if !(gp > cast(tolerances::CONTROL_DEGENERACY)) {
            return Err(LinearizeError::DegenerateRelay {
                index: i + 1,
                value: approx_f64(gp),
            });
        }
    }
    let log_r = (relays
        .iter()
        .map(|&gp| gp.ln())
        .sum::<T>()
        - net.alpha().ln())
        / cast(n as f64);
    Ok(CyclicLoopData {
        drain: mean,
        relays,
        sink_slope: net.sink().derivative(net.y_star()),
        r: log_r.exp(),
    })
}

/// Internal drift subsystem of the model. Succeeds even when that subsystem
/// is stable; limit extraction is where instability becomes a requirement.
pub fn zero_dynamics<T: Real>(model: &PathwayModel<T>) -> Result<ZeroDynamics<T>, LinearizeError> {
    Ok(match model {
        PathwayModel::TwoState(p) => two_state_zd(p.alpha, p.k, p.g),
        PathwayModel::Chain(p) => {
            if p.n == 1 {
                two_state_zd(p.alpha, p.k, p.g)
            } else {
                let n = p.n;
                let (alpha, k, g) = (p.alpha, p.k, p.g);
                let mut am = Mat::zeros(n, n);
                for i in 0..n {
                    am[(i, i)] = -k;
                }
                am[(0, n - 1)] += (T::one() + T::one() / alpha) * k;
                for i in 1..n {
                    am[(i, i - 1)] = k;
                }
                let mut b = vec![T::zero(); n];
                b[0] += k / alpha - g * (alpha + T::one()) / alpha;
                b[1] += -k / alpha;
                b[n - 1] += g;
                let mut c = vec![T::zero(); n];
                c[0] = -T::one() / alpha;
                ZeroDynamics { a: am, b, c }
            }
        }
        PathwayModel::Cyclic(net) => {
            let n = net.n();
            let alpha = net.alpha();
            let data = cyclic_loop_data(net)?;
            let mut am = Mat::zeros(n, n);
            for i in 0..n {
                am[(i, i)] = -data.drain;
            }
            am[(0, n - 1)] += data.relays[n - 1] / alpha;
            for i in 1..n {
                am[(i, i - 1)] = data.relays[i - 1];
            }
            let mut b = vec![T::zero(); n];
            if n == 1 {
                b[0] = (data.drain - data.sink_slope - data.r) / alpha;
            } else {
                b[0] = (data.drain - data.sink_slope) / alpha;
                b[1] = -data.relays[0] / alpha;
            }
            let mut c = vec![T::zero(); n];
            c[0] = -T::one() / alpha;
            ZeroDynamics { a: am, b, c }
        }
    })
}

fn two_state_zd<T: Real>(alpha: T, k: T, g: T) -> ZeroDynamics<T> {
    ZeroDynamics {
        a: Mat::from_rows(&[vec![k / alpha]]),
        b: vec![-(g * alpha + k) / (alpha * alpha)],
        c: vec![-T::one() / alpha],
    }
}

/// Closed-form dominant eigenstructure of the internal drift. Errors when
/// every internal mode is stable, because then no attenuation floor exists.
pub fn dominant_mode<T: Real>(model: &PathwayModel<T>) -> Result<DominantMode<T>, LinearizeError> {
    let (spectrum, v) = match model {
        PathwayModel::TwoState(p) => {
            (vec![Complex::new(p.k / p.alpha, T::zero())], vec![T::one()])
        }
        PathwayModel::Chain(p) => {
            if p.n == 1 {
                (vec![Complex::new(p.k / p.alpha, T::zero())], vec![T::one()])
            } else {
                let rho = p.rho();
                let spectrum = shifted_power_roots(p.k * rho, p.k, p.n);
                let mut v = Vec::with_capacity(p.n);
                let mut cur = T::one();
                for _ in 0..p.n {
                    v.push(cur);
                    cur *= rho;
                }
                (spectrum, v)
            }
        }
        PathwayModel::Cyclic(net) => {
            let n = net.n();
            let data = cyclic_loop_data(net)?;
            let spectrum = shifted_power_roots(data.r, data.drain, n);
            let mut v = Vec::with_capacity(n);
            let mut cur = T::one();
            for i in 0..n {
                v.push(cur);
                if i + 1 < n {
                    cur *= data.r / data.relays[i];
                }
            }
            (spectrum, v)
        }
    };
    let lambda = spectrum[0].re;
    let unstable_count = spectrum.iter().filter(|l| l.re > T::zero()).count();
    if unstable_count == 0 {
        return Err(LinearizeError::NoUnstableMode { lambda: approx_f64(lambda) });
    }
    Ok(DominantMode { lambda, v, spectrum, unstable_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainParams, CyclicNetwork, NodeRates, RateFn, TwoStateParams};

    fn fd_matches_analytic(model: &PathwayModel<f64>) {
        let eq = model.equilibrium();
        let state = eq.state();
        let plant = linearize_full(model).unwrap();
        let jac = jacobian_fd(|x| model.vector_field(x, eq.u_star, 0.0), &state).unwrap();
        let diff = jac.sub(&plant.a).max_abs();
        assert!(diff <= tolerances::FD_JACOBIAN_ATOL, "jacobian mismatch {diff:.3e}");

        // The field is affine in u and delta, so one-sided differences in the
        // inputs recover bu and bd exactly up to rounding.
        let fu1 = model.vector_field(&state, eq.u_star + 0.5, 0.0).unwrap();
        let fu0 = model.vector_field(&state, eq.u_star - 0.5, 0.0).unwrap();
        let fd1 = model.vector_field(&state, eq.u_star, 0.5).unwrap();
        let fd0 = model.vector_field(&state, eq.u_star, -0.5).unwrap();
        for i in 0..state.len() {
            assert!((fu1[i] - fu0[i] - plant.bu[i]).abs() < 1e-12);
            assert!((fd1[i] - fd0[i] - plant.bd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_linearization_agrees_with_finite_differences() {
        fd_matches_analytic(&PathwayModel::TwoState(
            TwoStateParams::new(1.7, 0.6, 0.9, 2.0, 1.0).unwrap(),
        ));
        fd_matches_analytic(&PathwayModel::Chain(
            ChainParams::new(0.8, 1.4, 0.5, 2.0, 1.0, 4).unwrap(),
        ));
        let net = CyclicNetwork::new(
            1.0,
            vec![
                NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Saturating { c: 3.0 } },
                NodeRates { f: RateFn::Linear { c: 1.5 }, g: RateFn::Linear { c: 2.0 } },
            ],
            RateFn::Linear { c: 0.5 },
            vec![1.0, 1.0],
            2.0,
        )
        .unwrap();
        fd_matches_analytic(&PathwayModel::Cyclic(net));
    }

    /// Change coordinates of the full Jacobian by z1 = x1 + y/alpha and read
    /// the internal block off the transformed matrix; it must reproduce the
    /// closed-form triple.
    fn zd_matches_transformed_jacobian(model: &PathwayModel<f64>) {
        let n = model.species_count();
        let alpha = model.alpha();
        let plant = linearize_full(model).unwrap();
        let zd = zero_dynamics(model).unwrap();

        let mut t = Mat::<f64>::identity(n + 1);
        t[(0, n)] = 1.0 / alpha;
        let mut t_inv = Mat::<f64>::identity(n + 1);
        t_inv[(0, n)] = -1.0 / alpha;
        let a_t = t.matmul(&plant.a).matmul(&t_inv);
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (a_t[(i, j)] - zd.a[(i, j)]).abs() <= 1e-12,
                    "A block ({i},{j})"
                );
            }
            assert!((a_t[(i, n)] - zd.b[i]).abs() <= 1e-12, "B entry {i}");
        }
        let tbd = t.matvec(&plant.bd);
        for i in 0..n {
            assert!((tbd[i] - zd.c[i]).abs() <= 1e-12, "C entry {i}");
        }
        // The u column must vanish from the internal block: that is what
        // makes these coordinates the right ones.
        let tbu = t.matvec(&plant.bu);
        for i in 0..n {
            assert!(tbu[i].abs() <= 1e-12, "u leaks into internal state {i}");
        }
    }

    #[test]
    fn zero_dynamics_is_the_internal_block_of_the_transformed_jacobian() {
        zd_matches_transformed_jacobian(&PathwayModel::TwoState(
            TwoStateParams::new(2.5, 0.7, 1.2, 2.0, 1.0).unwrap(),
        ));
        for n in [2usize, 3, 5, 9] {
            zd_matches_transformed_jacobian(&PathwayModel::Chain(
                ChainParams::new(1.3, 0.9, 0.4, 2.0, 1.0, n).unwrap(),
            ));
        }
        // x* balances each node (f_i(x_i*) = g_{i-1}(x_{i-1}*)) and y* the
        // sink: 0.5 y* = g3(x3*) - alpha f1(x1*) = 3.125 - 1.2.
        let net = CyclicNetwork::new(
            2.0,
            vec![
                NodeRates { f: RateFn::Linear { c: 1.2 }, g: RateFn::Linear { c: 2.0 } },
                NodeRates { f: RateFn::Linear { c: 1.2 }, g: RateFn::Linear { c: 1.5 } },
                NodeRates { f: RateFn::Linear { c: 1.2 }, g: RateFn::Linear { c: 3.0 } },
            ],
            RateFn::Linear { c: 0.5 },
            vec![0.5, 0.5 * 2.0 / 1.2, 0.5 * 2.0 / 1.2 * 1.5 / 1.2],
            3.85,
        )
        .unwrap();
        zd_matches_transformed_jacobian(&PathwayModel::Cyclic(net));
    }

    #[test]
    fn chain_left_eigenvector_annihilates_the_drift() {
        for &(alpha, k, n) in &[(1.0_f64, 1.0, 2usize), (0.5, 2.0, 7), (4.0, 0.3, 25), (1.0, 1.0, 40)]
        {
            let p = ChainParams::new(alpha, k, 0.8, 2.0, 1.0, n).unwrap();
            let model = PathwayModel::Chain(p.clone());
            let zd = zero_dynamics(&model).unwrap();
            let dm = dominant_mode(&model).unwrap();
            let va = zd.a.vecmat(&dm.v);
            let scale = k * dm.v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            for (j, &entry) in va.iter().enumerate() {
                assert!(
                    (entry - dm.lambda * dm.v[j]).abs() <= tolerances::LEFT_EIGENVECTOR_TOL * scale,
                    "column {j}"
                );
            }
            assert!((dm.lambda - k * (p.rho() - 1.0)).abs() <= 1e-12 * k.max(1.0));
        }
    }

    #[test]
    fn chain_spectrum_satisfies_its_characteristic_equation() {
        let p: ChainParams<f64> = ChainParams::new(0.7, 1.3, 0.2, 2.0, 1.0, 11).unwrap();
        let model = PathwayModel::Chain(p.clone());
        let dm = dominant_mode(&model).unwrap();
        let rhs = (p.k * p.rho()).powi(11);
        for lam in &dm.spectrum {
            let lhs = (lam + 1.3).powu(11);
            assert!((lhs - rhs).norm() <= tolerances::EIGEN_RESIDUAL_RTOL * rhs);
        }
        assert_eq!(dm.spectrum.len(), 11);
        assert!(dm.unstable_count >= 1);
    }

    #[test]
    fn chain_with_one_link_collapses_to_the_two_state_triple() {
        let chain = PathwayModel::Chain(ChainParams::new(1.5, 0.9, 0.7, 2.0, 1.0, 1).unwrap());
        let two = PathwayModel::TwoState(TwoStateParams::new(1.5, 0.9, 0.7, 2.0, 1.0).unwrap());
        assert_eq!(zero_dynamics(&chain).unwrap(), zero_dynamics(&two).unwrap());
        assert_eq!(linearize_full(&chain).unwrap(), linearize_full(&two).unwrap());
    }

    #[test]
    fn frozen_two_link_chain_triple() {
        let model = PathwayModel::Chain(ChainParams::new(1.0, 1.0, 0.0, 2.0, 1.0, 2).unwrap());
        let zd = zero_dynamics(&model).unwrap();
        assert_eq!(zd.a, Mat::from_rows(&[vec![-1.0, 2.0], vec![1.0, -1.0]]));
        assert_eq!(zd.b, vec![1.0, -1.0]);
        assert_eq!(zd.c, vec![-1.0, 0.0]);
    }

    #[test]
    fn frozen_single_node_cycle_triple() {
        let net: CyclicNetwork<f64> = CyclicNetwork::new(
            1.0,
            vec![NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Linear { c: 2.0 } }],
            RateFn::Linear { c: 1.0 },
            vec![1.0],
            1.0,
        )
        .unwrap();
        let model = PathwayModel::Cyclic(net);
        let zd = zero_dynamics(&model).unwrap();
        let dm = dominant_mode(&model).unwrap();
        assert!((zd.a[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((zd.b[0] + 2.0).abs() < 1e-14);
        assert!((zd.c[0] + 1.0).abs() < 1e-14);
        assert!((dm.lambda - 1.0).abs() < 1e-14);
    }

    #[test]
    fn consumption_only_cycle_has_no_unstable_mode() {
        // Saturating relay: large throughput at the operating point but a
        // small slope, so the loop gain sits below the drain rate.
        let net: CyclicNetwork<f64> = CyclicNetwork::new(
            0.5,
            vec![NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Saturating { c: 4.0 } }],
            RateFn::Linear { c: 1.0 },
            vec![3.0],
            1.5,
        )
        .unwrap();
        let model = PathwayModel::Cyclic(net);
        assert!(zero_dynamics(&model).is_ok());
        assert!(matches!(
            dominant_mode(&model),
            Err(LinearizeError::NoUnstableMode { .. })
        ));
    }

    #[test]
    fn nonuniform_drains_are_reported() {
        let net: CyclicNetwork<f64> = CyclicNetwork::new(
            1.0,
            vec![
                NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Linear { c: 2.0 } },
                NodeRates { f: RateFn::Linear { c: 2.0 }, g: RateFn::Linear { c: 2.0 } },
            ],
            RateFn::Linear { c: 1.0 },
            vec![1.0, 1.0],
            1.0,
        )
        .unwrap();
        let model = PathwayModel::Cyclic(net);
        assert!(matches!(
            zero_dynamics(&model),
            Err(LinearizeError::NonUniformRates { .. })
        ));
    }

    #[test]
    fn dominant_left_vector_solves_the_cyclic_drift_too() {
        let net: CyclicNetwork<f64> = CyclicNetwork::new(
            0.5,
            vec![
                NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Linear { c: 2.0 } },
                NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Linear { c: 4.0 } },
            ],
            RateFn::Linear { c: 2.0 },
            vec![1.0, 2.0],
            3.75,
        )
        .unwrap();
        let model = PathwayModel::Cyclic(net);
        let zd = zero_dynamics(&model).unwrap();
        let dm = dominant_mode(&model).unwrap();
        let va = zd.a.vecmat(&dm.v);
        for (j, &entry) in va.iter().enumerate() {
            assert!((entry - dm.lambda * dm.v[j]).abs() <= tolerances::LEFT_EIGENVECTOR_TOL);
        }
        // r = sqrt(g1' g2' / alpha) = sqrt(2 * 4 / 0.5) = 4, drain = 1.
        assert!((dm.lambda - 3.0).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_jacobian_matches_a_known_closure() {
        let f = |x: &[f64]| -> Result<Vec<f64>, ModelError> {
            Ok(vec![x[0] * x[0] + x[1], x[0] * x[1]])
        };
        let jac = jacobian_fd(f, &[2.0, 3.0]).unwrap();
        assert!((jac[(0, 0)] - 4.0).abs() < 1e-8);
        assert!((jac[(0, 1)] - 1.0).abs() < 1e-8);
        assert!((jac[(1, 0)] - 3.0).abs() < 1e-8);
        assert!((jac[(1, 1)] - 2.0).abs() < 1e-8);
    }

}
