//! Nonlinear simulation of the pathway models under pluggable controllers
//! and disturbance signals.
//!
//! Fixed-step classical 4th-order integration on a deterministic grid keeps
//! the trapezoid functionals and every downstream tolerance reproducible.
//! States are concentrations: a stage or step that dips a component below
//! the positivity floor aborts, while dips inside the floor are rounding and
//! snap to zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Equilibrium, ModelError, PathwayModel, TwoStateParams};
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("disturbance or controller specification invalid: {detail}")]
    InvalidSpec { detail: String },
    #[error("dt = {dt} too large for horizon {t_end} (need dt <= t_end/10)")]
    StepTooLarge { dt: f64, t_end: f64 },
    #[error("state component {component} = {value:.3e} fell below the positivity floor at t = {time:.4}")]
    PositivityViolation { time: f64, component: String, value: f64 },
    #[error("state blew up (non-finite component) at t = {time}")]
    BlowUp { time: f64 },
    #[error("disturbance carries no energy; the gain ratio is undefined")]
    ZeroDisturbance,
    #[error("no stability crossing in [{lo}, {hi}]: max real parts {f_lo:.3e} and {f_hi:.3e}")]
    BracketError { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("energy did not settle within {horizon} time units after {doublings} horizon doublings")]
    HorizonExhausted { horizon: f64, doublings: usize },
}

/// Disturbance signals. Finite-energy shapes (pulse, windowed sine) exist so
/// empirical gain ratios are well defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec<T> {
    Zero,
    Step { magnitude: T, onset: T },
    Sine {
        amplitude: T,
        omega: T,
        start: T,
        #[serde(default)]
        stop: Option<T>,
    },
    Pulse { magnitude: T, start: T, stop: T },
}

impl<T: Real> DisturbanceSpec<T> {
    fn validate(&self) -> Result<(), SimError> {
        let fin = |v: T, name: &str| -> Result<(), SimError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(SimError::InvalidSpec { detail: format!("{name} is not finite") })
            }
        };
        match self {
            DisturbanceSpec::Zero => Ok(()),
            DisturbanceSpec::Step { magnitude, onset } => {
                fin(*magnitude, "magnitude")?;
                fin(*onset, "onset")
            }
            DisturbanceSpec::Sine { amplitude, omega, start, stop } => {
                fin(*amplitude, "amplitude")?;
                fin(*omega, "omega")?;
                fin(*start, "start")?;
                if let Some(s) = stop {
                    fin(*s, "stop")?;
                    if !(*s > *start) {
                        return Err(SimError::InvalidSpec {
                            detail: "stop must exceed start".to_string(),
                        });
                    }
                }
                Ok(())
            }
            DisturbanceSpec::Pulse { magnitude, start, stop } => {
                fin(*magnitude, "magnitude")?;
                fin(*start, "start")?;
                fin(*stop, "stop")?;
                if !(*stop > *start) {
                    return Err(SimError::InvalidSpec {
                        detail: "stop must exceed start".to_string(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            DisturbanceSpec::Zero => T::zero(),
            DisturbanceSpec::Step { magnitude, onset } => {
                if t >= *onset {
                    *magnitude
                } else {
                    T::zero()
                }
            }
            DisturbanceSpec::Sine { amplitude, omega, start, stop } => {
                let live = t >= *start && stop.map_or(true, |s| t < s);
                if live {
                    *amplitude * (*omega * (t - *start)).sin()
                } else {
                    T::zero()
                }
            }
            DisturbanceSpec::Pulse { magnitude, start, stop } => {
                if t >= *start && t < *stop {
                    *magnitude
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Feedback laws the simulator can close the loop with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec<T> {
    /// The pathway's own inhibition law `u = 2/(1 + y^(2h))`.
    Natural,
    Constant { value: T },
    /// `u = offset - gain . (state - state*)`; `offset` defaults to the
    /// equilibrium input.
    LinearStateFeedback {
        gain: Vec<T>,
        #[serde(default)]
        offset: Option<T>,
    },
}

impl<T: Real> ControllerSpec<T> {
    fn validate(&self, model: &PathwayModel<T>) -> Result<(), SimError> {
        match self {
            ControllerSpec::Natural => {
                // Errors for families without an inhibition exponent.
                model.natural_control(T::one()).map(|_| ()).map_err(SimError::from)
            }
            ControllerSpec::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(SimError::InvalidSpec { detail: "constant input not finite".into() })
                }
            }
            ControllerSpec::LinearStateFeedback { gain, offset } => {
                if gain.len() != model.state_dim() {
                    return Err(SimError::InvalidSpec {
                        detail: format!(
                            "gain row has {} entries, state dimension is {}",
                            gain.len(),
                            model.state_dim()
                        ),
                    });
                }
                if gain.iter().any(|g| !g.is_finite())
                    || offset.map_or(false, |o| !o.is_finite())
                {
                    return Err(SimError::InvalidSpec {
                        detail: "feedback gain or offset not finite".into(),
                    });
                }
                Ok(())
            }
        }
    }

    fn eval(
        &self,
        model: &PathwayModel<T>,
        eq: &Equilibrium<T>,
        eq_state: &[T],
        state: &[T],
    ) -> Result<T, SimError> {
        Ok(match self {
            ControllerSpec::Natural => model.natural_control(state[state.len() - 1])?,
            ControllerSpec::Constant { value } => *value,
            ControllerSpec::LinearStateFeedback { gain, offset } => {
                let mut u = offset.unwrap_or(eq.u_star);
                for i in 0..state.len() {
                    u -= gain[i] * (state[i] - eq_state[i]);
                }
                u
            }
        })
    }
}

/// Simulated trajectory on the fixed grid, with its L2 functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub t: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub u: Vec<T>,
    pub delta: Vec<T>,
    /// Trapezoid integral of the squared output deviation.
    pub l2_y_dev: T,
    /// Trapezoid integral of the squared disturbance.
    pub l2_delta: T,
    /// Final state within 1e-6 (inf norm) of the equilibrium.
    pub converged: bool,
}

impl<T: Real> Trajectory<T> {
    /// Output sample at index `i` (the last state component).
    pub fn y(&self, i: usize) -> T {
        let s = &self.states[i];
        s[s.len() - 1]
    }
}

/// Snap tiny negative components to zero; abort on anything below the floor.
fn sanitize<T: Real>(state: &mut [T], t: T) -> Result<(), SimError> {
    let floor: T = cast(tolerances::POSITIVITY_FLOOR);
    let dim = state.len();
    for (i, v) in state.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(SimError::BlowUp { time: approx_f64(t) });
        }
        if *v < T::zero() {
            if *v < floor {
                let name = if i + 1 == dim {
                    "y".to_string()
                } else {
                    format!("x{}", i + 1)
                };
                return Err(SimError::PositivityViolation {
                    time: approx_f64(t),
                    component: name,
                    value: approx_f64(*v),
                });
            }
            *v = T::zero();
        }
    }
    Ok(())
}

/// Core fixed-step loop. `on_sample` sees every stored grid point in order,
/// including the initial one.
fn rk4_run<T: Real>(
    model: &PathwayModel<T>,
    controller: &ControllerSpec<T>,
    dist: &DisturbanceSpec<T>,
    x0: &[T],
    steps: usize,
    dt: T,
    mut on_sample: impl FnMut(usize, T, &[T], T, T),
) -> Result<(Vec<T>, bool), SimError> {
    dist.validate()?;
    controller.validate(model)?;
    let eq = model.equilibrium();
    let eq_state = eq.state();

    let mut state = x0.to_vec();
    sanitize(&mut state, T::zero())?;
    // Initial conditions below zero are caller errors, not integration drift,
    // so let the model's own validation speak.
    model.vector_field(&state, eq.u_star, T::zero())?;

    let half = dt / cast(2.0);
    let sixth = dt / cast(6.0);
    let two = cast::<T>(2.0);

    let eval = |s: &[T], t: T| -> Result<Vec<T>, SimError> {
        let u = controller.eval(model, &eq, &eq_state, s)?;
        Ok(model.vector_field(s, u, dist.eval(t))?)
    };

    for i in 0..=steps {
        let t = dt * cast(i as f64);
        let u = controller.eval(model, &eq, &eq_state, &state)?;
        on_sample(i, t, &state, u, dist.eval(t));
        if i == steps {
            break;
        }

        let k1 = eval(&state, t)?;
        let mut s2: Vec<T> = state.iter().zip(&k1).map(|(&x, &k)| x + half * k).collect();
        sanitize(&mut s2, t + half)?;
        let k2 = eval(&s2, t + half)?;
        let mut s3: Vec<T> = state.iter().zip(&k2).map(|(&x, &k)| x + half * k).collect();
        sanitize(&mut s3, t + half)?;
        let k3 = eval(&s3, t + half)?;
        let mut s4: Vec<T> = state.iter().zip(&k3).map(|(&x, &k)| x + dt * k).collect();
        sanitize(&mut s4, t + dt)?;
        let k4 = eval(&s4, t + dt)?;

        for j in 0..state.len() {
            state[j] += sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        sanitize(&mut state, t + dt)?;
    }

    let tol: T = cast(tolerances::CONVERGENCE_TOL);
    let converged = state
        .iter()
        .zip(&eq_state)
        .all(|(&s, &e)| (s - e).abs() <= tol);
    Ok((state, converged))
}

/// Integrates the closed loop and stores every grid point. The horizon is
/// rounded to a whole number of steps.
pub fn integrate<T: Real>(
    model: &PathwayModel<T>,
    controller: &ControllerSpec<T>,
    dist: &DisturbanceSpec<T>,
    x0: &[T],
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>, SimError> {
    if !(dt > T::zero()) || !(t_end > T::zero()) || dt > t_end / cast(10.0) {
        return Err(SimError::StepTooLarge { dt: approx_f64(dt), t_end: approx_f64(t_end) });
    }
    let steps = approx_f64(t_end / dt).round() as usize;
    let y_star = model.equilibrium().y_star;

    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut delta = Vec::with_capacity(steps + 1);
    rk4_run(model, controller, dist, x0, steps, dt, |_, ti, s, ui, di| {
        t.push(ti);
        states.push(s.to_vec());
        u.push(ui);
        delta.push(di);
    })
    .map(|(_, converged)| {
        let ydev2: Vec<T> = states
            .iter()
            .map(|s| {
                let d = s[s.len() - 1] - y_star;
                d * d
            })
            .collect();
        let d2: Vec<T> = delta.iter().map(|&d| d * d).collect();
        let l2_y_dev = trapezoid(&ydev2, dt);
        let l2_delta = trapezoid(&d2, dt);
        Trajectory { t, states, u, delta, l2_y_dev, l2_delta, converged }
    })
}

fn trapezoid<T: Real>(samples: &[T], dt: T) -> T {
    if samples.len() < 2 {
        return T::zero();
    }
    let half = dt / cast(2.0);
    let mut acc = T::zero();
    for w in samples.windows(2) {
        acc += (w[0] + w[1]) * half;
    }
    acc
}

/// Energy ratio of a trajectory: sqrt of output deviation energy over
/// disturbance energy.
pub fn empirical_gain<T: Real>(traj: &Trajectory<T>) -> Result<T, SimError> {
    if !(traj.l2_delta > T::zero()) {
        return Err(SimError::ZeroDisturbance);
    }
    Ok((traj.l2_y_dev / traj.l2_delta).sqrt())
}

/// Result of a settled zero-disturbance energy run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRun<T> {
    /// Output transient energy over the settled horizon.
    pub energy: T,
    pub horizon: T,
    pub doublings: usize,
}

/// Integrates with zero disturbance until the output energy has settled: the
/// run must converge and the last tenth of the horizon must contribute under
/// 0.1% of the total. The horizon doubles on failure, a limited number of
/// times.
pub fn energy_run<T: Real>(
    model: &PathwayModel<T>,
    controller: &ControllerSpec<T>,
    x0: &[T],
) -> Result<EnergyRun<T>, SimError> {
    let dt: T = cast(tolerances::DEFAULT_DT);
    let mut horizon: T = cast(tolerances::DEFAULT_ENERGY_HORIZON);
    let y_star = model.equilibrium().y_star;
    for doublings in 0..=tolerances::MAX_HORIZON_DOUBLINGS {
        let steps = approx_f64(horizon / dt).round() as usize;
        let mut ydev2 = Vec::with_capacity(steps + 1);
        let (_, converged) = rk4_run(
            model,
            controller,
            &DisturbanceSpec::Zero,
            x0,
            steps,
            dt,
            |_, _, s, _, _| {
                let d = s[s.len() - 1] - y_star;
                ydev2.push(d * d);
            },
        )?;
        let total = trapezoid(&ydev2, dt);
        let tail_start = ydev2.len() - ydev2.len() / 10;
        let tail = trapezoid(&ydev2[tail_start..], dt);
        let settled = total == T::zero()
            || tail <= cast::<T>(tolerances::TAIL_ENERGY_FRACTION) * total;
        if converged && settled {
            return Ok(EnergyRun { energy: total, horizon, doublings });
        }
        horizon = horizon * cast(2.0);
    }
    Err(SimError::HorizonExhausted {
        horizon: approx_f64(horizon),
        doublings: tolerances::MAX_HORIZON_DOUBLINGS,
    })
}

/// Largest real part of the two-state natural-feedback closed loop's
/// spectrum, from the analytic 2x2 Jacobian.
pub fn closed_loop_max_re<T: Real>(p: &TwoStateParams<T>, h: T) -> T {
    let tr = -p.k + p.alpha * (h - p.a) - (p.alpha + T::one()) * p.g;
    let det = p.k * (h - p.a);
    let disc = tr * tr - cast::<T>(4.0) * det;
    if disc >= T::zero() {
        (tr + disc.sqrt()) / cast(2.0)
    } else {
        tr / cast(2.0)
    }
}

/// Bisects the inhibition exponent for the loss of stability of the natural
/// feedback loop. Requires a stable lower end and an unstable upper end.
pub fn stability_boundary_probe<T: Real>(
    p: &TwoStateParams<T>,
    h_lo: T,
    h_hi: T,
) -> Result<T, SimError> {
    let f_lo = closed_loop_max_re(p, h_lo);
    let f_hi = closed_loop_max_re(p, h_hi);
    if !(f_lo < T::zero() && f_hi > T::zero()) {
        return Err(SimError::BracketError {
            lo: approx_f64(h_lo),
            hi: approx_f64(h_hi),
            f_lo: approx_f64(f_lo),
            f_hi: approx_f64(f_hi),
        });
    }
    let width: T = cast(tolerances::BISECTION_WIDTH);
    let mut lo = h_lo;
    let mut hi = h_hi;
    while hi - lo > width {
        let mid = (lo + hi) / cast(2.0);
        if closed_loop_max_re(p, mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / cast(2.0))
}
