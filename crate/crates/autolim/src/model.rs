//! Pathway model families and their shared control-affine form.
//!
//! Three families share the same skeleton: an autocatalytic loop produces the
//! output species `y`, the input `u` drives the first reaction while draining
//! `alpha` units of `y` per unit of product, and a disturbance `delta` acts on
//! the `y` balance. States are ordered `(x1, ..., xn, y)`.
//!
//! * [`TwoStateParams`]: one intermediate, saturable consumption of `x1`
//!   modulated by `y` feedback of strength `g`, constant drain on `y`.
//! * [`ChainParams`]: `n` intermediates relayed by linear steps with a shared
//!   rate constant, the last one consumed by the same saturable reaction.
//! * [`CyclicNetwork`]: user-assembled loop of increasing rate functions from
//!   a fixed catalog, with an explicitly supplied equilibrium.
//!
//! All dynamics are affine in `u`, and the combination `x1 + y/alpha` has a
//! drift independent of `u`; both facts are load-bearing for the limit
//! computations downstream and are enforced by tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative state component {name} = {value}")]
    NegativeState { name: String, value: f64 },
    #[error("supplied equilibrium leaves residual {residual:.3e} (limit {limit:.1e})")]
    InvalidEquilibrium { residual: f64, limit: f64 },
    #[error("rate {which} is not increasing near x = {x}")]
    NotIncreasing { which: String, x: f64 },
    #[error("sink rate decreases at the equilibrium output (slope {slope:.3e})")]
    DecreasingSink { slope: f64 },
    #[error(
        "analytic derivative of {which} disagrees with central differences at x = {x}: \
         {analytic} vs {numeric}"
    )]
    DerivativeMismatch { which: String, x: f64, analytic: f64, numeric: f64 },
    #[error("{op} is not defined for the {family} family")]
    Unsupported { op: &'static str, family: &'static str },
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value: approx_f64(v) })
    }
}

fn check_nonnegative<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value: approx_f64(v) })
    }
}

/// Two-state model: intermediate `x1` plus output `y`.
///
/// With the natural feedback law substituted for `u` this is the classical
/// two-dimensional glycolysis caricature; here `u` stays free so limits over
/// all causal controllers are meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateParams<T> {
    /// Units of `y` invested per unit of `x1` produced. Strictly positive.
    pub alpha: T,
    /// Consumption rate constant of `x1`.
    pub k: T,
    /// Output-feedback strength on the consumption reaction.
    pub g: T,
    /// Output-feedback strength on the production reaction (enters only
    /// through the natural control law and the stability window).
    pub h: T,
    /// Output exponent on the production reaction.
    pub a: T,
}

impl<T: Real> TwoStateParams<T> {
    pub fn new(alpha: T, k: T, g: T, h: T, a: T) -> Result<Self, ModelError> {
        check_positive("alpha", alpha)?;
        check_positive("k", k)?;
        check_nonnegative("g", g)?;
        check_nonnegative("h", h)?;
        check_nonnegative("a", a)?;
        Ok(TwoStateParams { alpha, k, g, h, a })
    }
}

/// Chain model: `n` intermediates relayed at a shared rate constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams<T> {
    pub alpha: T,
    /// Shared rate constant of every intermediate step.
    #[serde(rename = "K")]
    pub k: T,
    pub g: T,
    pub h: T,
    pub a: T,
    /// Number of intermediates, at least 1. `n = 1` is exactly the two-state
    /// model with `k = K`.
    pub n: usize,
}

impl<T: Real> ChainParams<T> {
    pub fn new(alpha: T, k: T, g: T, h: T, a: T, n: usize) -> Result<Self, ModelError> {
        check_positive("alpha", alpha)?;
        check_positive("K", k)?;
        check_nonnegative("g", g)?;
        check_nonnegative("h", h)?;
        check_nonnegative("a", a)?;
        if n == 0 {
            return Err(ModelError::InvalidParameter { name: "n", value: 0.0 });
        }
        Ok(ChainParams { alpha, k, g, h, a, n })
    }

    /// Growth factor of the dominant zero-dynamics mode: ((alpha+1)/alpha)^(1/n).
    pub fn rho(&self) -> T {
        ((self.alpha + T::one()) / self.alpha).powf(T::one() / cast(self.n as f64))
    }
}

/// Scalar rate laws expressible in configuration files. Each carries its own
/// analytic derivative so downstream code never differentiates numerically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn<T> {
    /// c * x
    Linear { c: T },
    /// c * x / (1 + x)
    Saturating { c: T },
    /// c * x^p (p = 0 gives a constant rate, useful for sinks)
    Power { c: T, p: T },
}

impl<T: Real> RateFn<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            RateFn::Linear { c } => c * x,
            RateFn::Saturating { c } => c * x / (T::one() + x),
            RateFn::Power { c, p } => {
                if p == T::zero() {
                    c
                } else {
                    c * x.powf(p)
                }
            }
        }
    }

    pub fn derivative(&self, x: T) -> T {
        match *self {
            RateFn::Linear { c } => c,
            RateFn::Saturating { c } => {
                let d = T::one() + x;
                c / (d * d)
            }
            RateFn::Power { c, p } => {
                if p == T::zero() {
                    T::zero()
                } else if p == T::one() {
                    c
                } else {
                    c * p * x.powf(p - T::one())
                }
            }
        }
    }

}

/// Production/relay rate pair attached to one node of a cyclic network:
/// `f` drains the node, `g` feeds the next one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRates<T> {
    pub f: RateFn<T>,
    pub g: RateFn<T>,
}

/// General cyclic feedback network with `n` upstream nodes and a sink node.
///
///   x1'   = -f1(x1) + u
///   xi'   = -fi(xi) + g_{i-1}(x_{i-1})      for i = 2..n
///   y'    = -sink(y) + g_n(x_n) - alpha u - delta
///
/// There is no closed-form equilibrium for arbitrary rate choices, so the
/// caller supplies one; construction verifies it balances to within
/// [`tolerances::CYCLIC_EQUILIBRIUM_RESIDUAL`] and that every node rate is
/// increasing where it is sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicNetwork<T> {
    alpha: T,
    nodes: Vec<NodeRates<T>>,
    sink: RateFn<T>,
    x_star: Vec<T>,
    y_star: T,
}

impl<T: Real> CyclicNetwork<T> {
    pub fn new(
        alpha: T,
        nodes: Vec<NodeRates<T>>,
        sink: RateFn<T>,
        x_star: Vec<T>,
        y_star: T,
    ) -> Result<Self, ModelError> {
        check_positive("alpha", alpha)?;
        if nodes.is_empty() {
            return Err(ModelError::InvalidParameter { name: "nodes", value: 0.0 });
        }
        if x_star.len() != nodes.len() {
            return Err(ModelError::DimensionMismatch {
                expected: nodes.len(),
                got: x_star.len(),
            });
        }
        for (i, &x) in x_star.iter().enumerate() {
            if !x.is_finite() || x < T::zero() {
                return Err(ModelError::NegativeState {
                    name: format!("x{}*", i + 1),
                    value: approx_f64(x),
                });
            }
        }
        check_nonnegative("y*", y_star)?;

        for (i, node) in nodes.iter().enumerate() {
            let probe = x_star[i];
            check_rate(&node.f, &format!("f{}", i + 1), probe)?;
            check_rate(&node.g, &format!("g{}", i + 1), probe)?;
        }
        check_derivative(&sink, "sink", y_star)?;
        if sink.derivative(y_star) < T::zero() {
            return Err(ModelError::DecreasingSink {
                slope: approx_f64(sink.derivative(y_star)),
            });
        }

        let network = CyclicNetwork { alpha, nodes, sink, x_star, y_star };
        let eq = network.equilibrium();
        let state = eq.state();
        let field = network.field_unchecked(&state, eq.u_star, T::zero());
        let residual = field
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()));
        let limit: T = cast(tolerances::CYCLIC_EQUILIBRIUM_RESIDUAL);
        if !(residual <= limit) {
            return Err(ModelError::InvalidEquilibrium {
                residual: approx_f64(residual),
                limit: tolerances::CYCLIC_EQUILIBRIUM_RESIDUAL,
            });
        }
        Ok(network)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeRates<T>] {
        &self.nodes
    }

    pub fn sink(&self) -> &RateFn<T> {
        &self.sink
    }

    pub fn x_star(&self) -> &[T] {
        &self.x_star
    }

    pub fn y_star(&self) -> T {
        self.y_star
    }

    fn equilibrium(&self) -> Equilibrium<T> {
        let n = self.n();
        let u_star =
            (self.nodes[n - 1].g.eval(self.x_star[n - 1]) - self.sink.eval(self.y_star))
                / self.alpha;
        Equilibrium { x_star: self.x_star.clone(), y_star: self.y_star, u_star }
    }

    fn field_unchecked(&self, state: &[T], u: T, delta: T) -> Vec<T> {
        let n = self.n();
        let y = state[n];
        let mut f = vec![T::zero(); n + 1];
        f[0] = -self.nodes[0].f.eval(state[0]) + u;
        for i in 1..n {
            f[i] = -self.nodes[i].f.eval(state[i]) + self.nodes[i - 1].g.eval(state[i - 1]);
        }
        f[n] = -self.sink.eval(y) + self.nodes[n - 1].g.eval(state[n - 1]) - self.alpha * u
            - delta;
        f
    }
}

/// Sampled monotonicity plus a derivative cross-check for one catalog rate.
fn check_rate<T: Real>(rate: &RateFn<T>, which: &str, x_star: T) -> Result<(), ModelError> {
    let hi = (x_star + x_star).max(cast(2.0));
    for i in 0..9 {
        let x = cast::<T>(0.05) + (hi - cast(0.05)) * cast(i as f64 / 8.0);
        let h = cast::<T>(1e-4) * (T::one() + x);
        if !(rate.eval(x + h) - rate.eval(x - h) > T::zero()) {
            return Err(ModelError::NotIncreasing {
                which: which.to_string(),
                x: approx_f64(x),
            });
        }
    }
    check_derivative(rate, which, x_star)
}

/// Central-difference check of the catalog's analytic derivative.
fn check_derivative<T: Real>(rate: &RateFn<T>, which: &str, at: T) -> Result<(), ModelError> {
    // Sample just off zero so fractional powers keep a finite slope.
    let x = at.max(cast(0.05));
    let h: T = cast::<T>(tolerances::RATE_DERIVATIVE_STEP) * (T::one() + x);
    let numeric = (rate.eval(x + h) - rate.eval(x - h)) / (h + h);
    let analytic = rate.derivative(x);
    let scale = T::one().max(analytic.abs()).max(numeric.abs());
    if (analytic - numeric).abs() > cast::<T>(tolerances::RATE_DERIVATIVE_RTOL) * scale {
        return Err(ModelError::DerivativeMismatch {
            which: which.to_string(),
            x: approx_f64(x),
            analytic: approx_f64(analytic),
            numeric: approx_f64(numeric),
        });
    }
    Ok(())
}

/// Operating point shared by all families: states, output, and the constant
/// input holding them there.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium<T> {
    pub x_star: Vec<T>,
    pub y_star: T,
    pub u_star: T,
}

impl<T: Real> Equilibrium<T> {
    /// Full state vector `(x*, y*)`.
    pub fn state(&self) -> Vec<T> {
        let mut s = self.x_star.clone();
        s.push(self.y_star);
        s
    }
}

/// Stability window of the two-state model under its natural feedback law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityMargin<T> {
    pub lower: T,
    pub value: T,
    pub upper: T,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathwayModel<T> {
    TwoState(TwoStateParams<T>),
    Chain(ChainParams<T>),
    Cyclic(CyclicNetwork<T>),
}

impl<T: Real> PathwayModel<T> {
    pub fn family(&self) -> &'static str {
        match self {
            PathwayModel::TwoState(_) => "two_state",
            PathwayModel::Chain(_) => "chain",
            PathwayModel::Cyclic(_) => "cyclic",
        }
    }

    /// Number of intermediate species (everything except `y`).
    pub fn species_count(&self) -> usize {
        match self {
            PathwayModel::TwoState(_) => 1,
            PathwayModel::Chain(p) => p.n,
            PathwayModel::Cyclic(net) => net.n(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.species_count() + 1
    }

    pub fn alpha(&self) -> T {
        match self {
            PathwayModel::TwoState(p) => p.alpha,
            PathwayModel::Chain(p) => p.alpha,
            PathwayModel::Cyclic(net) => net.alpha(),
        }
    }

    /// Right-hand side of the controlled system at `state` under input `u`
    /// and disturbance `delta`. States must be nonnegative; concentrations
    /// below zero are a caller bug, not a model regime.
    pub fn vector_field(&self, state: &[T], u: T, delta: T) -> Result<Vec<T>, ModelError> {
        let dim = self.state_dim();
        if state.len() != dim {
            return Err(ModelError::DimensionMismatch { expected: dim, got: state.len() });
        }
        for (i, &v) in state.iter().enumerate() {
            if !(v >= T::zero()) {
                let name = if i + 1 == dim { "y".to_string() } else { format!("x{}", i + 1) };
                return Err(ModelError::NegativeState { name, value: approx_f64(v) });
            }
        }
        Ok(match self {
            PathwayModel::TwoState(p) => {
                two_state_field(p.alpha, p.k, p.g, p.a, state[0], state[1], u, delta)
            }
            PathwayModel::Chain(p) => {
                if p.n == 1 {
                    two_state_field(p.alpha, p.k, p.g, p.a, state[0], state[1], u, delta)
                } else {
                    let n = p.n;
                    let y = state[n];
                    let two = T::one() + T::one();
                    let production = y.powf(p.a) * u;
                    let consumption =
                        two * p.k * state[n - 1] / (T::one() + y.powf(two * p.g));
                    let mut f = vec![T::zero(); n + 1];
                    f[0] = production - p.k * state[0];
                    for i in 1..n - 1 {
                        f[i] = p.k * state[i - 1] - p.k * state[i];
                    }
                    f[n - 1] = p.k * state[n - 2] - consumption;
                    f[n] = (p.alpha + T::one()) * consumption - p.alpha * production
                        - (T::one() + delta);
                    f
                }
            }
            PathwayModel::Cyclic(net) => net.field_unchecked(state, u, delta),
        })
    }

    pub fn equilibrium(&self) -> Equilibrium<T> {
        match self {
            PathwayModel::TwoState(p) => Equilibrium {
                x_star: vec![T::one() / p.k],
                y_star: T::one(),
                u_star: T::one(),
            },
            PathwayModel::Chain(p) => Equilibrium {
                x_star: vec![T::one() / p.k; p.n],
                y_star: T::one(),
                u_star: T::one(),
            },
            PathwayModel::Cyclic(net) => net.equilibrium(),
        }
    }

    /// The feedback law the pathway implements on its own: production
    /// inhibited by the output, `u(y) = 2 / (1 + y^(2h))`.
    pub fn natural_control(&self, y: T) -> Result<T, ModelError> {
        let two = T::one() + T::one();
        match self {
            PathwayModel::TwoState(p) => Ok(two / (T::one() + y.powf(two * p.h))),
            PathwayModel::Chain(p) => Ok(two / (T::one() + y.powf(two * p.h))),
            PathwayModel::Cyclic(_) => Err(ModelError::Unsupported {
                op: "natural_control",
                family: "cyclic",
            }),
        }
    }

    /// Cyclic-form view of a feedback-free (`g = 0`) built-in model: linear
    /// node rates, constant sink. The view shares the original linearization
    /// at the equilibrium for every exponent `a`, and the full nonlinear field
    /// when `a = 0`.
    pub fn cyclic_view(&self) -> Result<CyclicNetwork<T>, ModelError> {
        let build = |alpha: T, k: T, g: T, n: usize| -> Result<CyclicNetwork<T>, ModelError> {
            if g != T::zero() {
                return Err(ModelError::Unsupported {
                    op: "cyclic_view with output feedback (g != 0)",
                    family: "two_state/chain",
                });
            }
            let mut nodes = Vec::with_capacity(n);
            for i in 0..n {
                let relay = if i + 1 == n { (alpha + T::one()) * k } else { k };
                nodes.push(NodeRates {
                    f: RateFn::Linear { c: k },
                    g: RateFn::Linear { c: relay },
                });
            }
            CyclicNetwork::new(
                alpha,
                nodes,
                RateFn::Power { c: T::one(), p: T::zero() },
                vec![T::one() / k; n],
                T::one(),
            )
        };
        match self {
            PathwayModel::TwoState(p) => build(p.alpha, p.k, p.g, 1),
            PathwayModel::Chain(p) => build(p.alpha, p.k, p.g, p.n),
            PathwayModel::Cyclic(_) => Err(ModelError::Unsupported {
                op: "cyclic_view",
                family: "cyclic",
            }),
        }
    }
}

/// Shared two-state field, also the chain field at `n = 1`.
fn two_state_field<T: Real>(
    alpha: T,
    k: T,
    g: T,
    a: T,
    x1: T,
    y: T,
    u: T,
    delta: T,
) -> Vec<T> {
    let two = T::one() + T::one();
    let production = y.powf(a) * u;
    let consumption = two * k * x1 / (T::one() + y.powf(two * g));
    vec![
        production - consumption,
        (alpha + T::one()) * consumption - alpha * production - (T::one() + delta),
    ]
}

/// Stability window of the natural feedback loop around the two-state
/// equilibrium: stable iff `0 < h - a < (k + g(1 + alpha)) / alpha`.
pub fn two_state_stability_margin<T: Real>(p: &TwoStateParams<T>) -> StabilityMargin<T> {
    let lower = T::zero();
    let value = p.h - p.a;
    let upper = (p.k + p.g * (T::one() + p.alpha)) / p.alpha;
    StabilityMargin { lower, value, upper, stable: value > lower && value < upper }
}
