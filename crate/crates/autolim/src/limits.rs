//! Hard limits on disturbance rejection, in closed form and as
//! eigenstructure-based oracles.
//!
//! Two quantities are computed for a pathway whose internal drift is
//! unstable:
//!
//! * `gamma`: the floor on the worst-case L2 gain from disturbance to output
//!   deviation. No causal controller, linear or not, achieves less.
//! * minimum output transient energy: the smallest integral of the squared
//!   output deviation any stabilizing controller can achieve from a given
//!   initial displacement, `coeff * z_tilde0^2` with `z_tilde0` the component
//!   of the displacement along the dominant left mode.
//!
//! The closed forms depend only on stoichiometry and rate slopes. The
//! oracles recompute the same quantities from the internal triple `(A, B,
//! C)` and the dominant left eigenvector, so agreement is a real check, not
//! a tautology.

use serde::Serialize;
use thiserror::Error;

use crate::linearize::{
    dominant_mode, zero_dynamics, DominantMode, LinearizeError, ZeroDynamics,
};
use crate::model::{ChainParams, ModelError, PathwayModel};
use crate::numerics::dot;
use crate::real::{approx_f64, cast, Real};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error(transparent)]
    Linearize(#[from] LinearizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("control channel is degenerate (|v^T b| = {magnitude:.3e})")]
    DegenerateControl { magnitude: f64 },
    #[error("axis {axis} does not apply to the {family} family")]
    InvalidAxis { axis: &'static str, family: &'static str },
    #[error("axis {axis} appears twice")]
    DuplicateAxis { axis: &'static str },
    #[error("axis {axis} has no points")]
    EmptyAxis { axis: &'static str },
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Attenuation floor of a relay chain. `n = 1` uses the algebraically equal
/// two-state expression so that single-link chains reproduce the two-state
/// numbers bit for bit.
pub fn chain_gamma<T: Real>(p: &ChainParams<T>) -> T {
    if p.n == 1 {
        p.alpha / (p.k + p.g * p.alpha)
    } else {
        let rho = p.rho();
        let edge = p.k + p.g * p.alpha * rho.powi(p.n as i32 - 1);
        T::one() / ((rho - T::one()) * edge)
    }
}

/// Transient-energy coefficient of a relay chain: minimum output energy per
/// unit of squared dominant-mode displacement.
pub fn chain_energy_coeff<T: Real>(p: &ChainParams<T>) -> T {
    if p.n == 1 {
        let edge = p.g * p.alpha + p.k;
        p.alpha * p.alpha * p.alpha * p.k / (edge * edge)
    } else {
        let rho = p.rho();
        let edge = p.k + p.g * p.alpha * rho.powi(p.n as i32 - 1);
        p.alpha * p.alpha * p.k / ((rho - T::one()) * edge * edge)
    }
}

/// Large-`n` closed-form estimate of [`chain_gamma`]: linear growth in the
/// chain length at slope set by the feedback strength and the investment
/// ratio.
pub fn chain_gamma_approx<T: Real>(p: &ChainParams<T>) -> T {
    let slope = (p.g * (p.alpha + T::one()) + p.k)
        * ((p.alpha + T::one()) / p.alpha).ln();
    cast::<T>(p.n as f64) / slope
}

/// Large-`n` counterpart of [`chain_energy_coeff`].
pub fn chain_energy_coeff_approx<T: Real>(p: &ChainParams<T>) -> T {
    let edge = p.k + p.g * (p.alpha + T::one());
    p.alpha * p.alpha * p.k * cast::<T>(p.n as f64)
        / (edge * edge * ((p.alpha + T::one()) / p.alpha).ln())
}

fn chain_equivalent<T: Real>(model: &PathwayModel<T>) -> Option<ChainParams<T>> {
    match model {
        PathwayModel::TwoState(p) => {
            Some(ChainParams { alpha: p.alpha, k: p.k, g: p.g, h: p.h, a: p.a, n: 1 })
        }
        PathwayModel::Chain(p) => Some(p.clone()),
        PathwayModel::Cyclic(_) => None,
    }
}

/// Closed-form attenuation floor for any of the three families. Errors when
/// the internal drift has no unstable mode, because then no floor exists.
pub fn gamma_closed_form<T: Real>(model: &PathwayModel<T>) -> Result<T, LimitsError> {
    if let Some(p) = chain_equivalent(model) {
        return Ok(chain_gamma(&p));
    }
    let PathwayModel::Cyclic(net) = model else { unreachable!() };
    let dm = dominant_mode(model)?;
    let sink_slope = net.sink().derivative(net.y_star());
    Ok(T::one() / (sink_slope + dm.lambda))
}

/// Attenuation floor recomputed from the internal triple: the ratio of the
/// dominant mode's coupling to the disturbance and to the output channel.
pub fn gamma_oracle<T: Real>(
    zd: &ZeroDynamics<T>,
    dm: &DominantMode<T>,
) -> Result<T, LimitsError> {
    let vb = dot(&dm.v, &zd.b);
    if vb.abs() <= cast(tolerances::CONTROL_DEGENERACY) {
        return Err(LimitsError::DegenerateControl { magnitude: approx_f64(vb.abs()) });
    }
    let vc = dot(&dm.v, &zd.c);
    Ok(vc.abs() / vb.abs())
}

/// Minimum output transient energy from a displacement with dominant-mode
/// component `z_tilde0`, recomputed from the internal triple.
pub fn energy_oracle<T: Real>(
    zd: &ZeroDynamics<T>,
    dm: &DominantMode<T>,
    z_tilde0: T,
) -> Result<T, LimitsError> {
    let vb = dot(&dm.v, &zd.b);
    if vb.abs() <= cast(tolerances::CONTROL_DEGENERACY) {
        return Err(LimitsError::DegenerateControl { magnitude: approx_f64(vb.abs()) });
    }
    Ok(dm.lambda * z_tilde0 * z_tilde0 / (vb * vb))
}

/// Deviation of a full state from equilibrium in the internal coordinates:
/// first entry `x1 - x1* + (y - y*)/alpha`, the rest plain species
/// deviations.
pub fn internal_deviation<T: Real>(
    model: &PathwayModel<T>,
    state: &[T],
) -> Result<Vec<T>, LimitsError> {
    let dim = model.state_dim();
    if state.len() != dim {
        return Err(LimitsError::Dimension { expected: dim, got: state.len() });
    }
    let eq = model.equilibrium();
    let n = dim - 1;
    let mut z: Vec<T> = (0..n).map(|i| state[i] - eq.x_star[i]).collect();
    z[0] += (state[n] - eq.y_star) / model.alpha();
    Ok(z)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancies<T> {
    /// Relative gap between the closed-form gamma and its oracle.
    pub gamma_rel: T,
    /// Same for the transient energy; absent when no closed form exists.
    pub energy_rel: Option<T>,
}

/// Everything the limit analysis produces for one model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardLimitReport<T> {
    pub gamma_closed: T,
    pub gamma_oracle: T,
    /// Large-chain estimate; absent for cyclic networks.
    pub gamma_approx: Option<T>,
    /// Closed-form minimum transient energy from the reference displacement;
    /// absent for cyclic networks.
    pub energy_closed: Option<T>,
    pub energy_oracle: T,
    /// Dominant-mode component of the reference displacement (first species
    /// raised by one unit), by construction 1.
    pub z_tilde0: T,
    pub lambda_dom: T,
    pub unstable_count: usize,
    pub discrepancies: Discrepancies<T>,
}

/// Full limit analysis at the reference displacement (one unit added to the
/// first species). Closed forms and oracles are computed independently and
/// their relative gaps reported.
pub fn analyze<T: Real>(model: &PathwayModel<T>) -> Result<HardLimitReport<T>, LimitsError> {
    let zd = zero_dynamics(model)?;
    let dm = dominant_mode(model)?;
    let gamma_closed = gamma_closed_form(model)?;
    let gamma_orc = gamma_oracle(&zd, &dm)?;

    let eq = model.equilibrium();
    let mut state0 = eq.state();
    state0[0] += T::one();
    let zbar = internal_deviation(model, &state0)?;
    let z_tilde0 = dot(&dm.v, &zbar);

    let energy_orc = energy_oracle(&zd, &dm, z_tilde0)?;
    let chain_form = chain_equivalent(model);
    let energy_closed =
        chain_form.as_ref().map(|p| chain_energy_coeff(p) * z_tilde0 * z_tilde0);
    let gamma_approx = chain_form.as_ref().map(chain_gamma_approx);

    let gamma_rel = (gamma_closed - gamma_orc).abs() / gamma_closed;
    let energy_rel = energy_closed.map(|h| {
        let denom = h.abs().max(T::min_positive_value());
        (h - energy_orc).abs() / denom
    });

    Ok(HardLimitReport {
        gamma_closed,
        gamma_oracle: gamma_orc,
        gamma_approx,
        energy_closed,
        energy_oracle: energy_orc,
        z_tilde0,
        lambda_dom: dm.lambda,
        unstable_count: dm.unstable_count,
        discrepancies: Discrepancies { gamma_rel, energy_rel },
    })
}

/// Parameter grid bases: the families with closed-form parameter sweeps.
#[derive(Clone, Debug)]
pub enum SweepBase<T> {
    TwoState(crate::model::TwoStateParams<T>),
    Chain(ChainParams<T>),
}

/// One swept parameter with its grid points.
#[derive(Clone, Debug)]
pub enum SweepAxis<T> {
    Alpha(Vec<T>),
    RateConst(Vec<T>),
    Feedback(Vec<T>),
    Length(Vec<usize>),
}

impl<T> SweepAxis<T> {
    fn kind(&self) -> &'static str {
        match self {
            SweepAxis::Alpha(_) => "alpha",
            SweepAxis::RateConst(_) => "rate",
            SweepAxis::Feedback(_) => "g",
            SweepAxis::Length(_) => "n",
        }
    }

    fn len(&self) -> usize {
        match self {
            SweepAxis::Alpha(v) | SweepAxis::RateConst(v) | SweepAxis::Feedback(v) => v.len(),
            SweepAxis::Length(v) => v.len(),
        }
    }
}

/// One table cell: chain lengths print as integers, everything else as a
/// full-precision float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepValue<T> {
    Count(usize),
    Value(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SweepValue<T>>>,
}

/// Evaluates the closed forms and their large-chain estimates over the
/// cartesian product of the axes, last axis fastest. Row layout: the axis
/// values in axis order, then `gamma_closed`, `gamma_approx`,
/// `approx_rel_err`, `energy_coeff`, `energy_coeff_approx`.
pub fn sweep<T: Real>(
    base: &SweepBase<T>,
    axes: &[SweepAxis<T>],
) -> Result<SweepTable<T>, LimitsError> {
    let (family, base_params) = match base {
        SweepBase::TwoState(p) => (
            "two_state",
            ChainParams { alpha: p.alpha, k: p.k, g: p.g, h: p.h, a: p.a, n: 1 },
        ),
        SweepBase::Chain(p) => ("chain", p.clone()),
    };
    let rate_name = if family == "chain" { "K" } else { "k" };

    let mut seen: Vec<&'static str> = Vec::new();
    for axis in axes {
        if axis.len() == 0 {
            return Err(LimitsError::EmptyAxis { axis: axis.kind() });
        }
        if seen.contains(&axis.kind()) {
            return Err(LimitsError::DuplicateAxis { axis: axis.kind() });
        }
        seen.push(axis.kind());
        if matches!(axis, SweepAxis::Length(_)) && family != "chain" {
            return Err(LimitsError::InvalidAxis { axis: "n", family: "two_state" });
        }
    }

    let mut columns: Vec<String> = axes
        .iter()
        .map(|axis| match axis {
            SweepAxis::RateConst(_) => rate_name.to_string(),
            other => other.kind().to_string(),
        })
        .collect();
    columns.extend(
        ["gamma_closed", "gamma_approx", "approx_rel_err", "energy_coeff", "energy_coeff_approx"]
            .iter()
            .map(|s| s.to_string()),
    );

    let total: usize = axes.iter().map(SweepAxis::len).product();
    let mut rows = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let mut p = base_params.clone();
        let mut axis_cells = Vec::with_capacity(axes.len());
        for (axis, &i) in axes.iter().zip(&idx) {
            match axis {
                SweepAxis::Alpha(v) => {
                    p.alpha = v[i];
                    axis_cells.push(SweepValue::Value(v[i]));
                }
                SweepAxis::RateConst(v) => {
                    p.k = v[i];
                    axis_cells.push(SweepValue::Value(v[i]));
                }
                SweepAxis::Feedback(v) => {
                    p.g = v[i];
                    axis_cells.push(SweepValue::Value(v[i]));
                }
                SweepAxis::Length(v) => {
                    p.n = v[i];
                    axis_cells.push(SweepValue::Count(v[i]));
                }
            }
        }
        // Revalidate the assembled point so bad grid values surface as
        // parameter errors rather than NaN rows.
        let p = ChainParams::new(p.alpha, p.k, p.g, p.h, p.a, p.n)?;
        let gamma = chain_gamma(&p);
        let gamma_approx = chain_gamma_approx(&p);
        let rel = (gamma_approx - gamma).abs() / gamma;
        let mut row = axis_cells;
        row.push(SweepValue::Value(gamma));
        row.push(SweepValue::Value(gamma_approx));
        row.push(SweepValue::Value(rel));
        row.push(SweepValue::Value(chain_energy_coeff(&p)));
        row.push(SweepValue::Value(chain_energy_coeff_approx(&p)));
        rows.push(row);

        for a in (0..axes.len()).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }

    Ok(SweepTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CyclicNetwork, NodeRates, RateFn, TwoStateParams};

    fn two_state(alpha: f64, k: f64, g: f64) -> PathwayModel<f64> {
        PathwayModel::TwoState(TwoStateParams::new(alpha, k, g, 2.0, 1.0).unwrap())
    }

    #[test]
    fn frozen_two_state_limits() {
        let report = analyze(&two_state(1.0, 1.0, 1.0)).unwrap();
        assert!((report.gamma_closed - 0.5).abs() < 1e-15);
        assert!((report.energy_closed.unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(report.z_tilde0, 1.0);
        assert_eq!(report.unstable_count, 1);
        assert!((report.lambda_dom - 1.0).abs() < 1e-15);
        assert!(report.discrepancies.gamma_rel <= tolerances::ORACLE_RTOL);
        assert!(report.discrepancies.energy_rel.unwrap() <= tolerances::ORACLE_RTOL);
    }

    #[test]
    fn balanced_two_link_chain_has_unit_gamma() {
        let p: ChainParams<f64> = ChainParams::new(1.0, 1.0, 1.0, 2.0, 1.0, 2).unwrap();
        assert!((chain_gamma(&p) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oracles_match_closed_forms_across_families() {
        for &(alpha, k, g, n) in
            &[(1.0, 1.0, 1.0, 3usize), (0.25, 4.0, 0.0, 5), (2.0, 0.5, 2.5, 8), (8.0, 10.0, 5.0, 2)]
        {
            let model =
                PathwayModel::Chain(ChainParams::new(alpha, k, g, 2.0, 1.0, n).unwrap());
            let report = analyze(&model).unwrap();
            assert!(
                report.discrepancies.gamma_rel <= tolerances::ORACLE_RTOL,
                "gamma rel {:.3e} at alpha={alpha} k={k} g={g} n={n}",
                report.discrepancies.gamma_rel
            );
            assert!(report.discrepancies.energy_rel.unwrap() <= tolerances::ORACLE_RTOL);
        }
    }

    #[test]
    fn cyclic_report_lacks_closed_energy_but_matches_gamma() {
        let net: CyclicNetwork<f64> = CyclicNetwork::new(
            1.0,
            vec![NodeRates { f: RateFn::Linear { c: 1.0 }, g: RateFn::Linear { c: 2.0 } }],
            RateFn::Linear { c: 1.0 },
            vec![1.0],
            1.0,
        )
        .unwrap();
        let report = analyze(&PathwayModel::Cyclic(net)).unwrap();
        assert!(report.energy_closed.is_none());
        assert!(report.gamma_approx.is_none());
        assert!(report.discrepancies.energy_rel.is_none());
        // sink slope 1, r = 2, drain 1: gamma = 1/(1 + 2 - 1).
        assert!((report.gamma_closed - 0.5).abs() < 1e-14);
        assert!(report.discrepancies.gamma_rel <= 1e-12);
    }

    #[test]
    fn feedback_free_two_state_matches_its_cyclic_view() {
        for &(alpha, k) in &[(0.25, 0.5), (1.0, 1.0), (4.0, 2.0)] {
            let model = two_state(alpha, k, 0.0);
            let direct = analyze(&model).unwrap();
            let view = PathwayModel::Cyclic(model.cyclic_view().unwrap());
            let via_cycle = analyze(&view).unwrap();
            assert!(
                (direct.gamma_closed - via_cycle.gamma_closed).abs()
                    <= tolerances::REDUCTION_TOL * direct.gamma_closed
            );
        }
    }

    #[test]
    fn single_link_chain_reproduces_two_state_numbers_exactly() {
        let chain = PathwayModel::Chain(ChainParams::new(3.0, 0.7, 1.3, 2.0, 1.0, 1).unwrap());
        let two = two_state(3.0, 0.7, 1.3);
        let rc = analyze(&chain).unwrap();
        let rt = analyze(&two).unwrap();
        assert_eq!(rc.gamma_closed, rt.gamma_closed);
        assert_eq!(rc.energy_closed, rt.energy_closed);
        assert_eq!(rc.lambda_dom, rt.lambda_dom);
    }

    #[test]
    fn gamma_grows_roughly_linearly_in_chain_length() {
        let mut last = 0.0_f64;
        for n in 1..=40 {
            let p: ChainParams<f64> = ChainParams::new(1.0, 1.0, 1.0, 2.0, 1.0, n).unwrap();
            let gamma = chain_gamma(&p);
            assert!(gamma > last, "gamma must increase with n (n = {n})");
            last = gamma;
        }
        let g20 = chain_gamma::<f64>(&ChainParams::new(1.0, 1.0, 1.0, 2.0, 1.0, 20).unwrap());
        let g40 = chain_gamma::<f64>(&ChainParams::new(1.0, 1.0, 1.0, 2.0, 1.0, 40).unwrap());
        let ratio = g40 / g20;
        assert!(ratio > 1.9 && ratio < 2.1, "doubling n should about double gamma");
    }

    #[test]
    fn large_chain_estimate_is_close() {
        let p: ChainParams<f64> = ChainParams::new(1.0, 1.0, 1.0, 2.0, 1.0, 50).unwrap();
        let exact = chain_gamma(&p);
        let approx = chain_gamma_approx(&p);
        assert!((approx - exact).abs() / exact < 0.01);
        let ec = chain_energy_coeff(&p);
        let eca = chain_energy_coeff_approx(&p);
        assert!((eca - ec).abs() / ec < 0.05);
    }

    #[test]
    fn displacement_orthogonal_to_the_mode_costs_nothing() {
        let model = two_state(2.0, 1.0, 0.5);
        let eq = model.equilibrium();
        // Raising y by alpha while dropping x1 by one unit cancels inside z1.
        let state = vec![eq.x_star[0] - 1.0, eq.y_star + 2.0];
        let z = internal_deviation(&model, &state).unwrap();
        let dm = dominant_mode(&model).unwrap();
        let zd = zero_dynamics(&model).unwrap();
        let zt = dot(&dm.v, &z);
        assert!(zt.abs() < 1e-15);
        assert_eq!(energy_oracle(&zd, &dm, zt).unwrap(), 0.0);
    }

    #[test]
    fn sweep_orders_rows_with_the_last_axis_fastest() {
        let base = SweepBase::Chain(ChainParams::new(1.0, 1.0, 0.0, 2.0, 1.0, 2).unwrap());
        let axes = [
            SweepAxis::Alpha(vec![1.0, 2.0]),
            SweepAxis::Length(vec![1, 2, 3]),
        ];
        let table = sweep(&base, &axes).unwrap();
        assert_eq!(table.rows.len(), 6);
        assert_eq!(table.columns[0], "alpha");
        assert_eq!(table.columns[1], "n");
        assert_eq!(table.rows[0][0], SweepValue::Value(1.0));
        assert_eq!(table.rows[0][1], SweepValue::Count(1));
        assert_eq!(table.rows[1][1], SweepValue::Count(2));
        assert_eq!(table.rows[3][0], SweepValue::Value(2.0));
        assert_eq!(table.rows[3][1], SweepValue::Count(1));
        // alpha = 1, k = 1, g = 0, n = 1: gamma = 1.
        assert_eq!(table.rows[0][2], SweepValue::Value(1.0));
    }

    #[test]
    fn sweep_rejects_chain_length_axis_on_two_state_base() {
        let base = SweepBase::TwoState(TwoStateParams::new(1.0, 1.0, 0.0, 2.0, 1.0).unwrap());
        let err = sweep(&base, &[SweepAxis::Length(vec![1, 2])]).unwrap_err();
        assert!(matches!(err, LimitsError::InvalidAxis { .. }));
        let table = sweep(&base, &[SweepAxis::RateConst(vec![0.5, 1.0])]).unwrap();
        assert_eq!(table.columns[0], "k");
    }
}
