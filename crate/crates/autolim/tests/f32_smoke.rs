// The whole analysis stack at f32: closed forms, oracles, linearization,
// Riccati synthesis, and the peak-gain sweep all run at reduced precision
// with correspondingly wider agreement margins.

use autolim::limits;
use autolim::linearize;
use autolim::model::{ChainParams, PathwayModel, TwoStateParams};
use autolim::numerics::{dot, hinf_norm, is_hurwitz, outer, riccati_solve, Mat};

fn rel(a: f32, b: f32) -> f32 {
    (a - b).abs() / b.abs()
}

#[test]
fn two_state_floors_at_reduced_precision() {
    let p = TwoStateParams::<f32>::new(1.5, 2.0, 1.0, 2.0, 1.0).unwrap();
    let model = PathwayModel::TwoState(p);
    let gamma = limits::gamma_closed_form(&model).unwrap();
    assert!(rel(gamma, 1.5 / 3.5) <= 1e-6, "closed form is plain arithmetic: {gamma}");

    let zd = linearize::zero_dynamics(&model).unwrap();
    let dm = linearize::dominant_mode(&model).unwrap();
    let oracle = limits::gamma_oracle(&zd, &dm).unwrap();
    assert!(rel(gamma, oracle) <= 1e-3, "closed {gamma} vs oracle {oracle}");

    let h = limits::energy_oracle(&zd, &dm, 1.0f32).unwrap();
    let closed = 1.5f32.powi(3) * 2.0 / 3.5f32.powi(2);
    assert!(rel(h, closed) <= 1e-3, "energy {h} vs closed {closed}");
}

#[test]
fn chain_floor_and_scalar_synthesis_at_reduced_precision() {
    let p = ChainParams::<f32>::new(1.0, 1.0, 1.0, 2.0, 1.0, 4).unwrap();
    let model = PathwayModel::Chain(p.clone());
    let gamma = limits::chain_gamma(&p);
    let zd = linearize::zero_dynamics(&model).unwrap();
    let dm = linearize::dominant_mode(&model).unwrap();
    let oracle = limits::gamma_oracle(&zd, &dm).unwrap();
    assert!(rel(gamma, oracle) <= 1e-3, "closed {gamma} vs oracle {oracle}");

    // Scalar minimum-energy solve against its closed form 2 lambda / (v b)^2.
    let vb = dot(&dm.v, &zd.b);
    let mut a1 = Mat::<f32>::zeros(1, 1);
    a1[(0, 0)] = dm.lambda;
    let sol = riccati_solve(&a1, &[vb], &Mat::zeros(1, 1), 1.0f32).unwrap();
    let want = 2.0 * dm.lambda / (vb * vb);
    assert!(rel(sol[(0, 0)], want) <= 1e-3, "p {} vs {want}", sol[(0, 0)]);
}

#[test]
fn regulator_synthesis_and_peak_gain_at_reduced_precision() {
    let p = TwoStateParams::<f32>::new(1.0, 1.0, 1.0, 3.0, 1.0).unwrap();
    let model = PathwayModel::TwoState(p);
    let lp = linearize::linearize_full(&model).unwrap();
    let dim = lp.a.rows();

    let sol = riccati_solve(&lp.a, &lp.bu, &Mat::identity(dim), 1.0f32).unwrap();
    let gain = sol.vecmat(&lp.bu);
    let a_cl = lp.a.sub(&outer(&lp.bu, &gain));
    assert!(is_hurwitz(&a_cl), "regulator must stabilize");

    let gamma = limits::gamma_closed_form(&model).unwrap();
    let peak = hinf_norm(&a_cl, &lp.bd, &lp.cy).unwrap();
    assert!(
        peak.norm >= gamma * (1.0 - 1e-3),
        "peak gain {} under the floor {gamma}",
        peak.norm
    );
}

#[test]
fn finite_difference_jacobian_matches_the_analytic_one() {
    let p = ChainParams::<f32>::new(1.0, 1.0, 1.0, 3.0, 1.0, 2).unwrap();
    let model = PathwayModel::Chain(p);
    let lp = linearize::linearize_full(&model).unwrap();
    let eq = model.equilibrium();
    let u_star = eq.u_star;
    let jac = linearize::jacobian_fd(
        |x: &[f32]| model.vector_field(x, u_star, 0.0),
        &eq.state(),
    )
    .unwrap();
    let diff = jac.sub(&lp.a).max_abs();
    assert!(diff <= 5e-3, "finite differences off by {diff}");
}
