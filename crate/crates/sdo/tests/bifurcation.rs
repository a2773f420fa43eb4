use sdo::bifurcation::{classify_regime, cycle_census, near_radius, sweep_eta, ClassifyConfig, Regime};
use sdo::model::{GammaVector, ModelParams, Sigmoid};
use sdo::numerics::EqType;
use sdo::sphere::HetCurve;

fn base() -> ModelParams {
    ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.0064).unwrap()
}

#[test]
fn hopf_points_bound_the_cycle_branch() {
    let d = sweep_eta(&base(), &Sigmoid::arctan(), (0.90, 1.05), 31, true).unwrap();
    assert_eq!(d.hopf_points.len(), 2);
    let (h0, h1) = (d.hopf_points[0].eta, d.hopf_points[1].eta);
    for (i, eta) in d.eta_grid.iter().enumerate() {
        let eq = &d.equilibrium_branch[i];
        assert_eq!(eq.len(), 1);
        let stable = matches!(eq[0].classification, EqType::StableFocus | EqType::StableNode);
        assert_eq!(stable, *eta < h0 || *eta > h1, "η = {eta}");
        // the cycle exists exactly where the equilibrium is unstable
        assert_eq!(d.cycle_branch[i].is_some(), !stable, "η = {eta}");
    }
    assert!(d.warnings.is_empty());
}

#[test]
fn stable_foci_have_no_relaxation_cycle() {
    let p = ModelParams::new(0.5, 2.0, 1.0604, 0.08, 0.0064).unwrap();
    let c = cycle_census(&p, &Sigmoid::arctan(), false, &Default::default()).unwrap();
    assert!(c.attracting.iter().all(|cy| cy.max_x < 1.3));
    assert_eq!(c.equilibria.len(), 3);
}

#[test]
fn regime_verdicts_on_either_side_of_the_curves() {
    // curve of the α = 0.5, β = 2 arctan system (k = 1)
    let het = HetCurve::from_samples(vec![0.0, 0.5], vec![-1.0590756183024495, -0.05907561830244945], vec![
        0.30337044182233514,
        0.5033704418223351,
    ])
    .unwrap();
    let g = GammaVector::from_model(&base(), &Sigmoid::arctan()).unwrap();
    let cfg = ClassifyConfig::default();
    let inside = classify_regime(0.0064, 0.0, 0.0, &Sigmoid::arctan(), &g, &het, &cfg).unwrap();
    assert_eq!(inside.predicted, Regime::RelaxationExists);
    assert!(inside.agree && !inside.inconclusive);
    let above = classify_regime(0.0064, 0.3, 0.9, &Sigmoid::arctan(), &g, &het, &cfg).unwrap();
    assert_eq!(above.predicted, Regime::NoneNearGamma0);
    assert!(above.agree);
    assert!(classify_regime(0.0064, 0.9, 0.0, &Sigmoid::arctan(), &g, &het, &cfg).is_err());
}

#[test]
fn tube_radius_grows_like_sigma() {
    assert_eq!(near_radius(1e-8, 1), 0.1);
    assert!((near_radius(0.0064, 1) - 0.32).abs() < 1e-12);
}
