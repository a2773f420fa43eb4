use proptest::prelude::*;

use sdo::bifurcation::equilibria;
use sdo::model::{full_field, ModelParams, Sigmoid};
use sdo::numerics::ode::{integrate, IntegratorConfig};
use sdo::numerics::{find_equilibria, hausdorff, EqType};

fn oscillator(s: &[f64; 2]) -> [f64; 2] {
    [s[1], -s[0]]
}

fn err_at(tol: f64) -> f64 {
    let e = integrate(&oscillator, [1.0, 0.0], 0.0, 20.0, IntegratorConfig::with_tol(tol, tol * 1e-2)).unwrap().end().1;
    (e[0] - 20f64.cos()).hypot(e[1] + 20f64.sin())
}

#[test]
fn global_error_follows_the_tolerance() {
    let errs: Vec<f64> = [1e-5, 1e-7, 1e-9, 1e-11].iter().map(|&t| err_at(t)).collect();
    for w in errs.windows(2) {
        // 100× tighter tolerance buys between 10× and 10⁴× accuracy
        let gain = w[0] / w[1];
        assert!((10.0..1e4).contains(&gain), "{errs:?}");
    }
    assert!(errs[3] < 1e-9);
}

#[test]
fn backward_integration_undoes_forward() {
    let p = ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.05).unwrap();
    let sig = Sigmoid::arctan();
    let f = full_field(&p, &sig);
    let cfg = IntegratorConfig::with_tol(1e-12, 1e-14);
    let s0 = [0.8, 1.1];
    let s1 = integrate(&f, s0, 0.0, 4.0, cfg).unwrap().end().1;
    let back = integrate(&f, s1, 4.0, 0.0, cfg).unwrap().end().1;
    assert!((back[0] - s0[0]).hypot(back[1] - s0[1]) < 1e-8);
}

#[test]
fn grid_search_and_branch_scan_find_the_same_equilibria() {
    let sig = Sigmoid::arctan();
    for (eta, mu) in [(1.0, 0.0), (1.0597, 0.08), (0.95, 0.0)] {
        let p = ModelParams::new(0.5, 2.0, eta, mu, 0.0064).unwrap();
        let a = equilibria(&p, &sig).unwrap();
        let b = find_equilibria(&full_field(&p, &sig), [[0.5, 1.5], [0.0, 3.0]]);
        assert_eq!(a.len(), b.len(), "η={eta}");
        for (u, v) in a.iter().zip(&b) {
            assert!((u.location[0] - v.location[0]).abs() < 1e-8 && (u.location[1] - v.location[1]).abs() < 1e-8);
            assert_eq!(u.classification, v.classification);
        }
    }
}

#[test]
fn three_equilibria_are_focus_saddle_focus() {
    let p = ModelParams::new(0.5, 2.0, 1.0597, 0.08, 0.0064).unwrap();
    let eq = equilibria(&p, &Sigmoid::arctan()).unwrap();
    let kinds: Vec<EqType> = eq.iter().map(|e| e.classification).collect();
    assert_eq!(kinds, [EqType::StableFocus, EqType::Saddle, EqType::StableFocus]);
    assert!((eq[0].location[1] - 1.6).abs() < 0.1 && (eq[2].location[1] - 0.4).abs() < 0.1);
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric_on_samples(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
        c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
    ) {
        let v = |p: &Vec<(f64, f64)>| p.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>();
        let (a, b, c) = (v(&a), v(&b), v(&c));
        prop_assert_eq!(hausdorff(&a, &a), 0.0);
        prop_assert_eq!(hausdorff(&a, &b), hausdorff(&b, &a));
        prop_assert!(hausdorff(&a, &c) <= hausdorff(&a, &b) + hausdorff(&b, &c) + 1e-12);
    }
}
