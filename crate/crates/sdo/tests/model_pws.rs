use approx::assert_relative_eq;
use proptest::prelude::*;

use sdo::blowup::{scale_params, unscale_params};
use sdo::model::{blended_field, full_jacobian, full_vector_field, BlendedPws, ModelParams, Sigmoid};
use sdo::numerics::ode::{integrate, IntegratorConfig};
use sdo::pws::{build_singular_cycle, eta_boundaries, pws_fields};

fn sigmoids() -> Vec<Sigmoid> {
    vec![Sigmoid::arctan(), Sigmoid::algebraic(), Sigmoid::hill(4).unwrap(), Sigmoid::goldbeter_koshland(0.05).unwrap()]
}

proptest! {
    #[test]
    fn blending_the_linear_limits_reproduces_the_model(
        alpha in 0.1f64..0.95, beta in 1.0f64..3.0, eta in 0.8f64..1.2, mu in -0.1f64..0.1,
        eps in 1e-4f64..0.1, x in 0.05f64..2.0, y in 0.0f64..3.0, which in 0usize..4,
    ) {
        let p = ModelParams::new(alpha, beta, eta, mu, eps).unwrap();
        let sig = sigmoids().swap_remove(which);
        // Hill and Goldbeter–Koshland are only defined for z > −1
        let x = if which >= 2 { 1.0 - 0.99 * eps + x / 2.0 } else { x };
        let b = BlendedPws::substrate_depletion(&p, sig.clone()).unwrap();
        let a = blended_field(&b, [x, y]).unwrap();
        let f = full_vector_field(&p, &sig, [x, y]).unwrap();
        for i in 0..2 {
            prop_assert!((a[i] - f[i]).abs() <= 1e-12 * (1.0 + f[i].abs()));
        }
    }

    #[test]
    fn jacobian_matches_central_differences(x in 0.5f64..1.5, y in 0.1f64..2.0) {
        let p = ModelParams::new(0.5, 2.0, 1.0, 0.03, 0.01).unwrap();
        let sig = Sigmoid::arctan();
        let j = full_jacobian(&p, &sig, [x, y]).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            let mut up = [x, y];
            let mut dn = [x, y];
            up[c] += h;
            dn[c] -= h;
            let (fu, fd) = (full_vector_field(&p, &sig, up).unwrap(), full_vector_field(&p, &sig, dn).unwrap());
            for r in 0..2 {
                let fdv = (fu[r] - fd[r]) / (2.0 * h);
                prop_assert!((j[r][c] - fdv).abs() < 1e-5 * (1.0 + fdv.abs()), "J[{r}][{c}] {} vs {fdv}", j[r][c]);
            }
        }
    }

    #[test]
    fn sigmoids_are_monotone_and_bounded(z in -50.0f64..50.0, which in 0usize..4) {
        let sig = sigmoids().swap_remove(which);
        let z = if which >= 2 { -0.99 + (z + 50.0) / 2.0 } else { z };
        let (a, b) = (sig.value(z).unwrap(), sig.value(z + 1e-3).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && b >= a);
        prop_assert!(sig.derivative(z).unwrap() >= 0.0);
    }

    #[test]
    fn parameter_scaling_round_trips(eps in 1e-6f64..0.1, mu1 in -1.0f64..1.0, eta1 in -2.0f64..2.0, k in 1u32..4) {
        let (e, mu, eta) = scale_params(eps, mu1, eta1, k).unwrap();
        let back = unscale_params(e, mu, eta, k).unwrap();
        prop_assert!((back.mu1 - mu1).abs() < 1e-12 * (1.0 + mu1.abs()));
        // η₁ = (η − 1)/σᵏ loses the digits that 1 + σᵏη₁ rounded away
        prop_assert!((back.eta1 - eta1).abs() < 1e-15 / eps.powf(k as f64 / (k as f64 + 1.0)) + 1e-12);
    }
}

#[test]
fn arctan_midpoint_and_tails() {
    let s = Sigmoid::arctan();
    assert_eq!(s.value(0.0).unwrap(), 0.5);
    // φ(z) ≈ 1/(π|z|) for z → −∞
    let z = -1e6;
    assert_relative_eq!(s.value(z).unwrap() * std::f64::consts::PI * -z, 1.0, epsilon = 1e-6);
}

#[test]
fn linear_flows_agree_with_the_integrator() {
    let p = ModelParams::new(0.5, 2.0, 1.0, 0.02, 0.0).unwrap();
    let (l, r) = pws_fields(&p);
    for f in [l, r] {
        let g = |s: &[f64; 2]| f.eval(s);
        let s0 = [0.7, 1.3];
        let num = integrate(&g, s0, 0.0, 3.0, IntegratorConfig::with_tol(1e-12, 1e-14)).unwrap().end().1;
        let exact = f.flow(s0, 3.0);
        assert_relative_eq!(num[0], exact[0], epsilon = 1e-10);
        assert_relative_eq!(num[1], exact[1], epsilon = 1e-10);
    }
}

#[test]
fn linear_nodes_sit_on_the_switching_line_at_the_boundaries() {
    let p = ModelParams::new(0.5, 2.0, 1.0, 0.05, 0.0).unwrap();
    let (eta_r, eta_l) = eta_boundaries(&p);
    let (l, _) = pws_fields(&p.with_eta(eta_l));
    let (_, r) = pws_fields(&p.with_eta(eta_r));
    assert_relative_eq!(l.node()[0], 1.0, epsilon = 1e-14);
    assert_relative_eq!(r.node()[0], 1.0, epsilon = 1e-14);
}

#[test]
fn singular_cycle_closes_through_the_switch() {
    let p = ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.0).unwrap();
    let c = build_singular_cycle(&p).unwrap();
    assert!(c.closure_gap < 1e-7);
    let poly = c.polyline();
    let (lo, hi) = poly.iter().fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(q[0]), b.max(q[0])));
    assert!(lo < 1.0 && hi > 1.0);
    // both nodes are at x = 1, where the arcs meet
    assert!(poly.iter().filter(|q| (q[0] - 1.0).abs() < 1e-12).count() >= 2);
    assert!(build_singular_cycle(&p.with_eta(1.01)).is_err());
}
