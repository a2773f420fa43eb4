//! End-to-end acceptance checks. Runs without the libtest harness so that the
//! one-line verdicts appear in plain `cargo test` output.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdo::bifurcation::{cycle_census, mu_negative_scenario, relaxation_convergence, sweep_eta};
use sdo::model::{full_field, GammaVector, ModelParams, Sigmoid};
use sdo::numerics::cycles::{CycleConfig, CycleStability};
use sdo::numerics::ode::{integrate, IntegratorConfig};
use sdo::sphere::{
    build_het_curve, het_orbit, hopf_value, melnikov_check, shoot_heteroclinic, shoot_heteroclinic_dual, ShootConfig,
    Side,
};
use sdo::verify::verify_geometry;
use sdo::Result;

type Check = Result<(bool, String)>;

fn params(eta: f64, mu: f64, eps: f64) -> ModelParams {
    ModelParams::new(0.5, 2.0, eta, mu, eps).unwrap()
}

fn gamma_k1() -> GammaVector {
    GammaVector::new(1, 0.5, 1.0, 1.0 / PI, 1.0 / PI).unwrap()
}

fn gamma_k2() -> GammaVector {
    GammaVector::new(2, 0.5, 1.0, 0.25, 0.25).unwrap()
}

fn hopf_reproduction() -> Check {
    let d = sweep_eta(&params(1.0, 0.0, 0.0064), &Sigmoid::arctan(), (0.90, 1.05), 300, false)?;
    let etas: Vec<f64> = d.hopf_points.iter().map(|h| h.eta).collect();
    let ok = etas.len() == 2 && (etas[0] - 0.93).abs() <= 0.01 && (etas[1] - 1.02).abs() <= 0.01;
    Ok((ok, format!("Hopf η = {etas:.6?}")))
}

fn relaxation_cycle() -> Check {
    let r = relaxation_convergence(&params(1.0, 0.0, 0.0064), &Sigmoid::arctan(), &[0.0064], &CycleConfig::default())?;
    let Some(c) = &r.samples[0].cycle else { return Ok((false, "no attracting cycle".into())) };
    let ok = (1.5..=1.9).contains(&c.max_x) && c.multiplier.abs() < 1.0;
    Ok((ok, format!("max_x = {:.4}, multiplier = {:.2e}, period = {:.3}", c.max_x, c.multiplier, c.period)))
}

fn non_existence() -> Check {
    let sig = Sigmoid::arctan();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    let mut notes = Vec::new();
    for eta in [1.0597, 1.0604] {
        let p = params(eta, 0.08, 0.0064);
        let f = full_field(&p, &sig);
        let mut ends = Vec::new();
        for _ in 0..20 {
            let s = [rng.gen_range(0.2..1.8), rng.gen_range(0.2..2.0)];
            let (_, e) = integrate(&f, s, 0.0, 2000.0, IntegratorConfig::with_tol(1e-9, 1e-11))?.end();
            let v = f(&e);
            let settled = v[0].hypot(v[1]) < 1e-6;
            let near = (e[1] - 1.6).abs() <= 0.1 || (e[1] - 0.4).abs() <= 0.1;
            ok &= settled && near;
            ends.push(e[1]);
        }
        let census = cycle_census(&p, &sig, false, &CycleConfig::default())?;
        let foci: Vec<f64> = census.equilibria.iter().filter(|e| e.classification.is_stable()).map(|e| e.x).collect();
        let enclosing = census.attracting.iter().any(|c| foci.iter().all(|&x| c.min_x < x && x < c.max_x));
        ok &= foci.len() == 2 && !enclosing;
        let lo = ends.iter().filter(|y| **y < 1.0).count();
        notes.push(format!("η={eta}: {lo}/20 → y≈0.4, {}/20 → y≈1.6, enclosing cycle: {enclosing}", 20 - lo));
    }
    Ok((ok, notes.join("; ")))
}

fn heteroclinic_curve() -> Check {
    let g = gamma_k1();
    let h = build_het_curve(&g, 0.4, 3, &ShootConfig::default())?;
    let ok = h.eta_het0_l < 0.0
        && h.eta_het0_r > 0.0
        && (h.slope_l - 1.0 / g.alpha).abs() < 1e-3
        && (h.slope_r - 1.0 / (g.alpha + g.beta)).abs() < 1e-3
        && (h.mu1_star - 0.8).abs() <= 0.1;
    Ok((
        ok,
        format!(
            "η_Het^L(0) = {:.6}, η_Het^R(0) = {:.6}, slopes {:.6}/{:.6}, μ₁* = {:.4}",
            h.eta_het0_l, h.eta_het0_r, h.slope_l, h.slope_r, h.mu1_star
        ),
    ))
}

fn closed_form_hopf() -> Check {
    let mut worst = 0.0f64;
    for g in [gamma_k1(), gamma_k2()] {
        for side in [Side::L, Side::R] {
            let h = hopf_value(side, 0.0, &g)?;
            worst = worst.max((h.eta_h - h.eta_h_numeric).abs());
        }
    }
    Ok((worst < 1e-6, format!("max |closed form − numeric| = {worst:.2e}")))
}

fn melnikov_sign() -> Check {
    let g = gamma_k1();
    let cfg = ShootConfig::default();
    let het = shoot_heteroclinic(Side::L, 0.0, &g, &cfg)?;
    let orbit = het_orbit(&g, het.e_het, &ShootConfig { seed: het.seed, ..cfg })?;
    let m = melnikov_check(&orbit, &g)?;
    let ok = m.integral < 0.0 && m.integrand_sign_uniform;
    Ok((ok, format!("M = {:.4}, uniform sign: {}", m.integral, m.integrand_sign_uniform)))
}

fn geometry_suite() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [1, 2] {
        let r = verify_geometry(k, 100, 1000, 2024)?;
        ok &= r.pushforward_max() < 1e-8 && r.roundtrip_max() < 1e-12 && r.change_max() < 1e-12 && r.cocycle_max < 1e-12;
        notes.push(format!(
            "k={k}: pushforward {:.1e}, round trip {:.1e}, chart change {:.1e}, cocycle {:.1e}",
            r.pushforward_max(),
            r.roundtrip_max(),
            r.change_max(),
            r.cocycle_max
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn singular_limit() -> Check {
    let r = relaxation_convergence(&params(1.0, 0.0, 0.01), &Sigmoid::arctan(), &[1e-2, 1e-3, 1e-4], &CycleConfig::default())?;
    let d: Vec<String> = r
        .samples
        .iter()
        .map(|s| format!("ε={:e}: d={:.4?} T={:.3?}", s.eps, s.distance, s.cycle.as_ref().map(|c| c.period)))
        .collect();
    Ok((r.distance_shrinks && r.period_grows, d.join(", ")))
}

fn three_cycles() -> Check {
    let c = cycle_census(&params(1.05940, 0.07936, 0.0064), &Sigmoid::arctan(), true, &CycleConfig::default())?;
    let ok = c.attracting.len() == 1
        && c.repelling.len() == 2
        && c.repelling.iter().all(|r| r.stability == CycleStability::Repelling);
    let desc = |l: &[sdo::numerics::cycles::LimitCycle]| {
        l.iter().map(|c| format!("x∈[{:.3}, {:.3}]", c.min_x, c.max_x)).collect::<Vec<_>>().join(" ")
    };
    Ok((ok, format!("attracting {} | repelling {}", desc(&c.attracting), desc(&c.repelling))))
}

fn duality() -> Check {
    let g = gamma_k1();
    let cfg = ShootConfig::default();
    let direct = shoot_heteroclinic(Side::R, 0.0, &g, &cfg)?;
    let dual = shoot_heteroclinic_dual(0.0, &g, &cfg)?;
    let diff = (direct.eta_het - dual.eta_het).abs();
    Ok((diff <= 2.0 * cfg.tol, format!("direct {:.10}, dual {:.10}, |diff| = {diff:.1e}", direct.eta_het, dual.eta_het)))
}

fn negative_mu() -> Check {
    let r = mu_negative_scenario(&params(0.91, -0.05, 0.01), &Sigmoid::arctan(), &[1e-2, 1e-3], &CycleConfig::default())?;
    let d: Vec<String> = r.samples.iter().map(|s| format!("ε={:e}: d={:.4?}", s.eps, s.distance)).collect();
    Ok((r.all_attracting && r.distance_shrinks, d.join(", ")))
}

fn main() {
    let checks: [(&str, fn() -> Check, u64); 11] = [
        ("Hopf reproduction", hopf_reproduction, 120),
        ("relaxation cycle", relaxation_cycle, 30),
        ("non-existence near Γ₀", non_existence, 120),
        ("heteroclinic curve", heteroclinic_curve, 600),
        ("closed-form Hopf on spheres", closed_form_hopf, 10),
        ("Melnikov sign", melnikov_sign, 60),
        ("geometry suite", geometry_suite, 30),
        ("singular-limit convergence", singular_limit, 300),
        ("three coexisting cycles", three_cycles, 300),
        ("sphere duality", duality, 120),
        ("μ < 0 scenario", negative_mu, 120),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, budget)) in checks.into_iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let el = t.elapsed();
        let ok = ok && el <= Duration::from_secs(budget);
        println!("{} {:>2} {name}: {detail} [{:.1} s]", if ok { "PASS" } else { "FAIL" }, i + 1, el.as_secs_f64());
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
