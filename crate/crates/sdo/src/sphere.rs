//! Dynamics on the two blow-up spheres at ρ = 0: equilibria, Hopf values,
//! local invariant manifolds, heteroclinic shooting, the Melnikov sign and the
//! nullcline fold count.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{chart_change, ChartId, ChartName, ChartPoint, Stage};
use crate::charts::{dual_gamma, sphere_field, ScaledSystem};
use crate::error::{Error, Result};
use crate::model::GammaVector;
use crate::numerics::linalg::{det2, eigenvalues, jacobian_fd, trace};
use crate::numerics::ode::{Crossing, Event, IntegratorConfig, Record, Solver, Stop};
use crate::numerics::roots::{bisect, brent, newton};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn stage(self) -> Stage {
        match self {
            Side::L => Stage::SphereL,
            Side::R => Stage::SphereR,
        }
    }

    /// η₁^{L/R}(μ₁).
    pub fn eta1_boundary(self, g: &GammaVector, mu1: f64) -> f64 {
        match self {
            Side::L => mu1 / g.alpha,
            Side::R => mu1 / g.s(),
        }
    }

    fn chart(self, name: ChartName) -> ChartId {
        ChartId { stage: self.stage(), name }
    }

    fn phi0(self, g: &GammaVector) -> f64 {
        match self {
            Side::L => g.phi_l0,
            Side::R => g.phi_r0,
        }
    }
}

/// System on the sphere with η₁ = η₁^{L/R}(μ₁) + e.
fn system(side: Side, g: &GammaVector, mu1: f64, e: f64) -> ScaledSystem {
    ScaledSystem::new(*g, side.eta1_boundary(g, mu1) + e, mu1)
}

/// The ρ = 0 restriction of a sphere chart as a planar field on the two
/// remaining chart coordinates.
pub fn planar_field(chart: ChartId, sys: &ScaledSystem) -> impl Fn(&[f64; 2]) -> [f64; 2] + Sync + '_ {
    move |u: &[f64; 2]| match sphere_field(chart, sys, [0.0, u[0], u[1]]) {
        Ok(v) => [v[1], v[2]],
        Err(_) => [f64::NAN; 2],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqClass {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    NonhyperbolicSaddle,
    NonhyperbolicNode,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereEquilibrium {
    pub label: &'static str,
    pub side: Side,
    pub chart: ChartId,
    /// The two chart coordinates besides ρ = 0.
    pub coords: [f64; 2],
    pub eigenvalues: [(f64, f64); 2],
    pub classification: EqClass,
}

const ZERO_EIG: f64 = 1e-7;

fn classify(ev: &[Complex<f64>]) -> EqClass {
    let (a, b) = (ev[0], ev[1]);
    let zero = |c: Complex<f64>| c.re.abs() < ZERO_EIG;
    if a.im != 0.0 {
        return if a.re < 0.0 { EqClass::StableFocus } else { EqClass::UnstableFocus };
    }
    match (zero(a), zero(b)) {
        (true, true) => EqClass::NonhyperbolicNode,
        (true, false) | (false, true) => {
            let other = if zero(a) { b } else { a };
            if other.re > 0.0 {
                EqClass::NonhyperbolicSaddle
            } else {
                EqClass::NonhyperbolicNode
            }
        }
        _ if a.re * b.re < 0.0 => EqClass::Saddle,
        _ if a.re < 0.0 => EqClass::StableNode,
        _ => EqClass::UnstableNode,
    }
}

fn equilibrium(
    label: &'static str,
    side: Side,
    chart: ChartId,
    guess: [f64; 2],
    sys: &ScaledSystem,
    expect: &[EqClass],
) -> Result<SphereEquilibrium> {
    let f = planar_field(chart, sys);
    let u = newton(&f, guess, 1e-13, 50)?;
    let j = jacobian_fd(&f, &u, 1e-7);
    let ev = eigenvalues(&j);
    let class = classify(&ev);
    if !expect.contains(&class) {
        return Err(Error::ClassificationMismatch(format!(
            "{label}^{side:?} at {u:?}: eigenvalues {ev:?} give {class:?}, expected {expect:?}"
        )));
    }
    Ok(SphereEquilibrium {
        label,
        side,
        chart,
        coords: u,
        eigenvalues: [(ev[0].re, ev[0].im), (ev[1].re, ev[1].im)],
        classification: class,
    })
}

/// Location of z in chart r̄ = 1, when it exists.
pub fn z_location(side: Side, g: &GammaVector, e: f64) -> Option<[f64; 2]> {
    let k = g.k as f64;
    match side {
        Side::L if e < 0.0 => Some([
            -1.0 / g.alpha - g.beta / g.alpha.powi(2) * g.phi_l0 * (-e).powf(-(k + 1.0)),
            (-e).powf(-1.0 / k),
        ]),
        Side::R if e > 0.0 => {
            let s = g.s();
            Some([(1.0 + g.beta / s * g.phi_r0 * e.powf(-(k + 1.0))) / s, e.powf(-1.0 / k)])
        }
        _ => None,
    }
}

/// All equilibria on one sphere, refined by Newton and classified from the
/// chart Jacobian.
pub fn catalog_equilibria(side: Side, mu1: f64, eta1: f64, g: &GammaVector) -> Result<Vec<SphereEquilibrium>> {
    if mu1 < 0.0 {
        return Err(Error::InvalidParams("mu1 must be nonnegative".into()));
    }
    let sys = ScaledSystem::new(*g, eta1, mu1);
    let e = eta1 - side.eta1_boundary(g, mu1);
    let (a, s, phi) = (g.alpha, g.s(), side.phi0(g));
    let r1 = side.chart(ChartName::Rbar1);
    let d1 = side.chart(ChartName::Deltabar1);
    use EqClass::*;
    let (y_w, y_s, y_r) = match side {
        Side::L => (-(1.0 - a) / a, 0.0, -g.beta * phi / (a * a)),
        Side::R => (0.0, -(s - 1.0) / s, g.beta * phi / (s * s)),
    };
    let mut v = vec![
        equilibrium("q_w", side, r1, [y_w, 0.0], &sys, &[Saddle])?,
        equilibrium("q_s", side, r1, [y_s, 0.0], &sys, &[UnstableNode])?,
        equilibrium("q_f", side, d1, [0.0, 0.0], &sys, &[StableNode])?,
        equilibrium("q_r", side, d1, [0.0, y_r], &sys, &[NonhyperbolicSaddle])?,
        equilibrium("a", side, side.chart(ChartName::Ybar1), [0.0, 0.0], &sys, &[Saddle])?,
        equilibrium("b", side, side.chart(ChartName::YbarNeg1), [0.0, 0.0], &sys, &[Saddle])?,
    ];
    if let Some(z) = z_location(side, g, e) {
        let eh = hopf_e(side, g);
        let stable = match side {
            Side::L => e < eh,
            Side::R => e > eh,
        };
        let expect: &[EqClass] = if stable { &[StableNode, StableFocus] } else { &[UnstableNode, UnstableFocus] };
        v.push(equilibrium("z", side, r1, z, &sys, expect)?);
    }
    Ok(v)
}

/// Closed-form Hopf offset e_H = η_H − η^{L/R}.
pub fn hopf_e(side: Side, g: &GammaVector) -> f64 {
    let k = g.k as f64;
    match side {
        Side::L => -(g.beta * k * g.phi_l0 / (g.alpha * (g.alpha + 1.0))).powf(1.0 / (k + 1.0)),
        Side::R => (g.beta * k * g.phi_r0 / (g.s() * (g.s() + 1.0))).powf(1.0 / (k + 1.0)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfResult {
    pub side: Side,
    pub mu1: f64,
    pub eta_h: f64,
    pub eta_h_numeric: f64,
    pub det_at_hopf: f64,
    pub lyapunov: f64,
    pub lyapunov_sign: i32,
}

fn z_jacobian(side: Side, g: &GammaVector, mu1: f64, e: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let sys = system(side, g, mu1, e);
    let f = planar_field(side.chart(ChartName::Rbar1), &sys);
    let z0 = z_location(side, g, e).ok_or_else(|| Error::Domain(format!("no z equilibrium at e = {e}")))?;
    // the field is quadratic in y₁, so residuals scale with |z|²
    let scale = z0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let z = newton(&f, z0, 1e-13 * scale * scale, 50)?;
    Ok((z, jacobian_fd(&f, &z, 1e-6 * scale)))
}

/// First Lyapunov coefficient of a planar field at a Hopf point, from the
/// cubic normal-form formula with finite-difference derivatives.
pub fn first_lyapunov<F: Fn(&[f64; 2]) -> [f64; 2]>(f: &F, x0: [f64; 2], j: [[f64; 2]; 2]) -> Result<f64> {
    let w2 = det2(&j);
    if w2 <= 0.0 {
        return Err(Error::Domain("no complex pair at the Hopf point".into()));
    }
    let om = w2.sqrt();
    let (a, b) = (j[0][0], j[0][1]);
    // columns (Im v, Re v) of the eigenvector v = (b, iω − a)
    let p = [[0.0, b], [om, -a]];
    let pdet = det2(&p);
    let pinv = [[p[1][1] / pdet, -p[0][1] / pdet], [-p[1][0] / pdet, p[0][0] / pdet]];
    let g = |u: f64, v: f64| {
        let x = [x0[0] + p[0][0] * u + p[0][1] * v, x0[1] + p[1][0] * u + p[1][1] * v];
        let fx = f(&x);
        [pinv[0][0] * fx[0] + pinv[0][1] * fx[1], pinv[1][0] * fx[0] + pinv[1][1] * fx[1]]
    };
    let h = 1e-3 / (b.abs().max(om).max(a.abs()));
    let d2 = |c: usize, i: (f64, f64), jj: (f64, f64)| {
        (g(h * (i.0 + jj.0), h * (i.1 + jj.1))[c] - g(h * (i.0 - jj.0), h * (i.1 - jj.1))[c]
            - g(h * (-i.0 + jj.0), h * (-i.1 + jj.1))[c]
            + g(-h * (i.0 + jj.0), -h * (i.1 + jj.1))[c])
            / (4.0 * h * h)
    };
    let second = |c: usize, ax: usize| {
        let e = if ax == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        (g(h * e.0, h * e.1)[c] - 2.0 * g(0.0, 0.0)[c] + g(-h * e.0, -h * e.1)[c]) / (h * h)
    };
    let third_same = |c: usize, ax: usize| {
        let e = if ax == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        let q = |m: f64| g(m * h * e.0, m * h * e.1)[c];
        (q(2.0) - 2.0 * q(1.0) + 2.0 * q(-1.0) - q(-2.0)) / (2.0 * h.powi(3))
    };
    // ∂_i ∂_j² for i ≠ j
    let third_mixed = |c: usize, i: usize| {
        let q = |m: f64, n: f64| if i == 0 { g(m * h, n * h)[c] } else { g(n * h, m * h)[c] };
        (q(1.0, 1.0) - 2.0 * q(1.0, 0.0) + q(1.0, -1.0) - q(-1.0, 1.0) + 2.0 * q(-1.0, 0.0) - q(-1.0, -1.0))
            / (2.0 * h.powi(3))
    };
    let (fxx, fyy, gxx, gyy) = (second(0, 0), second(0, 1), second(1, 0), second(1, 1));
    let fxy = d2(0, (1.0, 0.0), (0.0, 1.0));
    let gxy = d2(1, (1.0, 0.0), (0.0, 1.0));
    let fxxx = third_same(0, 0);
    let gyyy = third_same(1, 1);
    let fxyy = third_mixed(0, 0);
    let gxxy = third_mixed(1, 1);
    Ok((fxxx + fxyy + gxxy + gyyy) / 16.0
        + (fxy * (fxx + fyy) - gxy * (gxx + gyy) - fxx * gxx + fyy * gyy) / (16.0 * om))
}

pub fn hopf_value(side: Side, mu1: f64, g: &GammaVector) -> Result<HopfResult> {
    let eh = hopf_e(side, g);
    let tr = |e: f64| z_jacobian(side, g, mu1, e).map(|(_, j)| trace(&j)).unwrap_or(f64::NAN);
    let e_num = brent(tr, 4.0 * eh, 0.25 * eh, 1e-13)?;
    let (z, j) = z_jacobian(side, g, mu1, e_num)?;
    let sys = system(side, g, mu1, e_num);
    let f = planar_field(side.chart(ChartName::Rbar1), &sys);
    let l1 = first_lyapunov(&f, z, j)?;
    let base = side.eta1_boundary(g, mu1);
    Ok(HopfResult {
        side,
        mu1,
        eta_h: base + eh,
        eta_h_numeric: base + e_num,
        det_at_hopf: det2(&j),
        lyapunov: l1,
        lyapunov_sign: if l1 > 0.0 { 1 } else if l1 < 0.0 { -1 } else { 0 },
    })
}

/// Largest admissible seed offset for the local manifold expansions.
pub const SEED_CUTOFF: f64 = 0.1;

fn check_seed(v: f64) -> Result<()> {
    if !(0.0..=SEED_CUTOFF).contains(&v) {
        Err(Error::Domain(format!("seed offset {v} outside [0, {SEED_CUTOFF}]")))
    } else {
        Ok(())
    }
}

/// Point on the unstable manifold of q_w in chart r̄ = 1 at distance δ.
pub fn local_unstable_seed(side: Side, mu1: f64, eta1: f64, g: &GammaVector, delta: f64) -> Result<ChartPoint> {
    check_seed(delta)?;
    let e = eta1 - side.eta1_boundary(g, mu1);
    let (k, kk) = (g.k as i32, (g.k * (g.k + 1)) as i32);
    let (a, s, kf) = (g.alpha, g.s(), g.k as f64);
    let y = match side {
        Side::L => {
            let c2 = -g.beta * g.phi_l0 / (a * a * (1.0 + kf * a));
            -(1.0 - a) / a + e * delta.powi(k) + c2 * delta.powi(kk)
        }
        Side::R => delta.powi(k) * e / s + g.beta * g.phi_r0 * delta.powi(kk) / (s * (s + kf)),
    };
    ChartPoint::new(side.chart(ChartName::Rbar1), [0.0, y, delta], g.k)
}

/// Point on the centre(-stable) manifold of q_r in chart δ̄ = 1 at distance r₂.
pub fn local_center_seed(side: Side, mu1: f64, eta1: f64, g: &GammaVector, r2: f64) -> Result<ChartPoint> {
    check_seed(r2)?;
    let e = eta1 - side.eta1_boundary(g, mu1);
    let k = g.k as i32;
    let (a, s, kf) = (g.alpha, g.s(), g.k as f64);
    let y = match side {
        Side::L => {
            let bp = g.beta * g.phi_l0;
            -bp / (a * a) - r2.powi(k + 1) / a - a / (kf * bp) * (e + r2) * r2.powi(2 * k + 1)
        }
        Side::R => {
            let bp = g.beta * g.phi_r0;
            bp / (s * s) + r2.powi(k + 1) / s + s / (kf * bp) * (r2 - e) * r2.powi(2 * k + 1)
        }
    };
    ChartPoint::new(side.chart(ChartName::Deltabar1), [0.0, r2, y], g.k)
}

#[derive(Clone, Debug)]
pub struct ShootConfig {
    /// Seed offsets δ₁ (unstable) and r₂ (centre).
    pub seed: f64,
    /// Bisection tolerance in η₁.
    pub tol: f64,
    /// Left side: Σ at r₄ = frac · r₄(q_w).
    pub section_frac: f64,
    pub box_radius: f64,
    /// Budget in arclength of the normalised field.
    pub max_arclength: f64,
    /// Bracket offsets e = η₁ − η₁^{L/R} (magnitudes), widened on failure.
    pub deep: f64,
    pub near: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            seed: 1e-2,
            tol: 1e-8,
            section_frac: 0.95,
            box_radius: 1e3,
            max_arclength: 300.0,
            deep: 5.0,
            near: 0.05,
            integrator: IntegratorConfig { max_steps: 2_000_000, ..IntegratorConfig::with_tol(1e-10, 1e-12) },
        }
    }
}

/// Where a manifold first meets Σ, if it does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossing2 {
    Hit(f64),
    Miss,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub pts: Vec<[f64; 2]>,
    pub hit: Crossing2,
}

fn normalised<F: Fn(&[f64; 2]) -> [f64; 2]>(f: F) -> impl Fn(&[f64; 2]) -> [f64; 2] {
    move |u| {
        let v = f(u);
        let n = (v[0] * v[0] + v[1] * v[1] + 1e-300).sqrt();
        [v[0] / n, v[1] / n]
    }
}

fn run_branch<F>(
    f: &F,
    u0: [f64; 2],
    forward: bool,
    sect: impl Fn(&[f64; 2]) -> f64 + Send + Sync,
    dir: Crossing,
    cfg: &ShootConfig,
    keep: bool,
) -> Result<Branch>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    let bx = cfg.box_radius.max(10.0 * u0[0].abs().max(u0[1].abs()));
    let solver = Solver::new(f, cfg.integrator)
        .event(Event::terminal(sect, dir))
        .event(Event::terminal(move |u: &[f64; 2]| u[0].abs().max(u[1].abs()) - bx, Crossing::Rising))
        .record(if keep { Record::Dense(4) } else { Record::Endpoints });
    let len = cfg.max_arclength + 2.0 * (u0[0] * u0[0] + u0[1] * u0[1]).sqrt();
    let t1 = if forward { len } else { -len };
    let tr = match solver.run(u0, 0.0, t1) {
        Ok(t) => t,
        Err(Error::MaxSteps(_) | Error::StepCollapse { .. } | Error::NonFinite(_)) => {
            return Ok(Branch { pts: vec![], hit: Crossing2::Miss })
        }
        Err(e) => return Err(e),
    };
    let hit = match tr.stop {
        Stop::Event(0) => Crossing2::Hit(0.0),
        _ => Crossing2::Miss,
    };
    Ok(Branch { pts: tr.y, hit })
}

/// Both manifolds at one parameter value, carried to Σ.
#[derive(Clone, Debug)]
pub struct Shot {
    pub e: f64,
    pub u: Branch,
    pub c: Branch,
    /// Σ-coordinate of each branch where it hits.
    pub u_val: Crossing2,
    pub c_val: Crossing2,
}

impl Shot {
    pub fn gap(&self) -> Option<f64> {
        match (self.u_val, self.c_val) {
            (Crossing2::Hit(u), Crossing2::Hit(c)) => Some(u - c),
            _ => None,
        }
    }
}

/// Left section abscissa r₄ of Σ.
pub fn section_r4(g: &GammaVector, frac: f64) -> f64 {
    frac * (g.alpha / (1.0 - g.alpha)).powf(1.0 / (g.k as f64 + 1.0))
}

/// Right section ordinate ỹ of Σ in chart r̄ = 1: the image of the left
/// section under the dual affine map y₁ = 1 − s − sỹ.
pub fn section_ytilde(g: &GammaVector, frac: f64) -> f64 {
    let s = g.s();
    let y1 = -(s - 1.0) / frac.powi(g.k as i32 + 1);
    (1.0 - s - y1) / s
}

/// Chart speed below which the centre seed is moved outward: along C the
/// r₂-speed vanishes like r₂^{2k+2}, and for k ≥ 2 the default offset sits at
/// round-off level.
const MIN_SEED_SPEED: f64 = 1e-8;

fn center_offset(side: Side, g: &GammaVector, mu1: f64, eta1: f64, seed: f64, sys: &ScaledSystem) -> f64 {
    let f = planar_field(side.chart(ChartName::Deltabar1), sys);
    let mut r = seed;
    while r < SEED_CUTOFF {
        let Ok(c) = local_center_seed(side, mu1, eta1, g, r) else { break };
        let v = f(&[c.coords[1], c.coords[2]]);
        if v[0].hypot(v[1]) >= MIN_SEED_SPEED {
            return r;
        }
        r = (r * 1.25).min(SEED_CUTOFF);
    }
    r.min(SEED_CUTOFF)
}

/// Integrates U forward and C backward to Σ for offset e = η₁ − η₁^{L/R}.
///
/// Left: chart ȳ = −1, Σ = {r₄ = const}, values are δ₄.
/// Right: chart r̄ = 1, Σ = {ỹ = const}, values are δ₁.
pub fn shoot(side: Side, g: &GammaVector, mu1: f64, e: f64, seed: f64, cfg: &ShootConfig, keep: bool) -> Result<Shot> {
    let sys = system(side, g, mu1, e);
    let eta1 = side.eta1_boundary(g, mu1) + e;
    let useed = local_unstable_seed(side, mu1, eta1, g, seed)?;
    let cseed = local_center_seed(side, mu1, eta1, g, center_offset(side, g, mu1, eta1, seed, &sys))?;
    match side {
        Side::L => {
            let c4 = side.chart(ChartName::YbarNeg1);
            let f = normalised(planar_field(c4, &sys));
            let rs = section_r4(g, cfg.section_frac);
            let u4 = chart_change(&useed, c4, g.alpha, g.beta)?;
            let v4 = chart_change(&cseed, c4, g.alpha, g.beta)?;
            let u = run_branch(&f, [u4.coords[1], u4.coords[2]], true, move |p| p[0] - rs, Crossing::Falling, cfg, keep)?;
            let c = run_branch(&f, [v4.coords[1], v4.coords[2]], false, move |p| p[0] - rs, Crossing::Any, cfg, keep)?;
            let val = |b: &Branch| match b.hit {
                Crossing2::Hit(_) => Crossing2::Hit(b.pts.last().unwrap()[1]),
                Crossing2::Miss => Crossing2::Miss,
            };
            Ok(Shot { e, u_val: val(&u), c_val: val(&c), u, c })
        }
        Side::R => {
            let c1 = side.chart(ChartName::Rbar1);
            let f = normalised(planar_field(c1, &sys));
            let ys = section_ytilde(g, cfg.section_frac);
            let v1 = chart_change(&cseed, c1, g.alpha, g.beta)?;
            let u = run_branch(&f, [useed.coords[1], useed.coords[2]], true, move |p| p[0] - ys, Crossing::Any, cfg, keep)?;
            let c = run_branch(&f, [v1.coords[1], v1.coords[2]], false, move |p| p[0] - ys, Crossing::Any, cfg, keep)?;
            let val = |b: &Branch| match b.hit {
                Crossing2::Hit(_) => Crossing2::Hit(b.pts.last().unwrap()[1]),
                Crossing2::Miss => Crossing2::Miss,
            };
            Ok(Shot { e, u_val: val(&u), c_val: val(&c), u, c })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HetResult {
    pub side: Side,
    pub mu1: f64,
    pub eta_het: f64,
    /// η_Het − η₁^{L/R}(μ₁).
    pub e_het: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// Final seed offset and the change in η_Het from the last halving.
    pub seed: f64,
    pub seed_sensitivity: f64,
}

/// Sign-valued gap: the Σ-difference when both manifolds reach Σ, and the
/// sign opposite to the deep end when the centre manifold misses.
fn signed_gap(side: Side, g: &GammaVector, mu1: f64, e: f64, seed: f64, cfg: &ShootConfig, miss_sign: f64) -> Result<f64> {
    let s = shoot(side, g, mu1, e, seed, cfg, false)?;
    Ok(s.gap().unwrap_or(miss_sign * f64::MAX))
}

fn shoot_e(side: Side, g: &GammaVector, mu1: f64, seed: f64, cfg: &ShootConfig) -> Result<(f64, (f64, f64), usize)> {
    let sgn = if side == Side::L { -1.0 } else { 1.0 };
    let mut deep = sgn * cfg.deep;
    let mut near = sgn * cfg.near;
    let mut evals = 0usize;
    let mut deep_gap = None;
    for _ in 0..6 {
        evals += 1;
        if let Some(v) = shoot(side, g, mu1, deep, seed, cfg, false)?.gap() {
            deep_gap = Some(v);
            break;
        }
        deep *= 2.0;
    }
    let dg = deep_gap.ok_or_else(|| Error::NoSignChange("manifolds never reach the section at the deep end".into()))?;
    let miss = -dg.signum();
    let mut ng = signed_gap(side, g, mu1, near, seed, cfg, miss)?;
    evals += 1;
    let mut tries = 0;
    while ng.signum() == dg.signum() {
        tries += 1;
        if tries > 6 {
            return Err(Error::NoSignChange(format!("gap keeps sign {} on [{deep}, {near}]", dg.signum())));
        }
        near *= 0.5;
        ng = signed_gap(side, g, mu1, near, seed, cfg, miss)?;
        evals += 1;
    }
    let mut n = 0usize;
    let root = bisect(
        |e| {
            n += 1;
            signed_gap(side, g, mu1, e, seed, cfg, miss)
        },
        deep,
        near,
        cfg.tol,
    )?;
    Ok((root, (deep, near), evals + n))
}

/// η_Het^{L/R}(μ₁) by bisection on the Σ-gap between the unstable manifold of
/// q_w and the centre manifold of q_r.
pub fn shoot_heteroclinic(side: Side, mu1: f64, g: &GammaVector, cfg: &ShootConfig) -> Result<HetResult> {
    refined(side, mu1, g, cfg, |seed| shoot_e(side, g, mu1, seed, cfg))
}

/// Right-side value through the left-sphere pipeline on the dual parameters.
pub fn shoot_heteroclinic_dual(mu1: f64, g: &GammaVector, cfg: &ShootConfig) -> Result<HetResult> {
    let gd = dual_gamma(g);
    refined(Side::R, mu1, g, cfg, |seed| shoot_e(Side::L, &gd, 0.0, seed, cfg).map(|(e, br, n)| (-e, (-br.0, -br.1), n)))
}

/// Halvings of the seed offset allowed when the result is seed-sensitive.
const MAX_REFINE: usize = 3;

fn refined(
    side: Side,
    mu1: f64,
    g: &GammaVector,
    cfg: &ShootConfig,
    run: impl Fn(f64) -> Result<(f64, (f64, f64), usize)>,
) -> Result<HetResult> {
    if !(cfg.tol > 0.0) || !(cfg.seed > 0.0) {
        return Err(Error::InvalidParams("shooting tolerance and seed must be positive".into()));
    }
    let mut seed = cfg.seed;
    let (mut e, mut br, mut n) = run(seed)?;
    let mut sens = f64::NAN;
    for _ in 0..MAX_REFINE {
        let (e2, br2, n2) = run(0.5 * seed)?;
        sens = (e2 - e).abs();
        n += n2;
        seed *= 0.5;
        (e, br) = (e2, br2);
        if sens <= cfg.tol {
            break;
        }
    }
    let base = side.eta1_boundary(g, mu1);
    Ok(HetResult {
        side,
        mu1,
        eta_het: base + e,
        e_het: e,
        bracket: (base + br.0, base + br.1),
        evaluations: n,
        seed,
        seed_sensitivity: sens,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HetCurve {
    pub mu1_grid: Vec<f64>,
    pub eta_l_het: Vec<f64>,
    pub eta_r_het: Vec<f64>,
    pub eta_het0_l: f64,
    pub eta_het0_r: f64,
    pub slope_l: f64,
    pub slope_r: f64,
    pub mu1_star: f64,
}

impl HetCurve {
    /// Affine fits through sampled heteroclinic values.
    pub fn from_samples(mu1_grid: Vec<f64>, eta_l_het: Vec<f64>, eta_r_het: Vec<f64>) -> Result<Self> {
        let n = mu1_grid.len();
        if n < 2 || eta_l_het.len() != n || eta_r_het.len() != n {
            return Err(Error::InvalidParams("het curve needs ≥ 2 aligned samples".into()));
        }
        if mu1_grid.windows(2).any(|w| !(w[1] > w[0])) || mu1_grid[0] < 0.0 {
            return Err(Error::InvalidParams("mu1 grid must be sorted, distinct and ≥ 0".into()));
        }
        let (l0, sl) = line_fit(&mu1_grid, &eta_l_het);
        let (r0, sr) = line_fit(&mu1_grid, &eta_r_het);
        Ok(HetCurve {
            mu1_grid,
            eta_l_het,
            eta_r_het,
            eta_het0_l: l0,
            eta_het0_r: r0,
            slope_l: sl,
            slope_r: sr,
            mu1_star: (r0 - l0) / (sl - sr),
        })
    }

    pub fn eta_l_at(&self, mu1: f64) -> f64 {
        self.eta_het0_l + self.slope_l * mu1
    }

    pub fn eta_r_at(&self, mu1: f64) -> f64 {
        self.eta_het0_r + self.slope_r * mu1
    }

    pub fn covers(&self, mu1: f64) -> bool {
        let (a, b) = (self.mu1_grid[0], *self.mu1_grid.last().unwrap());
        mu1 >= a - 1e-12 && mu1 <= b + 1e-12
    }
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

pub fn build_het_curve(g: &GammaVector, mu1_max: f64, n: usize, cfg: &ShootConfig) -> Result<HetCurve> {
    if n < 2 || !(mu1_max > 0.0) {
        return Err(Error::InvalidParams("het curve needs n ≥ 2 and mu1_max > 0".into()));
    }
    let grid: Vec<f64> = (0..n).map(|i| mu1_max * i as f64 / (n - 1) as f64).collect();
    let jobs: Vec<(Side, f64)> = grid.iter().flat_map(|&m| [(Side::L, m), (Side::R, m)]).collect();
    let res: Vec<Result<HetResult>> = jobs.par_iter().map(|&(s, m)| shoot_heteroclinic(s, m, g, cfg)).collect();
    let mut l = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for (res, (side, _)) in res.into_iter().zip(&jobs) {
        let h = res?;
        if *side == Side::L {
            l.push(h.eta_het);
        } else {
            r.push(h.eta_het);
        }
    }
    HetCurve::from_samples(grid, l, r)
}

/// Heteroclinic orbit in chart ȳ = −1, ordered from q_w to q_r; `anchor` is
/// the sample on Σ.
#[derive(Clone, Debug)]
pub struct HetOrbit {
    pub pts: Vec<[f64; 2]>,
    pub anchor: usize,
    pub e: f64,
}

/// Left-sphere connection at the converged offset.
pub fn het_orbit(g: &GammaVector, e: f64, cfg: &ShootConfig) -> Result<HetOrbit> {
    let s = shoot(Side::L, g, 0.0, e, cfg.seed, cfg, true)?;
    if s.gap().is_none() {
        return Err(Error::NoConvergence("manifolds do not both reach the section".into()));
    }
    let mut pts = s.u.pts.clone();
    let anchor = pts.len() - 1;
    pts.extend(s.c.pts.iter().rev().skip(1));
    Ok(HetOrbit { pts, anchor, e })
}

#[derive(Clone, Debug, Serialize)]
pub struct MelnikovResult {
    pub integral: f64,
    pub integral_sign: i32,
    pub integrand_sign_uniform: bool,
    pub samples: usize,
}

/// Quadrature of exp(−∫div X̂₄)·(X̂₄ ∧ ∂_η X̂₄) along a left connection.
pub fn melnikov_check(orbit: &HetOrbit, g: &GammaVector) -> Result<MelnikovResult> {
    let c4 = ChartId { stage: Stage::SphereL, name: ChartName::YbarNeg1 };
    let h = 1e-6;
    let sys = system(Side::L, g, 0.0, orbit.e);
    let sp = system(Side::L, g, 0.0, orbit.e + h);
    let sm = system(Side::L, g, 0.0, orbit.e - h);
    let (f, fp, fm) = (planar_field(c4, &sys), planar_field(c4, &sp), planar_field(c4, &sm));
    let n = orbit.pts.len();
    if n < 3 {
        return Err(Error::NonMonotone("orbit has too few samples".into()));
    }
    let mut x = Vec::with_capacity(n);
    let mut wedge = Vec::with_capacity(n);
    let mut div = Vec::with_capacity(n);
    for p in &orbit.pts {
        let v = f(p);
        if !(v[0] < 0.0 && v[1] > 0.0) {
            return Err(Error::NonMonotone(format!("r₄' = {:e}, δ₄' = {:e} at {p:?}", v[0], v[1])));
        }
        let (a, b) = (fp(p), fm(p));
        let dv = [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)];
        wedge.push(-v[1] * dv[0] + v[0] * dv[1]);
        div.push(trace(&jacobian_fd(&f, p, 1e-7)));
        x.push(v);
    }
    // time increments from the chord length over the mean speed
    let mut t = vec![0.0; n];
    for i in 1..n {
        let ds = ((orbit.pts[i][0] - orbit.pts[i - 1][0]).powi(2) + (orbit.pts[i][1] - orbit.pts[i - 1][1]).powi(2)).sqrt();
        let sp = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
        t[i] = t[i - 1] + ds * 0.5 * (1.0 / sp(x[i]) + 1.0 / sp(x[i - 1]));
    }
    let mut w = vec![0.0; n];
    for i in 1..n {
        w[i] = w[i - 1] + 0.5 * (div[i] + div[i - 1]) * (t[i] - t[i - 1]);
    }
    let w0 = w[orbit.anchor];
    let integrand: Vec<f64> = (0..n).map(|i| (-(w[i] - w0)).clamp(-700.0, 700.0).exp() * wedge[i]).collect();
    let m: f64 = (1..n).map(|i| 0.5 * (integrand[i] + integrand[i - 1]) * (t[i] - t[i - 1])).sum();
    let uniform = integrand.iter().all(|v| *v < 0.0) || integrand.iter().all(|v| *v > 0.0);
    Ok(MelnikovResult {
        integral: m,
        integral_sign: if m < 0.0 { -1 } else if m > 0.0 { 1 } else { 0 },
        integrand_sign_uniform: uniform,
        samples: n,
    })
}

/// δ₄,₀ = (α²/(βφ^L(0)))^{1/(k(k+1))}, the δ₄-value of q_r in chart ȳ = −1.
pub fn delta40(g: &GammaVector) -> f64 {
    (g.alpha * g.alpha / (g.beta * g.phi_l0)).powf(1.0 / (g.k * (g.k + 1)) as f64)
}

fn f4(g: &GammaVector, d: f64) -> f64 {
    g.alpha - g.beta / g.alpha * d.powi((g.k * (g.k + 1)) as i32) * g.phi_l0
}

/// The nontrivial r₄-nullcline r₄ = N(δ₄) on [0, δ₄,₀] at offset e < 0.
pub fn r4_nullcline(g: &GammaVector, e: f64, d: f64) -> Result<f64> {
    let k = g.k as i32;
    let rhs = f4(g, d);
    let h = |r: f64| r.powi(k + 1) * (1.0 - rhs - r.powi(k) * d.powi(k) * e) - rhs;
    let mut hi = 1.0;
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    brent(h, 0.0, hi, 1e-14)
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldReport {
    pub count: usize,
    pub locations: Vec<f64>,
    /// Height of the fold function's maximum minus the level c(k, η).
    pub margin: f64,
    pub topology: char,
}

/// Fold points of the δ₄-nullcline: solutions on (0, δ₄,₀] of
/// δ^{k+1} F/(1 + F/k)^{(2k+1)/k} = c(k, η).
pub fn nullcline_folds(e: f64, g: &GammaVector) -> Result<FoldReport> {
    if !(e < 0.0) {
        return Err(Error::Domain("fold analysis needs η₁ < η₁^L(μ₁)".into()));
    }
    let k = g.k as f64;
    let c = k / ((-e).powf((k + 1.0) / k) * (2.0 * k + 1.0)) * (k * (k + 1.0) / (2.0 * k + 1.0)).powf((k + 1.0) / k);
    let d0 = delta40(g);
    let gfun = |d: f64| {
        let f = f4(g, d);
        d.powf(k + 1.0) * f / (1.0 + f / k).powf((2.0 * k + 1.0) / k)
    };
    // single interior maximum: golden section
    let (mut a, mut b) = (0.0, d0);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-13 * d0 {
        let (x1, x2) = (b - gr * (b - a), a + gr * (b - a));
        if gfun(x1) < gfun(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let dm = 0.5 * (a + b);
    let margin = gfun(dm) - c;
    let (count, locations) = if margin.abs() < 1e-12 * c {
        (1, vec![dm])
    } else if margin < 0.0 {
        (0, vec![])
    } else {
        let l = brent(|d| gfun(d) - c, 0.0, dm, 1e-14)?;
        let r = brent(|d| gfun(d) - c, dm, d0, 1e-14)?;
        (2, vec![l, r])
    };
    Ok(FoldReport { count, locations, margin, topology: b"abc"[count] as char })
}
