//! η-sweeps of the full system and the regime classification that links the
//! sphere heteroclinics to relaxation oscillations at small ε.

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::scale_params;
use crate::error::{Error, Result};
use crate::model::{full_field, BlendedPws, GammaVector, ModelParams, Sigmoid};
use crate::numerics::curves::polyline_distance;
use crate::numerics::cycles::{find_limit_cycle, CycleConfig, CycleStability, LimitCycle, Section};
use crate::numerics::equilibria::{EqType, EquilibriumInfo};
use crate::numerics::linalg::{det2, trace};
use crate::numerics::ode::{Record, Solver};
use crate::numerics::roots::brent;
use crate::pws::{build_singular_cycle, crossing_cycle};
use crate::sphere::HetCurve;

/// x-range scanned for equilibria; every equilibrium has 0 < x < η/α·(α+β).
const X_SCAN: usize = 4000;

/// Equilibria of the full system are parametrised by x:
/// y = x/(α+βφ), η = (μ+α+βφ)·y.
fn eq_eta(p: &ModelParams, spec: &Sigmoid, x: f64) -> f64 {
    let phi = spec.value((x - 1.0) / p.eps).unwrap_or(f64::NAN);
    (p.mu + p.alpha + p.beta * phi) * x / (p.alpha + p.beta * phi)
}

fn eq_point(p: &ModelParams, spec: &Sigmoid, x: f64) -> [f64; 2] {
    let phi = spec.value((x - 1.0) / p.eps).unwrap_or(f64::NAN);
    [x, x / (p.alpha + p.beta * phi)]
}

/// All equilibria of the full system at `p`, sorted by x.
pub fn equilibria(p: &ModelParams, spec: &Sigmoid) -> Result<Vec<EquilibriumInfo>> {
    if !(p.eps > 0.0) {
        return Err(Error::InvalidParams("equilibrium search needs eps > 0".into()));
    }
    let h = |x: f64| eq_eta(p, spec, x) - p.eta;
    // the x-range containing every root: η(x) is bracketed by x·(μ+α)/α and x·(μ+α+β)/(α+β)
    let lo = (p.eta / ((p.mu + p.alpha) / p.alpha).max((p.mu + p.alpha + p.beta) / (p.alpha + p.beta))).min(1.0) * 0.5;
    let hi = (p.eta / ((p.mu + p.alpha) / p.alpha).min((p.mu + p.alpha + p.beta) / (p.alpha + p.beta))).abs().max(1.0) * 2.0;
    // refine the grid near x = 1 where φ varies on the ε-scale
    let mut xs: Vec<f64> = (0..=X_SCAN).map(|i| lo + (hi - lo) * i as f64 / X_SCAN as f64).collect();
    xs.extend((0..=X_SCAN).map(|i| 1.0 + p.eps * 60.0 * (2.0 * i as f64 / X_SCAN as f64 - 1.0)));
    xs.retain(|x| *x > lo && *x < hi);
    xs.sort_by(f64::total_cmp);
    let f = full_field(p, spec);
    let mut out = Vec::new();
    for w in xs.windows(2) {
        let (a, b) = (h(w[0]), h(w[1]));
        if a == 0.0 || a * b < 0.0 {
            let x = if a == 0.0 { w[0] } else { brent(h, w[0], w[1], 1e-15)? };
            out.push(EquilibriumInfo::at(&f, eq_point(p, spec, x)));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HopfOnBranch {
    pub eta: f64,
    pub x: f64,
    pub y: f64,
    /// Trace of the Jacobian at the refined point.
    pub trace: f64,
}

/// Hopf points: trace zeros with positive determinant along the equilibrium
/// curve, parametrised by x over the η-window.
pub fn hopf_points(p: &ModelParams, spec: &Sigmoid, eta_range: (f64, f64), n: usize) -> Result<Vec<HopfOnBranch>> {
    let tr_det = |x: f64| {
        let q = p.with_eta(eq_eta(p, spec, x));
        let f = full_field(&q, spec);
        let e = EquilibriumInfo::at(&f, eq_point(&q, spec, x));
        (trace(&e.jacobian), det2(&e.jacobian))
    };
    // x-window covering the equilibria at every sampled η
    let mut xs: Vec<f64> = Vec::new();
    for i in 0..n {
        let eta = eta_range.0 + (eta_range.1 - eta_range.0) * i as f64 / (n - 1).max(1) as f64;
        for e in equilibria(&p.with_eta(eta), spec)? {
            xs.push(e.location[0]);
        }
    }
    if xs.is_empty() {
        return Ok(vec![]);
    }
    xs.sort_by(f64::total_cmp);
    let mut grid = Vec::new();
    for w in xs.windows(2) {
        grid.push(w[0]);
        // close gaps so that no trace zero is skipped
        let m = ((w[1] - w[0]) / (0.05 * p.eps)).ceil() as usize;
        for j in 1..m {
            grid.push(w[0] + (w[1] - w[0]) * j as f64 / m as f64);
        }
    }
    grid.push(*xs.last().unwrap());
    let mut out: Vec<HopfOnBranch> = Vec::new();
    let mut prev = tr_det(grid[0]);
    for w in grid.windows(2) {
        let cur = tr_det(w[1]);
        if prev.0 * cur.0 < 0.0 {
            let x = brent(|x| tr_det(x).0, w[0], w[1], 1e-14)?;
            let (tr, det) = tr_det(x);
            let eta = eq_eta(p, spec, x);
            if det > 0.0 && eta >= eta_range.0 && eta <= eta_range.1 {
                let y = eq_point(p, spec, x)[1];
                out.push(HopfOnBranch { eta, x, y, trace: tr });
            }
        }
        prev = cur;
    }
    out.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    Ok(out)
}

/// Transient length (slow time) before a cycle search starts.
pub const TRANSIENT: f64 = 200.0;

/// Settles the orbit of `state`, then locates the periodic orbit it
/// approaches on a short section transverse to the flow. `Ok(None)` when the
/// orbit settles on an equilibrium instead.
pub fn cycle_from_state<F>(f: &F, state: [f64; 2], cfg: &CycleConfig) -> Result<Option<LimitCycle>>
where
    F: Fn(&[f64; 2]) -> [f64; 2] + Sync,
{
    let sign = if cfg.reverse { -1.0 } else { 1.0 };
    let g = |s: &[f64; 2]| {
        let v = f(s);
        [sign * v[0], sign * v[1]]
    };
    let tr = Solver::new(&g, cfg.integrator).record(Record::Endpoints).run(state, 0.0, TRANSIENT)?;
    let end = tr.end().1;
    let v = f(&end);
    let speed = v[0].hypot(v[1]);
    if speed < 1e-6 {
        return Ok(None);
    }
    let mut sec = Section::new(end, v);
    sec.range = (-0.5, 0.5);
    match find_limit_cycle(f, end, &sec, cfg) {
        Ok(c) => Ok(Some(c)),
        Err(Error::NoReturn(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EqSample {
    pub x: f64,
    pub y: f64,
    pub classification: EqType,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleSummary {
    pub max_x: f64,
    pub l2_norm: f64,
    pub period: f64,
    pub multiplier: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BifurcationDiagram {
    pub eta_grid: Vec<f64>,
    pub equilibrium_branch: Vec<Vec<EqSample>>,
    pub hopf_points: Vec<HopfOnBranch>,
    pub cycle_branch: Vec<Option<CycleSummary>>,
    /// Grid values where the cycle search failed numerically.
    pub warnings: Vec<(f64, String)>,
}

impl BifurcationDiagram {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "eta,eq_x,eq_y,stability,cycle_max_x,cycle_l2")?;
        for (i, eta) in self.eta_grid.iter().enumerate() {
            let (cm, cl) = match &self.cycle_branch[i] {
                Some(c) => (format!("{:.16e}", c.max_x), format!("{:.16e}", c.l2_norm)),
                None => (String::new(), String::new()),
            };
            for e in &self.equilibrium_branch[i] {
                let st = serde_json::to_value(e.classification).unwrap();
                writeln!(w, "{eta:.16e},{:.16e},{:.16e},{},{cm},{cl}", e.x, e.y, st.as_str().unwrap())?;
            }
        }
        Ok(())
    }
}

pub fn sweep_eta(p_base: &ModelParams, spec: &Sigmoid, eta_range: (f64, f64), n: usize, with_cycles: bool) -> Result<BifurcationDiagram> {
    if n < 10 {
        return Err(Error::InvalidParams("sweep needs n ≥ 10".into()));
    }
    p_base.validate()?;
    let eta_grid: Vec<f64> = (0..n).map(|i| eta_range.0 + (eta_range.1 - eta_range.0) * i as f64 / (n - 1) as f64).collect();
    let hopf = hopf_points(p_base, spec, eta_range, n)?;
    let cfg = CycleConfig::default();
    let per: Vec<Result<(Vec<EqSample>, std::result::Result<Option<CycleSummary>, String>)>> = eta_grid
        .par_iter()
        .map(|&eta| {
            let p = p_base.with_eta(eta);
            let eqs = equilibria(&p, spec)?;
            let samples =
                eqs.iter().map(|e| EqSample { x: e.location[0], y: e.location[1], classification: e.classification }).collect();
            if !with_cycles || eqs.iter().any(|e| e.classification.is_stable()) && eqs.len() == 1 {
                return Ok((samples, Ok(None)));
            }
            let f = full_field(&p, spec);
            // start left of the leftmost equilibrium, on the slow branch of the cycle
            let start = [eqs.first().map_or(1.0, |e| e.location[0]) - 0.3, eqs[0].location[1]];
            let cyc = match cycle_from_state(&f, start, &cfg) {
                Ok(Some(c)) if c.stability == CycleStability::Attracting => Ok(Some(CycleSummary {
                    max_x: c.max_x,
                    l2_norm: c.l2_norm,
                    period: c.period,
                    multiplier: c.multiplier,
                })),
                Ok(_) => Ok(None),
                Err(e) => Err(e.to_string()),
            };
            Ok((samples, cyc))
        })
        .collect();
    let mut equilibrium_branch = Vec::with_capacity(n);
    let mut cycle_branch = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for (eta, r) in eta_grid.iter().zip(per) {
        let (s, c) = r?;
        equilibrium_branch.push(s);
        match c {
            Ok(c) => cycle_branch.push(c),
            Err(msg) => {
                warnings.push((*eta, msg));
                cycle_branch.push(None);
            }
        }
    }
    Ok(BifurcationDiagram { eta_grid, equilibrium_branch, hopf_points: hopf, cycle_branch, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    RelaxationExists,
    NoneNearGamma0,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeVerdict {
    pub eps: f64,
    pub mu1: f64,
    pub eta1: f64,
    pub gamma: GammaVector,
    pub predicted: Regime,
    pub observed: Regime,
    pub agree: bool,
    pub inconclusive: bool,
    /// Hausdorff distance of the attracting cycle found to Γ₀, if any.
    pub distance: Option<f64>,
}

/// Smallest tube radius around Γ₀ that counts as "near".
pub const NEAR_GAMMA0: f64 = 0.1;

/// Tube radius at ε: the relaxation cycle itself sits O(ε^{1/(k+1)}) away
/// from Γ₀ (about 2.6·√ε for k = 1), so a fixed radius would reject it at
/// moderate ε.
pub fn near_radius(eps: f64, k: u32) -> f64 {
    NEAR_GAMMA0.max(4.0 * eps.powf(1.0 / (k as f64 + 1.0)))
}

#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    /// Half-width, in scaled units, of the band around η_Het^{L/R}(μ₁) and
    /// μ₁* inside which the verdict is inconclusive at finite ε.
    pub margin: f64,
    /// Tube radius; `None` uses [`near_radius`].
    pub near: Option<f64>,
    pub cycle: CycleConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { margin: 0.1, near: None, cycle: CycleConfig::default() }
    }
}

/// Prediction from the heteroclinic curves against a cycle search seeded on Γ₀.
pub fn classify_regime(
    eps: f64,
    mu1: f64,
    eta1: f64,
    spec: &Sigmoid,
    g: &GammaVector,
    het: &HetCurve,
    cfg: &ClassifyConfig,
) -> Result<RegimeVerdict> {
    if !het.covers(mu1) {
        return Err(Error::InvalidParams(format!("heteroclinic curve does not cover mu1 = {mu1}")));
    }
    let (el, er) = (het.eta_l_at(mu1), het.eta_r_at(mu1));
    let predicted = if mu1 < het.mu1_star && eta1 > el && eta1 < er { Regime::RelaxationExists } else { Regime::NoneNearGamma0 };
    let inconclusive = (eta1 - el).abs() < cfg.margin || (eta1 - er).abs() < cfg.margin || (mu1 - het.mu1_star).abs() < cfg.margin;
    let (_, mu, eta) = scale_params(eps, mu1, eta1, g.k)?;
    let p = ModelParams::new(g.alpha, g.beta, eta, mu, eps)?;
    let g0 = build_singular_cycle(&ModelParams::new(g.alpha, g.beta, 1.0, 0.0, 0.0)?)?.polyline();
    let f = full_field(&p, spec);
    // seed at the leftmost point of Γ₀
    let seed = *g0.iter().min_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
    let distance = match cycle_from_state(&f, seed, &cfg.cycle)? {
        Some(c) if c.stability == CycleStability::Attracting => Some(polyline_distance(&c.samples, &g0)),
        _ => None,
    };
    let observed = match distance {
        Some(d) if d < cfg.near.unwrap_or_else(|| near_radius(eps, g.k)) => Regime::RelaxationExists,
        _ => Regime::NoneNearGamma0,
    };
    Ok(RegimeVerdict {
        eps,
        mu1,
        eta1,
        gamma: *g,
        predicted,
        observed,
        agree: predicted == observed,
        inconclusive,
        distance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioSample {
    pub eps: f64,
    pub cycle: Option<CycleSummary>,
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub samples: Vec<ScenarioSample>,
    /// Slope of the right orbit at its return to x = 1 (nonzero: regular crossing).
    pub crossing_speed: f64,
    pub all_attracting: bool,
    pub distance_shrinks: bool,
}

/// μ < 0: the blended system near the crossing singular cycle.
pub fn mu_negative_scenario(p: &ModelParams, spec: &Sigmoid, eps_list: &[f64], cfg: &CycleConfig) -> Result<ScenarioReport> {
    if !(p.mu < 0.0) {
        return Err(Error::InvalidParams("scenario needs mu < 0".into()));
    }
    let p0 = ModelParams { eps: 0.0, ..*p };
    let sc = crossing_cycle(&p0)?;
    let gamma0 = sc.polyline();
    // the right arc starts at p^L-side crossing and returns to x = 1 at q^R
    let (_, r) = crate::pws::pws_fields(&p0);
    let q = *sc.gamma_r.pts.last().unwrap();
    let crossing_speed = r.eval(&q)[0];
    let seed = *gamma0.iter().min_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
    let mut samples = Vec::new();
    for &eps in eps_list {
        let pe = p.with_eps(eps);
        let b = BlendedPws::substrate_depletion(&pe, spec.clone())?;
        let f = b.field();
        let c = cycle_from_state(&f, seed, cfg)?.filter(|c| c.stability == CycleStability::Attracting);
        samples.push(ScenarioSample {
            eps,
            distance: c.as_ref().map(|c| polyline_distance(&c.samples, &gamma0)),
            cycle: c.map(|c| CycleSummary { max_x: c.max_x, l2_norm: c.l2_norm, period: c.period, multiplier: c.multiplier }),
        });
    }
    let all_attracting = samples.iter().all(|s| s.cycle.is_some());
    let d: Vec<f64> = samples.iter().filter_map(|s| s.distance).collect();
    let distance_shrinks = all_attracting && d.windows(2).all(|w| w[1] < w[0]);
    Ok(ScenarioReport { samples, crossing_speed, all_attracting, distance_shrinks })
}

/// Every periodic orbit found from the standard seeds: attracting cycles from
/// points 0.3 to either side of each equilibrium, repelling ones (when
/// `reverse`) by time reversal from just beside each stable focus.
#[derive(Clone, Debug, Serialize)]
pub struct CycleCensus {
    pub equilibria: Vec<EqSample>,
    pub attracting: Vec<LimitCycle>,
    pub repelling: Vec<LimitCycle>,
}

fn same_cycle(a: &LimitCycle, b: &LimitCycle) -> bool {
    (a.period - b.period).abs() < 1e-4 * a.period && (a.max_x - b.max_x).abs() < 1e-5 && (a.min_x - b.min_x).abs() < 1e-5
}

fn push_new(v: &mut Vec<LimitCycle>, c: LimitCycle) {
    if !v.iter().any(|d| same_cycle(d, &c)) {
        v.push(c);
    }
}

pub fn cycle_census(p: &ModelParams, spec: &Sigmoid, reverse: bool, cfg: &CycleConfig) -> Result<CycleCensus> {
    let eqs = equilibria(p, spec)?;
    let f = full_field(p, spec);
    let fwd = CycleConfig { reverse: false, ..cfg.clone() };
    let seeds: Vec<[f64; 2]> =
        eqs.iter().flat_map(|e| [[e.location[0] - 0.3, e.location[1]], [e.location[0] + 0.3, e.location[1]]]).collect();
    let found: Vec<Option<LimitCycle>> = seeds.par_iter().map(|&s| cycle_from_state(&f, s, &fwd)).collect::<Result<_>>()?;
    let mut attracting = Vec::new();
    for c in found.into_iter().flatten().filter(|c| c.stability == CycleStability::Attracting) {
        push_new(&mut attracting, c);
    }
    let mut repelling = Vec::new();
    if reverse {
        let bwd = CycleConfig { reverse: true, ..cfg.clone() };
        for e in eqs.iter().filter(|e| e.classification == EqType::StableFocus) {
            let z = e.location;
            match find_limit_cycle(&f, [z[0] + 0.01, z[1]], &Section::ray(z, [1.0, 0.0]), &bwd) {
                Ok(c) if c.stability == CycleStability::Repelling => push_new(&mut repelling, c),
                Ok(_) | Err(Error::NoReturn(_)) | Err(Error::NoConvergence(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let equilibria =
        eqs.iter().map(|e| EqSample { x: e.location[0], y: e.location[1], classification: e.classification }).collect();
    Ok(CycleCensus { equilibria, attracting, repelling })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub samples: Vec<ScenarioSample>,
    pub distance_shrinks: bool,
    pub period_grows: bool,
}

/// μ = 0, η = 1: the attracting cycle at each ε against the singular cycle Γ₀.
pub fn relaxation_convergence(p: &ModelParams, spec: &Sigmoid, eps_list: &[f64], cfg: &CycleConfig) -> Result<ConvergenceReport> {
    let g0 = build_singular_cycle(&ModelParams { eps: 0.0, ..*p })?.polyline();
    let seed = *g0.iter().min_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
    let samples: Vec<ScenarioSample> = eps_list
        .iter()
        .map(|&eps| {
            let pe = p.with_eps(eps);
            let f = full_field(&pe, spec);
            let c = cycle_from_state(&f, seed, cfg)?.filter(|c| c.stability == CycleStability::Attracting);
            Ok(ScenarioSample {
                eps,
                distance: c.as_ref().map(|c| polyline_distance(&c.samples, &g0)),
                cycle: c.map(|c| CycleSummary { max_x: c.max_x, l2_norm: c.l2_norm, period: c.period, multiplier: c.multiplier }),
            })
        })
        .collect::<Result<_>>()?;
    let found = samples.iter().all(|s| s.cycle.is_some());
    let d: Vec<f64> = samples.iter().filter_map(|s| s.distance).collect();
    let t: Vec<f64> = samples.iter().filter_map(|s| s.cycle.as_ref().map(|c| c.period)).collect();
    Ok(ConvergenceReport {
        distance_shrinks: found && d.windows(2).all(|w| w[1] < w[0]),
        period_grows: found && t.windows(2).all(|w| w[1] > w[0]),
        samples,
    })
}
