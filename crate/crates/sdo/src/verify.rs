//! Self-checks of the blow-up machinery on random interior samples: chart
//! round trips, the sphere cocycle, and pushforward consistency of every
//! desingularised chart field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blowup::{
    chart_change, cylinder1_to_global, cylinder2_to_global, cylinder_to_sphere, global_to_cylinder, sphere_to_cylinder,
    ChartId, ChartName, ChartPoint, Stage,
};
use crate::charts::{interior_point, pushforward_consistency, ScaledSystem};
use crate::error::{Error, Result};
use crate::model::{GammaVector, Sigmoid};

#[derive(Clone, Debug, Serialize)]
pub struct ChartReport {
    pub chart: String,
    pub samples: usize,
    pub pushforward_max: f64,
    /// Largest relative error of parent coordinates → chart → parent.
    pub roundtrip_max: f64,
    /// Largest relative error of chart → sibling chart → chart, over every
    /// sibling whose domain contains the sample.
    pub change_max: f64,
    pub roundtrip_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub k: u32,
    pub charts: Vec<ChartReport>,
    pub cocycle_max: f64,
    pub cocycle_samples: usize,
}

impl GeometryReport {
    pub fn pushforward_max(&self) -> f64 {
        self.charts.iter().map(|c| c.pushforward_max).fold(0.0, f64::max)
    }

    pub fn roundtrip_max(&self) -> f64 {
        self.charts.iter().map(|c| c.roundtrip_max).fold(0.0, f64::max)
    }

    pub fn change_max(&self) -> f64 {
        self.charts.iter().map(|c| c.change_max).fold(0.0, f64::max)
    }
}

/// The regularisation used for decay order k: arctan for k = 1, the
/// algebraic sigmoid for k = 2.
pub fn sigmoid_for_k(k: u32) -> Result<Sigmoid> {
    match k {
        1 => Ok(Sigmoid::arctan()),
        2 => Ok(Sigmoid::algebraic()),
        _ => Err(Error::UnsupportedSpec(format!("no built-in sigmoid with tail order k = {k}"))),
    }
}

fn rel_err(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs() / a[i].abs().max(1.0)).fold(0.0, f64::max)
}

fn to_parent(cp: &ChartPoint, g: &GammaVector) -> Result<[f64; 3]> {
    match cp.chart.stage {
        Stage::Cylinder1 => cylinder1_to_global(cp),
        Stage::Cylinder2 => cylinder2_to_global(cp),
        _ => sphere_to_cylinder(cp, g.alpha, g.beta).map(|c| c.coords),
    }
}

fn from_parent(chart: ChartId, v: [f64; 3], k: u32, g: &GammaVector) -> Result<ChartPoint> {
    match chart.stage {
        Stage::Cylinder1 | Stage::Cylinder2 => global_to_cylinder(chart, v, k),
        _ => cylinder_to_sphere(&ChartPoint::new(chart.parent_cylinder().unwrap(), v, k)?, chart, g.alpha, g.beta),
    }
}

/// `n_push` pushforward samples and `n_round` round-trip samples per chart,
/// `n_round` cocycle samples per sphere.
pub fn verify_geometry(k: u32, n_push: usize, n_round: usize, seed: u64) -> Result<GeometryReport> {
    let sig = sigmoid_for_k(k)?;
    let g = GammaVector::from_model(&crate::model::ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.0)?, &sig)?;
    let sys2 = ScaledSystem::with_sigmoid(g, 0.3, 0.2, sig.clone())?;
    // Cylinder1 charts read (η, μ) from the same slots
    let sys1 = ScaledSystem::with_sigmoid(g, 1.02, 0.05, sig.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || -> [f64; 3] { [rng.gen(), rng.gen(), rng.gen()] };
    let mut charts = Vec::new();
    for chart in ChartId::all() {
        let sys = if chart.stage == Stage::Cylinder1 { &sys1 } else { &sys2 };
        let mut push = 0.0f64;
        for _ in 0..n_push {
            let cp = interior_point(chart, u(), k)?;
            push = push.max(pushforward_consistency(&cp, sys, &sig)?);
        }
        let siblings: Vec<ChartId> = ChartId::all().into_iter().filter(|c| c.stage == chart.stage && *c != chart).collect();
        let (mut rt, mut ch, mut m) = (0.0f64, 0.0f64, 0usize);
        for _ in 0..n_round {
            let cp = interior_point(chart, u(), k)?;
            // parent → chart → parent, starting from a parent point inside the chart
            let v = to_parent(&cp, &g)?;
            let back = to_parent(&from_parent(chart, v, k, &g)?, &g)?;
            rt = rt.max(rel_err(&v, &back));
            m += 1;
            for &t in &siblings {
                let there = match chart_change(&cp, t, g.alpha, g.beta) {
                    Ok(p) => p,
                    Err(Error::OutOfOverlap(_)) => continue,
                    Err(e) => return Err(e),
                };
                let back = chart_change(&there, chart, g.alpha, g.beta)?;
                ch = ch.max(rel_err(&cp.coords, &back.coords));
            }
        }
        charts.push(ChartReport {
            chart: chart.to_string(),
            samples: n_push,
            pushforward_max: push,
            roundtrip_max: rt,
            change_max: ch,
            roundtrip_samples: m,
        });
    }
    let mut cocycle = 0.0f64;
    let mut nc = 0;
    for stage in [Stage::SphereL, Stage::SphereR] {
        let c1 = ChartId::new(stage, ChartName::Rbar1)?;
        let c2 = ChartId::new(stage, ChartName::Deltabar1)?;
        let c4 = ChartId::new(stage, ChartName::YbarNeg1)?;
        for _ in 0..n_round {
            let v = u();
            let p = ChartPoint::new(c1, [0.2 + 0.6 * v[0], -1.5 + 1.45 * v[1], 0.2 + 0.6 * v[2]], k)?;
            let direct = chart_change(&p, c4, g.alpha, g.beta)?;
            let via = chart_change(&chart_change(&p, c2, g.alpha, g.beta)?, c4, g.alpha, g.beta)?;
            cocycle = cocycle.max(rel_err(&direct.coords, &via.coords));
            nc += 1;
        }
    }
    Ok(GeometryReport { k, charts, cocycle_max: cocycle, cocycle_samples: nc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_geometry_suite() {
        for k in [1, 2] {
            let r = verify_geometry(k, 5, 5, 1).unwrap();
            assert_eq!(r.charts.len(), 14);
            assert!(r.pushforward_max() < 1e-8, "k={k}: {r:#?}");
            assert!(r.roundtrip_max() < 1e-12, "k={k}: {r:#?}");
            assert!(r.change_max() < 1e-12 && r.cocycle_max < 1e-12);
        }
    }
}
