//! Blow-up coordinates: the cylinder around `x = 1` (unweighted and weighted),
//! the parameter scaling, and the spheres around the tangency points.
//!
//! Coordinate orders:
//!
//! | stage     | chart       | coords            | maps to                   |
//! |-----------|-------------|-------------------|---------------------------|
//! | Cylinder1 | xbar_neg1   | (r₁, y, ε₁)       | (1 − r₁, y, r₁ε₁)         |
//! | Cylinder1 | epsbar1     | (x₂, y, r₂)       | (1 + r₂x₂, y, r₂)         |
//! | Cylinder1 | xbar1       | (r₃, y, ε₃)       | (1 + r₃, y, r₃ε₃)         |
//! | Cylinder2 | xbar_neg1   | (r₁, y, δ₁)       | (1 − r₁^{k+1}, y, r₁δ₁)   |
//! | Cylinder2 | deltabar1   | (x₂, y, r₂)       | (1 + r₂^{k+1}x₂, y, r₂)   |
//! | Cylinder2 | xbar1       | (r₃, y, δ₃)       | (1 + r₃^{k+1}, y, r₃δ₃)   |
//! | Sphere*   | rbar1       | (ρ, y₁, δ₁)       | (ρᵏ, y* + ρ^κ y₁, ρδ₁)    |
//! | Sphere*   | deltabar1   | (ρ, r₂, y₂)       | (ρᵏ r₂, y* + ρ^κ y₂, ρ)   |
//! | Sphere*   | ybar_neg1   | (ρ, r₄, δ₄)       | (ρᵏ r₄, y* − ρ^κ, ρδ₄)    |
//! | Sphere*   | ybar1       | (ρ, r₃, δ₃)       | (ρᵏ r₃, y* + ρ^κ, ρδ₃)    |
//!
//! with κ = k(k+1). Sphere points map into the weighted cylinder chart
//! `xbar_neg1` (left sphere, y* = 1/α) or `xbar1` (right sphere, y* = 1/(α+β)).
//! The third global coordinate is ε for Cylinder1 and σ = ε^{1/(k+1)} for
//! Cylinder2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Cylinder1,
    Cylinder2,
    SphereL,
    SphereR,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartName {
    XbarNeg1,
    Epsbar1,
    Xbar1,
    Deltabar1,
    Rbar1,
    Ybar1,
    YbarNeg1,
}

impl ChartName {
    pub fn label(&self) -> &'static str {
        match self {
            ChartName::XbarNeg1 => "xbar_neg1",
            ChartName::Epsbar1 => "epsbar1",
            ChartName::Xbar1 => "xbar1",
            ChartName::Deltabar1 => "deltabar1",
            ChartName::Rbar1 => "rbar1",
            ChartName::Ybar1 => "ybar1",
            ChartName::YbarNeg1 => "ybar_neg1",
        }
    }
}

impl FromStr for ChartName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "xbar_neg1" => ChartName::XbarNeg1,
            "epsbar1" => ChartName::Epsbar1,
            "xbar1" => ChartName::Xbar1,
            "deltabar1" => ChartName::Deltabar1,
            "rbar1" => ChartName::Rbar1,
            "ybar1" => ChartName::Ybar1,
            "ybar_neg1" => ChartName::YbarNeg1,
            _ => return Err(Error::InvalidChart(format!("unknown chart name '{s}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChartId {
    pub stage: Stage,
    pub name: ChartName,
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{}", self.stage, self.name.label())
    }
}

impl ChartId {
    pub fn new(stage: Stage, name: ChartName) -> Result<Self> {
        use ChartName::*;
        let ok = match stage {
            Stage::Cylinder1 => matches!(name, XbarNeg1 | Epsbar1 | Xbar1),
            Stage::Cylinder2 => matches!(name, XbarNeg1 | Deltabar1 | Xbar1),
            Stage::SphereL | Stage::SphereR => matches!(name, Rbar1 | Deltabar1 | Ybar1 | YbarNeg1),
        };
        if ok {
            Ok(Self { stage, name })
        } else {
            Err(Error::InvalidChart(format!("{:?} has no chart {}", stage, name.label())))
        }
    }

    pub fn all() -> Vec<ChartId> {
        use ChartName::*;
        let mut v = Vec::new();
        for (st, names) in [
            (Stage::Cylinder1, &[XbarNeg1, Epsbar1, Xbar1][..]),
            (Stage::Cylinder2, &[XbarNeg1, Deltabar1, Xbar1][..]),
            (Stage::SphereL, &[Rbar1, Deltabar1, YbarNeg1, Ybar1][..]),
            (Stage::SphereR, &[Rbar1, Deltabar1, YbarNeg1, Ybar1][..]),
        ] {
            v.extend(names.iter().map(|&n| ChartId { stage: st, name: n }));
        }
        v
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.stage, Stage::SphereL | Stage::SphereR)
    }

    /// The weighted-cylinder chart a sphere chart lives in.
    pub fn parent_cylinder(&self) -> Option<ChartId> {
        match self.stage {
            Stage::SphereL => Some(ChartId { stage: Stage::Cylinder2, name: ChartName::XbarNeg1 }),
            Stage::SphereR => Some(ChartId { stage: Stage::Cylinder2, name: ChartName::Xbar1 }),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub coords: [f64; 3],
    pub k: u32,
}

impl ChartPoint {
    pub fn new(chart: ChartId, coords: [f64; 3], k: u32) -> Result<Self> {
        let cp = Self { chart, coords, k };
        cp.check_domain()?;
        Ok(cp)
    }

    fn check_domain(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        if !self.coords.iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfOverlap(format!("non-finite coordinates in {}", self.chart)));
        }
        let nonneg: &[usize] = match (self.chart.stage, self.chart.name) {
            (Stage::Cylinder1 | Stage::Cylinder2, ChartName::Epsbar1 | ChartName::Deltabar1) => &[2],
            (Stage::Cylinder1 | Stage::Cylinder2, _) => &[0, 2],
            (_, ChartName::Rbar1) => &[0, 2],
            (_, _) => &[0, 1, 2],
        };
        // the y-coordinate of chart deltabar1 on a sphere is signed
        for &i in nonneg {
            if self.chart.is_sphere() && self.chart.name == ChartName::Deltabar1 && i == 2 {
                continue;
            }
            if self.coords[i] < 0.0 {
                return Err(Error::OutOfOverlap(format!(
                    "coordinate {i} of {} must be nonnegative, got {}",
                    self.chart, self.coords[i]
                )));
            }
        }
        Ok(())
    }
}

fn kk(k: u32) -> i32 {
    (k * (k + 1)) as i32
}

/// Tangency ordinate y* of the sphere stage.
pub fn sphere_center(stage: Stage, alpha: f64, beta: f64) -> Result<f64> {
    match stage {
        Stage::SphereL => Ok(1.0 / alpha),
        Stage::SphereR => Ok(1.0 / (alpha + beta)),
        _ => Err(Error::InvalidChart(format!("{stage:?} is not a sphere"))),
    }
}

fn require(cp: &ChartPoint, stage: &[Stage]) -> Result<()> {
    if stage.contains(&cp.chart.stage) {
        Ok(())
    } else {
        Err(Error::InvalidChart(format!("expected a {stage:?} chart, got {}", cp.chart)))
    }
}

/// (x, y, ε).
pub fn cylinder1_to_global(cp: &ChartPoint) -> Result<[f64; 3]> {
    require(cp, &[Stage::Cylinder1])?;
    let [a, y, b] = cp.coords;
    Ok(match cp.chart.name {
        ChartName::XbarNeg1 => [1.0 - a, y, a * b],
        ChartName::Epsbar1 => [1.0 + b * a, y, b],
        _ => [1.0 + a, y, a * b],
    })
}

/// (x, y, σ).
pub fn cylinder2_to_global(cp: &ChartPoint) -> Result<[f64; 3]> {
    require(cp, &[Stage::Cylinder2])?;
    let [a, y, b] = cp.coords;
    let kp = cp.k as i32 + 1;
    Ok(match cp.chart.name {
        ChartName::XbarNeg1 => [1.0 - a.powi(kp), y, a * b],
        ChartName::Deltabar1 => [1.0 + b.powi(kp) * a, y, b],
        _ => [1.0 + a.powi(kp), y, a * b],
    })
}

/// Inverse of the cylinder maps; the third global coordinate is ε for
/// Cylinder1 and σ for Cylinder2.
pub fn global_to_cylinder(chart: ChartId, g: [f64; 3], k: u32) -> Result<ChartPoint> {
    let [x, y, e] = g;
    let kp = match chart.stage {
        Stage::Cylinder1 => 1.0,
        Stage::Cylinder2 => k as f64 + 1.0,
        _ => return Err(Error::InvalidChart(format!("{chart} is not a cylinder chart"))),
    };
    if e < 0.0 {
        return Err(Error::OutOfOverlap("scale coordinate must be nonnegative".into()));
    }
    let coords = match chart.name {
        ChartName::XbarNeg1 => {
            if x >= 1.0 {
                return Err(Error::OutOfOverlap(format!("{chart} needs x < 1, got {x}")));
            }
            let r = (1.0 - x).powf(1.0 / kp);
            [r, y, e / r]
        }
        ChartName::Xbar1 => {
            if x <= 1.0 {
                return Err(Error::OutOfOverlap(format!("{chart} needs x > 1, got {x}")));
            }
            let r = (x - 1.0).powf(1.0 / kp);
            [r, y, e / r]
        }
        _ => {
            if e <= 0.0 {
                return Err(Error::OutOfOverlap(format!("{chart} needs a positive scale coordinate")));
            }
            [(x - 1.0) / e.powf(kp), y, e]
        }
    };
    ChartPoint::new(chart, coords, k)
}

/// Sphere chart → parent weighted-cylinder chart.
pub fn sphere_to_cylinder(cp: &ChartPoint, alpha: f64, beta: f64) -> Result<ChartPoint> {
    require(cp, &[Stage::SphereL, Stage::SphereR])?;
    let ys = sphere_center(cp.chart.stage, alpha, beta)?;
    let k = cp.k as i32;
    let [rho, a, b] = cp.coords;
    let (rk, p) = (rho.powi(k), rho.powi(kk(cp.k)));
    let c = match cp.chart.name {
        ChartName::Rbar1 => [rk, ys + p * a, rho * b],
        ChartName::Deltabar1 => [rk * a, ys + p * b, rho],
        ChartName::YbarNeg1 => [rk * a, ys - p, rho * b],
        _ => [rk * a, ys + p, rho * b],
    };
    ChartPoint::new(cp.chart.parent_cylinder().unwrap(), c, cp.k)
}

pub fn cylinder_to_sphere(cp: &ChartPoint, target: ChartId, alpha: f64, beta: f64) -> Result<ChartPoint> {
    if !target.is_sphere() || cp.chart != target.parent_cylinder().unwrap() {
        return Err(Error::InvalidChart(format!("cannot map {} into {target}", cp.chart)));
    }
    let ys = sphere_center(target.stage, alpha, beta)?;
    let (k, kk) = (cp.k as f64, kk(cp.k) as f64);
    let [r, y, d] = cp.coords;
    let coords = match target.name {
        ChartName::Rbar1 => {
            if r <= 0.0 {
                return Err(Error::OutOfOverlap(format!("{target} needs r > 0")));
            }
            let rho = r.powf(1.0 / k);
            [rho, (y - ys) / rho.powf(kk), d / rho]
        }
        ChartName::Deltabar1 => {
            if d <= 0.0 {
                return Err(Error::OutOfOverlap(format!("{target} needs delta > 0")));
            }
            [d, r / d.powf(k), (y - ys) / d.powf(kk)]
        }
        ChartName::YbarNeg1 | ChartName::Ybar1 => {
            let c = if target.name == ChartName::Ybar1 { 1.0 } else { -1.0 };
            if c * (y - ys) <= 0.0 {
                return Err(Error::OutOfOverlap(format!("{target} needs {}(y − y*) > 0", if c > 0.0 { "" } else { "−" })));
            }
            let rho = (c * (y - ys)).powf(1.0 / kk);
            [rho, r / rho.powf(k), d / rho]
        }
        _ => unreachable!(),
    };
    ChartPoint::new(target, coords, cp.k)
}

/// Explicit sphere chart changes (K₄₁, K₂₁, K₄₂ and their inverses, plus the
/// mirror images with ȳ = +1). Other pairs route through the cylinder.
fn sphere_change(cp: &ChartPoint, target: ChartName) -> Result<[f64; 3]> {
    use ChartName::*;
    let (k, kk) = (cp.k as f64, kk(cp.k) as f64);
    let [rho, a, b] = cp.coords;
    let sign_of = |n: ChartName| if n == Ybar1 { 1.0 } else { -1.0 };
    let oo = |what: &str| Error::OutOfOverlap(format!("{} → {}: needs {what}", cp.chart, target.label()));
    Ok(match (cp.chart.name, target) {
        (Rbar1, YbarNeg1 | Ybar1) => {
            let w = sign_of(target) * a;
            if w <= 0.0 {
                return Err(oo(if target == Ybar1 { "y₁ > 0" } else { "y₁ < 0" }));
            }
            [w.powf(1.0 / kk) * rho, w.powf(-1.0 / (k + 1.0)), w.powf(-1.0 / kk) * b]
        }
        (YbarNeg1 | Ybar1, Rbar1) => {
            if a <= 0.0 {
                return Err(oo("r > 0"));
            }
            [rho * a.powf(1.0 / k), sign_of(cp.chart.name) * a.powf(-(k + 1.0)), b * a.powf(-1.0 / k)]
        }
        (Rbar1, Deltabar1) => {
            if b <= 0.0 {
                return Err(oo("δ₁ > 0"));
            }
            [b * rho, b.powf(-k), b.powf(-kk) * a]
        }
        (Deltabar1, Rbar1) => {
            if a <= 0.0 {
                return Err(oo("r₂ > 0"));
            }
            [rho * a.powf(1.0 / k), a.powf(-(k + 1.0)) * b, a.powf(-1.0 / k)]
        }
        (Deltabar1, YbarNeg1 | Ybar1) => {
            let w = sign_of(target) * b;
            if w <= 0.0 {
                return Err(oo(if target == Ybar1 { "y₂ > 0" } else { "y₂ < 0" }));
            }
            [w.powf(1.0 / kk) * rho, w.powf(-1.0 / (k + 1.0)) * a, w.powf(-1.0 / kk)]
        }
        (YbarNeg1 | Ybar1, Deltabar1) => {
            if b <= 0.0 {
                return Err(oo("δ > 0"));
            }
            [rho * b, a * b.powf(-k), sign_of(cp.chart.name) * b.powf(-kk)]
        }
        _ => return Err(Error::InvalidChart("no direct change".into())),
    })
}

/// Change of chart within one stage.
pub fn chart_change(cp: &ChartPoint, target: ChartId, alpha: f64, beta: f64) -> Result<ChartPoint> {
    ChartId::new(target.stage, target.name)?;
    if cp.chart.stage != target.stage {
        return Err(Error::InvalidChart(format!("{} and {target} belong to different stages", cp.chart)));
    }
    if cp.chart == target {
        return Ok(*cp);
    }
    match target.stage {
        Stage::Cylinder1 => global_to_cylinder(target, cylinder1_to_global(cp)?, cp.k),
        Stage::Cylinder2 => global_to_cylinder(target, cylinder2_to_global(cp)?, cp.k),
        _ => match sphere_change(cp, target.name) {
            Ok(c) => ChartPoint::new(target, c, cp.k),
            Err(Error::InvalidChart(_)) => {
                let cyl = sphere_to_cylinder(cp, alpha, beta)?;
                cylinder_to_sphere(&cyl, target, alpha, beta)
            }
            Err(e) => Err(e),
        },
    }
}

/// Weighted homogeneity: ρ ↦ λρ scales the cylinder offsets (r, y − y*, δ)
/// by (λᵏ, λ^κ, λ).
pub fn sphere_scale(cp: &ChartPoint, lambda: f64) -> ChartPoint {
    let mut out = *cp;
    out.coords[0] *= lambda;
    out
}

/// Analytic Jacobian of a chart map into its parent coordinates (global for
/// cylinder charts, weighted-cylinder chart for sphere charts).
pub fn chart_jacobian(cp: &ChartPoint) -> [[f64; 3]; 3] {
    let [a, _y, b] = cp.coords;
    let k = cp.k as i32;
    let kf = k as f64;
    match cp.chart.stage {
        Stage::Cylinder1 => match cp.chart.name {
            ChartName::XbarNeg1 => [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [b, 0.0, a]],
            ChartName::Epsbar1 => [[b, 0.0, a], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            _ => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [b, 0.0, a]],
        },
        Stage::Cylinder2 => {
            let kp = k + 1;
            match cp.chart.name {
                ChartName::XbarNeg1 => [[-(kp as f64) * a.powi(k), 0.0, 0.0], [0.0, 1.0, 0.0], [b, 0.0, a]],
                ChartName::Deltabar1 => {
                    [[b.powi(kp), 0.0, kp as f64 * b.powi(k) * a], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
                }
                _ => [[kp as f64 * a.powi(k), 0.0, 0.0], [0.0, 1.0, 0.0], [b, 0.0, a]],
            }
        }
        _ => {
            let [rho, a, b] = cp.coords;
            let kk = kk(cp.k);
            let kkf = kk as f64;
            let drk = kf * rho.powi(k - 1);
            let dp = kkf * rho.powi(kk - 1);
            let (rk, p) = (rho.powi(k), rho.powi(kk));
            match cp.chart.name {
                // (ρ, y₁, δ₁) ↦ (ρᵏ, y* + ρ^κ y₁, ρδ₁)
                ChartName::Rbar1 => [[drk, 0.0, 0.0], [dp * a, p, 0.0], [b, 0.0, rho]],
                // (ρ, r₂, y₂) ↦ (ρᵏ r₂, y* + ρ^κ y₂, ρ)
                ChartName::Deltabar1 => [[drk * a, rk, 0.0], [dp * b, 0.0, p], [1.0, 0.0, 0.0]],
                ChartName::YbarNeg1 => [[drk * a, rk, 0.0], [-dp, 0.0, 0.0], [b, 0.0, rho]],
                _ => [[drk * a, rk, 0.0], [dp, 0.0, 0.0], [b, 0.0, rho]],
            }
        }
    }
}

/// σ = ε^{1/(k+1)} together with the scaled (η₁, μ₁).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub sigma: f64,
    pub eta1: f64,
    pub mu1: f64,
}

/// (ε, μ₁, η₁) ↦ (ε, σᵏμ₁, 1 + σᵏη₁).
pub fn scale_params(eps: f64, mu1: f64, eta1: f64, k: u32) -> Result<(f64, f64, f64)> {
    if !(eps >= 0.0) || k == 0 {
        return Err(Error::InvalidParams("need eps ≥ 0 and k ≥ 1".into()));
    }
    let sk = eps.powf(k as f64 / (k as f64 + 1.0));
    Ok((eps, sk * mu1, 1.0 + sk * eta1))
}

/// Inverse of [`scale_params`]; undefined at ε = 0.
pub fn unscale_params(eps: f64, mu: f64, eta: f64, k: u32) -> Result<ScaledParams> {
    if !(eps > 0.0) || k == 0 {
        return Err(Error::InvalidParams("scaled parameters need eps > 0 and k ≥ 1".into()));
    }
    let sigma = eps.powf(1.0 / (k as f64 + 1.0));
    let sk = sigma.powi(k as i32);
    Ok(ScaledParams { sigma, eta1: (eta - 1.0) / sk, mu1: mu / sk })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: Stage, n: ChartName) -> ChartId {
        ChartId::new(s, n).unwrap()
    }

    #[test]
    fn illegal_charts() {
        assert!(ChartId::new(Stage::Cylinder1, ChartName::Rbar1).is_err());
        assert!(ChartId::new(Stage::SphereL, ChartName::Epsbar1).is_err());
        assert_eq!(ChartId::all().len(), 14);
    }

    #[test]
    fn cylinder_examples() {
        let cp = ChartPoint::new(id(Stage::Cylinder1, ChartName::Epsbar1), [2.0, 0.5, 0.01], 1).unwrap();
        let g = cylinder1_to_global(&cp).unwrap();
        assert!((g[0] - 1.02).abs() < 1e-15 && g[2] == 0.01);
        let cp = ChartPoint::new(id(Stage::Cylinder2, ChartName::XbarNeg1), [0.1, 2.0, 0.2], 1).unwrap();
        let g = cylinder2_to_global(&cp).unwrap();
        assert!((g[0] - 0.99).abs() < 1e-15 && (g[2] - 0.02).abs() < 1e-16);
        assert!(cylinder2_to_global(&ChartPoint { chart: id(Stage::Cylinder1, ChartName::Xbar1), coords: [0.0; 3], k: 1 }).is_err());
    }

    #[test]
    fn sphere_blowdown_and_example() {
        let cp = ChartPoint::new(id(Stage::SphereL, ChartName::Rbar1), [0.1, -1.0, 0.5], 1).unwrap();
        let c = sphere_to_cylinder(&cp, 0.5, 2.0).unwrap();
        assert!((c.coords[0] - 0.1).abs() < 1e-15);
        assert!((c.coords[1] - 1.99).abs() < 1e-14);
        assert!((c.coords[2] - 0.05).abs() < 1e-15);
        let cp = ChartPoint::new(id(Stage::SphereR, ChartName::YbarNeg1), [0.0, 0.3, 0.7], 2).unwrap();
        assert_eq!(sphere_to_cylinder(&cp, 0.5, 2.0).unwrap().coords, [0.0, 0.4, 0.0]);
    }

    #[test]
    fn k41_at_unit_y() {
        let cp = ChartPoint::new(id(Stage::SphereL, ChartName::Rbar1), [0.3, -1.0, 0.4], 1).unwrap();
        let q = chart_change(&cp, id(Stage::SphereL, ChartName::YbarNeg1), 0.5, 1.0).unwrap();
        assert_eq!(q.coords, [0.3, 1.0, 0.4]);
        assert!(matches!(
            chart_change(&ChartPoint { coords: [0.3, 0.5, 0.4], ..cp }, q.chart, 0.5, 1.0),
            Err(Error::OutOfOverlap(_))
        ));
    }

    #[test]
    fn params_scaling() {
        let (_, mu, eta) = scale_params(0.0064, 1.0, 0.0, 1).unwrap();
        assert!((mu - 0.08).abs() < 1e-15 && eta == 1.0);
        assert_eq!(scale_params(0.0, 3.0, 2.0, 1).unwrap(), (0.0, 0.0, 1.0));
        let sp = unscale_params(1e-6, 2e-4, 1.0, 2).unwrap();
        assert!((sp.sigma - 1e-2).abs() < 1e-15 && (sp.mu1 - 2.0).abs() < 1e-12);
        assert!(unscale_params(0.0, 0.1, 1.0, 1).is_err());
    }
}
