//! Desingularized vector fields in every blow-up chart, and the chain-rule
//! check that ties each of them back to the global field.
//!
//! Reference fields are "fast" extended systems on (x, y, scale):
//! `ε·X` on (x, y, ε) for the first cylinder and `σ^{k+1}·X` on (x, y, σ) with
//! μ = σᵏμ₁, η = 1 + σᵏη₁ for the second. A chart field `X̂` satisfies
//! `reference ∘ Φ = factor · DΦ · X̂` with the factors returned by
//! [`common_factor`].

use serde::Serialize;

use crate::blowup::{
    chart_jacobian, cylinder1_to_global, cylinder2_to_global, sphere_to_cylinder, ChartId, ChartName, ChartPoint,
    Stage,
};
use crate::error::{Error, Result};
use crate::model::{GammaVector, ModelParams, Sigmoid};
use crate::numerics::linalg::matvec;

/// φ(−1/w) = wᵏ φ^L(w), using the tail form when it is registered.
pub fn phi_left(sig: &Sigmoid, w: f64) -> Result<f64> {
    if sig.has_tails() {
        Ok(w.powi(sig.k as i32) * sig.tail_l(w)?)
    } else if w > 0.0 {
        sig.value(-1.0 / w)
    } else {
        Ok(0.0)
    }
}

/// φ(1/w) = 1 − wᵏ φ^R(w).
pub fn phi_right(sig: &Sigmoid, w: f64) -> Result<f64> {
    if sig.has_tails() {
        Ok(1.0 - w.powi(sig.k as i32) * sig.tail_r(w)?)
    } else if w > 0.0 {
        sig.value(1.0 / w)
    } else {
        Ok(1.0)
    }
}

/// Desingularized fields of the unweighted cylinder.
pub fn cylinder1_field(chart: ChartId, p: &ModelParams, sig: &Sigmoid, s: [f64; 3]) -> Result<[f64; 3]> {
    if chart.stage != Stage::Cylinder1 {
        return Err(Error::InvalidChart(format!("{chart} is not a Cylinder1 chart")));
    }
    let (a, b, eta, mu) = (p.alpha, p.beta, p.eta, p.mu);
    Ok(match chart.name {
        ChartName::XbarNeg1 => {
            let [r, y, e] = s;
            let g = a + b * phi_left(sig, e)?;
            let f = g * y - 1.0 + r;
            [-r * f, r * (eta - (mu + g) * y), e * f]
        }
        ChartName::Epsbar1 => {
            let [x2, y, r] = s;
            let g = a + b * sig.value(x2)?;
            [g * y - 1.0 - r * x2, r * (eta - (mu + g) * y), 0.0]
        }
        _ => {
            let [r, y, e] = s;
            let g = a + b * phi_right(sig, e)?;
            let f = g * y - 1.0 - r;
            [r * f, r * (eta - (mu + g) * y), -e * f]
        }
    })
}

/// Reduced flow on the critical manifold of the first cylinder.
pub fn reduced_flow(p: &ModelParams, y: f64) -> f64 {
    p.eta - 1.0 - p.mu * y
}

/// Scaled parameters plus γ; the sigmoid supplies tails away from ρ = 0 and
/// the profile in the δ̄ = 1 chart. Without it the tails are frozen at φ(0).
#[derive(Clone, Debug)]
pub struct ScaledSystem {
    pub gamma: GammaVector,
    pub eta1: f64,
    pub mu1: f64,
    pub sigmoid: Option<Sigmoid>,
}

impl ScaledSystem {
    pub fn new(gamma: GammaVector, eta1: f64, mu1: f64) -> Self {
        Self { gamma, eta1, mu1, sigmoid: None }
    }

    pub fn with_sigmoid(gamma: GammaVector, eta1: f64, mu1: f64, sig: Sigmoid) -> Result<Self> {
        if sig.k != gamma.k {
            return Err(Error::InvalidParams(format!("sigmoid decay order {} differs from k = {}", sig.k, gamma.k)));
        }
        Ok(Self { gamma, eta1, mu1, sigmoid: Some(sig) })
    }

    fn tail(&self, left: bool, w: f64) -> Result<f64> {
        match &self.sigmoid {
            Some(s) if s.has_tails() => {
                if left {
                    s.tail_l(w)
                } else {
                    s.tail_r(w)
                }
            }
            Some(s) if w > 0.0 => {
                // recover the tail from raw values
                let k = s.k as i32;
                if left {
                    Ok(s.value(-1.0 / w)? / w.powi(k))
                } else {
                    Ok((1.0 - s.value(1.0 / w)?) / w.powi(k))
                }
            }
            _ => Ok(if left { self.gamma.phi_l0 } else { self.gamma.phi_r0 }),
        }
    }

    pub fn tail_l(&self, w: f64) -> Result<f64> {
        self.tail(true, w)
    }

    pub fn tail_r(&self, w: f64) -> Result<f64> {
        self.tail(false, w)
    }

    /// η₁ − η₁^L(μ₁).
    pub fn e_l(&self) -> f64 {
        self.eta1 - self.mu1 / self.gamma.alpha
    }

    /// η₁ − η₁^R(μ₁).
    pub fn e_r(&self) -> f64 {
        self.eta1 - self.mu1 / self.gamma.s()
    }
}

/// Desingularized fields of the weighted cylinder.
pub fn cylinder2_field(chart: ChartId, sys: &ScaledSystem, s: [f64; 3]) -> Result<[f64; 3]> {
    if chart.stage != Stage::Cylinder2 {
        return Err(Error::InvalidChart(format!("{chart} is not a Cylinder2 chart")));
    }
    let g = &sys.gamma;
    let k = g.k as i32;
    let kp = k + 1;
    let kf = kp as f64;
    let (a, b, eta1, mu1) = (g.alpha, g.beta, sys.eta1, sys.mu1);
    Ok(match chart.name {
        ChartName::XbarNeg1 => {
            let [r, y, d] = s;
            let w = d.powi(kp);
            let f1 = 1.0 - (a + b * w.powi(k) * sys.tail_l(w)?) * y;
            let h = r.powi(kp) - f1;
            [-r * h / kf, r.powi(kp) * (f1 + r.powi(k) * d.powi(k) * (eta1 - mu1 * y)), d * h / kf]
        }
        ChartName::Deltabar1 => {
            let [x2, y, r] = s;
            let sig = sys
                .sigmoid
                .as_ref()
                .ok_or_else(|| Error::UnsupportedSpec("the δ̄ = 1 chart needs the sigmoid profile".into()))?;
            let f2 = 1.0 - (a + b * sig.value(x2)?) * y;
            [-r.powi(kp) * x2 - f2, r.powi(kp) * (f2 + r.powi(k) * (eta1 - mu1 * y)), 0.0]
        }
        _ => {
            let [r, y, d] = s;
            let w = d.powi(kp);
            let f3 = 1.0 - (a + b * (1.0 - w.powi(k) * sys.tail_r(w)?)) * y;
            let h = r.powi(kp) + f3;
            [-r * h / kf, r.powi(kp) * (f3 + r.powi(k) * d.powi(k) * (eta1 - mu1 * y)), d * h / kf]
        }
    })
}

/// Desingularized fields on the two spheres, all charts from one formula.
pub fn sphere_field(chart: ChartId, sys: &ScaledSystem, s: [f64; 3]) -> Result<[f64; 3]> {
    let left = match chart.stage {
        Stage::SphereL => true,
        Stage::SphereR => false,
        _ => return Err(Error::InvalidChart(format!("{chart} is not a sphere chart"))),
    };
    let g = &sys.gamma;
    let (k, kp) = (g.k as i32, g.k as i32 + 1);
    let kk = (g.k * (g.k + 1)) as f64;
    let (alpha, beta, sum) = (g.alpha, g.beta, g.s());
    let rho = s[0];
    let (rb, yb, db) = match chart.name {
        ChartName::Rbar1 => (1.0, s[1], s[2]),
        ChartName::Deltabar1 => (s[1], s[2], 1.0),
        ChartName::YbarNeg1 => (s[1], -1.0, s[2]),
        ChartName::Ybar1 => (s[1], 1.0, s[2]),
        _ => unreachable!(),
    };
    let p = rho.powi(k * kp);
    let dd = db.powi(k * kp);
    let w = (rho * db).powi(kp);
    let (ystar, ft) = if left {
        let phi = sys.tail_l(w)?;
        (1.0 / alpha, -alpha * yb - beta / alpha * dd * phi - beta * p * dd * phi * yb)
    } else {
        let phi = sys.tail_r(w)?;
        (1.0 / sum, -sum * yb + beta / sum * dd * phi + beta * p * dd * phi * yb)
    };
    let y = ystar + p * yb;
    let rk1 = rb.powi(kp);
    let ah = if left { rk1 - ft } else { rk1 + ft };
    let bh = ft + rb.powi(k) * db.powi(k) * (sys.eta1 - sys.mu1 * y);
    let kpf = kp as f64;
    let a = match chart.name {
        ChartName::Rbar1 => -ah / kk,
        ChartName::Deltabar1 => ah / kpf,
        ChartName::YbarNeg1 => -rk1 * bh / kk,
        _ => rk1 * bh / kk,
    };
    let dr = rb * (-ah / kpf - k as f64 * a);
    let dd_ = db * (ah / kpf - a);
    let dy = rk1 * bh - kk * a * yb;
    Ok(match chart.name {
        ChartName::Rbar1 => [rho * a, dy, dd_],
        ChartName::Deltabar1 => [rho * a, dr, dy],
        _ => [rho * a, dr, dd_],
    })
}

/// Dispatch on the chart stage. Cylinder1 charts need the full model.
pub fn chart_field(chart: ChartId, sys: &ScaledSystem, s: [f64; 3]) -> Result<[f64; 3]> {
    match chart.stage {
        Stage::Cylinder2 => cylinder2_field(chart, sys, s),
        Stage::SphereL | Stage::SphereR => sphere_field(chart, sys, s),
        Stage::Cylinder1 => Err(Error::InvalidChart("Cylinder1 fields take ModelParams; use cylinder1_field".into())),
    }
}

/// Factor `f` with `reference ∘ Φ = f · DΦ · X̂`, composed down to the global
/// coordinates for sphere charts.
pub fn common_factor(cp: &ChartPoint, alpha: f64, beta: f64) -> Result<f64> {
    let c = &cp.coords;
    let kp = cp.k as i32 + 1;
    Ok(match cp.chart.stage {
        Stage::Cylinder1 => match cp.chart.name {
            ChartName::Epsbar1 => 1.0,
            _ => c[2],
        },
        Stage::Cylinder2 => match cp.chart.name {
            ChartName::Deltabar1 => 1.0,
            _ => c[2].powi(kp),
        },
        _ => {
            let cyl = sphere_to_cylinder(cp, alpha, beta)?;
            c[0].powi((cp.k * (cp.k + 1)) as i32) * common_factor(&cyl, alpha, beta)?
        }
    })
}

/// Extended fast field `σ^{k+1}·X` on (x, y, σ).
pub fn weighted_reference(sys: &ScaledSystem, sig: &Sigmoid, g: [f64; 3]) -> Result<[f64; 3]> {
    let [x, y, sigma] = g;
    let gm = &sys.gamma;
    let k = gm.k as i32;
    let eps = sigma.powi(k + 1);
    let sk = sigma.powi(k);
    let phi = sig.value((x - 1.0) / eps)?;
    let gg = gm.alpha + gm.beta * phi;
    let (eta, mu) = (1.0 + sk * sys.eta1, sk * sys.mu1);
    Ok([eps * (gg * y - x), eps * (eta - (mu + gg) * y), 0.0])
}

#[derive(Clone, Debug, Serialize)]
pub struct PushforwardReport {
    pub chart: String,
    pub residual: f64,
}

/// Relative residual `|f·DΦ·X̂ − reference∘Φ| / |reference∘Φ|` at an interior
/// point. For Cylinder1 charts `sys.eta1`, `sys.mu1` are read as η and μ.
pub fn pushforward_consistency(cp: &ChartPoint, sys: &ScaledSystem, sig: &Sigmoid) -> Result<f64> {
    if cp.coords.iter().enumerate().any(|(i, &v)| v <= 0.0 && is_radial(cp.chart, i)) {
        return Err(Error::OutOfOverlap(format!("{} point on a degenerate boundary: {:?}", cp.chart, cp.coords)));
    }
    let (a, b) = (sys.gamma.alpha, sys.gamma.beta);
    let f = common_factor(cp, a, b)?;
    let (push, reference) = match cp.chart.stage {
        Stage::Cylinder1 => {
            let p = ModelParams { alpha: a, beta: b, eta: sys.eta1, mu: sys.mu1, eps: 0.0 };
            let xh = cylinder1_field(cp.chart, &p, sig, cp.coords)?;
            let g = cylinder1_to_global(cp)?;
            let phi = sig.value((g[0] - 1.0) / g[2])?;
            let gg = a + b * phi;
            let reference = [g[2] * (gg * g[1] - g[0]), g[2] * (p.eta - (p.mu + gg) * g[1]), 0.0];
            (matvec(&chart_jacobian(cp), &xh), reference)
        }
        Stage::Cylinder2 => {
            let xh = cylinder2_field(cp.chart, sys, cp.coords)?;
            let g = cylinder2_to_global(cp)?;
            (matvec(&chart_jacobian(cp), &xh), weighted_reference(sys, sig, g)?)
        }
        _ => {
            let xh = sphere_field(cp.chart, sys, cp.coords)?;
            let cyl = sphere_to_cylinder(cp, a, b)?;
            let v = matvec(&chart_jacobian(&cyl), &matvec(&chart_jacobian(cp), &xh));
            (v, weighted_reference(sys, sig, cylinder2_to_global(&cyl)?)?)
        }
    };
    let num: f64 = (0..3).map(|i| (f * push[i] - reference[i]).powi(2)).sum::<f64>().sqrt();
    let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(num / den.max(1e-300))
}

/// Interior point of a chart from u ∈ [0, 1]³: radial coordinates in
/// [0.2, 0.8], signed coordinates in [−1.5, 1.5]. Smaller radii make the
/// reference field itself a cancellation of O(1) terms.
pub fn interior_point(chart: ChartId, u: [f64; 3], k: u32) -> Result<ChartPoint> {
    let c = std::array::from_fn(|i| if is_radial(chart, i) { 0.2 + 0.6 * u[i] } else { -1.5 + 3.0 * u[i] });
    ChartPoint::new(chart, c, k)
}

fn is_radial(chart: ChartId, i: usize) -> bool {
    match (chart.stage, chart.name) {
        (Stage::Cylinder1 | Stage::Cylinder2, ChartName::Epsbar1 | ChartName::Deltabar1) => i == 2,
        (Stage::Cylinder1 | Stage::Cylinder2, _) => i != 1,
        (_, ChartName::Rbar1) => i != 1,
        (_, ChartName::Deltabar1) => i != 2,
        _ => true,
    }
}

/// Appendix-style parameter duality: the right sphere at (γ, e) is the left
/// sphere at (1/(α+β), β, φ^R(0)/(α+β)³) with e ↦ −e.
pub fn dual_gamma(g: &GammaVector) -> GammaVector {
    let s = g.s();
    GammaVector { k: g.k, alpha: 1.0 / s, beta: g.beta, phi_l0: g.phi_r0 / s.powi(3), phi_r0: g.phi_l0 }
}
