//! The smooth substrate-depletion field, the sigmoid family with algebraic
//! tails, and the generic blend of two planar fields across `x = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tails are only trusted beyond this |z|.
pub const TAIL_Z0: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub eps: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, eta: f64, mu: f64, eps: f64) -> Result<Self> {
        let p = Self { alpha, beta, eta, mu, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.eta, self.mu, self.eps];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.alpha + self.beta <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "alpha + beta = {} must exceed 1",
                self.alpha + self.beta
            )));
        }
        if self.eps < 0.0 {
            return Err(Error::InvalidParams("eps must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    fn require_smooth(&self) -> Result<()> {
        if self.eps > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams("eps > 0 required for the smooth field".into()))
        }
    }
}

/// User-supplied sigmoid. Tail functions are optional; without them only raw
/// evaluation is available.
pub struct CustomSigmoid {
    pub name: String,
    pub value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub tail_l: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub tail_r: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

#[derive(Clone)]
pub enum Family {
    /// ½ + arctan(z)/π
    Arctan,
    /// Hill function H_n evaluated at x = 1 + z.
    Hill(u32),
    /// Recentred Goldbeter–Koshland ψ(z, ε_gk).
    GoldbeterKoshland(f64),
    /// ½ + z / (2√(1+z²)); algebraic decay of order two.
    Algebraic,
    Custom(Arc<CustomSigmoid>),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Arctan => write!(f, "Arctan"),
            Family::Hill(n) => write!(f, "Hill({n})"),
            Family::GoldbeterKoshland(e) => write!(f, "GoldbeterKoshland({e})"),
            Family::Algebraic => write!(f, "Algebraic"),
            Family::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// A regularisation function φ with its decay order `k` and tail data.
#[derive(Clone, Debug)]
pub struct Sigmoid {
    pub family: Family,
    pub k: u32,
    pub phi_l0: f64,
    pub phi_r0: f64,
}

fn gk_psi(z: f64, e: f64) -> Result<f64> {
    let rad = 4.0 + z * z + 2.0 * e * z * z + 4.0 * e * z + e * e * z * z;
    if rad < 0.0 {
        return Err(Error::Domain(format!("negative radicand {rad} at z = {z}")));
    }
    let s = rad.sqrt();
    if e == 0.0 {
        // 2/(2 − z + √(z²+4)) cancels badly for z ≫ 1; use the symmetric form there.
        return Ok(if z <= 0.0 { 2.0 / (2.0 - z + s) } else { 1.0 - 2.0 / (2.0 + z + s) });
    }
    Ok((2.0 + e * s + 2.0 * e + e * z + e * e * z) / ((2.0 - z + e * z + s) * (1.0 + e)))
}

/// Goldbeter–Koshland function in its original variable.
pub fn goldbeter_koshland(x: f64, eps: f64) -> f64 {
    let a = 1.0 - x + eps * (1.0 + x);
    2.0 * x * eps / (a + (a * a - 4.0 * (1.0 - x) * x * eps).sqrt())
}

fn arctan_tail(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        (1.0 - w * w / 3.0 + w.powi(4) / 5.0) / PI
    } else {
        w.atan() / (PI * w)
    }
}

fn gk0_tail(w: f64) -> f64 {
    2.0 / (1.0 + 2.0 * w + (1.0 + 4.0 * w * w).sqrt())
}

fn algebraic_tail(w: f64) -> f64 {
    if w.abs() < 1e-3 {
        0.25 - 3.0 * w * w / 16.0 + 5.0 * w.powi(4) / 32.0
    } else {
        (1.0 - 1.0 / (1.0 + w * w).sqrt()) / (2.0 * w * w)
    }
}

impl Sigmoid {
    pub fn arctan() -> Self {
        Self { family: Family::Arctan, k: 1, phi_l0: 1.0 / PI, phi_r0: 1.0 / PI }
    }

    pub fn hill(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("Hill exponent must be positive".into()));
        }
        Ok(Self { family: Family::Hill(n), k: n, phi_l0: 1.0, phi_r0: 1.0 })
    }

    pub fn goldbeter_koshland(eps_gk: f64) -> Result<Self> {
        if !(eps_gk >= 0.0 && eps_gk.is_finite()) {
            return Err(Error::InvalidParams("eps_gk must be a nonnegative number".into()));
        }
        Ok(Self { family: Family::GoldbeterKoshland(eps_gk), k: 1, phi_l0: 1.0, phi_r0: 1.0 })
    }

    pub fn algebraic() -> Self {
        Self { family: Family::Algebraic, k: 2, phi_l0: 0.25, phi_r0: 0.25 }
    }

    pub fn custom(k: u32, phi_l0: f64, phi_r0: f64, c: CustomSigmoid) -> Result<Self> {
        if k == 0 || !(phi_l0 > 0.0) || !(phi_r0 > 0.0) {
            return Err(Error::InvalidParams("custom sigmoid needs k ≥ 1 and positive tail coefficients".into()));
        }
        Ok(Self { family: Family::Custom(Arc::new(c)), k, phi_l0, phi_r0 })
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        match &self.family {
            Family::Arctan => Ok(if z < -1.0 {
                arctan_tail(-1.0 / z) / -z
            } else if z > 1.0 {
                1.0 - arctan_tail(1.0 / z) / z
            } else {
                0.5 + z.atan() / PI
            }),
            Family::Hill(n) => {
                let x = 1.0 + z;
                if x <= 0.0 {
                    return Err(Error::Domain(format!("Hill function needs x = 1 + z > 0, got z = {z}")));
                }
                // x^n/(1+x^n) = 1/(1+x^{-n})
                Ok(1.0 / (1.0 + x.powi(-(*n as i32))))
            }
            Family::GoldbeterKoshland(e) => gk_psi(z, *e),
            Family::Algebraic => Ok(if z < -1.0 {
                algebraic_tail(-1.0 / z) / (z * z)
            } else if z > 1.0 {
                1.0 - algebraic_tail(1.0 / z) / (z * z)
            } else {
                0.5 + z / (2.0 * (1.0 + z * z).sqrt())
            }),
            Family::Custom(c) => Ok((c.value)(z)),
        }
    }

    /// dφ/dz; analytic where cheap, central difference otherwise.
    pub fn derivative(&self, z: f64) -> Result<f64> {
        match &self.family {
            Family::Arctan => Ok(1.0 / (PI * (1.0 + z * z))),
            Family::Algebraic => Ok(0.5 / (1.0 + z * z).powf(1.5)),
            Family::Hill(n) => {
                let x = 1.0 + z;
                if x <= 0.0 {
                    return Err(Error::Domain(format!("Hill function needs x = 1 + z > 0, got z = {z}")));
                }
                let xn = x.powi(*n as i32);
                Ok(*n as f64 * xn / (x * (1.0 + xn).powi(2)))
            }
            _ => {
                let h = 1e-6 * z.abs().max(1.0);
                Ok((self.value(z + h)? - self.value(z - h)?) / (2.0 * h))
            }
        }
    }

    pub fn has_tails(&self) -> bool {
        match &self.family {
            Family::Arctan | Family::Algebraic => true,
            Family::GoldbeterKoshland(e) => *e == 0.0,
            Family::Hill(_) => false,
            Family::Custom(c) => c.tail_l.is_some() && c.tail_r.is_some(),
        }
    }

    /// φ^L(w), defined by φ(z) = (−z)^{−k} φ^L(1/(−z)) for z < 0.
    pub fn tail_l(&self, w: f64) -> Result<f64> {
        match &self.family {
            Family::Arctan => Ok(arctan_tail(w)),
            Family::Algebraic => Ok(algebraic_tail(w)),
            Family::GoldbeterKoshland(e) if *e == 0.0 => Ok(gk0_tail(w)),
            Family::Custom(c) if c.tail_l.is_some() => Ok((c.tail_l.as_ref().unwrap())(w)),
            f => Err(Error::UnsupportedSpec(format!("no tail decomposition registered for {f:?}"))),
        }
    }

    /// φ^R(w), defined by φ(z) = 1 − z^{−k} φ^R(1/z) for z > 0.
    pub fn tail_r(&self, w: f64) -> Result<f64> {
        match &self.family {
            // both families are point-symmetric about (0, ½)
            Family::Arctan | Family::Algebraic => self.tail_l(w),
            Family::GoldbeterKoshland(e) if *e == 0.0 => Ok(gk0_tail(w)),
            Family::Custom(c) if c.tail_r.is_some() => Ok((c.tail_r.as_ref().unwrap())(w)),
            f => Err(Error::UnsupportedSpec(format!("no tail decomposition registered for {f:?}"))),
        }
    }

    /// φ(z) reconstructed from the registered tail on the matching side.
    pub fn tail_value(&self, z: f64) -> Result<f64> {
        if z.abs() <= TAIL_Z0 {
            return Err(Error::Domain(format!("tail form only valid for |z| > {TAIL_Z0}, got {z}")));
        }
        let k = self.k as i32;
        if z < 0.0 {
            Ok((-z).powi(-k) * self.tail_l(-1.0 / z)?)
        } else {
            Ok(1.0 - z.powi(-k) * self.tail_r(1.0 / z)?)
        }
    }
}

/// γ = (k, α, β, φ^L(0), φ^R(0)): everything the sphere dynamics depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaVector {
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    pub phi_l0: f64,
    pub phi_r0: f64,
}

impl GammaVector {
    pub fn new(k: u32, alpha: f64, beta: f64, phi_l0: f64, phi_r0: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        if !(alpha > 0.0) || !(beta > 0.0) || !(phi_l0 > 0.0) || !(phi_r0 > 0.0) {
            return Err(Error::InvalidParams("gamma entries must be positive".into()));
        }
        Ok(Self { k, alpha, beta, phi_l0, phi_r0 })
    }

    pub fn from_model(p: &ModelParams, s: &Sigmoid) -> Result<Self> {
        Self::new(s.k, p.alpha, p.beta, s.phi_l0, s.phi_r0)
    }

    /// α + β
    pub fn s(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn y_l(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn y_r(&self) -> f64 {
        1.0 / self.s()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for PlanarState {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<PlanarState> for [f64; 2] {
    fn from(s: PlanarState) -> Self {
        [s.x, s.y]
    }
}

pub fn eval_sigmoid(spec: &Sigmoid, z: f64) -> Result<f64> {
    spec.value(z)
}

pub fn tail_decomposition(spec: &Sigmoid, z: f64) -> Result<f64> {
    spec.tail_value(z)
}

pub fn full_vector_field(p: &ModelParams, spec: &Sigmoid, s: [f64; 2]) -> Result<[f64; 2]> {
    p.require_smooth()?;
    let phi = spec.value((s[0] - 1.0) / p.eps)?;
    let g = p.alpha + p.beta * phi;
    Ok([g * s[1] - s[0], p.eta - (p.mu + g) * s[1]])
}

pub fn full_jacobian(p: &ModelParams, spec: &Sigmoid, s: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    p.require_smooth()?;
    let z = (s[0] - 1.0) / p.eps;
    let phi = spec.value(z)?;
    let dphi = spec.derivative(z)? / p.eps;
    let g = p.alpha + p.beta * phi;
    Ok([[p.beta * dphi * s[1] - 1.0, g], [-p.beta * dphi * s[1], -(p.mu + g)]])
}

/// The full field as a plain closure for the integrators. Sigmoid domain
/// errors surface as NaN, which the integrator reports as a non-finite state.
pub fn full_field<'a>(p: &'a ModelParams, spec: &'a Sigmoid) -> impl Fn(&[f64; 2]) -> [f64; 2] + Sync + 'a {
    move |s: &[f64; 2]| full_vector_field(p, spec, *s).unwrap_or([f64::NAN; 2])
}

pub type PlanarField = Arc<dyn Fn(&[f64; 2]) -> [f64; 2] + Send + Sync>;

/// X^L (1 − φ) + X^R φ with φ evaluated at (x − switch_x)/ε.
#[derive(Clone)]
pub struct BlendedPws {
    pub left_field: PlanarField,
    pub right_field: PlanarField,
    pub sigmoid: Sigmoid,
    pub eps: f64,
    pub switch_x: f64,
}

impl BlendedPws {
    pub fn new(left_field: PlanarField, right_field: PlanarField, sigmoid: Sigmoid, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParams("blend needs eps > 0".into()));
        }
        Ok(Self { left_field, right_field, sigmoid, eps, switch_x: 1.0 })
    }

    /// The substrate-depletion model written as a blend of its two linear limits.
    pub fn substrate_depletion(p: &ModelParams, sigmoid: Sigmoid) -> Result<Self> {
        let (l, r) = crate::pws::pws_fields(p);
        Self::new(Arc::new(move |s| l.eval(s)), Arc::new(move |s| r.eval(s)), sigmoid, p.eps)
    }

    pub fn field(&self) -> impl Fn(&[f64; 2]) -> [f64; 2] + Sync + '_ {
        move |s: &[f64; 2]| blended_field(self, *s).unwrap_or([f64::NAN; 2])
    }
}

pub fn blended_field(b: &BlendedPws, s: [f64; 2]) -> Result<[f64; 2]> {
    let phi = b.sigmoid.value((s[0] - b.switch_x) / b.eps)?;
    let l = (b.left_field)(&s);
    let r = (b.right_field)(&s);
    Ok([l[0] * (1.0 - phi) + r[0] * phi, l[1] * (1.0 - phi) + r[1] * phi])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(1.0, 2.0, 1.0, 0.0, 0.01).is_err());
        assert!(ModelParams::new(0.5, 0.4, 1.0, 0.0, 0.01).is_err());
        assert!(ModelParams::new(0.5, 2.0, 1.0, 0.0, -1.0).is_err());
        assert!(ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn smooth_field_needs_eps() {
        let p = ModelParams::new(0.5, 2.0, 1.0, 0.0, 0.0).unwrap();
        assert!(full_vector_field(&p, &Sigmoid::arctan(), [1.0, 1.0]).is_err());
    }

    #[test]
    fn midpoints() {
        assert_eq!(Sigmoid::arctan().value(0.0).unwrap(), 0.5);
        assert_eq!(Sigmoid::goldbeter_koshland(0.0).unwrap().value(0.0).unwrap(), 0.5);
        assert_eq!(Sigmoid::hill(10).unwrap().value(0.0).unwrap(), 0.5);
        assert_eq!(Sigmoid::algebraic().value(0.0).unwrap(), 0.5);
    }

    #[test]
    fn hill_domain() {
        assert!(matches!(Sigmoid::hill(3).unwrap().value(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tails_unsupported_for_hill_and_gk_eps() {
        assert!(matches!(Sigmoid::hill(4).unwrap().tail_value(-2e3), Err(Error::UnsupportedSpec(_))));
        assert!(matches!(
            Sigmoid::goldbeter_koshland(0.1).unwrap().tail_value(2e3),
            Err(Error::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for s in [Sigmoid::arctan(), Sigmoid::algebraic(), Sigmoid::hill(5).unwrap()] {
            for z in [-0.9, -0.2, 0.0, 0.7, 4.0] {
                let h = 1e-6;
                let fd = (s.value(z + h).unwrap() - s.value(z - h).unwrap()) / (2.0 * h);
                assert!((fd - s.derivative(z).unwrap()).abs() < 1e-8, "{:?} z={z}", s.family);
            }
        }
    }

    #[test]
    fn y_zero_gives_decay_and_inflow() {
        let p = ModelParams::new(0.5, 2.0, 1.3, 0.1, 0.01).unwrap();
        let f = full_vector_field(&p, &Sigmoid::arctan(), [0.7, 0.0]).unwrap();
        assert_eq!(f, [-0.7, 1.3]);
    }
}
