//! The ε = 0 limit: two affine systems glued along `x = 1`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::roots::brent;

/// `ż = A z + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearField {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl LinearField {
    pub fn eval(&self, s: &[f64; 2]) -> [f64; 2] {
        let a = &self.a;
        [a[0][0] * s[0] + a[0][1] * s[1] + self.b[0], a[1][0] * s[0] + a[1][1] * s[1] + self.b[1]]
    }

    /// Both pieces are upper triangular with a nonzero diagonal, so the node
    /// always exists.
    pub fn node(&self) -> [f64; 2] {
        let a = &self.a;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let (b0, b1) = (-self.b[0], -self.b[1]);
        [(b0 * a[1][1] - a[0][1] * b1) / det, (a[0][0] * b1 - a[1][0] * b0) / det]
    }

    /// `e^{At}` via the Putzer representation `c₀ I + c₁ A`.
    pub fn exp(&self, t: f64) -> [[f64; 2]; 2] {
        let a = &self.a;
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr / 4.0 - det;
        let (c0, c1) = if disc >= 0.0 {
            let sq = disc.sqrt();
            let (l1, l2) = (tr / 2.0 + sq, tr / 2.0 - sq);
            let d = l1 - l2;
            // (e^{l1 t} − e^{l2 t})/(l1 − l2) without cancellation
            let c1 = if (d * t).abs() < 1e-300 { t * (l2 * t).exp() } else { (l2 * t).exp() * (d * t).exp_m1() / d };
            ((l1 * t).exp() - l1 * c1, c1)
        } else {
            let (re, im) = (tr / 2.0, (-disc).sqrt());
            let c1 = (re * t).exp() * (im * t).sin() / im;
            ((re * t).exp() * (im * t).cos() - re * c1, c1)
        };
        [[c0 + c1 * a[0][0], c1 * a[0][1]], [c1 * a[1][0], c0 + c1 * a[1][1]]]
    }

    /// Exact flow map.
    pub fn flow(&self, s0: [f64; 2], t: f64) -> [f64; 2] {
        let n = self.node();
        let e = self.exp(t);
        let d = [s0[0] - n[0], s0[1] - n[1]];
        [n[0] + e[0][0] * d[0] + e[0][1] * d[1], n[1] + e[1][0] * d[0] + e[1][1] * d[1]]
    }

    /// Eigenpairs of a triangular `A`, in the order (−1, other).
    pub fn eigensolutions(&self) -> [(f64, [f64; 2]); 2] {
        let a = &self.a;
        let (l1, l2) = (a[0][0], a[1][1]);
        let v2 = if (l2 - l1).abs() > 0.0 { [a[0][1] / (l2 - l1), 1.0] } else { [1.0, 0.0] };
        [(l1, [1.0, 0.0]), (l2, v2)]
    }
}

pub fn pws_fields(p: &ModelParams) -> (LinearField, LinearField) {
    let s = p.alpha + p.beta;
    (
        LinearField { a: [[-1.0, p.alpha], [0.0, -(p.mu + p.alpha)]], b: [0.0, p.eta] },
        LinearField { a: [[-1.0, s], [0.0, -(p.mu + s)]], b: [0.0, p.eta] },
    )
}

/// (η^R(μ), η^L(μ)).
pub fn eta_boundaries(p: &ModelParams) -> (f64, f64) {
    (1.0 + p.mu / (p.alpha + p.beta), 1.0 + p.mu / p.alpha)
}

/// Scaled boundaries (η₁^L, η₁^R) = (μ₁/α, μ₁/(α+β)).
pub fn eta1_boundaries(alpha: f64, beta: f64, mu1: f64) -> (f64, f64) {
    (mu1 / alpha, mu1 / (alpha + beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodePosition {
    Real,
    Boundary,
    Virtual,
}

#[derive(Clone, Debug, Serialize)]
pub struct PwsStructure {
    pub y_l: f64,
    pub y_r: f64,
    pub p_l: [f64; 2],
    pub p_r: [f64; 2],
    pub z_l: [f64; 2],
    pub z_r: [f64; 2],
    pub eta_l: f64,
    pub eta_r: f64,
    pub eig_l: [(f64, [f64; 2]); 2],
    pub eig_r: [(f64, [f64; 2]); 2],
}

impl PwsStructure {
    pub fn new(p: &ModelParams) -> Self {
        let (l, r) = pws_fields(p);
        let (eta_r, eta_l) = eta_boundaries(p);
        let (y_l, y_r) = (1.0 / p.alpha, 1.0 / (p.alpha + p.beta));
        Self {
            y_l,
            y_r,
            p_l: [1.0, y_l],
            p_r: [1.0, y_r],
            z_l: l.node(),
            z_r: r.node(),
            eta_l,
            eta_r,
            eig_l: l.eigensolutions(),
            eig_r: r.eigensolutions(),
        }
    }
}

fn position(diff: f64, scale: f64) -> NodePosition {
    if diff.abs() <= 1e-12 * scale.max(1.0) {
        NodePosition::Boundary
    } else if diff > 0.0 {
        NodePosition::Real
    } else {
        NodePosition::Virtual
    }
}

/// (left node, right node). `z^L` is real iff η < η^L, `z^R` iff η > η^R.
pub fn classify_node_position(p: &ModelParams) -> (NodePosition, NodePosition) {
    let (er, el) = eta_boundaries(p);
    (position(el - p.eta, el), position(p.eta - er, er))
}

#[derive(Clone, Debug, Serialize)]
pub struct Arc {
    pub t: Vec<f64>,
    pub pts: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularCycle {
    pub gamma_l: Arc,
    pub gamma_r: Arc,
    pub closure_gap: f64,
}

impl SingularCycle {
    /// Γ^L followed by Γ^R as one closed polyline.
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        let mut v = self.gamma_l.pts.clone();
        v.extend_from_slice(&self.gamma_r.pts[1..]);
        v
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "arc_id,t,x,y")?;
        for (id, arc) in [("L", &self.gamma_l), ("R", &self.gamma_r)] {
            for (t, p) in arc.t.iter().zip(&arc.pts) {
                writeln!(w, "{id},{t:.16e},{:.16e},{:.16e}", p[0], p[1])?;
            }
        }
        Ok(())
    }
}

const ARC_CUTOFF: f64 = 1e-8;

/// Samples the orbit of `s0` until it is within the cutoff of the node, then
/// snaps the final sample onto the node. Returns the arc and the snap size.
fn node_arc(f: &LinearField, s0: [f64; 2], dt: f64) -> (Arc, f64) {
    let n = f.node();
    let dist = |s: &[f64; 2]| ((s[0] - n[0]).powi(2) + (s[1] - n[1]).powi(2)).sqrt();
    let mut arc = Arc { t: vec![0.0], pts: vec![s0] };
    let mut t = 0.0;
    loop {
        t += dt;
        let s = f.flow(s0, t);
        let d = dist(&s);
        if d < ARC_CUTOFF {
            arc.t.push(t);
            arc.pts.push(n);
            return (arc, d);
        }
        arc.t.push(t);
        arc.pts.push(s);
    }
}

pub fn build_singular_cycle(p: &ModelParams) -> Result<SingularCycle> {
    if p.eta != 1.0 || p.mu != 0.0 {
        return Err(Error::InvalidParams("the singular cycle is defined at eta = 1, mu = 0".into()));
    }
    let st = PwsStructure::new(p);
    let (l, r) = pws_fields(p);
    let (gamma_l, gl) = node_arc(&l, st.p_r, 0.005);
    let (gamma_r, gr) = node_arc(&r, st.p_l, 0.005);
    let junction = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let closure_gap = gl
        .max(gr)
        .max(junction(*gamma_l.pts.last().unwrap(), gamma_r.pts[0]))
        .max(junction(*gamma_r.pts.last().unwrap(), gamma_l.pts[0]));
    Ok(SingularCycle { gamma_l, gamma_r, closure_gap })
}

/// First `t > 0` at which the affine flow from `s0` returns to `x = 1`.
fn first_switch(f: &LinearField, s0: [f64; 2], t_max: f64) -> Result<f64> {
    let g = |t: f64| f.flow(s0, t)[0] - 1.0;
    let dt = 1e-3;
    let mut t = dt;
    let mut gp = g(t);
    while t < t_max {
        let tn = t + dt;
        let gn = g(tn);
        if gp.signum() != gn.signum() {
            return brent(g, t, tn, 1e-14);
        }
        t = tn;
        gp = gn;
    }
    Err(Error::NoReturn(t_max))
}

/// The ε = 0 crossing cycle when both nodes are virtual: alternate the right
/// and left flows, switching at `x = 1`, until the crossing ordinate settles.
pub fn crossing_cycle(p: &ModelParams) -> Result<SingularCycle> {
    let (nl, nr) = classify_node_position(p);
    if nl != NodePosition::Virtual || nr != NodePosition::Virtual {
        return Err(Error::InvalidParams("crossing cycle needs both nodes virtual".into()));
    }
    let (l, r) = pws_fields(p);
    let st = PwsStructure::new(p);
    let half = |y: f64| -> Result<(f64, f64, f64, f64)> {
        let tr = first_switch(&r, [1.0, y], 1e3)?;
        let y1 = r.flow([1.0, y], tr)[1];
        let tl = first_switch(&l, [1.0, y1], 1e3)?;
        Ok((tr, y1, tl, l.flow([1.0, y1], tl)[1]))
    };
    let mut y = st.y_l + 0.1;
    for _ in 0..500 {
        let (_, _, _, yn) = half(y)?;
        if (yn - y).abs() < 1e-13 * y.abs().max(1.0) {
            y = yn;
            let (tr, y1, tl, _) = half(y)?;
            let sample = |f: &LinearField, s0: [f64; 2], tend: f64| {
                let m = ((tend / 0.005).ceil() as usize).max(2);
                let t: Vec<f64> = (0..=m).map(|i| tend * i as f64 / m as f64).collect();
                let pts = t.iter().map(|&t| f.flow(s0, t)).collect();
                Arc { t, pts }
            };
            let gamma_r = sample(&r, [1.0, y], tr);
            let gamma_l = sample(&l, [1.0, y1], tl);
            let gap = (gamma_l.pts.last().unwrap()[1] - y).abs();
            return Ok(SingularCycle { gamma_l, gamma_r, closure_gap: gap });
        }
        y = yn;
    }
    Err(Error::NoConvergence("crossing cycle return map".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eta: f64, mu: f64) -> ModelParams {
        ModelParams::new(0.5, 2.0, eta, mu, 0.0).unwrap()
    }

    #[test]
    fn exp_matches_series() {
        let f = LinearField { a: [[-1.0, 2.5], [0.0, -2.5]], b: [0.0, 0.0] };
        let g = LinearField { a: [[-0.3, 1.0], [-2.0, -0.1]], b: [0.0, 0.0] };
        for f in [f, g] {
            let t = 0.7;
            // Taylor series oracle
            let mut term = [[1.0, 0.0], [0.0, 1.0]];
            let mut sum = term;
            for n in 1..60 {
                let mut nt = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        nt[i][j] = (0..2).map(|k| term[i][k] * f.a[k][j]).sum::<f64>() * t / n as f64;
                    }
                }
                term = nt;
                for i in 0..2 {
                    for j in 0..2 {
                        sum[i][j] += term[i][j];
                    }
                }
            }
            let e = f.exp(t);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((e[i][j] - sum[i][j]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn nodes_at_eta_one() {
        let st = PwsStructure::new(&p(1.0, 0.0));
        assert_eq!(st.z_l, [1.0, 2.0]);
        assert!((st.z_r[0] - 1.0).abs() < 1e-15 && (st.z_r[1] - 0.4).abs() < 1e-15);
        assert_eq!(classify_node_position(&p(1.0, 0.0)), (NodePosition::Boundary, NodePosition::Boundary));
        assert_eq!(classify_node_position(&p(1.1, 0.1)), (NodePosition::Real, NodePosition::Real));
        assert_eq!(classify_node_position(&p(1.3, 0.1)).0, NodePosition::Virtual);
    }

    #[test]
    fn eigenvectors() {
        let (l, r) = pws_fields(&p(1.0, 0.1));
        for f in [l, r] {
            for (lam, v) in f.eigensolutions() {
                assert!(lam < 0.0);
                let av = [f.a[0][0] * v[0] + f.a[0][1] * v[1], f.a[1][0] * v[0] + f.a[1][1] * v[1]];
                assert!((av[0] - lam * v[0]).abs() < 1e-14 && (av[1] - lam * v[1]).abs() < 1e-14);
            }
        }
    }
}
