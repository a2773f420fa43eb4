//! Multi-start equilibrium search and Hopf detection along an equilibrium
//! branch.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{det2, eigenvalues, jacobian_fd, trace, Mat};
use crate::numerics::roots::{brent, newton};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqType {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Center,
    Degenerate,
}

impl EqType {
    pub fn is_stable(self) -> bool {
        matches!(self, EqType::StableNode | EqType::StableFocus)
    }

    pub fn from_jacobian(j: &Mat<2>) -> Self {
        let (tr, det) = (trace(j), det2(j));
        let disc = tr * tr - 4.0 * det;
        let scale = tr.abs().max(det.abs().sqrt()).max(1e-300);
        if det < 0.0 {
            EqType::Saddle
        } else if det.abs() < 1e-12 * scale * scale {
            EqType::Degenerate
        } else if tr.abs() < 1e-12 * scale {
            EqType::Center
        } else if disc < 0.0 {
            if tr < 0.0 { EqType::StableFocus } else { EqType::UnstableFocus }
        } else if tr < 0.0 {
            EqType::StableNode
        } else {
            EqType::UnstableNode
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumInfo {
    pub location: [f64; 2],
    pub jacobian: Mat<2>,
    pub eigenvalues: [(f64, f64); 2],
    pub classification: EqType,
}

impl EquilibriumInfo {
    pub fn at<F: Fn(&[f64; 2]) -> [f64; 2]>(f: &F, x: [f64; 2]) -> Self {
        let j = jacobian_fd(f, &x, 1e-7);
        let ev: Vec<Complex<f64>> = eigenvalues(&j);
        Self {
            location: x,
            jacobian: j,
            eigenvalues: [(ev[0].re, ev[0].im), (ev[1].re, ev[1].im)],
            classification: EqType::from_jacobian(&j),
        }
    }
}

pub const DEDUP_RADIUS: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const GRID: usize = 20;
/// Resolution of the sign scan that catches roots inside thin layers the
/// Newton grid steps over.
pub const SCAN: usize = 400;

/// Centres of scan cells in which both field components change sign.
fn sign_change_cells<F>(f: &F, bbox: [[f64; 2]; 2]) -> Vec<[f64; 2]>
where
    F: Fn(&[f64; 2]) -> [f64; 2] + Sync,
{
    let [[x0, x1], [y0, y1]] = bbox;
    let (hx, hy) = ((x1 - x0) / SCAN as f64, (y1 - y0) / SCAN as f64);
    let vals: Vec<[f64; 2]> =
        (0..(SCAN + 1) * (SCAN + 1)).into_par_iter().map(|i| f(&[x0 + hx * (i % (SCAN + 1)) as f64, y0 + hy * (i / (SCAN + 1)) as f64])).collect();
    let at = |i: usize, j: usize| vals[j * (SCAN + 1) + i];
    let mut out = Vec::new();
    for j in 0..SCAN {
        for i in 0..SCAN {
            let c = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            let flips = |k: usize| c.iter().any(|v| v[k] > 0.0) && c.iter().any(|v| v[k] <= 0.0);
            if flips(0) && flips(1) {
                out.push([x0 + hx * (i as f64 + 0.5), y0 + hy * (j as f64 + 0.5)]);
            }
        }
    }
    out
}

/// Newton from a `GRID`×`GRID` lattice over `[x0, x1]×[y0, y1]`, deduplicated
/// and sorted by x.
pub fn find_equilibria<F>(f: &F, bbox: [[f64; 2]; 2]) -> Vec<EquilibriumInfo>
where
    F: Fn(&[f64; 2]) -> [f64; 2] + Sync,
{
    let [[x0, x1], [y0, y1]] = bbox;
    let mut starts: Vec<[f64; 2]> = (0..GRID * GRID)
        .map(|i| {
            let (a, b) = ((i % GRID) as f64 + 0.5, (i / GRID) as f64 + 0.5);
            [x0 + (x1 - x0) * a / GRID as f64, y0 + (y1 - y0) * b / GRID as f64]
        })
        .collect();
    starts.extend(sign_change_cells(f, bbox));
    let roots: Vec<[f64; 2]> = starts
        .par_iter()
        .filter_map(|s| newton(f, *s, 1e-13, 60).ok())
        .filter(|r| {
            let v = f(r);
            v[0].hypot(v[1]) < RESIDUAL_TOL && r[0] >= x0 && r[0] <= x1 && r[1] >= y0 && r[1] <= y1
        })
        .collect();
    let mut uniq: Vec<[f64; 2]> = Vec::new();
    for r in roots {
        if !uniq.iter().any(|u| (u[0] - r[0]).hypot(u[1] - r[1]) < DEDUP_RADIUS) {
            uniq.push(r);
        }
    }
    uniq.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    uniq.into_iter().map(|x| EquilibriumInfo::at(f, x)).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HopfPoint {
    pub param: f64,
    pub location: [f64; 2],
    pub frequency: f64,
}

/// Follows the equilibrium through `x_start` over a uniform grid of the
/// family parameter and reports trace sign changes with positive determinant.
pub fn detect_hopf<G, F>(family: G, x_start: [f64; 2], range: (f64, f64), n: usize) -> Result<Vec<HopfPoint>>
where
    G: Fn(f64) -> F,
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    if n < 2 {
        return Err(Error::InvalidParams("need at least two grid points".into()));
    }
    let solve = |p: f64, guess: [f64; 2]| -> Result<([f64; 2], f64, f64)> {
        let f = family(p);
        let x = newton(&f, guess, 1e-13, 60)
            .map_err(|_| Error::NoConvergence(format!("equilibrium branch lost at parameter {p} (fold?)")))?;
        let j = jacobian_fd(&f, &x, 1e-7);
        Ok((x, trace(&j), det2(&j)))
    };
    let mut out = Vec::new();
    let mut prev = solve(range.0, x_start)?;
    let mut p_prev = range.0;
    for i in 1..n {
        let p = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
        let cur = solve(p, prev.0)?;
        if prev.1 * cur.1 < 0.0 && cur.2 > 0.0 {
            let x_guess = std::cell::Cell::new(prev.0);
            let ph = brent(
                |q| match solve(q, x_guess.get()) {
                    Ok((x, tr, _)) => {
                        x_guess.set(x);
                        tr
                    }
                    Err(_) => f64::NAN,
                },
                p_prev,
                p,
                1e-12,
            )?;
            let (x, _, det) = solve(ph, x_guess.get())?;
            out.push(HopfPoint { param: ph, location: x, frequency: det.sqrt() });
        }
        prev = cur;
        p_prev = p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_has_one_equilibrium() {
        let f = |s: &[f64; 2]| [-s[0] + 0.5 * s[1], 1.0 - s[1]];
        let eq = find_equilibria(&f, [[-5.0, 5.0], [-5.0, 5.0]]);
        assert_eq!(eq.len(), 1);
        assert!((eq[0].location[0] - 0.5).abs() < 1e-12);
        assert_eq!(eq[0].classification, EqType::StableNode);
    }

    #[test]
    fn hopf_in_normal_form_family() {
        let fam = |p: f64| move |s: &[f64; 2]| [p * s[0] - s[1] - s[0].powi(3), s[0] + p * s[1]];
        let h = detect_hopf(fam, [0.0, 0.0], (-1.0, 1.0), 21).unwrap();
        assert_eq!(h.len(), 1);
        assert!(h[0].param.abs() < 1e-10);
        assert!((h[0].frequency - 1.0).abs() < 1e-6);
    }
}
