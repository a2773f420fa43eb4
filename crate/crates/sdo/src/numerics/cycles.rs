//! Poincaré return maps on oriented line sections and limit cycles as fixed
//! points of them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{jacobian_fd, trace};
use crate::numerics::ode::{Crossing, Event, IntegratorConfig, Record, Solver, Stop};

/// Slow-time horizon after which an orbit is declared not to return.
pub const T_MAX: f64 = 1e4;

/// Line through `point` with unit `normal`; crossings count in the direction
/// of the normal and only for tangential coordinates in `range`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Section {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub range: (f64, f64),
}

impl Section {
    pub fn new(point: [f64; 2], normal: [f64; 2]) -> Self {
        let n = normal[0].hypot(normal[1]);
        Self { point, normal: [normal[0] / n, normal[1] / n], range: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    /// Half-line starting at `point` in direction `dir`, crossed counter-clockwise
    /// relative to `dir`.
    pub fn ray(point: [f64; 2], dir: [f64; 2]) -> Self {
        Self { range: (0.0, f64::INFINITY), ..Self::new(point, [-dir[1], dir[0]]) }
    }

    pub fn vertical(x: f64) -> Self {
        Self::new([x, 0.0], [1.0, 0.0])
    }

    pub fn tangent(&self) -> [f64; 2] {
        [self.normal[1], -self.normal[0]]
    }

    pub fn flipped(&self) -> Self {
        let mut s = *self;
        s.normal = [-s.normal[0], -s.normal[1]];
        // keep the tangential parametrisation unchanged
        s.range = (-self.range.1, -self.range.0);
        s
    }

    pub fn level(&self, s: &[f64; 2]) -> f64 {
        (s[0] - self.point[0]) * self.normal[0] + (s[1] - self.point[1]) * self.normal[1]
    }

    pub fn coord(&self, s: &[f64; 2]) -> f64 {
        let t = self.tangent();
        (s[0] - self.point[0]) * t[0] + (s[1] - self.point[1]) * t[1]
    }

    pub fn at(&self, u: f64) -> [f64; 2] {
        let t = self.tangent();
        [self.point[0] + u * t[0], self.point[1] + u * t[1]]
    }

    fn contains(&self, u: f64) -> bool {
        u >= self.range.0 && u <= self.range.1
    }
}

/// Holdoff after leaving a section point so the start is not re-detected.
const HOLDOFF: f64 = 1e-6;

/// First oriented crossing of `section` after leaving `state`.
pub fn poincare_return<F>(f: &F, section: &Section, state: [f64; 2], cfg: &IntegratorConfig) -> Result<([f64; 2], f64)>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    poincare_return_within(f, section, state, cfg, T_MAX)
}

pub fn poincare_return_within<F>(
    f: &F,
    section: &Section,
    state: [f64; 2],
    cfg: &IntegratorConfig,
    t_max: f64,
) -> Result<([f64; 2], f64)>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    let sec = *section;
    let mut t0 = 0.0;
    let mut y = state;
    loop {
        let tr = Solver::new(f, *cfg)
            .event(Event::terminal(move |s: &[f64; 2]| sec.level(s), Crossing::Rising))
            .record(Record::Endpoints)
            .holdoff(HOLDOFF)
            .run(y, t0, t_max)?;
        let (t, end) = tr.end();
        if tr.stop == Stop::Reached {
            return Err(Error::NoReturn(t_max));
        }
        if sec.contains(sec.coord(&end)) {
            return Ok((end, t));
        }
        t0 = t;
        y = end;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStability {
    Attracting,
    Repelling,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCycle {
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<[f64; 2]>,
    pub period: f64,
    pub max_x: f64,
    pub min_x: f64,
    pub l2_norm: f64,
    /// Nontrivial Floquet multiplier exp(∮ div f dt) of the forward flow.
    pub multiplier: f64,
    pub log_multiplier: f64,
    /// Finite-difference slope of the return map in the direction actually
    /// integrated (time-reversed when searching repelling cycles).
    pub return_map_slope: f64,
    pub stability: CycleStability,
    /// Fixed point on the section.
    pub anchor: [f64; 2],
}

impl LimitCycle {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y")?;
        for (t, s) in self.times.iter().zip(&self.samples) {
            writeln!(w, "{t:.16e},{:.16e},{:.16e}", s[0], s[1])?;
        }
        Ok(())
    }
}

/// AUTO's L² norm: sqrt of the period-normalised integral of |u|².
pub fn l2_norm(times: &[f64], samples: &[[f64; 2]]) -> f64 {
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    let period = times[n - 1] - times[0];
    let sq = |s: &[f64; 2]| s[0] * s[0] + s[1] * s[1];
    let mut acc = 0.0;
    for i in 1..n {
        acc += 0.5 * (sq(&samples[i]) + sq(&samples[i - 1])) * (times[i] - times[i - 1]);
    }
    (acc / period).sqrt()
}

#[derive(Clone, Debug)]
pub struct CycleConfig {
    pub integrator: IntegratorConfig,
    /// Residual |P(u) − u| accepted as a fixed point.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step for P'(u).
    pub fd_step: f64,
    /// Largest Newton correction along the section.
    pub max_jump: f64,
    /// Follow the time-reversed field (repelling cycles).
    pub reverse: bool,
    pub t_max: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::with_tol(1e-10, 1e-12),
            tol: 1e-9,
            max_iter: 40,
            fd_step: 1e-6,
            max_jump: 0.25,
            reverse: false,
            t_max: T_MAX,
        }
    }
}

/// Periodic orbit through the fixed point of the return map to `section`
/// nearest `guess`. The section orientation is aligned with the flow at the
/// guess; repelling cycles need `cfg.reverse`.
pub fn find_limit_cycle<F>(f: &F, guess: [f64; 2], section: &Section, cfg: &CycleConfig) -> Result<LimitCycle>
where
    F: Fn(&[f64; 2]) -> [f64; 2] + Sync,
{
    let sign = if cfg.reverse { -1.0 } else { 1.0 };
    let g = |s: &[f64; 2]| {
        let v = f(s);
        [sign * v[0], sign * v[1]]
    };
    let mut sec = *section;
    let u0 = sec.coord(&guess);
    let start = sec.at(u0);
    let v = g(&start);
    if v[0] * sec.normal[0] + v[1] * sec.normal[1] < 0.0 {
        sec = sec.flipped();
    }
    let ret = |u: f64| -> Result<(f64, f64)> {
        let (s, t) = poincare_return_within(&g, &sec, sec.at(u), &cfg.integrator, cfg.t_max)?;
        Ok((sec.coord(&s), t))
    };
    let mut u = sec.coord(&start);
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let (pu, _) = ret(u)?;
        let r = pu - u;
        if r.abs() < cfg.tol {
            u = pu;
            converged = true;
            break;
        }
        let h = cfg.fd_step * u.abs().max(1.0);
        let d = match ret(u + h) {
            Ok((ph, _)) => (ph - pu) / h,
            Err(_) => 0.0,
        };
        // Newton on P(u) − u, falling back to plain iteration when P' ≈ 1
        let step = if (d - 1.0).abs() > 1e-3 { -r / (d - 1.0) } else { r };
        let step = step.clamp(-cfg.max_jump, cfg.max_jump);
        let mut next = u + step;
        if !sec.contains(next) {
            next = pu;
        }
        u = next;
    }
    if !converged {
        return Err(Error::NoConvergence("return-map fixed-point iteration diverged".into()));
    }
    let h = cfg.fd_step * u.abs().max(1.0);
    let (p0, _) = ret(u)?;
    let (p1, _) = ret(u + h)?;
    let m_run = (p1 - p0) / h;

    let anchor = sec.at(u);
    let gs = sec;
    let tr = Solver::new(&g, cfg.integrator)
        .event(Event::terminal(move |s: &[f64; 2]| gs.level(s), Crossing::Rising))
        .record(Record::Dense(6))
        .holdoff(HOLDOFF)
        .run(anchor, 0.0, cfg.t_max)?;
    // Re-run until the crossing that lies on the section's range.
    let (times, samples, period) = {
        let mut times = tr.t.clone();
        let mut samples = tr.y.clone();
        let mut last = tr.end();
        while !gs.contains(gs.coord(&last.1)) {
            let more = Solver::new(&g, cfg.integrator)
                .event(Event::terminal(move |s: &[f64; 2]| gs.level(s), Crossing::Rising))
                .record(Record::Dense(6))
                .holdoff(HOLDOFF)
                .run(last.1, last.0, cfg.t_max)?;
            if more.stop == Stop::Reached {
                return Err(Error::NoReturn(cfg.t_max));
            }
            times.extend_from_slice(&more.t[1..]);
            samples.extend_from_slice(&more.y[1..]);
            last = more.end();
        }
        (times, samples, last.0)
    };
    let (times, samples) = if cfg.reverse {
        // express in forward time, starting from the anchor
        let t: Vec<f64> = times.iter().rev().map(|t| period - t).collect();
        let s: Vec<[f64; 2]> = samples.into_iter().rev().collect();
        (t, s)
    } else {
        (times, samples)
    };
    // Floquet exponent of the forward field: ∮ div f dt
    let div: Vec<f64> = samples.iter().map(|x| trace(&jacobian_fd(f, x, 1e-7))).collect();
    let log_multiplier: f64 = (1..times.len()).map(|i| 0.5 * (div[i] + div[i - 1]) * (times[i] - times[i - 1])).sum();
    let max_x = samples.iter().map(|s| s[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_x = samples.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    Ok(LimitCycle {
        l2_norm: l2_norm(&times, &samples),
        times,
        samples,
        period,
        max_x,
        min_x,
        multiplier: log_multiplier.exp(),
        log_multiplier,
        return_map_slope: m_run,
        stability: if log_multiplier < 0.0 { CycleStability::Attracting } else { CycleStability::Repelling },
        anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_returns_after_two_pi() {
        let f = |s: &[f64; 2]| [-s[1], s[0]];
        let sec = Section::ray([0.0, 0.0], [1.0, 0.0]);
        let (s, t) = poincare_return(&f, &sec, [1.0, 0.0], &IntegratorConfig::with_tol(1e-12, 1e-14)).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-8);
        assert!((s[0] - 1.0).abs() < 1e-8);
    }

    // Hopf normal form with cycle at r = 1: r' = r(1 − r²), θ' = 1.
    fn hopf(s: &[f64; 2]) -> [f64; 2] {
        let r2 = s[0] * s[0] + s[1] * s[1];
        [s[0] * (1.0 - r2) - s[1], s[1] * (1.0 - r2) + s[0]]
    }

    #[test]
    fn attracting_normal_form_cycle() {
        let sec = Section::ray([0.0, 0.0], [1.0, 0.0]);
        let c = find_limit_cycle(&hopf, [0.5, 0.0], &sec, &CycleConfig::default()).unwrap();
        assert!((c.anchor[0] - 1.0).abs() < 1e-7);
        assert!((c.period - 2.0 * PI).abs() < 1e-7);
        // multiplier exp(−4π)
        assert!((c.multiplier - (-4.0 * PI).exp()).abs() < 1e-6);
        assert!((c.return_map_slope - (-4.0 * PI).exp()).abs() < 1e-4);
        assert_eq!(c.stability, CycleStability::Attracting);
        assert!((c.l2_norm - 1.0).abs() < 1e-6);
        let (a, b) = (c.samples[0], *c.samples.last().unwrap());
        assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-8);
    }

    #[test]
    fn repelling_cycle_by_time_reversal() {
        let f = |s: &[f64; 2]| {
            let v = hopf(s);
            [-v[0], -v[1]]
        };
        let sec = Section::ray([0.0, 0.0], [1.0, 0.0]);
        let cfg = CycleConfig { reverse: true, ..CycleConfig::default() };
        let c = find_limit_cycle(&f, [1.3, 0.0], &sec, &cfg).unwrap();
        assert_eq!(c.stability, CycleStability::Repelling);
        assert!((c.log_multiplier - 4.0 * PI).abs() < 1e-5);
        assert!(c.return_map_slope < 1.0);
        assert!((c.max_x - 1.0).abs() < 1e-6);
    }
}
