//! Adaptive Dormand–Prince 5(4) with dense output and event location, plus a
//! linearly implicit (ROS2, L-stable) fallback that is engaged only when the
//! explicit scheme detects genuine stiffness.

use crate::error::{Error, Result};
use crate::numerics::linalg::{eigenvalues, jacobian_fd, solve, Mat};
use crate::numerics::roots::brent;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Allow switching to the implicit scheme on detected stiffness or step collapse.
    pub stiff_switch: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY, stiff_switch: true, max_steps: 20_000_000 }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

impl Crossing {
    fn fires(self, g0: f64, g1: f64) -> bool {
        match self {
            Crossing::Rising => g0 < 0.0 && g1 >= 0.0,
            Crossing::Falling => g0 > 0.0 && g1 <= 0.0,
            Crossing::Any => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
        }
    }
}

pub struct Event<'a, const N: usize> {
    pub g: Box<dyn Fn(&[f64; N]) -> f64 + Send + Sync + 'a>,
    pub crossing: Crossing,
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn terminal(g: impl Fn(&[f64; N]) -> f64 + Send + Sync + 'a, crossing: Crossing) -> Self {
        Self { g: Box::new(g), crossing, terminal: true }
    }

    pub fn passive(g: impl Fn(&[f64; N]) -> f64 + Send + Sync + 'a, crossing: Crossing) -> Self {
        Self { g: Box::new(g), crossing, terminal: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<const N: usize> {
    pub event: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Reached,
    Event(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    /// Every accepted step.
    Steps,
    /// Every accepted step refined with `m − 1` interpolated points.
    Dense(usize),
    /// Only the initial and final states.
    Endpoints,
}

#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub hits: Vec<Hit<N>>,
    pub stop: Stop,
    pub steps: usize,
    pub stiff_steps: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn end(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

enum Segment<const N: usize> {
    Dopri { t0: f64, h: f64, r: [[f64; N]; 5] },
    Hermite { t0: f64, h: f64, y0: [f64; N], y1: [f64; N], f0: [f64; N], f1: [f64; N] },
}

impl<const N: usize> Segment<N> {
    fn at(&self, theta: f64) -> [f64; N] {
        match self {
            Segment::Dopri { r, .. } => {
                let s = 1.0 - theta;
                std::array::from_fn(|i| r[0][i] + theta * (r[1][i] + s * (r[2][i] + theta * (r[3][i] + s * r[4][i]))))
            }
            Segment::Hermite { h, y0, y1, f0, f1, .. } => {
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                std::array::from_fn(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
            }
        }
    }

    fn time(&self, theta: f64) -> f64 {
        match self {
            Segment::Dopri { t0, h, .. } | Segment::Hermite { t0, h, .. } => t0 + theta * h,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const ROS2_GAMMA: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
/// Accepted implicit steps before the explicit scheme is retried.
const STIFF_WINDOW: usize = 200;

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

pub struct Solver<'a, const N: usize, F> {
    f: &'a F,
    cfg: IntegratorConfig,
    events: Vec<Event<'a, N>>,
    record: Record,
    holdoff: f64,
}

impl<'a, const N: usize, F> Solver<'a, N, F>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(f: &'a F, cfg: IntegratorConfig) -> Self {
        Self { f, cfg, events: Vec::new(), record: Record::Steps, holdoff: 0.0 }
    }

    pub fn event(mut self, e: Event<'a, N>) -> Self {
        self.events.push(e);
        self
    }

    pub fn record(mut self, r: Record) -> Self {
        self.record = r;
        self
    }

    /// Ignore event roots closer than `dt` (in |t − t0|) to the start.
    pub fn holdoff(mut self, dt: f64) -> Self {
        self.holdoff = dt;
        self
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| self.cfg.abs_tol + self.cfg.rel_tol * a[i].abs().max(b[i].abs()))
    }

    fn rms(v: &[f64; N], sc: &[f64; N]) -> f64 {
        (v.iter().zip(sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / N as f64).sqrt()
    }

    fn initial_step(&self, y: &[f64; N], f0: &[f64; N], span: f64) -> f64 {
        let sc = self.scale(y, y);
        let d0 = Self::rms(y, &sc);
        let d1 = Self::rms(f0, &sc);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = comb(y, h0, &[(1.0, f0)]);
        let f1 = (self.f)(&y1);
        let df: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = Self::rms(&df, &sc) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(span).min(self.cfg.max_step)
    }

    pub fn run(&self, y0: [f64; N], t0: f64, t1: f64) -> Result<Trajectory<N>> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut out = Trajectory { t: vec![t0], y: vec![y0], hits: Vec::new(), stop: Stop::Reached, steps: 0, stiff_steps: 0 };
        if t1 == t0 {
            return Ok(out);
        }
        let f = self.f;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(&y);
        if !k1.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        let mut h = self.initial_step(&y, &k1, (t1 - t0).abs());
        let mut g_prev: Vec<f64> = self.events.iter().map(|e| (e.g)(&y)).collect();
        let mut stiff_hits = 0usize;
        let mut calm = 0usize;
        let mut implicit_left = 0usize;
        let mut rejected_in_row = 0usize;

        while (t1 - t) * dir > 0.0 {
            if out.steps >= self.cfg.max_steps {
                return Err(Error::MaxSteps(self.cfg.max_steps));
            }
            h = h.min(self.cfg.max_step).min((t1 - t).abs());
            let hmin = 1e-14 * t.abs().max(1.0);
            if h < hmin {
            if self.cfg.stiff_switch && implicit_left == 0 {
                    implicit_left = STIFF_WINDOW;
                    h = hmin * 1e3;
                } else {
                    return Err(Error::StepCollapse { t, h });
                }
            }
            let hs = h * dir;

            let (ynew, knew, err, seg, stiff_ratio) = if implicit_left > 0 {
                let j = jacobian_fd(f, &y, 1e-8);
                let mut m: Mat<N> = [[0.0; N]; N];
                for r in 0..N {
                    for c in 0..N {
                        m[r][c] = if r == c { 1.0 } else { 0.0 } - ROS2_GAMMA * hs * j[r][c];
                    }
                }
                let Some(s1) = solve(&m, &k1) else {
                    h *= 0.25;
                    continue;
                };
                let f2 = f(&comb(&y, hs, &[(1.0, &s1)]));
                let rhs: [f64; N] = std::array::from_fn(|i| f2[i] - 2.0 * s1[i]);
                let Some(s2) = solve(&m, &rhs) else {
                    h *= 0.25;
                    continue;
                };
                let yn = comb(&y, hs, &[(1.5, &s1), (0.5, &s2)]);
                let kn = f(&yn);
                let e: [f64; N] = std::array::from_fn(|i| 0.5 * hs * (s1[i] + s2[i]));
                let err = Self::rms(&e, &self.scale(&y, &yn));
                let seg = Segment::Hermite { t0: t, h: hs, y0: y, y1: yn, f0: k1, f1: kn };
                (yn, kn, err, seg, 0.0)
            } else {
                let k2 = f(&comb(&y, hs, &[(A21, &k1)]));
                let k3 = f(&comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
                let k4 = f(&comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
                let k5 = f(&comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
                let ysti = comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
                let k6 = f(&ysti);
                let yn = comb(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
                let k7 = f(&yn);
                let e: [f64; N] = std::array::from_fn(|i| {
                    hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                });
                let err = Self::rms(&e, &self.scale(&y, &yn));
                let mut r = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = yn[i] - y[i];
                    let bspl = hs * k1[i] - dy;
                    r[0][i] = y[i];
                    r[1][i] = dy;
                    r[2][i] = bspl;
                    r[3][i] = dy - hs * k7[i] - bspl;
                    r[4][i] =
                        hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let num: f64 = (0..N).map(|i| (k7[i] - k6[i]).powi(2)).sum();
                let den: f64 = (0..N).map(|i| (yn[i] - ysti[i]).powi(2)).sum();
                let ratio = if den > 0.0 { h * (num / den).sqrt() } else { 0.0 };
                (yn, k7, err, Segment::Dopri { t0: t, h: hs, r }, ratio)
            };

            let finite = ynew.iter().chain(knew.iter()).all(|v| v.is_finite());
            if !finite || !err.is_finite() || err > 1.0 {
                rejected_in_row += 1;
                let fac = if finite && err.is_finite() {
                    let p = if implicit_left > 0 { 0.5 } else { 0.2 };
                    (0.9 * err.powf(-p)).clamp(0.1, 0.9)
                } else {
                    0.25
                };
                h *= fac;
                if rejected_in_row > 60 && !finite {
                    return Err(Error::NonFinite(t));
                }
                continue;
            }
            rejected_in_row = 0;
            out.steps += 1;
            if implicit_left > 0 {
                out.stiff_steps += 1;
                implicit_left -= 1;
            }

            // Event scan on a few interior points so that a double crossing
            // inside one large step is not silently lost.
            let t_new = t + hs;
            let g_new: Vec<f64> = self.events.iter().map(|ev| (ev.g)(&ynew)).collect();
            let mut found: Vec<(f64, usize)> = Vec::new();
            for (i, ev) in self.events.iter().enumerate() {
                let (mut ga, mut ta) = (g_prev[i], 0.0);
                for q in 1..=4 {
                    let tb = q as f64 / 4.0;
                    let gb = if q == 4 { g_new[i] } else { (ev.g)(&seg.at(tb)) };
                    if ev.crossing.fires(ga, gb) {
                        let r = brent(|x| (ev.g)(&seg.at(x)), ta, tb, 1e-13).unwrap_or(tb);
                        if (seg.time(r) - t0).abs() > self.holdoff {
                            found.push((r, i));
                            break;
                        }
                    }
                    ga = gb;
                    ta = tb;
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(r, i) in &found {
                out.hits.push(Hit { event: i, t: seg.time(r), y: seg.at(r) });
                if self.events[i].terminal {
                    self.push_record(&mut out, &seg, r);
                    if self.record == Record::Endpoints {
                        out.t.push(seg.time(r));
                        out.y.push(seg.at(r));
                    }
                    out.stop = Stop::Event(i);
                    return Ok(out);
                }
            }

            self.push_record(&mut out, &seg, 1.0);
            if self.record != Record::Endpoints {
                // replace the interpolated endpoint by the exact one
                *out.y.last_mut().unwrap() = ynew;
                *out.t.last_mut().unwrap() = t_new;
            }
            t = t_new;
            y = ynew;
            k1 = knew;
            g_prev = g_new;

            if self.cfg.stiff_switch && implicit_left == 0 {
                if stiff_ratio > 3.25 {
                    calm = 0;
                    stiff_hits += 1;
                    if stiff_hits >= 15 {
                        stiff_hits = 0;
                        // Only a strongly damped mode is true stiffness; a large
                        // positive eigenvalue is resolved by the explicit scheme.
                        let j = jacobian_fd(f, &y, 1e-8);
                        let damped = eigenvalues(&j).iter().map(|l| -l.re).fold(0.0, f64::max);
                        if damped * h > 3.25 {
                            implicit_left = STIFF_WINDOW;
                        }
                    }
                } else {
                    calm += 1;
                    if calm >= 6 {
                        stiff_hits = 0;
                    }
                }
            }

            let p = if implicit_left > 0 { 0.5 } else { 0.2 };
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-p)).clamp(0.2, 5.0) };
            h *= fac;
        }
        if let Record::Endpoints = self.record {
            out.t.push(t);
            out.y.push(y);
        }
        Ok(out)
    }

    fn push_record(&self, out: &mut Trajectory<N>, seg: &Segment<N>, upto: f64) {
        match self.record {
            Record::Endpoints => {}
            Record::Steps => {
                out.t.push(seg.time(upto));
                out.y.push(seg.at(upto));
            }
            Record::Dense(m) => {
                let m = m.max(1);
                for q in 1..=m {
                    let th = upto * q as f64 / m as f64;
                    out.t.push(seg.time(th));
                    out.y.push(seg.at(th));
                }
            }
        }
    }
}

/// Convenience wrapper: integrate without events, recording every step.
pub fn integrate<const N: usize, F>(f: &F, y0: [f64; N], t0: f64, t1: f64, cfg: IntegratorConfig) -> Result<Trajectory<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    Solver::new(f, cfg).run(y0, t0, t1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |y: &[f64; 1]| [-y[0]];
        let tr = integrate(&f, [1.0], 0.0, 5.0, IntegratorConfig::with_tol(1e-11, 1e-13)).unwrap();
        let (t, y) = tr.end();
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_time() {
        let f = |y: &[f64; 1]| [-y[0]];
        let tr = integrate(&f, [1.0], 0.0, -2.0, IntegratorConfig::default()).unwrap();
        assert!((tr.end().1[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_accurate() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let tr = Solver::new(&f, IntegratorConfig::with_tol(1e-10, 1e-12)).record(Record::Dense(7)).run([1.0, 0.0], 0.0, 10.0).unwrap();
        for (t, y) in tr.t.iter().zip(&tr.y) {
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn events_locate_crossings() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let s = Solver::new(&f, IntegratorConfig::default())
            .event(Event::passive(|y: &[f64; 2]| y[1], Crossing::Falling))
            .event(Event::terminal(|y: &[f64; 2]| y[0] - 0.5, Crossing::Rising));
        let tr = s.run([1.0, 0.0], 0.0, 100.0).unwrap();
        // y = (cos t, −sin t): y[1] falls through 0 at t = 2π·m; x rises through 0.5 at t = 2π − π/3
        assert_eq!(tr.stop, Stop::Event(1));
        assert!((tr.end().0 - (2.0 * std::f64::consts::PI - std::f64::consts::PI / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn stiff_problem_switches_to_implicit() {
        // Robertson-like linear stiff pair.
        let f = |y: &[f64; 2]| [-1e5 * (y[0] - y[1].cos()), -y[1]];
        let tr = Solver::new(&f, IntegratorConfig::with_tol(1e-6, 1e-9)).record(Record::Endpoints).run([0.0, 1.0], 0.0, 50.0).unwrap();
        assert!(tr.stiff_steps > 0);
        let y = tr.end().1;
        assert!((y[1] - (-50.0f64).exp()).abs() < 1e-6);
        assert!((y[0] - y[1].cos()).abs() < 1e-4);
    }
}
