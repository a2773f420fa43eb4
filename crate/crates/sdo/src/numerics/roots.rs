use crate::error::{Error, Result};
use crate::numerics::linalg::{jacobian_fd, norm, solve};

/// Brent's method on a bracket with `f(a)·f(b) ≤ 0`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    for (x, v) in [(a, fa), (b, fb)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(x));
        }
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange(format!("f({a}) = {fa}, f({b}) = {fb}")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite(b));
        }
    }
    Err(Error::NoConvergence("brent: iteration cap".into()))
}

/// Plain bisection on a sign change; used where `f` is only piecewise
/// continuous (e.g. the shooting gap) and Brent's interpolation misleads.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange(format!("f({lo}) = {flo}, f({hi}) = {fhi}")));
    }
    let slo = flo.signum();
    while (hi - lo).abs() > xtol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Damped Newton with a finite-difference Jacobian.
pub fn newton<const N: usize, F>(f: &F, x0: [f64; N], ftol: f64, max_iter: usize) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut x = x0;
    let mut fx = f(&x);
    for _ in 0..max_iter {
        let r = norm(&fx);
        if !r.is_finite() {
            break;
        }
        if r < ftol {
            return Ok(x);
        }
        let j = jacobian_fd(f, &x, 1e-7);
        let neg = fx.map(|v| -v);
        let Some(dx) = solve(&j, &neg) else { break };
        let mut lambda = 1.0;
        loop {
            let xn: [f64; N] = std::array::from_fn(|i| x[i] + lambda * dx[i]);
            let fn_ = f(&xn);
            if norm(&fn_) < r || lambda < 1e-4 {
                x = xn;
                fx = fn_;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm(&fx) < ftol {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!("newton residual {:e}", norm(&fx))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_cubic() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn bisect_step_function() {
        let r = bisect(|x| Ok(if x < 0.3 { -1.0 } else { 1.0 }), 0.0, 1.0, 1e-10).unwrap();
        assert!((r - 0.3).abs() < 1e-9);
    }

    #[test]
    fn newton_circle_line() {
        let f = |v: &[f64; 2]| [v[0] * v[0] + v[1] * v[1] - 1.0, v[0] - v[1]];
        let x = newton(&f, [1.0, 0.2], 1e-13, 50).unwrap();
        assert!((x[0] - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
