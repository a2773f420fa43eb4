//! Tiny fixed-size dense helpers. Everything in this crate lives in two or
//! three dimensions, so arrays beat a general matrix type here.

use nalgebra::{Complex, DMatrix};

pub type Mat<const N: usize> = [[f64; N]; N];

pub fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn axpy<const N: usize>(a: f64, x: &[f64; N], y: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a * x[i] + y[i])
}

pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec<const N: usize>(m: &Mat<N>, v: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| dot(&m[i], v))
}

/// Gaussian elimination with partial pivoting. `None` for a numerically
/// singular matrix.
pub fn solve<const N: usize>(m: &Mat<N>, b: &[f64; N]) -> Option<[f64; N]> {
    let mut a = *m;
    let mut x = *b;
    for c in 0..N {
        let p = (c..N).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        x.swap(c, p);
        for r in c + 1..N {
            let f = a[r][c] / a[c][c];
            for j in c..N {
                a[r][j] -= f * a[c][j];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..N).rev() {
        let mut s = x[c];
        for j in c + 1..N {
            s -= a[c][j] * x[j];
        }
        x[c] = s / a[c][c];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Central-difference Jacobian with a per-component step `h·max(1, |x_j|)`.
pub fn jacobian_fd<const N: usize, F>(f: &F, x: &[f64; N], h: f64) -> Mat<N>
where
    F: Fn(&[f64; N]) -> [f64; N] + ?Sized,
{
    let mut j = [[0.0; N]; N];
    for c in 0..N {
        let s = h * x[c].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += s;
        xm[c] -= s;
        let (fp, fm) = (f(&xp), f(&xm));
        for r in 0..N {
            j[r][c] = (fp[r] - fm[r]) / (2.0 * s);
        }
    }
    j
}

pub fn trace<const N: usize>(m: &Mat<N>) -> f64 {
    (0..N).map(|i| m[i][i]).sum()
}

pub fn det2(m: &Mat<2>) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn eigenvalues<const N: usize>(m: &Mat<N>) -> Vec<Complex<f64>> {
    if N == 2 {
        let t = m[0][0] + m[1][1];
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = t * t / 4.0 - d;
        return if disc >= 0.0 {
            let s = disc.sqrt();
            // avoid cancellation in the smaller root
            let big = t / 2.0 + s.copysign(t);
            let small = if big != 0.0 { d / big } else { 0.0 };
            let mut v = vec![Complex::new(small, 0.0), Complex::new(big, 0.0)];
            v.sort_by(|a, b| a.re.total_cmp(&b.re));
            v
        } else {
            let s = (-disc).sqrt();
            vec![Complex::new(t / 2.0, -s), Complex::new(t / 2.0, s)]
        };
    }
    let dm = DMatrix::from_fn(N, N, |i, j| m[i][j]);
    let mut v: Vec<_> = dm.complex_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_3x3() {
        let m = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let b = matvec(&m, &x);
        let y = solve(&m, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
        assert!(solve(&[[1.0, 2.0], [2.0, 4.0]], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn eig2_real_and_complex() {
        let e = eigenvalues(&[[-1.0, 0.5], [0.0, -3.0]]);
        assert!((e[0].re + 3.0).abs() < 1e-14 && (e[1].re + 1.0).abs() < 1e-14);
        let e = eigenvalues(&[[0.0, 1.0], [-4.0, 0.0]]);
        assert!(e[0].re.abs() < 1e-14 && (e[1].im - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eig3_matches_diagonal() {
        let e = eigenvalues(&[[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 0.5]]);
        let re: Vec<f64> = e.iter().map(|c| c.re).collect();
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] - 0.5).abs() < 1e-12 && (re[2] - 1.0).abs() < 1e-12);
    }
}
