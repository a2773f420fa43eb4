//! Polyline utilities: arclength resampling and Hausdorff distance.

/// `n` points equally spaced in arclength along the polyline.
pub fn resample(pts: &[[f64; 2]], n: usize) -> Vec<[f64; 2]> {
    if pts.len() < 2 || n < 2 {
        return pts.iter().copied().take(n.max(1)).collect();
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while j + 2 < cum.len() && cum[j + 1] < s {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let th = if seg > 0.0 { ((s - cum[j]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        out.push([pts[j][0] + th * (pts[j + 1][0] - pts[j][0]), pts[j][1] + th * (pts[j + 1][1] - pts[j][1])]);
    }
    out
}

fn directed(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two point samples.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Points per curve used when comparing cycles.
pub const HAUSDORFF_SAMPLES: usize = 1000;

/// Hausdorff distance between two polylines, each resampled to
/// `HAUSDORFF_SAMPLES` points.
pub fn polyline_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    hausdorff(&resample(a, HAUSDORFF_SAMPLES), &resample(b, HAUSDORFF_SAMPLES))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_is_uniform() {
        let r = resample(&[[0.0, 0.0], [1.0, 0.0], [1.0, 3.0]], 5);
        assert_eq!(r.len(), 5);
        assert!((r[1][0] - 1.0).abs() < 1e-12 && r[1][1].abs() < 1e-12);
        assert!((r[4][1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_of_shifted_segment() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, 0.5], [1.0, 0.5]];
        assert!((polyline_distance(&a, &b) - 0.5).abs() < 1e-12);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }
}
