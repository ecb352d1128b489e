//! Interpolation on uniform grids.

/// Weights of the 4-point Lagrange stencil `{-1, 0, 1, 2}` at offset `f` in `[0, 1)`.
#[inline]
pub fn cubic_weights(f: f64) -> [f64; 4] {
    let fm1 = f - 1.0;
    let fm2 = f - 2.0;
    let fp1 = f + 1.0;
    [
        -f * fm1 * fm2 / 6.0,
        fp1 * fm1 * fm2 / 2.0,
        -fp1 * f * fm2 / 2.0,
        fp1 * f * fm1 / 6.0,
    ]
}

/// Cubic Lagrange interpolation of samples `v[i] = f(x0 + i h)`, treating
/// values outside the sampled range as zero.
#[inline]
pub fn cubic_zero_padded(v: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let s = (x - x0) / h;
    let n = v.len() as isize;
    if !(s > -2.0 && s < n as f64 + 1.0) {
        return 0.0;
    }
    let i0 = s.floor() as isize;
    let w = cubic_weights(s - i0 as f64);
    let mut acc = 0.0;
    for (q, wq) in w.iter().enumerate() {
        let i = i0 - 1 + q as isize;
        if i >= 0 && i < n {
            acc += wq * v[i as usize];
        }
    }
    acc
}

/// Lagrange interpolation of order `order` (stencil of `order + 1` points)
/// with the stencil shifted inward near the ends. `x` is clamped to the grid.
pub fn lagrange_clamped(v: &[f64], x0: f64, h: f64, x: f64, order: usize) -> f64 {
    let n = v.len();
    let s = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let width = order + 1;
    let half = (width as isize - 1) / 2;
    let mut start = s.floor() as isize - half;
    start = start.clamp(0, n as isize - width as isize);
    let mut acc = 0.0;
    for a in 0..width {
        let xa = start as f64 + a as f64;
        let mut w = 1.0;
        for b in 0..width {
            if a != b {
                let xb = start as f64 + b as f64;
                w *= (s - xb) / (xa - xb);
            }
        }
        acc += w * v[(start as usize) + a];
    }
    acc
}

/// Locate `x` on a uniform grid with `n` nodes: returns `(i, f)` with
/// `x = x0 + (i + f) h`, `0 <= f <= 1`, `i + 1 < n`, or `None` if outside.
#[inline]
pub fn locate(x0: f64, h: f64, n: usize, x: f64) -> Option<(usize, f64)> {
    let s = (x - x0) / h;
    let tol = 1e-12;
    if s < -tol || s > (n - 1) as f64 + tol {
        return None;
    }
    let s = s.clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    Some((i, s - i as f64))
}

/// Stencil of `width` consecutive nodes of an `n`-node grid around the
/// fractional index `s`, shifted inward at the ends, with its Lagrange weights.
pub fn clamped_stencil(n: usize, s: f64, width: usize) -> (usize, Vec<f64>) {
    let width = width.min(n);
    let half = (width as isize - 1) / 2;
    let start = (s.floor() as isize - half).clamp(0, (n - width) as isize) as usize;
    let nodes: Vec<f64> = (0..width).map(|q| (start + q) as f64).collect();
    (start, crate::linalg::lagrange_weights(s, &nodes))
}
