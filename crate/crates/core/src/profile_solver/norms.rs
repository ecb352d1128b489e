use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::profiles::GridFunction;
use crate::linalg::fd_weights;
use crate::oscillatory_calculus::ThetaSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormVariant {
    /// All mixed weights and derivatives `theta^a d_{t,x}^b d_theta^c`, `a + |b| + c <= s`.
    Gamma,
    /// Pure powers only: `theta^a`, `d_t^a`, `d_x^a`, `d_theta^a`, `a <= s`.
    Lambda,
}

/// Stencil width of the slow-variable derivatives.
const STENCIL: usize = 5;

fn slow_derivative(values: &[f64], g: &GridSpec, along_t: bool) -> Vec<f64> {
    let (n, h) = if along_t { (g.nt, g.dt()) } else { (g.nx, g.dx()) };
    let width = STENCIL.min(n);
    let nodes: Vec<f64> = (0..width).map(|i| i as f64).collect();
    let weights: Vec<Vec<f64>> = (0..width).map(|c| fd_weights(c as f64, &nodes, 1)).collect();
    let mut out = vec![0.0; values.len()];
    for it in 0..g.nt {
        for ix in 0..g.nx {
            let i = if along_t { it } else { ix };
            let start = (i as isize - (width as isize / 2)).clamp(0, (n - width) as isize) as usize;
            let w = &weights[i - start];
            let dst = g.idx(it, ix, 0);
            for (q, wq) in w.iter().enumerate() {
                let src = if along_t { g.idx(start + q, ix, 0) } else { g.idx(it, start + q, 0) };
                for k in 0..g.ntheta {
                    out[dst + k] += wq / h * values[src + k];
                }
            }
        }
    }
    out
}

fn theta_derivative(values: &[f64], g: &GridSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for row in values.chunks(g.ntheta) {
        let s = ThetaSignal::new(g.theta_max, row.to_vec()).expect("grid ntheta is a power of two");
        out.extend_from_slice(s.derivative().values());
    }
    out
}

fn weighted_l2(values: &[f64], g: &GridSpec, power: usize) -> f64 {
    let trap = |i: usize, n: usize, h: f64| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let thetas = g.thetas();
    let weights: Vec<f64> = thetas.iter().map(|t| t.powi(power as i32)).collect();
    let mut acc = 0.0;
    for it in 0..g.nt {
        for ix in 0..g.nx {
            let base = g.idx(it, ix, 0);
            let row: f64 = values[base..base + g.ntheta]
                .iter()
                .zip(&weights)
                .map(|(v, w)| (v * w).powi(2))
                .sum();
            acc += trap(it, g.nt, g.dt()) * trap(ix, g.nx, g.dx()) * row * g.dtheta();
        }
    }
    acc.sqrt()
}

/// Discrete weighted Sobolev norm: the sum over multi-indices of the `L^2`
/// norms of `theta^a d_t^b1 d_x^b2 d_theta^c f`. Slow derivatives use
/// fourth-order finite differences, theta derivatives are spectral.
pub fn weighted_norm(f: &GridFunction, s: usize, variant: NormVariant) -> f64 {
    let g = &f.grid;
    let mut total = 0.0;
    // derivatives[bt][bx] holds d_t^bt d_x^bx f, extended in theta order on demand
    let mut dt_chain = vec![f.values.clone()];
    for _ in 0..s {
        let last = dt_chain.last().unwrap();
        dt_chain.push(slow_derivative(last, g, true));
    }
    for bt in 0..=s {
        let mut dx_val = dt_chain[bt].clone();
        for bx in 0..=(s - bt) {
            if bx > 0 {
                dx_val = slow_derivative(&dx_val, g, false);
            }
            let mut th_val = dx_val.clone();
            for c in 0..=(s - bt - bx) {
                if c > 0 {
                    th_val = theta_derivative(&th_val, g);
                }
                for a in 0..=(s - bt - bx - c) {
                    let nonzero = [a, bt, bx, c].iter().filter(|&&e| e > 0).count();
                    if variant == NormVariant::Lambda && nonzero > 1 {
                        continue;
                    }
                    total += weighted_l2(&th_val, g, a);
                }
            }
        }
    }
    total
}
