use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of `[0, T] x [0, X] x [-Theta, Theta)`.
///
/// The `theta` grid is periodic-style: `theta_k = -Theta + k dtheta` with
/// `dtheta = 2 Theta / ntheta`, so spectral operations apply directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub x_max: f64,
    pub theta_max: f64,
    pub nt: usize,
    pub nx: usize,
    pub ntheta: usize,
}

impl GridSpec {
    pub fn new(t_max: f64, x_max: f64, theta_max: f64, nt: usize, nx: usize, ntheta: usize) -> Result<GridSpec> {
        if !(t_max > 0.0 && x_max > 0.0 && theta_max > 0.0) {
            return Err(Error::Config("T, X and theta_max must be positive".into()));
        }
        if nt < 2 || nx < 2 {
            return Err(Error::Config("nt and nx must be at least 2".into()));
        }
        if ntheta < 8 || !ntheta.is_power_of_two() {
            return Err(Error::Config(format!("ntheta = {ntheta} must be a power of two >= 8")));
        }
        Ok(GridSpec { t_max, x_max, theta_max, nt, nx, ntheta })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.x_max / (self.nx - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * self.theta_max / self.ntheta as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn theta(&self, k: usize) -> f64 {
        -self.theta_max + k as f64 * self.dtheta()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.ntheta).map(|k| self.theta(k)).collect()
    }

    /// Points in one `(x, theta)` ray block.
    pub fn block(&self) -> usize {
        self.nx * self.ntheta
    }

    pub fn len(&self) -> usize {
        self.nt * self.block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, it: usize, ix: usize, ik: usize) -> usize {
        (it * self.nx + ix) * self.ntheta + ik
    }
}
