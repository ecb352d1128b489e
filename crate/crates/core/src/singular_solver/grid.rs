use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic_model::SystemSpec;
use crate::linalg;

/// Settings of the reference solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExactConfig {
    pub t_max: f64,
    pub x_max: f64,
    /// Grid points per `eps` along `x_d`, scaled by the largest `|omega|`.
    pub ppw: f64,
    pub cfl: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Validity ball radius for `|eps u|`.
    pub delta: f64,
    /// Number of stored time levels after the initial one.
    pub store_levels: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            t_max: 2.0,
            x_max: 2.0,
            ppw: 24.0,
            cfl: 0.8,
            newton_tol: 1e-12,
            newton_max_iter: 20,
            delta: 0.5,
            store_levels: 200,
        }
    }
}

/// Uniform `(t, x_d)` grid of the reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineGrid {
    pub t_max: f64,
    pub x_max: f64,
    pub nx: usize,
    pub steps: usize,
    /// Store every `stride`-th time level.
    pub stride: usize,
}

impl FineGrid {
    pub fn with_counts(t_max: f64, x_max: f64, nx: usize, steps: usize, stride: usize) -> Result<FineGrid> {
        if nx < 8 || steps == 0 || stride == 0 {
            return Err(Error::Config("fine grid needs nx >= 8, steps >= 1 and stride >= 1".into()));
        }
        Ok(FineGrid { t_max, x_max, nx, steps, stride })
    }

    /// Grid resolving `eps` with `ppw` points per `eps / max|omega|` and
    /// time step `cfl dx / max|lambda|`.
    pub fn for_eps(spec: &SystemSpec, omega_max: f64, eps: f64, cfg: &ExactConfig) -> Result<FineGrid> {
        let chars = Characteristics::new(spec)?;
        let dx_target = eps / (cfg.ppw * omega_max.max(1e-12));
        let nx = (cfg.x_max / dx_target).ceil() as usize + 1;
        let dx = cfg.x_max / (nx - 1) as f64;
        let dt_target = cfg.cfl * dx / chars.max_speed();
        let steps = (cfg.t_max / dt_target).ceil() as usize;
        let stride = steps.div_ceil(cfg.store_levels.max(1));
        FineGrid::with_counts(cfg.t_max, cfg.x_max, nx, steps, stride)
    }

    /// Halve `dx` and `dt`, keeping the stored time levels.
    pub fn refined(&self) -> FineGrid {
        FineGrid { nx: 2 * (self.nx - 1) + 1, steps: 2 * self.steps, stride: 2 * self.stride, ..*self }
    }

    pub fn dx(&self) -> f64 {
        self.x_max / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Step indices of the stored levels.
    pub fn stored_steps(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..=self.steps).step_by(self.stride).collect();
        if *v.last().unwrap() != self.steps {
            v.push(self.steps);
        }
        v
    }
}

/// Characteristic decomposition of `A_d(0)` for `d = 1`.
#[derive(Debug, Clone)]
pub struct Characteristics {
    pub lambda: Vec<f64>,
    pub r: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl Characteristics {
    pub fn new(spec: &SystemSpec) -> Result<Characteristics> {
        if spec.d != 1 {
            return Err(Error::Contract(format!("the reference solver needs d = 1, got d = {}", spec.d)));
        }
        let clusters = linalg::real_eigen_clusters(spec.a_d(), 1e-10)?;
        let mut lambda = Vec::new();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for c in &clusters {
            if c.value.abs() < 1e-12 {
                return Err(Error::Structural("boundary is characteristic".into()));
            }
            for k in 0..c.basis.ncols() {
                lambda.push(c.value);
                cols.push(c.basis.column(k).into_owned());
            }
        }
        let r = DMatrix::from_columns(&cols);
        let l = r.clone().try_inverse().ok_or_else(|| Error::Contract("eigenvector matrix is singular".into()))?;
        Ok(Characteristics { lambda, r, l })
    }

    pub fn max_speed(&self) -> f64 {
        self.lambda.iter().fold(0.0, |a: f64, l| a.max(l.abs()))
    }

    pub fn incoming(&self) -> Vec<usize> {
        (0..self.lambda.len()).filter(|&i| self.lambda[i] > 0.0).collect()
    }

    pub fn outgoing(&self) -> Vec<usize> {
        (0..self.lambda.len()).filter(|&i| self.lambda[i] < 0.0).collect()
    }
}
