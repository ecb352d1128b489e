use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PulseShape {
    /// `exp(-(theta/w)^2)`.
    Gaussian,
    /// `-2 (theta/w) exp(-(theta/w)^2)`, a zero-mean pulse.
    GaussianDerivative,
    /// Uniformly spaced samples, cubic interpolation, zero outside.
    Tabulated { theta: Vec<f64>, values: Vec<f64> },
}

impl PulseShape {
    pub fn tabulated(theta: Vec<f64>, values: Vec<f64>) -> Result<PulseShape> {
        if theta.len() != values.len() || theta.len() < 4 {
            return Err(Error::Config("tabulated pulse needs matching tables of at least 4 points".into()));
        }
        let h = theta[1] - theta[0];
        let uniform = theta.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
        if !(h > 0.0) || !uniform {
            return Err(Error::Config("tabulated pulse abscissae must be increasing and uniform".into()));
        }
        Ok(PulseShape::Tabulated { theta, values })
    }
}

/// Boundary datum `G(t, theta) = a * envelope(t) * shape(theta)` with
/// `a` in `R^p`. The boundary phase is `theta_0 = tau (t - center) / eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPulse {
    pub amplitude: Vec<f64>,
    pub shape: PulseShape,
    pub width: f64,
    pub rise: f64,
    pub center: f64,
}

/// `C^infinity` step: 0 for `s <= 0`, 1 for `s >= 1`, flat to all orders at both ends.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

impl BoundaryPulse {
    pub fn new(amplitude: Vec<f64>, shape: PulseShape, width: f64, rise: f64, center: f64) -> Result<BoundaryPulse> {
        if !(width > 0.0) || !(rise > 0.0) {
            return Err(Error::Config("pulse width and rise must be positive".into()));
        }
        Ok(BoundaryPulse { amplitude, shape, width, rise, center })
    }

    pub fn gaussian(amplitude: Vec<f64>) -> BoundaryPulse {
        BoundaryPulse { amplitude, shape: PulseShape::Gaussian, width: 1.0, rise: 0.25, center: 0.75 }
    }

    pub fn zero(p: usize) -> BoundaryPulse {
        BoundaryPulse::gaussian(vec![0.0; p])
    }

    pub fn p(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|&a| a == 0.0)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        smooth_step(t / self.rise)
    }

    pub fn shape_value(&self, theta: f64) -> f64 {
        let z = theta / self.width;
        match &self.shape {
            PulseShape::Gaussian => (-z * z).exp(),
            PulseShape::GaussianDerivative => -2.0 * z * (-z * z).exp(),
            PulseShape::Tabulated { theta: th, values } => {
                let h = th[1] - th[0];
                interp::cubic_zero_padded(values, th[0], h, z)
            }
        }
    }

    /// `G(t, theta)`.
    pub fn value(&self, t: f64, theta: f64) -> DVector<f64> {
        let s = self.envelope(t) * self.shape_value(theta);
        DVector::from_iterator(self.p(), self.amplitude.iter().map(|a| a * s))
    }

    /// Boundary phase divided by `eps`.
    pub fn theta0(&self, tau: f64, t: f64, eps: f64) -> f64 {
        tau * (t - self.center) / eps
    }

    /// `G(t, theta_0(t))`, the datum seen by the oscillatory problem.
    pub fn oscillatory(&self, tau: f64, t: f64, eps: f64) -> DVector<f64> {
        self.value(t, self.theta0(tau, t, eps))
    }
}
