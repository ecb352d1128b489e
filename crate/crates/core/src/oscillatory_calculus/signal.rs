use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile_solver::smooth_step;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft(buf: &mut [Complex<f64>], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse { p.plan_fft_inverse(buf.len()) } else { p.plan_fft_forward(buf.len()) };
        plan.process(buf);
    });
}

/// Uniform samples of a scalar function of theta on `[-Theta, Theta)`.
///
/// The sample count is a power of two. The discrete Fourier transform and
/// the spectral node derivatives are computed on first use and cached.
#[derive(Debug, Clone)]
pub struct ThetaSignal {
    theta_max: f64,
    values: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex<f64>>>>,
    slopes: OnceLock<Arc<Vec<f64>>>,
}

impl ThetaSignal {
    pub fn new(theta_max: f64, values: Vec<f64>) -> Result<ThetaSignal> {
        if !(theta_max > 0.0) {
            return Err(Error::Contract("theta window must have positive half-width".into()));
        }
        if values.len() < 4 || !values.len().is_power_of_two() {
            return Err(Error::Contract(format!("{} samples; need a power of two >= 4", values.len())));
        }
        Ok(ThetaSignal { theta_max, values, spectrum: OnceLock::new(), slopes: OnceLock::new() })
    }

    pub fn from_fn(theta_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<ThetaSignal> {
        let h = 2.0 * theta_max / n as f64;
        ThetaSignal::new(theta_max, (0..n).map(|k| f(-theta_max + k as f64 * h)).collect())
    }

    pub fn zeros_like(&self) -> ThetaSignal {
        ThetaSignal::new(self.theta_max, vec![0.0; self.len()]).unwrap()
    }

    fn from_spectrum(theta_max: f64, mut spec: Vec<Complex<f64>>) -> ThetaSignal {
        let n = spec.len();
        fft(&mut spec, true);
        let values = spec.iter().map(|z| z.re / n as f64).collect();
        ThetaSignal::new(theta_max, values).unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * self.theta_max / self.len() as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        -self.theta_max + k as f64 * self.dtheta()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Unnormalized forward DFT of the samples.
    pub fn spectrum(&self) -> &[Complex<f64>] {
        self.spectrum.get_or_init(|| {
            let mut buf: Vec<Complex<f64>> = self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft(&mut buf, false);
            Arc::new(buf)
        })
    }

    /// Angular wavenumber of bin `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.len();
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * kk / (2.0 * self.theta_max)
    }

    /// Apply a real multiplier `mult(m)` to the spectrum. The Nyquist bin is
    /// zeroed when `zero_nyquist` is set.
    pub fn multiply_spectrum(&self, zero_nyquist: bool, mult: impl Fn(f64) -> f64) -> ThetaSignal {
        let n = self.len();
        let spec: Vec<Complex<f64>> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, z)| if zero_nyquist && k == n / 2 { Complex::new(0.0, 0.0) } else { z * mult(self.wavenumber(k)) })
            .collect();
        ThetaSignal::from_spectrum(self.theta_max, spec)
    }

    /// Spectral derivative.
    pub fn derivative(&self) -> ThetaSignal {
        let n = self.len();
        let spec: Vec<Complex<f64>> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, z)| if k == n / 2 { Complex::new(0.0, 0.0) } else { z * Complex::new(0.0, self.wavenumber(k)) })
            .collect();
        ThetaSignal::from_spectrum(self.theta_max, spec)
    }

    fn slopes(&self) -> &[f64] {
        self.slopes.get_or_init(|| Arc::new(self.derivative().values))
    }

    /// Rectangle-rule integral over the window (spectrally accurate for decaying signals).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dtheta()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / (2.0 * self.theta_max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Largest magnitude at the two window ends.
    pub fn edge_magnitude(&self) -> f64 {
        self.values[0].abs().max(self.values[self.len() - 1].abs())
    }

    /// Discrete `H^s` norm, `|f|^2 = (dtheta / n) sum (1 + m^2)^s |f_hat|^2`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let n = self.len() as f64;
        let acc: f64 = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, z)| (1.0 + self.wavenumber(k).powi(2)).powf(s) * z.norm_sqr())
            .sum();
        (acc * self.dtheta() / n).sqrt()
    }

    /// Cubic Hermite interpolation with spectral node derivatives; zero
    /// outside the window, periodic wrap on the last cell.
    pub fn eval(&self, theta: f64) -> f64 {
        let h = self.dtheta();
        let s = (theta + self.theta_max) / h;
        let n = self.len();
        if !(s >= 0.0 && s < n as f64) {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 1);
        let j = (i + 1) % n;
        let f = s - i as f64;
        let d = self.slopes();
        let (y0, y1, m0, m1) = (self.values[i], self.values[j], d[i] * h, d[j] * h);
        let f2 = f * f;
        let f3 = f2 * f;
        (2.0 * f3 - 3.0 * f2 + 1.0) * y0 + (f3 - 2.0 * f2 + f) * m0 + (-2.0 * f3 + 3.0 * f2) * y1 + (f3 - f2) * m1
    }

    pub fn check_compatible(&self, other: &ThetaSignal) -> Result<()> {
        if self.len() != other.len() || self.theta_max != other.theta_max {
            return Err(Error::Contract("theta signals live on different grids".into()));
        }
        Ok(())
    }

    pub fn product(&self, other: &ThetaSignal) -> Result<ThetaSignal> {
        self.check_compatible(other)?;
        let v = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        ThetaSignal::new(self.theta_max, v)
    }

    pub fn scaled(&self, c: f64) -> ThetaSignal {
        ThetaSignal::new(self.theta_max, self.values.iter().map(|v| c * v).collect()).unwrap()
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &ThetaSignal) -> Result<ThetaSignal> {
        self.check_compatible(other)?;
        let v = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        ThetaSignal::new(self.theta_max, v)
    }

    pub fn sup_diff(&self, other: &ThetaSignal) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()))
    }

    /// Whether every sample is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Smallest interval `[a, b]` outside of which `|f| <= floor`, or `None`.
    pub fn envelope(&self, floor: f64) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|v| v.abs() > floor)?;
        let last = self.values.iter().rposition(|v| v.abs() > floor)?;
        let h = self.dtheta();
        Some((self.theta(first) - 2.0 * h, self.theta(last) + 2.0 * h))
    }
}

impl PartialEq for ThetaSignal {
    fn eq(&self, other: &Self) -> bool {
        self.theta_max == other.theta_max && self.values == other.values
    }
}

/// Transition profile of the low-frequency cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CutoffKernel {
    /// Quintic smoothstep, `C^2`.
    #[default]
    Smoothstep5,
    /// `C^infinity` exponential step.
    SmoothExp,
}

impl CutoffKernel {
    /// `chi_p(m)`: 0 for `|m| <= p`, 1 for `|m| >= 2p`.
    pub fn chi(self, m: f64, p: f64) -> f64 {
        let s = (m.abs() / p - 1.0).clamp(0.0, 1.0);
        match self {
            CutoffKernel::Smoothstep5 => s * s * s * (s * (6.0 * s - 15.0) + 10.0),
            CutoffKernel::SmoothExp => smooth_step(s),
        }
    }
}

/// Moment-zero approximation `hat(sigma_p) = chi_p hat(sigma)`.
pub fn moment_zero(sigma: &ThetaSignal, p: f64, kernel: CutoffKernel) -> Result<ThetaSignal> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Contract(format!("cutoff parameter p = {p} must lie in (0, 1)")));
    }
    Ok(sigma.multiply_spectrum(false, |m| kernel.chi(m, p)))
}

/// Tolerance on `|integral|` relative to `integral |f|` treated as zero mean.
const MEAN_TOL: f64 = 1e-10;

/// The primitive of a zero-mean signal that decays at both ends,
/// `hat(sigma*) = hat(sigma) / (i m)`.
pub fn decaying_primitive(sigma: &ThetaSignal) -> Result<ThetaSignal> {
    let mass: f64 = sigma.values().iter().map(|v| v.abs()).sum::<f64>() * sigma.dtheta();
    if sigma.integral().abs() > MEAN_TOL * mass.max(1e-300) {
        return Err(Error::Contract(format!(
            "decaying primitive needs a zero-mean signal, integral = {:.3e}",
            sigma.integral()
        )));
    }
    let n = sigma.len();
    let spec: Vec<Complex<f64>> = sigma
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, z)| {
            if k == 0 || k == n / 2 {
                Complex::new(0.0, 0.0)
            } else {
                z / Complex::new(0.0, sigma.wavenumber(k))
            }
        })
        .collect();
    Ok(ThetaSignal::from_spectrum(sigma.theta_max, spec))
}

/// `(sigma tau_theta)_p`: pointwise product followed by the moment-zero cutoff.
pub fn nontransversal_product(
    sigma: &ThetaSignal,
    tau_theta: &ThetaSignal,
    p: f64,
    kernel: CutoffKernel,
) -> Result<ThetaSignal> {
    moment_zero(&sigma.product(tau_theta)?, p, kernel)
}

/// A primitive `P` of a decaying signal, defined on the whole line:
/// `P(z) = periodic(z) + slope (z + Theta) + shift` inside the window and
/// constant outside it.
#[derive(Debug, Clone)]
pub struct Primitive {
    periodic: ThetaSignal,
    slope: f64,
    shift: f64,
    /// `P(-infinity)`.
    pub left: f64,
    /// `P(+infinity)`.
    pub right: f64,
}

impl Primitive {
    /// Primitive with `P(-infinity) = 0` for a signal of arbitrary mean.
    /// Zero-mean signals get the decaying primitive, shifted to vanish on the left.
    pub fn of(sigma: &ThetaSignal) -> Primitive {
        let mean = sigma.mean();
        let centered = sigma.values().iter().map(|v| v - mean).collect();
        let centered = ThetaSignal::new(sigma.theta_max, centered).unwrap();
        let periodic = decaying_primitive_unchecked(&centered);
        let shift = -periodic.values[0];
        let right = mean * 2.0 * sigma.theta_max;
        Primitive { periodic, slope: mean, shift, left: 0.0, right }
    }

    /// Decaying primitive, `P(+-infinity) = 0`.
    pub fn decaying(sigma: &ThetaSignal) -> Result<Primitive> {
        let periodic = decaying_primitive(sigma)?;
        let edge = periodic.values[0];
        Ok(Primitive { periodic, slope: 0.0, shift: 0.0, left: edge, right: edge })
    }

    pub fn eval(&self, z: f64) -> f64 {
        let th = self.periodic.theta_max;
        if z <= -th {
            return self.left;
        }
        if z >= th {
            return self.right;
        }
        self.periodic.eval(z) + self.slope * (z + th) + self.shift
    }

    /// `P(+infinity)` for `positive`, `P(-infinity)` otherwise.
    pub fn end(&self, positive: bool) -> f64 {
        if positive {
            self.right
        } else {
            self.left
        }
    }
}

fn decaying_primitive_unchecked(sigma: &ThetaSignal) -> ThetaSignal {
    let n = sigma.len();
    let spec: Vec<Complex<f64>> = sigma
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, z)| {
            if k == 0 || k == n / 2 {
                Complex::new(0.0, 0.0)
            } else {
                z / Complex::new(0.0, sigma.wavenumber(k))
            }
        })
        .collect();
    ThetaSignal::from_spectrum(sigma.theta_max, spec)
}
