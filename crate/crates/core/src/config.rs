//! TOML run configuration shared by the library and the command line tool.
//!
//! ```toml
//! [system]
//! N = 3
//! d = 1
//! Aj0 = [[[2, 0, 0], [0, -1, 0], [0, 0, 1]]]   # A_j(0), j = 1..d, rows
//! dA = [[ ... N matrices ... ]]                 # dA[j][k] = dA_j/du_k
//! B0 = [[1, 1, 0], [0, 1, 1]]
//! F0 = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]       # optional
//!
//! [frequency]
//! beta = [1.0]
//! ```
//!
//! All other sections are optional and fall back to the defaults below.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hyperbolic_model::SystemSpec;
use crate::oscillatory_calculus::CutoffKernel;
use crate::profile_solver::{BoundaryPulse, GridSpec, PulseShape, ThetaScheme};
use crate::singular_solver::ExactConfig;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    #[serde(rename = "Aj0", alias = "Ad0")]
    pub aj0: Vec<Rows>,
    #[serde(rename = "dA", default)]
    pub da: Option<Vec<Vec<Rows>>>,
    #[serde(rename = "B0")]
    pub b0: Rows,
    #[serde(rename = "F0", default)]
    pub f0: Option<Rows>,
    #[serde(rename = "dB", default)]
    pub db: Option<Vec<Rows>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub amplitude: Vec<f64>,
    /// `gaussian`, `gaussian_derivative` or `tabulated`.
    pub shape: String,
    pub width: f64,
    /// Length of the smooth switch-on of the envelope.
    pub rise: f64,
    /// Time at which the boundary phase vanishes.
    pub center: f64,
    pub table_theta: Option<Vec<f64>>,
    pub table_values: Option<Vec<f64>>,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection {
            amplitude: vec![],
            shape: "gaussian".into(),
            width: 1.0,
            rise: 0.25,
            center: 0.75,
            table_theta: None,
            table_values: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilesSection {
    #[serde(rename = "T")]
    pub t_max: f64,
    #[serde(rename = "X")]
    pub x_max: f64,
    pub theta_max: f64,
    pub nt: usize,
    pub nx: usize,
    pub ntheta: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// `semi_lagrangian` or `upwind`.
    pub scheme: String,
    pub gradient_cap: f64,
}

impl Default for ProfilesSection {
    fn default() -> Self {
        ProfilesSection {
            t_max: 2.0,
            x_max: 2.0,
            theta_max: 12.0,
            nt: 64,
            nx: 128,
            ntheta: 512,
            tol: 1e-10,
            max_iter: 40,
            scheme: "semi_lagrangian".into(),
            gradient_cap: 0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactSection {
    #[serde(rename = "T")]
    pub t_max: f64,
    #[serde(rename = "X")]
    pub x_max: f64,
    pub ppw: f64,
    pub cfl: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub delta: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Number of stored time levels (plus the initial one).
    pub store_levels: usize,
}

impl Default for ExactSection {
    fn default() -> Self {
        ExactSection {
            t_max: 2.0,
            x_max: 2.0,
            ppw: 24.0,
            cfl: 0.8,
            newton_tol: 1e-12,
            newton_max_iter: 20,
            delta: 0.5,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            store_levels: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    /// Exponent in `p = eps^b`; defaults to `2 / (2 M1 + 5)`.
    pub b: Option<f64>,
    /// `[t_min, t_max, x_min, x_max]`.
    pub window: Vec<f64>,
    pub corrector: bool,
    pub corrector_nt: usize,
    pub corrector_nx: usize,
    /// Errors below this value are flagged as numerical floor.
    pub floor: f64,
    pub svg: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            eps: vec![0.1, 0.05, 0.025, 0.0125],
            b: None,
            window: vec![0.0, 2.0, 0.0, 2.0],
            corrector: true,
            corrector_nt: 33,
            corrector_nx: 33,
            floor: 1e-6,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalculusSection {
    /// `smoothstep5` or `smooth_exp`.
    pub cutoff: String,
}

impl Default for CalculusSection {
    fn default() -> Self {
        CalculusSection { cutoff: "smoothstep5".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub density: usize,
    pub threshold: f64,
    pub glancing_tol: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection { density: 64, threshold: 1e-6, glancing_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSection,
    pub frequency: FrequencySection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub profiles: ProfilesSection,
    #[serde(default)]
    pub exact: ExactSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub calculus: CalculusSection,
    #[serde(default)]
    pub stability: StabilitySection,
}

fn matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || nc == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Structural(format!("{what} is not a rectangular non-empty matrix")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml_str(&text)
    }

    fn check(&self) -> Result<()> {
        if self.frequency.beta.len() != self.system.d {
            return Err(Error::Config(format!(
                "frequency.beta has length {}, expected d = {}",
                self.frequency.beta.len(),
                self.system.d
            )));
        }
        let eps = &self.sweep.eps;
        if eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|&e| e <= 0.0) {
            return Err(Error::Config("sweep.eps must be positive and strictly decreasing".into()));
        }
        if self.sweep.window.len() != 4 {
            return Err(Error::Config("sweep.window must be [t_min, t_max, x_min, x_max]".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        let s = &self.system;
        if s.aj0.len() != s.d {
            return Err(Error::Structural(format!("Aj0 holds {} matrices, expected d = {}", s.aj0.len(), s.d)));
        }
        let a0 = s
            .aj0
            .iter()
            .enumerate()
            .map(|(j, m)| matrix(m, &format!("Aj0[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        let da = match &s.da {
            None => None,
            Some(list) => Some(
                list.iter()
                    .enumerate()
                    .map(|(j, ks)| {
                        ks.iter()
                            .enumerate()
                            .map(|(k, m)| matrix(m, &format!("dA[{j}][{k}]")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let f0 = s.f0.as_ref().map(|m| matrix(m, "F0")).transpose()?;
        let b0 = matrix(&s.b0, "B0")?;
        let db = match &s.db {
            None => None,
            Some(list) => Some(list.iter().map(|m| matrix(m, "dB")).collect::<Result<Vec<_>>>()?),
        };
        let spec = SystemSpec::new(a0, da, f0, b0, db)?;
        if spec.n != s.n {
            return Err(Error::Structural(format!("N = {} but matrices are {}x{}", s.n, spec.n, spec.n)));
        }
        Ok(spec)
    }

    pub fn beta(&self) -> &[f64] {
        &self.frequency.beta
    }

    pub fn pulse(&self, p: usize) -> Result<BoundaryPulse> {
        let s = &self.pulse;
        let amplitude = if s.amplitude.is_empty() { vec![0.0; p] } else { s.amplitude.clone() };
        if amplitude.len() != p {
            return Err(Error::Config(format!("pulse.amplitude has length {}, expected p = {p}", amplitude.len())));
        }
        let shape = match s.shape.as_str() {
            "gaussian" => PulseShape::Gaussian,
            "gaussian_derivative" => PulseShape::GaussianDerivative,
            "tabulated" => {
                let (Some(theta), Some(values)) = (&s.table_theta, &s.table_values) else {
                    return Err(Error::Config("tabulated pulse needs table_theta and table_values".into()));
                };
                PulseShape::tabulated(theta.clone(), values.clone())?
            }
            other => return Err(Error::Config(format!("unknown pulse shape '{other}'"))),
        };
        BoundaryPulse::new(amplitude, shape, s.width, s.rise, s.center)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let s = &self.profiles;
        GridSpec::new(s.t_max, s.x_max, s.theta_max, s.nt, s.nx, s.ntheta)
    }

    pub fn scheme(&self) -> Result<ThetaScheme> {
        match self.profiles.scheme.as_str() {
            "semi_lagrangian" => Ok(ThetaScheme::SemiLagrangian),
            "upwind" => Ok(ThetaScheme::Upwind),
            other => Err(Error::Config(format!("unknown profile scheme '{other}'"))),
        }
    }

    pub fn cutoff(&self) -> Result<CutoffKernel> {
        match self.calculus.cutoff.as_str() {
            "smoothstep5" => Ok(CutoffKernel::Smoothstep5),
            "smooth_exp" => Ok(CutoffKernel::SmoothExp),
            other => Err(Error::Config(format!("unknown cutoff kernel '{other}'"))),
        }
    }

    pub fn exact(&self) -> ExactConfig {
        let s = &self.exact;
        ExactConfig {
            t_max: s.t_max,
            x_max: s.x_max,
            ppw: s.ppw,
            cfl: s.cfl,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            delta: s.delta,
            store_levels: s.store_levels,
        }
    }
}
