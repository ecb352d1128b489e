use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Quasilinear boundary problem with coefficients affine in the state:
/// `du/dt + sum_j A_j(u) du/dx_j = F(u) u`, `B(u) u = G` on `x_d = 0`.
///
/// Spatial index convention: `j = 0` is time (with `A_0 = I`), `j = 1..d-1`
/// are tangential and `j = d` is the normal direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    /// `a0[j-1] = A_j(0)` for `j = 1..d`.
    pub a0: Vec<DMatrix<f64>>,
    /// `da[j-1][k] = dA_j/du_k`.
    pub da: Vec<Vec<DMatrix<f64>>>,
    pub f0: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    /// `db[k] = dB/du_k`, each `p x N`.
    pub db: Option<Vec<DMatrix<f64>>>,
}

impl SystemSpec {
    pub fn new(
        a0: Vec<DMatrix<f64>>,
        da: Option<Vec<Vec<DMatrix<f64>>>>,
        f0: Option<DMatrix<f64>>,
        b0: DMatrix<f64>,
        db: Option<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        let d = a0.len();
        if d == 0 {
            return Err(Error::Structural("at least one spatial coefficient matrix is required".into()));
        }
        let n = a0[0].nrows();
        let p = b0.nrows();
        let da = da.unwrap_or_else(|| vec![vec![DMatrix::zeros(n, n); n]; d]);
        let f0 = f0.unwrap_or_else(|| DMatrix::zeros(n, n));
        let spec = SystemSpec { n, d, p, a0, da, f0, b0, db };
        spec.check_shapes()?;
        Ok(spec)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::Structural(format!("state dimension N = {n} must be at least 2")));
        }
        for (j, a) in self.a0.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Structural(format!("A_{} is {}x{}, expected {n}x{n}", j + 1, a.nrows(), a.ncols())));
            }
        }
        if self.da.len() != self.d {
            return Err(Error::Structural(format!("dA has {} entries, expected d = {}", self.da.len(), self.d)));
        }
        for (j, dj) in self.da.iter().enumerate() {
            if dj.len() != n {
                return Err(Error::Structural(format!("dA[{}] has {} entries, expected N = {n}", j + 1, dj.len())));
            }
            if dj.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                return Err(Error::Structural(format!("dA[{}] contains a non {n}x{n} matrix", j + 1)));
            }
        }
        if self.f0.nrows() != n || self.f0.ncols() != n {
            return Err(Error::Structural("F0 must be N x N".into()));
        }
        if self.p == 0 || self.p >= n {
            return Err(Error::Structural(format!("p = {} must satisfy 0 < p < N = {n}", self.p)));
        }
        if self.b0.ncols() != n {
            return Err(Error::Structural("B0 must have N columns".into()));
        }
        if let Some(db) = &self.db {
            if db.len() != n || db.iter().any(|m| m.nrows() != self.p || m.ncols() != n) {
                return Err(Error::Structural("dB must hold N matrices of shape p x N".into()));
            }
        }
        Ok(())
    }

    /// `A_j(0)` for `j = 0..=d` (identity for `j = 0`).
    pub fn coef(&self, j: usize) -> DMatrix<f64> {
        if j == 0 {
            DMatrix::identity(self.n, self.n)
        } else {
            self.a0[j - 1].clone()
        }
    }

    pub fn a_d(&self) -> &DMatrix<f64> {
        &self.a0[self.d - 1]
    }

    pub fn a_d_inv(&self) -> Result<DMatrix<f64>> {
        self.a_d()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Structural("A_d(0) is singular".into()))
    }

    /// `dA_j(0) . u` for `j = 0..=d` (zero for `j = 0`).
    pub fn d_coef(&self, j: usize, u: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        if j == 0 {
            return m;
        }
        for (k, dk) in self.da[j - 1].iter().enumerate() {
            m += dk * u[k];
        }
        m
    }

    /// `A_j(u)` for `j = 0..=d`.
    pub fn coef_at(&self, j: usize, u: &DVector<f64>) -> DMatrix<f64> {
        self.coef(j) + self.d_coef(j, u)
    }

    /// `Ã_j(0) = A_d(0)^{-1} A_j(0)` for `j = 0..d-1`.
    pub fn tilde_coef(&self, j: usize) -> Result<DMatrix<f64>> {
        Ok(self.a_d_inv()? * self.coef(j))
    }

    /// `dÃ_j(0) . u` by the chain rule.
    pub fn d_tilde_coef(&self, j: usize, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let inv = self.a_d_inv()?;
        let dad = self.d_coef(self.d, u);
        Ok(&inv * self.d_coef(j, u) - &inv * dad * &inv * self.coef(j))
    }

    pub fn b_at(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut b = self.b0.clone();
        if let Some(db) = &self.db {
            for (k, m) in db.iter().enumerate() {
                b += m * u[k];
            }
        }
        b
    }

    pub fn is_linear(&self) -> bool {
        let zero_da = self.da.iter().flatten().all(|m| m.iter().all(|&x| x == 0.0));
        let zero_db = self.db.as_ref().is_none_or(|db| db.iter().all(|m| m.iter().all(|&x| x == 0.0)));
        zero_da && zero_db
    }

    /// `sum_{j=1}^{d} xi_j A_j(0)`.
    pub fn symbol(&self, xi: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (j, &x) in xi.iter().enumerate() {
            m += &self.a0[j] * x;
        }
        m
    }

    /// `A_d(0)^{-1}(tau I + sum_{j<d} eta_j A_j(0))`; its eigenvalues are `-omega`.
    pub fn boundary_matrix(&self, tau: f64, eta: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(self.n, self.n) * tau;
        for (j, &e) in eta.iter().enumerate() {
            m += &self.a0[j] * e;
        }
        Ok(self.a_d_inv()? * m)
    }

    /// Replace the nonlinear coefficients by zero.
    pub fn linearized(&self) -> SystemSpec {
        let mut s = self.clone();
        for dj in s.da.iter_mut() {
            for m in dj.iter_mut() {
                m.fill(0.0);
            }
        }
        s.f0.fill(0.0);
        s.db = None;
        s
    }

    pub fn ex1() -> SystemSpec {
        let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 1.0]));
        let b0 = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        SystemSpec::new(vec![a1], None, None, b0, None).expect("valid preset")
    }

    /// EX1 with `dA_1(0) . u = diag(u_1, u_2, u_3)`.
    pub fn ex1_nonlinear() -> SystemSpec {
        let mut s = SystemSpec::ex1();
        for k in 0..3 {
            let mut m = DMatrix::zeros(3, 3);
            m[(k, k)] = 1.0;
            s.da[0][k] = m;
        }
        s
    }
}

/// Outcome of one structural check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Unit directions used to probe hyperbolicity of the symbol.
pub(crate) fn sphere_directions(d: usize, per_angle: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => {
            let mut out = Vec::new();
            let mut angles = vec![0usize; d - 1];
            loop {
                let mut xi = vec![0.0; d];
                let mut sprod = 1.0;
                for (k, &a) in angles.iter().enumerate() {
                    let last = k == d - 2;
                    let span = if last { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
                    let phi = span * (a as f64 + 0.5) / per_angle as f64;
                    xi[k] = sprod * phi.cos();
                    sprod *= phi.sin();
                }
                xi[d - 1] = sprod;
                out.push(xi);
                let mut k = 0;
                loop {
                    angles[k] += 1;
                    if angles[k] < per_angle {
                        break;
                    }
                    angles[k] = 0;
                    k += 1;
                    if k == d - 1 {
                        return out;
                    }
                }
            }
        }
    }
}

/// Check the structural assumptions: noncharacteristic boundary, rank and
/// count of boundary conditions, and hyperbolicity with constant multiplicity.
pub fn validate_system(spec: &SystemSpec) -> Result<ValidationReport> {
    spec.check_shapes()?;
    let mut checks = Vec::new();
    let sv = linalg::singular_values(spec.a_d());
    let smin = sv.last().copied().unwrap_or(0.0);
    let smax = sv.first().copied().unwrap_or(0.0);
    checks.push(Check {
        name: "noncharacteristic",
        passed: smin > 1e-10 * smax.max(1.0),
        measured: smin,
        detail: "minimum singular value of A_d(0)".into(),
    });

    let rank = linalg::numerical_rank(&spec.b0, 1e-10);
    checks.push(Check {
        name: "boundary_rank",
        passed: rank == spec.p,
        measured: rank as f64,
        detail: format!("rank of B(0), expected p = {}", spec.p),
    });

    let positive = spec
        .a_d()
        .clone()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re > 1e-10 * smax.max(1.0))
        .count();
    checks.push(Check {
        name: "boundary_count",
        passed: positive == spec.p,
        measured: positive as f64,
        detail: format!("positive eigenvalues of A_d(0), expected p = {}", spec.p),
    });

    let mut max_imag: f64 = 0.0;
    let mut semisimple = true;
    let mut multiplicities: Option<Vec<usize>> = None;
    let mut constant = true;
    for xi in sphere_directions(spec.d, 16) {
        let m = spec.symbol(&xi);
        let ev = m.clone().complex_eigenvalues();
        max_imag = ev.iter().fold(max_imag, |acc, z| acc.max(z.im.abs()));
        match linalg::real_eigen_clusters(&m, 1e-8) {
            Ok(c) => {
                let mut mult: Vec<usize> = c.iter().map(|c| c.basis.ncols()).collect();
                mult.sort_unstable();
                match &multiplicities {
                    None => multiplicities = Some(mult),
                    Some(prev) if *prev != mult => constant = false,
                    _ => {}
                }
            }
            Err(_) => semisimple = false,
        }
    }
    checks.push(Check {
        name: "hyperbolicity",
        passed: max_imag < 1e-8 && semisimple,
        measured: max_imag,
        detail: "max |Im eigenvalue| of sum xi_j A_j(0) over sampled unit directions".into(),
    });
    checks.push(Check {
        name: "constant_multiplicity",
        passed: constant && semisimple,
        measured: if constant { 1.0 } else { 0.0 },
        detail: "eigenvalue multiplicity pattern identical across sampled directions".into(),
    });
    Ok(ValidationReport { checks })
}
