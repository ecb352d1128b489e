use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic_model::{Component, PhaseTable, SystemSpec};

/// Interaction coefficients of the profile and corrector equations, indexed
/// by flattened components `(m, k)` of the phase table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionCoeffs {
    /// Mode of each flattened component.
    pub comp_mode: Vec<usize>,
    /// `dd[i][(a, b)] = l_i sum_j beta_j (dÃ_j(0) r_a) r_b`.
    pub dd: Vec<DMatrix<f64>>,
    /// `c[(i, k)] = dd[i][(k, k)]`.
    pub c: DMatrix<f64>,
    /// `e[(i, k)] = l_i A_d(0)^{-1} F(0) r_k`.
    pub e: DMatrix<f64>,
    /// `v[j][(i, k)] = l_i Ã_j(0) r_k` for `j = 0..d-1` (tangential fields).
    pub v: Vec<DMatrix<f64>>,
    /// Transport speed weights: the theta-speed of mode `m` is
    /// `sum_k speed[m][k] sigma_{m,k}`.
    pub speed: Vec<Vec<f64>>,
    /// Worst deviation from `B^m_{l,k'}(w) = -d omega_m(0).w_m delta_{l k'}`.
    pub symmetry_error: f64,
}

/// `sum_j beta_j dÃ_j(0) . u`.
pub fn slow_derivative_matrix(spec: &SystemSpec, beta: &[f64], u: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(spec.n, spec.n);
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            m += spec.d_tilde_coef(j, u)? * b;
        }
    }
    Ok(m)
}

/// `omega_m(u)`: minus the mean of the eigenvalues of
/// `A_d(u)^{-1}(tau I + sum eta_j A_j(u))` nearest to `-omega_m(0)`.
fn omega_at(spec: &SystemSpec, table: &PhaseTable, m: usize, u: &DVector<f64>) -> Result<f64> {
    let n = spec.n;
    let mut a = DMatrix::identity(n, n) * table.beta[0];
    for j in 1..spec.d {
        a += spec.coef_at(j, u) * table.beta[j];
    }
    let ad = spec
        .coef_at(spec.d, u)
        .try_inverse()
        .ok_or_else(|| Error::Structural("A_d(u) is singular".into()))?;
    let ev = (ad * a).complex_eigenvalues();
    let target = -table.modes[m].omega;
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()));
    let nu = table.modes[m].nu;
    Ok(-re[..nu].iter().sum::<f64>() / nu as f64)
}

/// `d omega_m(0) . w` by central differences.
pub fn d_omega(spec: &SystemSpec, table: &PhaseTable, m: usize, w: &DVector<f64>) -> Result<f64> {
    let scale = w.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let h = 1e-5 / scale;
    let up = omega_at(spec, table, m, &(w * h))?;
    let dn = omega_at(spec, table, m, &(w * -h))?;
    Ok((up - dn) / (2.0 * h))
}

impl InteractionCoeffs {
    pub fn new(spec: &SystemSpec, table: &PhaseTable) -> Result<InteractionCoeffs> {
        let comps: Vec<Component> = table.components();
        let n = comps.len();
        let r: Vec<&DVector<f64>> = comps.iter().map(|&c| table.r(c)).collect();
        let l: Vec<&DVector<f64>> = comps.iter().map(|&c| table.l(c)).collect();
        let comp_mode: Vec<usize> = comps.iter().map(|c| c.mode).collect();

        let slow: Vec<DMatrix<f64>> =
            r.iter().map(|ra| slow_derivative_matrix(spec, &table.beta, ra)).collect::<Result<_>>()?;
        let mut dd = vec![DMatrix::zeros(n, n); n];
        for (i, li) in l.iter().enumerate() {
            for a in 0..n {
                let row = li.transpose() * &slow[a];
                for b in 0..n {
                    dd[i][(a, b)] = row.dot(&r[b].transpose());
                }
            }
        }
        let c = DMatrix::from_fn(n, n, |i, k| dd[i][(k, k)]);
        let f = spec.a_d_inv()? * &spec.f0;
        let e = DMatrix::from_fn(n, n, |i, k| l[i].dot(&(&f * r[k])));
        let v = (0..spec.d)
            .map(|j| {
                let a = spec.tilde_coef(j)?;
                Ok(DMatrix::from_fn(n, n, |i, k| l[i].dot(&(&a * r[k]))))
            })
            .collect::<Result<Vec<_>>>()?;

        // speed of mode m read off from its first component l; the symmetry
        // check below asserts independence of l
        let mut speed = Vec::with_capacity(table.modes.len());
        for mode in &table.modes {
            let first = comps.iter().position(|c| c.mode == mode.index).unwrap();
            let s: Vec<f64> = (0..mode.nu).map(|k| dd[first][(first + k, first)]).collect();
            speed.push(s);
        }

        let mut coeffs = InteractionCoeffs { comp_mode, dd, c, e, v, speed, symmetry_error: 0.0 };
        let mut worst: f64 = 0.0;
        for mode in &table.modes {
            let first = comps.iter().position(|c| c.mode == mode.index).unwrap();
            let mut probes: Vec<DVector<f64>> = (0..mode.nu).map(|k| r[first + k].clone()).collect();
            let mut mix = DVector::zeros(spec.n);
            for k in 0..mode.nu {
                mix += r[first + k] * (0.7 - 0.3 * k as f64);
            }
            probes.push(mix);
            for w in &probes {
                worst = worst.max(coeffs.symmetry_defect(spec, table, mode.index, w)?);
            }
        }
        coeffs.symmetry_error = worst;
        if worst > 1e-6 {
            return Err(Error::Contract(format!("speed symmetry violated by {worst:.3e}")));
        }
        Ok(coeffs)
    }

    /// `B^m_{l,k'}(w) = sum_k b^{k,k'}_{m,l} w_{m,k}` as a `nu x nu` matrix in `(l, k')`.
    pub fn block_speed_matrix(&self, table: &PhaseTable, m: usize, w: &DVector<f64>) -> DMatrix<f64> {
        let comps = table.components();
        let first = comps.iter().position(|c| c.mode == m).unwrap();
        let nu = table.modes[m].nu;
        let wm: Vec<f64> = (0..nu).map(|k| table.l(comps[first + k]).dot(w)).collect();
        DMatrix::from_fn(nu, nu, |l, kp| {
            (0..nu).map(|k| self.dd[first + l][(first + k, first + kp)] * wm[k]).sum()
        })
    }

    /// Deviation of `B^m(w)` from `-d omega_m(0).w_m I`, relative to `|w|`.
    pub fn symmetry_defect(&self, spec: &SystemSpec, table: &PhaseTable, m: usize, w: &DVector<f64>) -> Result<f64> {
        let b = self.block_speed_matrix(table, m, w);
        let wm = &table.projectors[m] * w;
        let target = -d_omega(spec, table, m, &wm)?;
        let nu = b.nrows();
        let dev = (b - DMatrix::identity(nu, nu) * target).abs().max();
        Ok(dev / w.norm().max(1e-300))
    }

    pub fn n(&self) -> usize {
        self.comp_mode.len()
    }

    pub fn is_decoupled(&self) -> bool {
        let n = self.n();
        let zero = |x: f64| x == 0.0;
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let same = self.comp_mode[a] == self.comp_mode[i] && self.comp_mode[b] == self.comp_mode[i];
                    if !same && !zero(self.dd[i][(a, b)]) {
                        return false;
                    }
                }
                if self.comp_mode[a] != self.comp_mode[i] {
                    if !zero(self.e[(i, a)]) {
                        return false;
                    }
                    if self.v.iter().any(|v| !zero(v[(i, a)])) {
                        return false;
                    }
                }
            }
        }
        true
    }
}
