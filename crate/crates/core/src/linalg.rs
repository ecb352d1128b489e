//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex<f64>>;

/// A real eigenvalue together with an orthonormal basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub value: f64,
    pub basis: DMatrix<f64>,
    /// Largest imaginary part among the eigenvalues merged into this cluster.
    pub max_imag: f64,
}

pub fn frobenius_scale(m: &DMatrix<f64>) -> f64 {
    m.norm().max(1.0)
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_c(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Orthonormal basis of the null space (singular values at or below `abs_tol`).
pub fn null_space(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let square = if m.nrows() < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.rows_mut(0, m.nrows()).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let cols: Vec<DVector<f64>> = (0..vt.nrows())
        .filter(|&i| sv[i] <= abs_tol)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Deterministic orthonormal basis for the range of an orthogonal projector:
/// projects the canonical basis and applies Gram-Schmidt with column pivoting.
/// The result does not depend on which basis produced the projector.
pub fn canonical_basis(projector: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let n = projector.nrows();
    let mut cand: Vec<DVector<f64>> = (0..n).map(|i| projector.column(i).into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (best, _) = cand
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 + 1e-12 { x } else { acc });
        let mut v = cand[best].clone();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let nv = v.norm();
        v /= nv;
        let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, x)| {
            if x.abs() > acc.1 + 1e-12 {
                (i, x.abs())
            } else {
                acc
            }
        });
        if v[imax] < 0.0 {
            v = -v;
        }
        for c in cand.iter_mut() {
            let proj = v.dot(c);
            *c -= &v * proj;
        }
        basis.push(v);
    }
    DMatrix::from_columns(&basis)
}

/// Real eigenvalues of `m`, grouped into clusters with orthonormal eigenspace
/// bases. Fails if a cluster is defective (not semisimple).
pub fn real_eigen_clusters(m: &DMatrix<f64>, imag_tol: f64) -> Result<Vec<EigenCluster>> {
    let n = m.nrows();
    let scale = frobenius_scale(m);
    let ev = m.clone().complex_eigenvalues();
    let mut vals: Vec<Complex<f64>> = ev.iter().copied().collect();
    vals.sort_by(|a, b| a.re.total_cmp(&b.re));
    let cluster_tol = 1e-7 * scale;
    let mut groups: Vec<Vec<Complex<f64>>> = Vec::new();
    for v in vals {
        match groups.last_mut() {
            Some(g) if (v.re - g.last().unwrap().re).abs() < cluster_tol => g.push(v),
            _ => groups.push(vec![v]),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let max_imag = g.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_imag > imag_tol * scale {
            return Err(Error::Contract(format!(
                "complex eigenvalue with |Im| = {max_imag:.3e}"
            )));
        }
        let value = g.iter().map(|z| z.re).sum::<f64>() / g.len() as f64;
        let shifted = m - DMatrix::<f64>::identity(n, n) * value;
        let ns = null_space(&shifted, 1e-8 * scale);
        if ns.ncols() != g.len() {
            return Err(Error::Contract(format!(
                "eigenvalue {value:.6} has algebraic multiplicity {} but geometric multiplicity {}",
                g.len(),
                ns.ncols()
            )));
        }
        let proj = &ns * ns.transpose();
        let basis = canonical_basis(&proj, g.len());
        out.push(EigenCluster { value, basis, max_imag });
    }
    Ok(out)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of the column space of a complex matrix (rank from SVD).
pub fn complex_range_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let sv = &svd.singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    let cols: Vec<_> = (0..sv.len())
        .filter(|&i| sv[i] > rel_tol * top.max(1e-300))
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(m.nrows(), 0);
    }
    CMatrix::from_columns(&cols)
}

/// Matrix sign function by scaled Newton iteration. All eigenvalues must be
/// off the imaginary axis.
pub fn matrix_sign(a: &CMatrix, max_iter: usize) -> Result<CMatrix> {
    let n = a.nrows();
    let mut s = a.clone();
    for _ in 0..max_iter {
        let inv = s
            .clone()
            .try_inverse()
            .ok_or(Error::NearImaginary(0.0))?;
        let det = s.clone().determinant().norm();
        let mu = if det.is_finite() && det > 0.0 {
            det.powf(-1.0 / n as f64)
        } else {
            1.0
        };
        let mu = Complex::new(mu, 0.0);
        let next = (&s * mu + &inv / mu) * Complex::new(0.5, 0.0);
        let diff = (&next - &s).norm();
        let size = next.norm();
        s = next;
        if diff <= 1e-13 * size {
            // one unscaled polish step
            let inv = s.clone().try_inverse().ok_or(Error::NearImaginary(0.0))?;
            return Ok((&s + &inv) * Complex::new(0.5, 0.0));
        }
    }
    Err(Error::NearImaginary(f64::NAN))
}

/// Principal angles (radians) between the column spaces of two matrices with
/// orthonormal columns.
pub fn principal_angles(a: &CMatrix, b: &CMatrix) -> Vec<f64> {
    let m = a.adjoint() * b;
    singular_values_c(&m)
        .into_iter()
        .map(|c| c.min(1.0).acos())
        .collect()
}

/// Orthonormalize the columns of a real matrix (thin QR).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = m.clone().qr().q();
    q.columns(0, m.ncols()).into_owned()
}

/// Gauss elimination with partial pivoting for small dense systems.
pub fn solve_small(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

/// Finite-difference weights (Fornberg) for derivative order `m` at `x0`
/// using nodes `xs`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Lagrange interpolation weights at `x` for nodes `xs`.
pub fn lagrange_weights(x: f64, xs: &[f64]) -> Vec<f64> {
    fd_weights(x, xs, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_weights_central_second_order() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w2 = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w2[0] - 1.0).abs() < 1e-15 && (w2[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn lagrange_reproduces_cubic() {
        let xs = [-1.0, 0.0, 1.0, 2.0];
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let w = lagrange_weights(0.37, &xs);
        let v: f64 = w.iter().zip(xs.iter()).map(|(w, x)| w * f(*x)).sum();
        assert!((v - f(0.37)).abs() < 1e-14);
    }

    #[test]
    fn clusters_of_diagonal_matrix() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 2.0]));
        let c = real_eigen_clusters(&m, 1e-10).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].basis.ncols(), 2);
        assert!((c[1].basis[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((c[1].basis[(2, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(real_eigen_clusters(&m, 1e-6).is_err());
    }

    #[test]
    fn sign_of_diagonal() {
        let a = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 0.5])));
        let s = matrix_sign(&a, 100).unwrap();
        assert!((s[(0, 0)].re + 1.0).abs() < 1e-12);
        assert!((s[(1, 1)].re - 1.0).abs() < 1e-12);
    }
}
