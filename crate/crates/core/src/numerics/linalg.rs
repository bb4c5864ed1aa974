//! Dense linear algebra on top of `nalgebra`: Cholesky with a jitter guard, sorted SVD,
//! symmetric inverse square roots and log-determinants.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

const SYMMETRY_TOL: f64 = 1e-12;
const SVD_MAX_ITER: usize = 10_000;

/// Lower-triangular Cholesky factor of a verified symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
    jittered: bool,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn into_lower(self) -> Matrix {
        self.lower
    }

    /// Whether the diagonal jitter retry was needed.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `ln det` of the factored matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lower[(i, j)] * z[j];
            }
            z[i] = acc / self.lower[(i, i)];
        }
        z
    }

    /// Quadratic form `bᵀ M⁻¹ b`.
    pub fn mahalanobis_sq(&self, b: &[f64]) -> f64 {
        self.solve_lower(b).iter().map(|z| z * z).sum()
    }
}

pub fn is_symmetric(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// Cholesky factorization. On failure the diagonal is jittered once by `1e-12 · trace / dim`.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Argument(format!(
            "cholesky needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("non-finite entries".into()));
    }
    if !is_symmetric(m) {
        return Err(Error::Factorization("matrix is not symmetric".into()));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Ok(CholeskyFactor {
            lower: ch.unpack(),
            jittered: false,
        });
    }
    let dim = m.nrows() as f64;
    let jitter = 1e-12 * m.trace() / dim;
    if jitter > 0.0 {
        let mut retry = m.clone();
        for i in 0..m.nrows() {
            retry[(i, i)] += jitter;
        }
        if let Some(ch) = retry.cholesky() {
            return Ok(CholeskyFactor {
                lower: ch.unpack(),
                jittered: true,
            });
        }
    }
    Err(Error::Factorization(format!(
        "{}x{} matrix failed after diagonal jitter",
        m.nrows(),
        m.ncols()
    )))
}

/// Singular value decomposition with singular values sorted nonincreasingly.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for j in 0..k {
            let s = self.singular_values[j];
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("svd needs finite entries".into()));
    }
    let decomposition = SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical {
            iterations: SVD_MAX_ITER,
            message: "SVD did not converge".into(),
        })?;
    let u = decomposition.u.expect("u requested");
    let v_t = decomposition.v_t.expect("v_t requested");
    let values = decomposition.singular_values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let k = order.len();
    let mut su = Matrix::zeros(u.nrows(), k);
    let mut sv = Matrix::zeros(v_t.ncols(), k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
        singular_values.push(values[src].max(0.0));
    }
    Ok(Svd {
        u: su,
        singular_values,
        v: sv,
    })
}

/// Symmetric inverse square root `M^{-1/2}` via eigendecomposition.
///
/// Eigenvalues at or below `rel_floor · λ_max` are treated as zero (pseudo-inverse);
/// the returned flag reports whether that happened.
pub fn inverse_sqrt_symmetric(m: &Matrix, rel_floor: f64) -> (Matrix, bool) {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = rel_floor * max;
    let mut deficient = false;
    let scaled: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            if l > floor && l > 0.0 {
                1.0 / l.sqrt()
            } else {
                deficient = true;
                0.0
            }
        })
        .collect();
    let q = &eig.eigenvectors;
    let mut qs = q.clone();
    for (j, s) in scaled.iter().enumerate() {
        qs.column_mut(j).scale_mut(*s);
    }
    (qs * q.transpose(), deficient)
}

/// `ln det` of an SPD matrix through its Cholesky factor.
pub fn log_det_spd(m: &Matrix) -> Result<f64> {
    Ok(cholesky(m)?.log_det())
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// Principal sub-block `[start, start+len) x [start, start+len)`.
pub fn principal_block(m: &Matrix, start: usize, len: usize) -> Matrix {
    m.view((start, start), (len, len)).into_owned()
}
