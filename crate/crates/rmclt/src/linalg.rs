//! Dense real/complex matrix kernel: norms, spectral radius, rank, and the
//! trace/product inequalities used by all downstream bound computations.
//!
//! Singular values come from a full decomposition for moderate dimensions and
//! a power iteration above `DENSE_LIMIT`; all operations are pure and safe to
//! call concurrently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Above this dimension the operator norm uses power iteration instead of a
/// full SVD.
const DENSE_LIMIT: usize = 512;

/// Relative tolerance of the iterative operator-norm path.
const ITER_TOL: f64 = 1e-10;

/// Default relative rank tolerance.
pub const RANK_TOL: f64 = 1e-10;

pub fn cmat_from_real(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

pub fn real_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    if a.nrows().min(a.ncols()) <= DENSE_LIMIT {
        Ok(singular_values(a).first().copied().unwrap_or(0.0))
    } else {
        Ok(power_iteration_op_norm(a))
    }
}

/// Power iteration on A*A for the largest singular value.
fn power_iteration_op_norm(a: &CMatrix) -> f64 {
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(((i * 2654435761 + 1) % 1000) as f64 / 1000.0 + 0.5, 0.0)
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut last = 0.0f64;
    for _ in 0..5000 {
        let w = a * &v;
        let u = a.adjoint() * w;
        let nrm = u.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let est = nrm.sqrt();
        v = u / Complex64::new(nrm, 0.0);
        if (est - last).abs() <= ITER_TOL * est.max(1.0) {
            return est;
        }
        last = est;
    }
    last
}

/// Largest |eigenvalue| of a real symmetric matrix: dense eigensolve up to
/// `DENSE_LIMIT`, power iteration on A² beyond (sign-blind, so the near
/// ±λ degeneracy of symmetric random matrices does not stall it).
pub fn sym_spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return 0.0;
    }
    if n <= DENSE_LIMIT {
        let eig = a.clone().symmetric_eigen();
        return eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    }
    let mut w = DVector::from_fn(n, |i, _| ((i * 2654435761 + 7) % 1000) as f64 / 1000.0 + 0.5);
    w /= w.norm();
    let mut last = 0.0f64;
    for _ in 0..20_000 {
        let u = a * (a * &w);
        let nrm = u.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let est = w.dot(&u).max(0.0).sqrt();
        w = u / nrm;
        if (est - last).abs() <= ITER_TOL * est.max(1.0) {
            return est;
        }
        last = est;
    }
    last
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    Ok(a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

/// Sum of singular values. Equals sup over unit-operator-norm B of |Tr(B A)|.
pub fn nuclear_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    Ok(singular_values(a).iter().sum())
}

/// All three norms in one decomposition.
#[derive(Debug, Clone, Copy)]
pub struct NormTriple {
    pub op_norm: f64,
    pub hs_norm: f64,
    pub nuclear_norm: f64,
}

pub fn norm_triple(a: &CMatrix) -> Result<NormTriple> {
    check_finite(a)?;
    let sv = singular_values(a);
    Ok(NormTriple {
        op_norm: sv.first().copied().unwrap_or(0.0),
        hs_norm: sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
        nuclear_norm: sv.iter().sum(),
    })
}

/// Max |eigenvalue|. For hermitian input this equals the operator norm.
pub fn spectral_radius(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "spectral radius needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let eigs = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("eigenvalues unavailable after Schur".into()))?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(a: &CMatrix, tol: f64) -> Result<usize> {
    check_finite(a)?;
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

/// Tr(A_1 A_2 ... A_k) without forming the full product: accumulates the
/// chain product and takes the trace at the end.
pub fn trace_product(mats: &[CMatrix]) -> Result<Complex64> {
    if mats.is_empty() {
        return Err(Error::Argument("trace_product of empty list".into()));
    }
    for w in mats.windows(2) {
        if w[0].ncols() != w[1].nrows() {
            return Err(Error::Shape(format!(
                "chain dimension mismatch: {}x{} then {}x{}",
                w[0].nrows(),
                w[0].ncols(),
                w[1].nrows(),
                w[1].ncols()
            )));
        }
    }
    if mats[0].nrows() != mats[mats.len() - 1].ncols() {
        return Err(Error::Shape("product is not square".into()));
    }
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc *= m;
    }
    Ok(acc.trace())
}

/// The bound ||A_i||_HS ||A_j||_HS prod_{k not in {i,j}} ||A_k|| on
/// |Tr(A_1 ... A_n)|. Indices are zero-based, i < j.
pub fn trace_product_bound(mats: &[CMatrix], i: usize, j: usize) -> Result<f64> {
    if i >= j || j >= mats.len() {
        return Err(Error::Argument(format!(
            "need i < j < {}, got i={i}, j={j}",
            mats.len()
        )));
    }
    let mut bound = hs_norm(&mats[i])? * hs_norm(&mats[j])?;
    for (k, m) in mats.iter().enumerate() {
        if k != i && k != j {
            bound *= operator_norm(m)?;
        }
    }
    Ok(bound)
}
