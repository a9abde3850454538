//! The five matrix models as differentiable maps x -> A(x): generalized
//! Wigner, correlated gaussian, gaussian Toeplitz, Wishart, and double
//! Wishart, each with closed-form first and second partial derivatives.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::laws::SmoothLaw;

/// Condition-number ceiling for the double-Wishart denominator Y Y^t.
const CONDITION_LIMIT: f64 = 1e12;

/// Coordinate labels of the index set I, in model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordLabel {
    /// Wigner upper-triangle entry (i, j), i <= j.
    UpperEntry(usize, usize),
    /// Dense entry (i, j) of a full matrix (correlated gaussian model).
    Entry(usize, usize),
    /// Toeplitz diagonal offset d.
    Diagonal(usize),
    /// Entry (p, q) of the Wishart data matrix X.
    DataX(usize, usize),
    /// Entry (p, q) of the double-Wishart denominator data matrix Y.
    DataY(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Wigner,
    CorrGauss,
    Toeplitz,
    Wishart,
    DoubleWishart,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Wigner => "wigner",
            ModelKind::CorrGauss => "corr-gauss",
            ModelKind::Toeplitz => "toeplitz",
            ModelKind::Wishart => "wishart",
            ModelKind::DoubleWishart => "double-wishart",
        }
    }
}

/// Per-entry second-moment profile s_ij for the generalized Wigner model,
/// stored on the upper triangle.
#[derive(Debug, Clone)]
pub struct VarianceProfile {
    n: usize,
    s: Vec<f64>, // s_ij for i <= j, row-major
}

impl VarianceProfile {
    pub fn unit(n: usize) -> Self {
        VarianceProfile {
            n,
            s: vec![1.0; n * (n + 1) / 2],
        }
    }

    pub fn new(n: usize, s: Vec<f64>) -> Result<Self> {
        if s.len() != n * (n + 1) / 2 {
            return Err(Error::Argument(format!(
                "profile for n={n} needs {} entries, got {}",
                n * (n + 1) / 2,
                s.len()
            )));
        }
        if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Argument("profile entries must be positive finite".into()));
        }
        Ok(VarianceProfile { n, s })
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // offset of row i in the packed upper triangle
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[self.upper_index(i, j)]
    }

    /// (min, max) of s_ij^2.
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.s.iter().cloned().fold(0.0f64, f64::max);
        (lo * lo, hi * hi)
    }
}

/// Covariance of the correlated-gaussian model over I x I. The Toeplitz rule
/// is never materialized; its Gershgorin bound comes from the
/// |i-j| = |k-l| structure directly.
#[derive(Debug, Clone)]
pub enum CovarianceSpec {
    Identity { dim: usize },
    Dense { sigma: DMatrix<f64> },
    ToeplitzInduced { n: usize },
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Identity { dim } => *dim,
            CovarianceSpec::Dense { sigma } => sigma.nrows(),
            CovarianceSpec::ToeplitzInduced { n } => n * n,
        }
    }

    /// max_row sum_cols |sigma_{ij,kl}|; dominates the operator norm.
    pub fn gershgorin_bound(&self) -> f64 {
        match self {
            CovarianceSpec::Identity { dim } => {
                if *dim == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            CovarianceSpec::Dense { sigma } => (0..sigma.nrows())
                .map(|i| sigma.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            CovarianceSpec::ToeplitzInduced { n } => {
                let n = *n;
                // row (i,j) with offset d = |i-j| sees n ordered pairs at
                // d = 0 and 2(n-d) pairs at d >= 1
                (0..n)
                    .map(|d| if d == 0 { n } else { 2 * (n - d) })
                    .max()
                    .unwrap_or(0) as f64
            }
        }
    }

    /// A factor F with sigma = F F^t (PSD square root for dense input).
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        match self {
            CovarianceSpec::Identity { dim } => Ok(DMatrix::identity(*dim, *dim)),
            CovarianceSpec::Dense { sigma } => {
                if sigma.nrows() != sigma.ncols() {
                    return Err(Error::Shape("covariance must be square".into()));
                }
                if (sigma - sigma.transpose()).amax() > 1e-10 {
                    return Err(Error::Argument("covariance must be symmetric".into()));
                }
                let eig = sigma.clone().symmetric_eigen();
                if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
                    return Err(Error::Argument("covariance must be PSD".into()));
                }
                let sqrt =
                    DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
                Ok(&eig.eigenvectors * sqrt)
            }
            CovarianceSpec::ToeplitzInduced { .. } => Err(Error::Capability(
                "Toeplitz-induced covariance is not materialized".into(),
            )),
        }
    }
}

/// A matrix ensemble as a differentiable map over the index set. Immutable
/// descriptor; sampling takes a caller-supplied generator.
pub struct MatrixModel {
    kind: ModelKind,
    n: usize,
    big_n: usize,
    big_m: usize,
    index: Vec<CoordLabel>,
    law: Option<SmoothLaw>,
    profile: Option<VarianceProfile>,
    factor: Option<DMatrix<f64>>,
    cov: Option<CovarianceSpec>,
}

pub fn wigner_model(n: usize, profile: VarianceProfile, law: SmoothLaw) -> Result<MatrixModel> {
    if n == 0 {
        return Err(Error::Argument("wigner model needs n >= 1".into()));
    }
    if profile.n != n {
        return Err(Error::Argument("profile dimension mismatch".into()));
    }
    let mut index = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            index.push(CoordLabel::UpperEntry(i, j));
        }
    }
    Ok(MatrixModel {
        kind: ModelKind::Wigner,
        n,
        big_n: 0,
        big_m: 0,
        index,
        law: Some(law),
        profile: Some(profile),
        factor: None,
        cov: None,
    })
}

pub fn correlated_gaussian_model(n: usize, cov: CovarianceSpec) -> Result<MatrixModel> {
    if cov.dim() != n * n {
        return Err(Error::Argument(format!(
            "covariance dimension {} != n^2 = {}",
            cov.dim(),
            n * n
        )));
    }
    let factor = cov.factor()?;
    let mut index = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            index.push(CoordLabel::Entry(i, j));
        }
    }
    Ok(MatrixModel {
        kind: ModelKind::CorrGauss,
        n,
        big_n: 0,
        big_m: 0,
        index,
        law: None,
        profile: None,
        factor: Some(factor),
        cov: Some(cov),
    })
}

pub fn toeplitz_model(n: usize) -> Result<MatrixModel> {
    if n == 0 {
        return Err(Error::Argument("toeplitz model needs n >= 1".into()));
    }
    Ok(MatrixModel {
        kind: ModelKind::Toeplitz,
        n,
        big_n: 0,
        big_m: 0,
        index: (0..n).map(CoordLabel::Diagonal).collect(),
        law: None,
        profile: None,
        factor: None,
        cov: Some(CovarianceSpec::ToeplitzInduced { n }),
    })
}

pub fn wishart_model(n: usize, big_n: usize, law: SmoothLaw) -> Result<MatrixModel> {
    if n == 0 || n > big_n {
        return Err(Error::Argument(format!("wishart needs 1 <= n <= N, got n={n}, N={big_n}")));
    }
    let mut index = Vec::with_capacity(n * big_n);
    for p in 0..n {
        for q in 0..big_n {
            index.push(CoordLabel::DataX(p, q));
        }
    }
    Ok(MatrixModel {
        kind: ModelKind::Wishart,
        n,
        big_n,
        big_m: 0,
        index,
        law: Some(law),
        profile: None,
        factor: None,
        cov: None,
    })
}

pub fn double_wishart_model(
    n: usize,
    big_n: usize,
    big_m: usize,
    law: SmoothLaw,
) -> Result<MatrixModel> {
    if n == 0 || n > big_n || big_n > big_m {
        return Err(Error::Argument(format!(
            "double wishart needs 1 <= n <= N <= M, got n={n}, N={big_n}, M={big_m}"
        )));
    }
    let mut index = Vec::with_capacity(n * (big_n + big_m));
    for p in 0..n {
        for q in 0..big_n {
            index.push(CoordLabel::DataX(p, q));
        }
    }
    for p in 0..n {
        for q in 0..big_m {
            index.push(CoordLabel::DataY(p, q));
        }
    }
    Ok(MatrixModel {
        kind: ModelKind::DoubleWishart,
        n,
        big_n,
        big_m,
        index,
        law: Some(law),
        profile: None,
        factor: None,
        cov: None,
    })
}

/// Double-Wishart workspace: factored denominator and its inverse, built by
/// Cholesky solves with condition monitoring.
struct DoubleWishartParts {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    c: DMatrix<f64>,
    d_inv: DMatrix<f64>,
}

impl MatrixModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data_cols(&self) -> usize {
        self.big_n
    }

    pub fn denom_cols(&self) -> usize {
        self.big_m
    }

    pub fn index(&self) -> &[CoordLabel] {
        &self.index
    }

    pub fn index_len(&self) -> usize {
        self.index.len()
    }

    pub fn covariance(&self) -> Option<&CovarianceSpec> {
        self.cov.as_ref()
    }

    pub fn profile(&self) -> Option<&VarianceProfile> {
        self.profile.as_ref()
    }

    /// Worst-case (c1, c2) over the entry laws: base constants scaled by the
    /// largest profile entry where a profile applies, (1, 0) for the
    /// gaussian models.
    pub fn law_constants(&self) -> (f64, f64) {
        match (&self.law, &self.profile) {
            (Some(law), Some(profile)) => {
                let (_, c_max) = profile.bounds();
                let smax = c_max.sqrt();
                (law.c1() * smax, law.c2() * smax)
            }
            (Some(law), None) => (law.c1(), law.c2()),
            (None, _) => (1.0, 0.0),
        }
    }

    /// One draw of the coordinate vector, in index order.
    pub fn sample_coords(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self.kind {
            ModelKind::Wigner => {
                let law = self.law.as_ref().unwrap();
                let profile = self.profile.as_ref().unwrap();
                self.index
                    .iter()
                    .map(|label| match label {
                        CoordLabel::UpperEntry(i, j) => profile.get(*i, *j) * law.sample(rng),
                        _ => unreachable!(),
                    })
                    .collect()
            }
            ModelKind::CorrGauss => {
                let factor = self.factor.as_ref().unwrap();
                let z = DVector::from_fn(factor.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                (factor * z).as_slice().to_vec()
            }
            ModelKind::Toeplitz => (0..self.n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
            ModelKind::Wishart | ModelKind::DoubleWishart => {
                let law = self.law.as_ref().unwrap();
                self.index.iter().map(|_| law.sample(rng)).collect()
            }
        }
    }

    fn check_coords(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.index.len() {
            return Err(Error::Argument(format!(
                "expected {} coordinates, got {}",
                self.index.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// X data matrix view of the coordinates (Wishart / double Wishart).
    fn data_x(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.big_n, &x[..self.n * self.big_n])
    }

    fn data_y(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.big_m, &x[self.n * self.big_n..])
    }

    /// max{1, λ_x, λ_y, 1/δ_y} with λ_x the top eigenvalue of N⁻¹XXᵗ and
    /// λ_y, δ_y the extreme eigenvalues of M⁻¹YYᵗ.
    pub fn double_wishart_lambda(&self, x: &[f64]) -> Result<f64> {
        if self.kind != ModelKind::DoubleWishart {
            return Err(Error::Argument("lambda profile only applies to double Wishart".into()));
        }
        self.check_coords(x)?;
        let xm = self.data_x(x);
        let ym = self.data_y(x);
        let cx = &xm * xm.transpose() / self.big_n as f64;
        let dy = &ym * ym.transpose() / self.big_m as f64;
        let lam_x = cx.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let ey = dy.symmetric_eigen();
        let lam_y = ey.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let del_y = ey.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(del_y > 0.0) {
            return Err(Error::Degenerate("Y Y^t has a nonpositive eigenvalue".into()));
        }
        Ok(1.0f64.max(lam_x).max(lam_y).max(1.0 / del_y))
    }

    fn double_parts(&self, x: &[f64]) -> Result<DoubleWishartParts> {
        let xm = self.data_x(x);
        let ym = self.data_y(x);
        let c = &xm * xm.transpose();
        let d = &ym * ym.transpose();
        let eig = d.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || max / min > CONDITION_LIMIT {
            return Err(Error::Degenerate(format!(
                "Y Y^t condition {:.3e} exceeds {CONDITION_LIMIT:.0e}",
                max / min.max(f64::MIN_POSITIVE)
            )));
        }
        let chol = d
            .cholesky()
            .ok_or_else(|| Error::Degenerate("Y Y^t not positive definite".into()))?;
        let d_inv = chol.solve(&DMatrix::identity(self.n, self.n));
        Ok(DoubleWishartParts { x: xm, y: ym, c, d_inv })
    }

    /// A(x).
    pub fn assemble(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_coords(x)?;
        let n = self.n;
        match self.kind {
            ModelKind::Wigner => {
                let scale = 1.0 / (n as f64).sqrt();
                let mut a = DMatrix::zeros(n, n);
                for (label, &v) in self.index.iter().zip(x) {
                    if let CoordLabel::UpperEntry(i, j) = label {
                        a[(*i, *j)] = scale * v;
                        a[(*j, *i)] = scale * v;
                    }
                }
                Ok(a)
            }
            ModelKind::CorrGauss => {
                let scale = 1.0 / (n as f64).sqrt();
                Ok(DMatrix::from_row_slice(n, n, x) * scale)
            }
            ModelKind::Toeplitz => {
                let scale = 1.0 / (n as f64).sqrt();
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    scale * x[i.abs_diff(j)]
                }))
            }
            ModelKind::Wishart => {
                let xm = self.data_x(x);
                Ok(&xm * xm.transpose() / self.big_n as f64)
            }
            ModelKind::DoubleWishart => {
                let parts = self.double_parts(x)?;
                Ok(&parts.c * &parts.d_inv)
            }
        }
    }

    /// dA/dx_u at x.
    pub fn d1(&self, x: &[f64], u: usize) -> Result<DMatrix<f64>> {
        self.check_coords(x)?;
        let n = self.n;
        match (self.kind, self.index[u]) {
            (ModelKind::Wigner, CoordLabel::UpperEntry(i, j)) => {
                let scale = 1.0 / (n as f64).sqrt();
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = scale;
                m[(j, i)] = scale;
                Ok(m)
            }
            (ModelKind::CorrGauss, CoordLabel::Entry(i, j)) => {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = 1.0 / (n as f64).sqrt();
                Ok(m)
            }
            (ModelKind::Toeplitz, CoordLabel::Diagonal(d)) => {
                let scale = 1.0 / (n as f64).sqrt();
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    if i.abs_diff(j) == d {
                        scale
                    } else {
                        0.0
                    }
                }))
            }
            (ModelKind::Wishart, CoordLabel::DataX(p, q)) => {
                let xm = self.data_x(x);
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    m[(p, i)] += xm[(i, q)];
                    m[(i, p)] += xm[(i, q)];
                }
                Ok(m / self.big_n as f64)
            }
            (ModelKind::DoubleWishart, label) => {
                let parts = self.double_parts(x)?;
                match label {
                    CoordLabel::DataX(p, q) => {
                        Ok(rank_two(n, p, q, &parts.x) * &parts.d_inv)
                    }
                    CoordLabel::DataY(p, q) => {
                        Ok(-(&parts.c * &parts.d_inv * rank_two(n, p, q, &parts.y) * &parts.d_inv))
                    }
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        }
    }

    /// d^2 A / dx_u dx_v at x.
    pub fn d2(&self, x: &[f64], u: usize, v: usize) -> Result<DMatrix<f64>> {
        self.check_coords(x)?;
        let n = self.n;
        match self.kind {
            ModelKind::Wigner | ModelKind::CorrGauss | ModelKind::Toeplitz => {
                Ok(DMatrix::zeros(n, n))
            }
            ModelKind::Wishart => {
                let (CoordLabel::DataX(p, q), CoordLabel::DataX(r, s)) =
                    (self.index[u], self.index[v])
                else {
                    unreachable!()
                };
                let mut m = DMatrix::zeros(n, n);
                if q == s {
                    let scale = 1.0 / self.big_n as f64;
                    m[(p, r)] += scale;
                    m[(r, p)] += scale;
                }
                Ok(m)
            }
            ModelKind::DoubleWishart => {
                let parts = self.double_parts(x)?;
                Ok(self.double_d2(&parts, self.index[u], self.index[v]))
            }
        }
    }

    fn double_d2(&self, parts: &DoubleWishartParts, u: CoordLabel, v: CoordLabel) -> DMatrix<f64> {
        let n = self.n;
        let di = &parts.d_inv;
        match (u, v) {
            (CoordLabel::DataX(p, q), CoordLabel::DataX(r, s)) => {
                if q == s {
                    let mut sym = DMatrix::zeros(n, n);
                    sym[(p, r)] += 1.0;
                    sym[(r, p)] += 1.0;
                    sym * di
                } else {
                    DMatrix::zeros(n, n)
                }
            }
            (CoordLabel::DataX(p, q), CoordLabel::DataY(r, s))
            | (CoordLabel::DataY(r, s), CoordLabel::DataX(p, q)) => {
                -(rank_two(n, p, q, &parts.x) * di * rank_two(n, r, s, &parts.y) * di)
            }
            (CoordLabel::DataY(p, q), CoordLabel::DataY(r, s)) => {
                let epq = rank_two(n, p, q, &parts.y);
                let ers = rank_two(n, r, s, &parts.y);
                let mut out = &parts.c * di * &epq * di * &ers * di
                    + &parts.c * di * &ers * di * &epq * di;
                if q == s {
                    let mut sym = DMatrix::zeros(n, n);
                    sym[(p, r)] += 1.0;
                    sym[(r, p)] += 1.0;
                    out -= &parts.c * di * sym * di;
                }
                out
            }
            _ => unreachable!(),
        }
    }
}

/// e_p e_q^t Z^t + Z e_q e_p^t for an n x k data matrix Z.
fn rank_two(n: usize, p: usize, q: usize, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(p, i)] += z[(i, q)];
        m[(i, p)] += z[(i, q)];
    }
    m
}
