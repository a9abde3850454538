//! Second-order Poincaré machinery for arbitrary smooth functionals:
//! kappa moments of the gradient/Hessian and the two total-variation bound
//! formulas (independent coordinates and gaussian-with-covariance).

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::laws::SmoothLaw;
use crate::linalg;
use crate::mc;

const FD_STEP: f64 = 1e-5;
const GRAD_CHECK_TOL: f64 = 1e-5;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type HessNormFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A C^2 functional g with optional analytic derivative evaluators.
/// Missing evaluators fall back to central finite differences.
#[derive(Clone)]
pub struct FunctionalModel {
    arity: usize,
    eval: EvalFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
    hess_opnorm: Option<HessNormFn>,
}

impl FunctionalModel {
    pub fn new(arity: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FunctionalModel {
            arity,
            eval: Arc::new(eval),
            grad: None,
            hess: None,
            hess_opnorm: None,
        }
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hess(mut self, hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn with_hess_opnorm(mut self, h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.hess_opnorm = Some(Arc::new(h));
        self
    }

    /// g(x) = x^t B x with symmetric B: analytic gradient 2Bx, constant
    /// Hessian 2B with precomputed operator norm.
    pub fn quadratic_form(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != b.ncols() {
            return Err(Error::Shape("quadratic form needs a square matrix".into()));
        }
        if (b.clone() - b.transpose()).amax() > 1e-12 * b.amax().max(1.0) {
            return Err(Error::Argument("quadratic form matrix must be symmetric".into()));
        }
        let n = b.nrows();
        let opnorm = 2.0 * linalg::sym_spectral_norm(&b);
        let b_eval = b.clone();
        let b_grad = b.clone();
        let b_hess = b;
        Ok(FunctionalModel::new(n, move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (v.transpose() * &b_eval * v)[(0, 0)]
        })
        .with_grad(move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (&b_grad * v * 2.0).as_slice().to_vec()
        })
        .with_hess(move |_x: &[f64]| b_hess.clone() * 2.0)
        .with_hess_opnorm(move |_x: &[f64]| opnorm))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    fn fd_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = x.to_vec();
        (0..self.arity)
            .map(|i| {
                let h = FD_STEP * x[i].abs().max(1.0);
                let orig = xs[i];
                xs[i] = orig + h;
                let fp = (self.eval)(&xs);
                xs[i] = orig - h;
                let fm = (self.eval)(&xs);
                xs[i] = orig;
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    /// ‖∇²g(x)‖ (largest |eigenvalue|).
    pub fn hessian_opnorm(&self, x: &[f64]) -> f64 {
        if let Some(h) = &self.hess_opnorm {
            return h(x);
        }
        let m = self.hessian(x);
        linalg::sym_spectral_norm(&m)
    }

    /// Full Hessian matrix, by finite differences of the gradient if no
    /// evaluator was supplied.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(h) = &self.hess {
            return h(x);
        }
        let n = self.arity;
        let mut xs = x.to_vec();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 10.0 * FD_STEP * x[j].abs().max(1.0);
            let orig = xs[j];
            xs[j] = orig + h;
            let gp = self.gradient(&xs);
            xs[j] = orig - h;
            let gm = self.gradient(&xs);
            xs[j] = orig;
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // symmetrize the FD noise away
        let mt = m.transpose();
        (m + mt) * 0.5
    }

    /// Analytic gradient vs central differences, relative tolerance 1e-5.
    pub fn check_grad(&self, x: &[f64]) -> Result<()> {
        let g = self.gradient(x);
        let fd = self.fd_gradient(x);
        for i in 0..self.arity {
            let denom = fd[i].abs().max(1.0);
            if (g[i] - fd[i]).abs() / denom > GRAD_CHECK_TOL {
                return Err(Error::Numeric(format!(
                    "gradient check failed at coordinate {i}: analytic {} vs fd {}",
                    g[i], fd[i]
                )));
            }
        }
        Ok(())
    }
}

/// Per-coordinate entry laws for the independent-coordinate theorem.
#[derive(Clone)]
pub enum LawSet {
    Iid(SmoothLaw),
    PerCoordinate(Vec<SmoothLaw>),
}

impl LawSet {
    pub fn sample(&self, rng: &mut impl Rng, arity: usize) -> Result<Vec<f64>> {
        match self {
            LawSet::Iid(law) => Ok((0..arity).map(|_| law.sample(rng)).collect()),
            LawSet::PerCoordinate(laws) => {
                if laws.len() != arity {
                    return Err(Error::Argument(format!(
                        "{} laws for arity {arity}",
                        laws.len()
                    )));
                }
                Ok(laws.iter().map(|l| l.sample(rng)).collect())
            }
        }
    }

    /// Worst-case (c1, c2) over the coordinate laws.
    pub fn constants(&self) -> (f64, f64) {
        match self {
            LawSet::Iid(law) => (law.c1(), law.c2()),
            LawSet::PerCoordinate(laws) => laws.iter().fold((0.0, 0.0), |(c1, c2), l| {
                (c1.max(l.c1()), c2.max(l.c2()))
            }),
        }
    }
}

/// The three kappa moments with Monte Carlo standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KappaTriple {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub mc_std_errors: [f64; 3],
    pub n_mc: usize,
}

impl KappaTriple {
    pub fn exact(kappa0: f64, kappa1: f64, kappa2: f64) -> Self {
        KappaTriple {
            kappa0,
            kappa1,
            kappa2,
            mc_std_errors: [0.0; 3],
            n_mc: 0,
        }
    }
}

/// delta-method standard error for kappa = mean^(1/power).
fn root_se(m: f64, se_m: f64, power: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    se_m / (power * m.powf((power - 1.0) / power))
}

/// Builds a KappaTriple out of per-sample raw moments
/// (sum |g_i|^4, ‖∇g‖^4, ‖∇²g‖^4).
pub fn kappas_from_raw(raw: &[[f64; 3]]) -> KappaTriple {
    let col = |k: usize| raw.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (c0, c1, c2) = (col(0), col(1), col(2));
    let (m0, m1, m2) = (mc::mean(&c0), mc::mean(&c1), mc::mean(&c2));
    KappaTriple {
        kappa0: m0.max(0.0).sqrt(),
        kappa1: m1.max(0.0).powf(0.25),
        kappa2: m2.max(0.0).powf(0.25),
        mc_std_errors: [
            root_se(m0, mc::std_error(&c0), 2.0),
            root_se(m1, mc::std_error(&c1), 4.0),
            root_se(m2, mc::std_error(&c2), 4.0),
        ],
        n_mc: raw.len(),
    }
}

/// Monte Carlo estimate of (kappa0, kappa1, kappa2) for W = g(X) with
/// X_i drawn from the given laws. Deterministic given the seed.
pub fn estimate_kappas(
    fm: &FunctionalModel,
    laws: &LawSet,
    n_mc: usize,
    seed: u64,
) -> Result<KappaTriple> {
    if n_mc < 2 {
        return Err(Error::Argument("n_mc must be at least 2".into()));
    }
    let raw: Vec<Result<[f64; 3]>> = mc::par_samples(seed, n_mc, |rng, idx| {
        let x = laws.sample(rng, fm.arity())?;
        let g = fm.gradient(&x);
        let mut s4 = 0.0;
        let mut s2 = 0.0;
        for &gi in &g {
            if !gi.is_finite() {
                return Err(Error::SampleDomain {
                    index: idx,
                    detail: format!("non-finite gradient at x = {x:?}"),
                });
            }
            s4 += gi * gi * gi * gi;
            s2 += gi * gi;
        }
        let h = fm.hessian_opnorm(&x);
        if !h.is_finite() {
            return Err(Error::SampleDomain {
                index: idx,
                detail: "non-finite Hessian norm".into(),
            });
        }
        Ok([s4, s2 * s2, h * h * h * h])
    });
    let raw: Vec<[f64; 3]> = raw.into_iter().collect::<Result<_>>()?;
    Ok(kappas_from_raw(&raw))
}

/// dTV(W, Z) ≤ 2√5 (c1 c2 κ0 + c1³ κ1 κ2) / σ² for independent coordinates
/// with laws in L(c1, c2).
pub fn tv_bound_independent(c1: f64, c2: f64, k: &KappaTriple, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::Argument(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(2.0 * 5.0f64.sqrt() * (c1 * c2 * k.kappa0 + c1.powi(3) * k.kappa1 * k.kappa2) / sigma2)
}

/// dTV(W, Z) ≤ 2√5 ‖Σ‖^{3/2} κ1 κ2 / σ² for centered gaussian coordinates
/// with covariance Σ.
pub fn tv_bound_covariance(sigma_op_norm: f64, k: &KappaTriple, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::Argument(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(2.0 * 5.0f64.sqrt() * sigma_op_norm.powf(1.5) * k.kappa1 * k.kappa2 / sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraticVerdict {
    NearGaussian,
    Dominated,
}

/// max_i λ_i² / Σ_i λ_i² for W = x^t B x: gaussianity needs no single
/// eigenvalue to dominate the spectrum.
pub fn quadratic_form_diagnostic(
    b: &DMatrix<f64>,
    threshold: Option<f64>,
) -> Result<(f64, QuadraticVerdict)> {
    if b.nrows() != b.ncols() {
        return Err(Error::Shape("diagnostic needs a square matrix".into()));
    }
    if (b.clone() - b.transpose()).amax() > 1e-10 * b.amax().max(1.0) {
        return Err(Error::Argument("diagnostic needs a symmetric matrix".into()));
    }
    if b.amax() == 0.0 {
        return Err(Error::Degenerate("zero quadratic form: ratio undefined".into()));
    }
    let thr = threshold.unwrap_or(0.05);
    let eig = b.clone().symmetric_eigen();
    let sq: Vec<f64> = eig.eigenvalues.iter().map(|l| l * l).collect();
    let total = mc::pairwise_sum(&sq);
    let max = sq.iter().cloned().fold(0.0f64, f64::max);
    let ratio = max / total;
    let verdict = if ratio < thr {
        QuadraticVerdict::NearGaussian
    } else {
        QuadraticVerdict::Dominated
    };
    Ok((ratio, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{gaussian_law, std_normal_cdf, uniform_law};
    use rand::Rng;

    /// sup_x |F_m(x) - Phi((x - mu)/sd)| over the sorted samples.
    fn ks_to_normal(samples: &[f64], mu: f64, sd: f64) -> f64 {
        let mut xs = samples.to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = xs.len() as f64;
        let mut sup = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = std_normal_cdf((x - mu) / sd);
            sup = sup.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
        }
        sup
    }

    fn tridiag_b(n: usize, off: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { off } else { 0.0 })
    }

    #[test]
    fn coordinate_projection_kappas() {
        // g(x) = x_1: gradient e_1 everywhere, zero Hessian
        let fm = FunctionalModel::new(5, |x: &[f64]| x[0])
            .with_grad(|x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[0] = 1.0;
                g
            })
            .with_hess_opnorm(|_| 0.0);
        let k = estimate_kappas(&fm, &LawSet::Iid(gaussian_law()), 100, 11).unwrap();
        assert_eq!((k.kappa0, k.kappa1, k.kappa2), (1.0, 1.0, 0.0));
        assert_eq!(k.mc_std_errors, [0.0; 3]);
    }

    #[test]
    fn quadratic_kappa2_is_twice_b_norm() {
        let n = 6;
        let mut rng = mc::rng_for(13, 0);
        let mut b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        b = (&b + b.transpose()) * 0.5;
        let opnorm = linalg::sym_spectral_norm(&b);
        let fm = FunctionalModel::quadratic_form(b).unwrap();
        let k = estimate_kappas(&fm, &LawSet::Iid(gaussian_law()), 50, 17).unwrap();
        assert!((k.kappa2 - 2.0 * opnorm).abs() < 1e-10);
    }

    #[test]
    fn tridiagonal_kappa2_oracle() {
        // g(x) = n^{-1/2} sum x_i x_{i+1}: Hessian is the 0/1 tridiagonal
        // over sqrt(n), operator norm 2cos(pi/(n+1))/sqrt(n)
        let n = 100;
        let s = (n as f64).sqrt();
        let fm = FunctionalModel::quadratic_form(tridiag_b(n, 0.5 / s)).unwrap();
        let want = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos() / s;
        // eigen oracle on the Hessian itself
        let eig = fm.hessian(&vec![0.0; n]).symmetric_eigen();
        let lam_max = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0f64, f64::max);
        assert!((lam_max - want).abs() < 1e-10);

        let k = estimate_kappas(&fm, &LawSet::Iid(gaussian_law()), 200, 19).unwrap();
        assert!((k.kappa2 - want).abs() < 1e-10);
        assert!(k.kappa2 <= 0.2 + 3.0 * k.mc_std_errors[2]);
    }

    #[test]
    fn fd_fallbacks_match_analytic() {
        let n = 4;
        let mut rng = mc::rng_for(23, 0);
        let mut b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        b = (&b + b.transpose()) * 0.5;
        let analytic = FunctionalModel::quadratic_form(b.clone()).unwrap();
        let b_fd = b.clone();
        let fd_only = FunctionalModel::new(n, move |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (v.transpose() * &b_fd * v)[(0, 0)]
        });
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        analytic.check_grad(&x).unwrap();
        let ga = analytic.gradient(&x);
        let gf = fd_only.gradient(&x);
        for i in 0..n {
            assert!((ga[i] - gf[i]).abs() < 1e-6 * ga[i].abs().max(1.0));
        }
        let ha = analytic.hessian_opnorm(&x);
        let hf = fd_only.hessian_opnorm(&x);
        assert!((ha - hf).abs() < 1e-4 * ha.max(1.0));
    }

    #[test]
    fn check_grad_catches_wrong_gradient() {
        let fm = FunctionalModel::new(3, |x: &[f64]| x.iter().sum())
            .with_grad(|x: &[f64]| vec![2.0; x.len()]);
        assert!(fm.check_grad(&[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn bound_formula_arithmetic() {
        let k = KappaTriple::exact(0.0, 1.0, 1.0);
        let b = tv_bound_independent(1.0, 0.0, &k, 1.0).unwrap();
        assert!((b - 2.0 * 5.0f64.sqrt()).abs() < 1e-12);
        // c2 = 0 kills the kappa0 term entirely
        let k2 = KappaTriple::exact(1e9, 1.0, 1.0);
        assert_eq!(
            tv_bound_independent(1.0, 0.0, &k2, 1.0).unwrap(),
            tv_bound_independent(1.0, 0.0, &k, 1.0).unwrap()
        );
        assert!(tv_bound_independent(1.0, 0.0, &k, 0.0).is_err());
        assert!(tv_bound_independent(1.0, 0.0, &k, -1.0).is_err());
    }

    #[test]
    fn covariance_bound_homogeneity() {
        let k = KappaTriple::exact(0.5, 0.7, 0.3);
        // Sigma = I coincides with the independent gaussian bound
        let a = tv_bound_covariance(1.0, &k, 2.0).unwrap();
        let b = tv_bound_independent(1.0, 0.0, &k, 2.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        // doubling the operator norm scales by 2^{3/2}
        let c = tv_bound_covariance(2.0, &k, 2.0).unwrap();
        assert!((c - a * 2.0f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn bound_monotonicity() {
        let mut rng = mc::rng_for(29, 0);
        for _ in 0..50 {
            let k = KappaTriple::exact(
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
            );
            let (c1, c2, s2) = (
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.5..3.0),
            );
            let base = tv_bound_independent(c1, c2, &k, s2).unwrap();
            let mut bump = k.clone();
            bump.kappa1 += 0.1;
            assert!(tv_bound_independent(c1, c2, &bump, s2).unwrap() >= base);
            assert!(tv_bound_independent(c1 * 1.1, c2, &k, s2).unwrap() >= base);
            assert!(tv_bound_independent(c1, c2 * 1.1, &k, s2).unwrap() >= base);
            assert!(tv_bound_independent(c1, c2, &k, s2 * 1.1).unwrap() <= base);
        }
    }

    #[test]
    fn linear_gaussian_statistic_is_exactly_normal() {
        // g(x) = sum a_i x_i with gaussian coordinates: kappa2 = 0 so the
        // bound vanishes, and W is exactly normal
        let n = 10;
        let mut rng = mc::rng_for(31, 0);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        let a_cl = a.clone();
        let fm = FunctionalModel::new(n, move |x: &[f64]| {
            x.iter().zip(&a_cl).map(|(xi, ai)| xi * ai).sum()
        })
        .with_grad({
            let a = a.clone();
            move |_x: &[f64]| a.clone()
        })
        .with_hess_opnorm(|_| 0.0);
        let k = estimate_kappas(&fm, &LawSet::Iid(gaussian_law()), 100, 37).unwrap();
        assert_eq!(tv_bound_independent(1.0, 0.0, &k, norm2).unwrap(), 0.0);

        let m = 100_000;
        let ws = mc::par_samples(41, m, |rng, _| {
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            fm.eval(&x)
        });
        let dkw = ((2.0f64 / 0.001).ln() / (2.0 * m as f64)).sqrt();
        let ks = ks_to_normal(&ws, mc::mean(&ws), mc::variance(&ws).sqrt());
        assert!(ks < dkw, "ks {ks} vs dkw {dkw}");
    }

    #[test]
    fn diagnostic_examples() {
        let n = 10;
        let (r, _) = quadratic_form_diagnostic(&DMatrix::identity(n, n), None).unwrap();
        assert!((r - 1.0 / n as f64).abs() < 1e-12);
        // 1/n crosses the default threshold once n is large enough
        let (r, v) = quadratic_form_diagnostic(&DMatrix::identity(100, 100), None).unwrap();
        assert!((r - 0.01).abs() < 1e-12);
        assert_eq!(v, QuadraticVerdict::NearGaussian);

        let mut rank_one = DMatrix::zeros(n, n);
        rank_one[(0, 0)] = 1.0;
        let (r, v) = quadratic_form_diagnostic(&rank_one, None).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(v, QuadraticVerdict::Dominated);

        assert!(matches!(
            quadratic_form_diagnostic(&DMatrix::zeros(3, 3), None),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tridiagonal_diagnostic_and_ks() {
        let n = 200;
        let b = tridiag_b(n, 1.0);
        let (ratio, verdict) = quadratic_form_diagnostic(&b, None).unwrap();
        // eigenvalues 2cos(k pi / (n+1))
        let sum_sq: f64 = (1..=n)
            .map(|k| {
                let l = 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
                l * l
            })
            .sum();
        let max_sq = 4.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos().powi(2);
        assert!((ratio - max_sq / sum_sq).abs() < 1e-10);
        assert!(ratio < 0.02);
        assert_eq!(verdict, QuadraticVerdict::NearGaussian);

        // standardized x^t B x = 2 sum x_i x_{i+1} is close to normal
        let m = 100_000;
        let ws = mc::par_samples(43, m, |rng, _| {
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            2.0 * x.windows(2).map(|w| w[0] * w[1]).sum::<f64>()
        });
        let ks = ks_to_normal(&ws, mc::mean(&ws), mc::variance(&ws).sqrt());
        assert!(ks < 0.03, "ks = {ks}");
    }

    #[test]
    fn ks_below_bound_plus_dkw_for_smooth_law() {
        // uniform-law coordinates through the tridiagonal example; n large
        // enough that the O(1/sqrt(n)) bound is informative (< 1)
        let n = 400;
        let s = (n as f64).sqrt();
        let fm = FunctionalModel::quadratic_form(tridiag_b(n, 0.5 / s)).unwrap();
        let law = uniform_law();
        let laws = LawSet::Iid(law.clone());
        let k = estimate_kappas(&fm, &laws, 2000, 47).unwrap();
        let m = 100_000;
        let ws = mc::par_samples(53, m, |rng, _| {
            let x: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
            x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / s
        });
        let (s2, _) = mc::variance_with_ci(&ws);
        let (c1, c2) = laws.constants();
        let bound = tv_bound_independent(c1, c2, &k, s2).unwrap();
        assert!(bound <= 1.0, "bound {bound} not informative at n={n}");
        let dkw = ((2.0f64 / 0.001).ln() / (2.0 * m as f64)).sqrt();
        let ks = ks_to_normal(&ws, mc::mean(&ws), s2.sqrt());
        assert!(ks <= bound + dkw, "ks {ks} vs bound {bound} + dkw {dkw}");
    }
}
