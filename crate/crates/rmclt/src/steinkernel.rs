//! The gaussian-interpolation Stein kernel T(x), its quadrature + Monte
//! Carlo estimator, the dTV ≤ 2 √Var(T) bound, and the explicit solution of
//! the Stein equation as a numerical oracle.

use crate::error::{Error, Result};
use crate::mc;
use crate::quad;
use crate::socp::FunctionalModel;
use rand::Rng;
use rand_distr::StandardNormal;

const PILOT_SAMPLES: usize = 10_000;
const PILOT_VAR_FLOOR: f64 = 1e-12;
const TAIL: f64 = 12.0;
const QUAD_TOL: f64 = 1e-10;

/// Per-sample kernel values and their summary for W = f(Y), Y standard
/// gaussian.
#[derive(Debug, Clone)]
pub struct SteinKernelEstimate {
    pub t_values: Vec<f64>,
    pub mean_t: f64,
    pub var_t: f64,
    /// Standard error of mean_t.
    pub mean_se: f64,
    pub n_quad: usize,
    pub n_inner: usize,
}

/// T(x) = ∫₀¹ E⟨∇f(x), ∇f(√t x + √(1-t) Y')⟩ dt/(2√t), evaluated with the
/// substitution t = s² (which absorbs the 1/(2√t) weight into ds) by
/// Gauss-Legendre in s and an antithetic inner expectation over Y'. The
/// antithetic ±Y' pairing cancels the odd part exactly, so quadratic
/// functionals are computed without inner Monte Carlo noise.
pub fn estimate_t(
    fm: &FunctionalModel,
    x: &[f64],
    n_inner: usize,
    n_quad: usize,
    seed: u64,
) -> Result<f64> {
    if n_inner == 0 || n_quad == 0 {
        return Err(Error::Argument("n_inner and n_quad must be positive".into()));
    }
    let n = fm.arity();
    if x.len() != n {
        return Err(Error::Argument(format!("point has {} coordinates, expected {n}", x.len())));
    }
    let g0 = fm.gradient(x);
    if g0.iter().any(|v| !v.is_finite()) {
        return Err(Error::SampleDomain {
            index: 0,
            detail: "non-finite gradient at the evaluation point".into(),
        });
    }
    let (nodes, weights) = quad::gauss_legendre_on(n_quad, 0.0, 1.0);
    let pairs = n_inner.div_ceil(2);
    let mut total = 0.0;
    let mut y_plus = vec![0.0; n];
    let mut y_minus = vec![0.0; n];
    for (j, (&s, &w)) in nodes.iter().zip(&weights).enumerate() {
        let mut rng = mc::rng_for(seed, j as u64);
        let c = (1.0 - s * s).max(0.0).sqrt();
        let mut acc = 0.0;
        for _ in 0..pairs {
            for i in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                y_plus[i] = s * x[i] + c * z;
                y_minus[i] = s * x[i] - c * z;
            }
            let gp = fm.gradient(&y_plus);
            let gm = fm.gradient(&y_minus);
            let dot: f64 = g0
                .iter()
                .zip(gp.iter().zip(&gm))
                .map(|(&g, (&p, &m))| g * 0.5 * (p + m))
                .sum();
            acc += dot;
        }
        let val = acc / pairs as f64;
        if !val.is_finite() {
            return Err(Error::SampleDomain {
                index: j,
                detail: "non-finite inner expectation".into(),
            });
        }
        total += w * val;
    }
    Ok(total)
}

/// Kernel values at n_outer standard-gaussian points, without
/// standardization.
pub fn kernel_estimate(
    fm: &FunctionalModel,
    n_outer: usize,
    n_inner: usize,
    n_quad: usize,
    seed: u64,
) -> Result<SteinKernelEstimate> {
    if n_outer < 2 {
        return Err(Error::Argument("n_outer must be at least 2".into()));
    }
    let n = fm.arity();
    let ts: Vec<Result<f64>> = mc::par_samples(seed, n_outer, |rng, i| {
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        estimate_t(fm, &x, n_inner, n_quad, mc::derive_seed(seed ^ 0x5f3d, i as u64))
            .map_err(|e| e.at_sample(i))
    });
    let t_values: Vec<f64> = ts.into_iter().collect::<Result<_>>()?;
    let mean_t = mc::mean(&t_values);
    let var_t = mc::variance(&t_values);
    Ok(SteinKernelEstimate {
        mean_t,
        var_t,
        mean_se: (var_t / t_values.len() as f64).sqrt(),
        t_values,
        n_quad,
        n_inner,
    })
}

/// dTV(W, Z) ≤ 2 √Var(T) for the standardized statistic. Standardization
/// divides T by a pilot variance estimate of f(Y) (a mean shift leaves T
/// unchanged).
pub fn tv_bound_kernel(
    fm: &FunctionalModel,
    n_outer: usize,
    n_inner: usize,
    n_quad: usize,
    seed: u64,
) -> Result<f64> {
    let n = fm.arity();
    let pilot = mc::par_samples(mc::derive_seed(seed, 0x9e37), PILOT_SAMPLES, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        fm.eval(&x)
    });
    let pilot_var = mc::variance(&pilot);
    if !(pilot_var > PILOT_VAR_FLOOR) {
        return Err(Error::Degenerate(format!(
            "pilot variance {pilot_var:.3e} too small to standardize"
        )));
    }
    let est = kernel_estimate(fm, n_outer, n_inner, n_quad, seed)?;
    Ok(2.0 * est.var_t.sqrt() / pilot_var)
}

/// Solution of φ'(x) - xφ(x) = u(x) - Eu(Z) on a grid.
#[derive(Debug, Clone)]
pub struct SteinEquationSolution {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// From the equation itself: φ'(x) = xφ(x) + u(x) - Eu(Z).
    pub phi_prime: Vec<f64>,
    pub e_u: f64,
    /// max over the grid of the equation residual in the integrating-factor
    /// form |Δ(e^{-t²/2}φ) - ∫ e^{-t²/2}(u - Eu) dt| / 2h over [x-h, x+h]
    /// (exponentials renormalized at x), an independent check of the
    /// quadrature that tolerates kinks in u.
    pub max_residual: f64,
}

/// Evaluates the explicit integral solution: the left-tail form for x ≤ 0
/// and right-tail form for x > 0, each rewritten with t = x ∓ w so the
/// integrand is a damped exponential on [0, ∞).
fn phi_at(u: &(dyn Fn(f64) -> f64 + Sync), e_u: f64, x: f64) -> f64 {
    let v = |t: f64| u(t) - e_u;
    if x <= 0.0 {
        // φ(x) = ∫₀^∞ e^{xw - w²/2} v(x - w) dw
        quad::adaptive_simpson(&|w: f64| (x * w - 0.5 * w * w).exp() * v(x - w), 0.0, TAIL, QUAD_TOL)
    } else {
        // φ(x) = -∫₀^∞ e^{-xw - w²/2} v(x + w) dw
        -quad::adaptive_simpson(
            &|w: f64| (-x * w - 0.5 * w * w).exp() * v(x + w),
            0.0,
            TAIL,
            QUAD_TOL,
        )
    }
}

/// Solves the Stein equation for a bounded test function ‖u‖∞ ≤ 1.
pub fn stein_solution(
    u: impl Fn(f64) -> f64 + Sync,
    grid: &[f64],
) -> Result<SteinEquationSolution> {
    if grid.is_empty() {
        return Err(Error::Argument("empty evaluation grid".into()));
    }
    if let Some(x) = grid.iter().find(|&&x| u(x).abs() > 1.0 + 1e-12) {
        return Err(Error::Argument(format!("|u({x})| exceeds 1")));
    }
    let e_u = quad::adaptive_simpson(
        &|t: f64| u(t) * crate::laws::std_normal_pdf(t),
        -TAIL,
        TAIL,
        QUAD_TOL,
    );
    let uref: &(dyn Fn(f64) -> f64 + Sync) = &u;
    let mut phi = Vec::with_capacity(grid.len());
    let mut phi_prime = Vec::with_capacity(grid.len());
    let mut max_residual = 0.0f64;
    let h = 1e-3;
    for &x in grid {
        let p = phi_at(uref, e_u, x);
        let rhs = u(x) - e_u;
        phi.push(p);
        phi_prime.push(x * p + rhs);
        let pm = phi_at(uref, e_u, x - h);
        let pp = phi_at(uref, e_u, x + h);
        let ef = |t: f64| (-(t * t - x * x) / 2.0).exp();
        let integral =
            quad::adaptive_simpson(&|t: f64| ef(t) * (u(t) - e_u), x - h, x + h, 1e-12);
        max_residual =
            max_residual.max((ef(x + h) * pp - ef(x - h) * pm - integral).abs() / (2.0 * h));
    }
    Ok(SteinEquationSolution {
        grid: grid.to_vec(),
        phi,
        phi_prime,
        e_u,
        max_residual,
    })
}
