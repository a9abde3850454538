//! Self-check suites behind `rmclt verify`: brute-force and
//! finite-difference oracles for the numerical building blocks.

use crate::afunc::{
    fd_trace_gradient_entry, fd_trace_hessian_entry, hessian_tensor, AnalyticFn,
};
use crate::ensembles::{wigner_model, wishart_model, VarianceProfile};
use crate::error::{Error, Result};
use crate::laws::gaussian_law;
use crate::linalg::{
    hs_norm, operator_norm, trace_product, trace_product_bound, CMatrix,
};
use crate::matrixbound::{gammas_closed_form, gammas_numeric};
use crate::mc;
use crate::steinkernel::stein_solution;
use num_complex::Complex64;
use rand::Rng;

fn random_cmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Norm/trace inequalities on random complex instances: the product HS
/// inequality and the mixed trace bound, zero violations at 1e-9.
pub fn verify_linalg(trials: usize, seed: u64) -> Result<Vec<String>> {
    let mut rng = mc::rng_for(seed, 0);
    for t in 0..trials {
        let (m, k, l) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..6));
        let a1 = random_cmatrix(&mut rng, m, k);
        let a2 = random_cmatrix(&mut rng, k, l);
        let lhs = hs_norm(&(&a1 * &a2))?;
        let rhs = (operator_norm(&a1)? * hs_norm(&a2)?).min(hs_norm(&a1)? * operator_norm(&a2)?);
        if lhs > rhs + 1e-9 * rhs.max(1.0) {
            return Err(Error::Numeric(format!(
                "HS product inequality violated at trial {t}: {lhs} > {rhs}"
            )));
        }
    }
    let mut rng = mc::rng_for(seed, 1);
    for t in 0..trials {
        let len = rng.gen_range(2..5);
        let d = rng.gen_range(2..5);
        let mats: Vec<CMatrix> = (0..len).map(|_| random_cmatrix(&mut rng, d, d)).collect();
        let (i, j) = (0, rng.gen_range(1..len));
        let tr = trace_product(&mats)?.norm();
        let bound = trace_product_bound(&mats, i, j)?;
        if tr > bound + 1e-9 * bound.max(1.0) {
            return Err(Error::Numeric(format!(
                "trace bound violated at trial {t}: |Tr| = {tr} > {bound}"
            )));
        }
    }
    Ok(vec![
        format!("linalg: HS product inequality held on {trials} random pairs"),
        format!("linalg: trace bound dominated |Tr| on {trials} random chains"),
    ])
}

/// Matrix-calculus identities for Tr f(A) against central finite
/// differences: gradient entries and Hessian tensor entries, rel tol 1e-5.
pub fn verify_afunc(cases: usize, seed: u64) -> Result<Vec<String>> {
    let mut rng = mc::rng_for(seed, 2);
    for t in 0..cases {
        let n = rng.gen_range(2..=8);
        let deg = rng.gen_range(1..=5);
        let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = AnalyticFn::from_real(&coeffs);
        let a = random_cmatrix(&mut rng, n, n);
        let grad = f.trace_gradient(&a)?;
        for _ in 0..3 {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let fd = fd_trace_gradient_entry(&f, &a, i, j, 1e-5);
            let an = grad[(i, j)];
            if (fd - an).norm() > 1e-5 * an.norm().max(1.0) {
                return Err(Error::Numeric(format!(
                    "gradient mismatch at case {t} entry ({i},{j}): fd {fd} vs {an}"
                )));
            }
        }
        let hess = hessian_tensor(&f, &a)?;
        for _ in 0..3 {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let (k, l) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let fd = fd_trace_hessian_entry(&f, &a, i, j, k, l, 1e-4);
            let an = hess.entry(i, j, k, l);
            if (fd - an).norm() > 1e-5 * an.norm().max(1.0) {
                return Err(Error::Numeric(format!(
                    "hessian mismatch at case {t} entry ({i},{j},{k},{l}): fd {fd} vs {an}"
                )));
            }
        }
    }
    Ok(vec![format!(
        "afunc: gradient and hessian matched finite differences on {cases} random cases"
    )])
}

/// Stein-equation oracles: residual < 1e-6 on [-6,6] and ||phi'|| <= 4 for
/// the standard bounded test functions.
pub fn verify_stein() -> Result<Vec<String>> {
    let grid: Vec<f64> = (0..=60).map(|i| -6.0 + 0.2 * i as f64).collect();
    let us: Vec<(&str, Box<dyn Fn(f64) -> f64 + Sync>)> = vec![
        ("x/6", Box::new(|x: f64| x / 6.0)),
        ("x^2/36", Box::new(|x: f64| x * x / 36.0)),
        ("tanh", Box::new(|x: f64| x.tanh())),
        ("clipped-linear", Box::new(|x: f64| x.clamp(-1.0, 1.0))),
    ];
    let mut lines = Vec::new();
    for (name, u) in &us {
        let sol = stein_solution(&**u, &grid)?;
        if sol.max_residual >= 1e-6 {
            return Err(Error::Numeric(format!(
                "stein residual {} for u = {name}",
                sol.max_residual
            )));
        }
        let sup = sol.phi_prime.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if sup > 4.0 {
            return Err(Error::Numeric(format!("||phi'|| = {sup} for u = {name}")));
        }
        lines.push(format!(
            "stein: u = {name}, residual {:.2e}, ||phi'|| = {sup:.3}",
            sol.max_residual
        ));
    }
    Ok(lines)
}

/// Numeric gamma ascent against the closed forms on small Wigner and
/// Wishart instances.
pub fn verify_gamma(seed: u64) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for n in [4usize, 16] {
        let model = wigner_model(n, VarianceProfile::unit(n), gaussian_law())?;
        let mut rng = mc::rng_for(seed, n as u64);
        let x = model.sample_coords(&mut rng);
        let num = gammas_numeric(&model, &x, 300)?;
        let closed = gammas_closed_form(&model, &x)?;
        if num.gamma0 > closed.gamma0 + 1e-8 || num.gamma1 > closed.gamma1 + 1e-8 {
            return Err(Error::Numeric(format!(
                "wigner n={n}: numeric gammas ({}, {}) exceed closed forms ({}, {})",
                num.gamma0, num.gamma1, closed.gamma0, closed.gamma1
            )));
        }
        if num.gamma2 != 0.0 {
            return Err(Error::Numeric(format!(
                "wigner n={n}: numeric gamma2 = {} != 0",
                num.gamma2
            )));
        }
        lines.push(format!("gamma: wigner n={n} numeric within closed forms, gamma2 = 0"));
    }
    let (n, big_n) = (8usize, 16usize);
    let model = wishart_model(n, big_n, gaussian_law())?;
    let mut rng = mc::rng_for(seed, 99);
    let x = model.sample_coords(&mut rng);
    let num = gammas_numeric(&model, &x, 300)?;
    let closed = gammas_closed_form(&model, &x)?;
    if num.gamma0 > closed.gamma0 + 1e-8
        || num.gamma1 > closed.gamma1 + 1e-8
        || num.gamma2 > closed.gamma2 + 1e-8
    {
        return Err(Error::Numeric(format!(
            "wishart: numeric gammas ({}, {}, {}) exceed closed forms ({}, {}, {})",
            num.gamma0, num.gamma1, num.gamma2, closed.gamma0, closed.gamma1, closed.gamma2
        )));
    }
    lines.push(format!("gamma: wishart n={n} N={big_n} numeric within closed forms"));
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        assert_eq!(verify_linalg(200, 5).unwrap().len(), 2);
        assert!(!verify_afunc(5, 5).unwrap().is_empty());
        assert_eq!(verify_stein().unwrap().len(), 4);
        assert_eq!(verify_gamma(5).unwrap().len(), 3);
    }
}
