//! Polynomial test functions f, the absolute-coefficient majorants f1/f2,
//! matrix functional calculus f(A), and the trace-derivative identities.
//!
//! Only polynomials are represented exactly. Entire functions are handled by
//! degree truncation; the truncation error of Tr f(A) is bounded by
//! sum_{m>d} |b_m| * ||A||^m, which the caller must account for when feeding
//! truncated coefficients in.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// f(z) = sum_m b_m z^m with finitely many coefficients, index m from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFn {
    coeffs: Vec<Complex64>,
}

impl AnalyticFn {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Ok(AnalyticFn { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        AnalyticFn::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()).unwrap()
    }

    /// The monomial z^p.
    pub fn monomial(p: usize) -> Self {
        let mut c = vec![0.0; p + 1];
        c[p] = 1.0;
        AnalyticFn::from_real(&c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Some(p) when f is a single monomial c * z^p with c != 0.
    pub fn monomial_degree(&self) -> Option<usize> {
        let nonzero: Vec<usize> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(m, _)| m)
            .collect();
        match nonzero.as_slice() {
            [m] => Some(*m),
            _ => None,
        }
    }

    /// Multiplies every coefficient by e^{i phase} (Wold-device rotation).
    pub fn rotated(&self, phase: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phase);
        AnalyticFn {
            coeffs: self.coeffs.iter().map(|c| c * rot).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluation at a real point; meaningful for f1/f2 which have real
    /// nonnegative coefficients.
    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }

    /// f'(z) = sum m b_m z^{m-1}.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return AnalyticFn::from_real(&[0.0]);
        }
        AnalyticFn {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(m, c)| c * m as f64)
                .collect(),
        }
    }

    /// f1(z) = sum_{m>=1} m |b_m| z^{m-1}.
    pub fn derive_f1(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return AnalyticFn::from_real(&[0.0]);
        }
        AnalyticFn::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(m, c)| Complex64::new(m as f64 * c.norm(), 0.0))
                .collect(),
        )
        .unwrap()
    }

    /// f2(z) = sum_{m>=2} m(m-1) |b_m| z^{m-2}.
    pub fn derive_f2(&self) -> Self {
        if self.coeffs.len() <= 2 {
            return AnalyticFn::from_real(&[0.0]);
        }
        AnalyticFn::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(m, c)| Complex64::new((m * (m - 1)) as f64 * c.norm(), 0.0))
                .collect(),
        )
        .unwrap()
    }

    /// f(A) = sum b_m A^m by the Horner recurrence.
    pub fn eval_matrix(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != a.ncols() {
            return Err(Error::Shape(format!(
                "f(A) needs square A, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let id = CMatrix::identity(n, n);
        let mut acc = &id * self.coeffs[self.coeffs.len() - 1];
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * a + &id * *c;
        }
        Ok(acc)
    }

    /// Tr f(A).
    pub fn trace_eval(&self, a: &CMatrix) -> Result<Complex64> {
        Ok(self.eval_matrix(a)?.trace())
    }

    /// G with G_ij = d Tr f(A) / d a_ij = (f'(A))_ji, i.e. f'(A) transposed.
    pub fn trace_gradient(&self, a: &CMatrix) -> Result<CMatrix> {
        Ok(self.derivative().eval_matrix(a)?.transpose())
    }
}

/// Second derivatives of Tr f(A): the n^2 x n^2 matrix with entries
/// h_{ij,kl} = d^2 Tr f(A) / d a_ij d a_kl, indexed row-major by (i,j).
pub struct HessianTensor {
    pub dim: usize,
    pub entries: CMatrix,
}

impl HessianTensor {
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.entries[(i * self.dim + j, k * self.dim + l)]
    }
}

/// Dense storage is quartic in n; kept to desk scale, use
/// [`hessian_bilinear`] above this.
pub const HESSIAN_DENSE_LIMIT: usize = 32;

/// Dense Hessian tensor of Tr f(A), from the r-sum
/// h_{ij,kl} = sum_m m b_m sum_{r=0}^{m-2} (A^r)_{jk} (A^{m-r-2})_{li}.
pub fn hessian_tensor(f: &AnalyticFn, a: &CMatrix) -> Result<HessianTensor> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape("Hessian tensor needs square A".into()));
    }
    let n = a.nrows();
    if n > HESSIAN_DENSE_LIMIT {
        return Err(Error::Argument(format!(
            "dense Hessian limited to n <= {HESSIAN_DENSE_LIMIT}; use hessian_bilinear"
        )));
    }
    let powers = matrix_powers(a, f.degree().saturating_sub(2));
    let mut h = CMatrix::zeros(n * n, n * n);
    for (m, bm) in f.coeffs().iter().enumerate() {
        if m < 2 || bm.norm() == 0.0 {
            continue;
        }
        let mf = bm * m as f64;
        for r in 0..=(m - 2) {
            let ar = &powers[r];
            let as_ = &powers[m - r - 2];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            h[(i * n + j, k * n + l)] += mf * ar[(j, k)] * as_[(l, i)];
                        }
                    }
                }
            }
        }
    }
    Ok(HessianTensor { dim: n, entries: h })
}

/// Matrix-free bilinear action sum_{ij,kl} b_ij c_kl h_{ij,kl}
/// = sum_m m b_m sum_{r=0}^{m-2} Tr(B A^r C A^{m-r-2}).
pub fn hessian_bilinear(f: &AnalyticFn, a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<Complex64> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() || a.shape() != c.shape() {
        return Err(Error::Shape("hessian_bilinear needs equal square shapes".into()));
    }
    let powers = matrix_powers(a, f.degree().saturating_sub(2));
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, bm) in f.coeffs().iter().enumerate() {
        if m < 2 || bm.norm() == 0.0 {
            continue;
        }
        for r in 0..=(m - 2) {
            acc += bm * m as f64 * (b * &powers[r] * c * &powers[m - r - 2]).trace();
        }
    }
    Ok(acc)
}

fn matrix_powers(a: &CMatrix, up_to: usize) -> Vec<CMatrix> {
    let n = a.nrows();
    let mut powers = vec![CMatrix::identity(n, n)];
    for _ in 1..=up_to {
        let next = powers.last().unwrap() * a;
        powers.push(next);
    }
    powers
}

/// Parses the CLI polynomial grammar: a sum of terms `c*z^k` with optional
/// coefficient and exponent, e.g. "z^3", "1+2z^2", "z-2z^2", "0.5*z^4".
pub fn parse_polynomial(s: &str) -> Result<AnalyticFn> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    // split into signed terms
    let mut terms: Vec<(f64, String)> = Vec::new();
    let mut sign = 1.0;
    let mut cur = String::new();
    for (idx, ch) in compact.chars().enumerate() {
        match ch {
            '+' | '-' => {
                let prev_is_exp = idx > 0 && matches!(compact.as_bytes()[idx - 1], b'e' | b'E');
                if prev_is_exp {
                    cur.push(ch);
                } else {
                    if !cur.is_empty() {
                        terms.push((sign, std::mem::take(&mut cur)));
                    } else if idx > 0 {
                        return Err(Error::Parse(format!("dangling sign in '{s}'")));
                    }
                    sign = if ch == '-' { -1.0 } else { 1.0 };
                }
            }
            _ => cur.push(ch),
        }
    }
    if cur.is_empty() {
        return Err(Error::Parse(format!("trailing operator in '{s}'")));
    }
    terms.push((sign, cur));

    let mut coeffs: Vec<f64> = vec![0.0];
    for (sgn, term) in terms {
        let (coeff, power) = parse_term(&term)?;
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0.0);
        }
        coeffs[power] += sgn * coeff;
    }
    Ok(AnalyticFn::from_real(&coeffs))
}

fn parse_term(term: &str) -> Result<(f64, usize)> {
    match term.find('z') {
        None => {
            let c: f64 = term
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient '{term}'")))?;
            Ok((c, 0))
        }
        Some(pos) => {
            let coeff_str = term[..pos].trim_end_matches('*');
            let coeff = if coeff_str.is_empty() {
                1.0
            } else {
                coeff_str
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient '{coeff_str}'")))?
            };
            let rest = &term[pos + 1..];
            let power = if rest.is_empty() {
                1
            } else if let Some(exp) = rest.strip_prefix('^') {
                exp.parse()
                    .map_err(|_| Error::Parse(format!("bad exponent '{exp}'")))?
            } else {
                return Err(Error::Parse(format!("unexpected '{rest}' after z")));
            };
            Ok((coeff, power))
        }
    }
}

/// Central finite difference of Tr f(A) with respect to entry (i, j).
/// Test oracle; kept here so integration tests can share it.
pub fn fd_trace_gradient_entry(f: &AnalyticFn, a: &CMatrix, i: usize, j: usize, h: f64) -> Complex64 {
    let mut ap = a.clone();
    let mut am = a.clone();
    ap[(i, j)] += Complex64::new(h, 0.0);
    am[(i, j)] -= Complex64::new(h, 0.0);
    (f.trace_eval(&ap).unwrap() - f.trace_eval(&am).unwrap()) / (2.0 * h)
}

/// Second-order central finite difference of Tr f(A) in entries (i,j), (k,l).
pub fn fd_trace_hessian_entry(
    f: &AnalyticFn,
    a: &CMatrix,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    h: f64,
) -> Complex64 {
    let step = Complex64::new(h, 0.0);
    let eval = |s1: f64, s2: f64| {
        let mut m = a.clone();
        m[(i, j)] += step * s1;
        m[(k, l)] += step * s2;
        f.trace_eval(&m).unwrap()
    };
    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn f1_examples() {
        // z^3 -> 3z^2
        let f = AnalyticFn::monomial(3);
        assert_eq!(f.derive_f1(), AnalyticFn::from_real(&[0.0, 0.0, 3.0]));
        // constant -> 0
        let f = AnalyticFn::from_real(&[1.0]);
        assert_eq!(f.derive_f1(), AnalyticFn::from_real(&[0.0]));
        // z - 2z^2 -> 1 + 4z (absolute values)
        let f = AnalyticFn::from_real(&[0.0, 1.0, -2.0]);
        assert_eq!(f.derive_f1(), AnalyticFn::from_real(&[1.0, 4.0]));
    }

    #[test]
    fn f2_examples() {
        let f = AnalyticFn::monomial(1);
        assert_eq!(f.derive_f2(), AnalyticFn::from_real(&[0.0]));
        let f = AnalyticFn::monomial(2);
        assert_eq!(f.derive_f2(), AnalyticFn::from_real(&[2.0]));
        // z^p -> p(p-1) z^{p-2}
        let p = 5;
        let f = AnalyticFn::monomial(p);
        let f2 = f.derive_f2();
        let mut want = vec![0.0; p - 1];
        want[p - 2] = (p * (p - 1)) as f64;
        assert_eq!(f2, AnalyticFn::from_real(&want));
    }

    #[test]
    fn eval_matrix_examples() {
        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let f = AnalyticFn::monomial(2);
        let got = f.eval_matrix(&swap).unwrap();
        assert!((got - CMatrix::identity(2, 2)).norm() < 1e-12);

        let f = AnalyticFn::monomial(1);
        assert!((f.eval_matrix(&swap).unwrap() - swap.clone()).norm() < 1e-12);

        let f = AnalyticFn::from_real(&[1.0, 1.0]);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(2.0)]));
        let want = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0), c(3.0)]));
        assert!((f.eval_matrix(&d).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn trace_eval_matches_eigenvalue_sum() {
        let mut rng = crate::mc::rng_for(31, 0);
        let f = AnalyticFn::from_real(&[0.5, -1.0, 2.0, 0.25]);
        for _ in 0..5 {
            let mut a = nalgebra::DMatrix::<f64>::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
            a = (&a + a.transpose()) * 0.5;
            let eig = a.clone().symmetric_eigen();
            let sum: f64 = eig.eigenvalues.iter().map(|&l| f.eval_real(l)).sum();
            let tr = f.trace_eval(&linalg::cmat_from_real(&a)).unwrap();
            assert!((tr.re - sum).abs() < 1e-8 * sum.abs().max(1.0));
            assert!(tr.im.abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_examples() {
        let mut rng = crate::mc::rng_for(37, 0);
        let a = CMatrix::from_fn(3, 3, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        // f = z^2 => G_ij = 2 a_ji
        let f = AnalyticFn::monomial(2);
        let g = f.trace_gradient(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[(i, j)] - a[(j, i)] * 2.0).norm() < 1e-12);
            }
        }
        // f = z => G = identity
        let f = AnalyticFn::monomial(1);
        let g = f.trace_gradient(&a).unwrap();
        assert!((g - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::mc::rng_for(41, 0);
        let a = CMatrix::from_fn(5, 5, |_, _| {
            Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let f = AnalyticFn::monomial(3);
        let g = f.trace_gradient(&a).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let fd = fd_trace_gradient_entry(&f, &a, i, j, 1e-5);
                let denom = fd.norm().max(1.0);
                assert!((g[(i, j)] - fd).norm() / denom < 1e-6);
            }
        }
    }

    #[test]
    fn gradient_norm_bounds() {
        let mut rng = crate::mc::rng_for(43, 0);
        let f = AnalyticFn::from_real(&[0.0, 1.0, -0.5, 0.3]);
        let f1 = f.derive_f1();
        for _ in 0..20 {
            let a = CMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7))
            });
            let g = f.trace_gradient(&a).unwrap();
            let lam = linalg::operator_norm(&a).unwrap();
            let cap = f1.eval_real(lam);
            for z in g.iter() {
                assert!(z.norm() <= cap + 1e-9);
            }
            let r = linalg::numerical_rank(&a, 1e-12).unwrap() as f64;
            assert!(linalg::hs_norm(&g).unwrap() <= r.sqrt() * cap + 1e-9);
        }
    }

    #[test]
    fn hessian_m2_closed_form() {
        let mut rng = crate::mc::rng_for(47, 0);
        let a = CMatrix::from_fn(3, 3, |_, _| c(rng.gen_range(-1.0..1.0)));
        let f = AnalyticFn::monomial(2);
        let h = hessian_tensor(&f, &a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let want = if j == k && l == i { 2.0 } else { 0.0 };
                        assert!((h.entry(i, j, k, l) - c(want)).norm() < 1e-12);
                    }
                }
            }
        }
        // f = z => H = 0
        let f = AnalyticFn::monomial(1);
        let h = hessian_tensor(&f, &a).unwrap();
        assert_eq!(h.entries.norm(), 0.0);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = crate::mc::rng_for(53, 0);
        let a = CMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let f = AnalyticFn::monomial(4);
        let h = hessian_tensor(&f, &a).unwrap();
        for _ in 0..40 {
            let (i, j, k, l) = (
                rng.gen_range(0..4),
                rng.gen_range(0..4),
                rng.gen_range(0..4),
                rng.gen_range(0..4),
            );
            let fd = fd_trace_hessian_entry(&f, &a, i, j, k, l, 1e-4);
            assert!((h.entry(i, j, k, l) - fd).norm() < 1e-5 * fd.norm().max(1.0));
        }
    }

    #[test]
    fn hessian_operator_norm_bound() {
        let mut rng = crate::mc::rng_for(59, 0);
        let f = AnalyticFn::from_real(&[0.0, 0.0, 1.0, 0.5, 0.25]);
        let f2 = f.derive_f2();
        let a = CMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let lam = linalg::operator_norm(&a).unwrap();
        let cap = f2.eval_real(lam);
        let h = hessian_tensor(&f, &a).unwrap();
        assert!(linalg::operator_norm(&h.entries).unwrap() <= cap + 1e-9);

        // bilinear action agrees with the dense tensor and obeys the bound
        for _ in 0..20 {
            let mut b = CMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let mut cc = CMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            b /= Complex64::new(linalg::hs_norm(&b).unwrap(), 0.0);
            cc /= Complex64::new(linalg::hs_norm(&cc).unwrap(), 0.0);
            let mut dense = Complex64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            dense += b[(i, j)] * cc[(k, l)] * h.entry(i, j, k, l);
                        }
                    }
                }
            }
            let fast = hessian_bilinear(&f, &a, &b, &cc).unwrap();
            assert!((dense - fast).norm() < 1e-10);
            assert!(fast.norm() <= cap + 1e-9);
        }
    }

    #[test]
    fn parser_grammar() {
        assert_eq!(parse_polynomial("z^3").unwrap(), AnalyticFn::monomial(3));
        assert_eq!(
            parse_polynomial("1+2z^2").unwrap(),
            AnalyticFn::from_real(&[1.0, 0.0, 2.0])
        );
        assert_eq!(
            parse_polynomial("z-2z^2").unwrap(),
            AnalyticFn::from_real(&[0.0, 1.0, -2.0])
        );
        assert_eq!(
            parse_polynomial("0.5*z^4").unwrap(),
            AnalyticFn::from_real(&[0.0, 0.0, 0.0, 0.0, 0.5])
        );
        assert_eq!(parse_polynomial("-z + 3").unwrap(), AnalyticFn::from_real(&[3.0, -1.0]));
        assert_eq!(parse_polynomial("2").unwrap(), AnalyticFn::from_real(&[2.0]));
        assert!(parse_polynomial("").is_err());
        assert!(parse_polynomial("z^").is_err());
        assert!(parse_polynomial("q+1").is_err());
    }

    #[test]
    fn rotation_scales_coeffs() {
        let f = AnalyticFn::from_real(&[1.0, 2.0]);
        let g = f.rotated(std::f64::consts::FRAC_PI_2);
        assert!((g.coeffs()[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((g.coeffs()[1] - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }
}
