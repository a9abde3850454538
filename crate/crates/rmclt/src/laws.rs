//! The distribution class L(c1, c2): pushforwards u(Z) of a standard
//! gaussian with |u'| <= c1 and |u''| <= c2, plus seeded samplers.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const SQRT_2PI_INV: f64 = 0.398_942_280_401_432_7; // (2 pi)^{-1/2}

/// Standard normal CDF, via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    SQRT_2PI_INV * (-0.5 * x * x).exp()
}

/// A law u(Z) with certified derivative bounds.
#[derive(Clone)]
pub struct SmoothLaw {
    name: String,
    u: ScalarMap,
    u_prime: ScalarMap,
    u_second: ScalarMap,
    c1: f64,
    c2: f64,
    variance: f64,
}

impl fmt::Debug for SmoothLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothLaw")
            .field("name", &self.name)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl SmoothLaw {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Variance of the pushforward law (known in closed form for the
    /// built-in members).
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn u(&self, z: f64) -> f64 {
        (self.u)(z)
    }

    pub fn u_prime(&self, z: f64) -> f64 {
        (self.u_prime)(z)
    }

    pub fn u_second(&self, z: f64) -> f64 {
        (self.u_second)(z)
    }

    /// One draw u(Z), Z standard gaussian from `rng`.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.u)(z)
    }

    /// Checks |u'| <= c1 and |u''| <= c2 on the grid {-8, -7.99, ..., 8},
    /// and that u' matches central finite differences of u.
    pub fn certify(&self) -> Result<()> {
        let mut z = -8.0;
        while z <= 8.0 {
            let up = self.u_prime(z);
            let upp = self.u_second(z);
            if up.abs() > self.c1 + 1e-9 {
                return Err(Error::Numeric(format!(
                    "law {}: |u'({z})| = {} exceeds c1 = {}",
                    self.name,
                    up.abs(),
                    self.c1
                )));
            }
            if upp.abs() > self.c2 + 1e-9 {
                return Err(Error::Numeric(format!(
                    "law {}: |u''({z})| = {} exceeds c2 = {}",
                    self.name,
                    upp.abs(),
                    self.c2
                )));
            }
            let h = 1e-5;
            let fd = (self.u(z + h) - self.u(z - h)) / (2.0 * h);
            if (fd - up).abs() > 1e-6 * up.abs().max(1.0) {
                return Err(Error::Numeric(format!(
                    "law {}: u' mismatch with finite differences at {z}",
                    self.name
                )));
            }
            z += 0.01;
        }
        Ok(())
    }
}

/// Standard gaussian: u = identity, in L(1, 0).
pub fn gaussian_law() -> SmoothLaw {
    SmoothLaw {
        name: "gaussian".into(),
        u: Arc::new(|z| z),
        u_prime: Arc::new(|_| 1.0),
        u_second: Arc::new(|_| 0.0),
        c1: 1.0,
        c2: 0.0,
        variance: 1.0,
    }
}

/// Uniform on [0, 1]: u = Phi, in L((2 pi)^{-1/2}, (2 pi e)^{-1/2}).
pub fn uniform_law() -> SmoothLaw {
    SmoothLaw {
        name: "uniform".into(),
        u: Arc::new(std_normal_cdf),
        u_prime: Arc::new(std_normal_pdf),
        u_second: Arc::new(|z| -z * std_normal_pdf(z)),
        c1: SQRT_2PI_INV,
        c2: SQRT_2PI_INV / std::f64::consts::E.sqrt(),
        variance: 1.0 / 12.0,
    }
}

/// Mean-zero symmetric law u(z) = s sqrt(12) (Phi(z) - 1/2) with variance
/// s^2; the canonical non-gaussian symmetric member for Wigner experiments.
pub fn scaled_centered_uniform(s: f64) -> Result<SmoothLaw> {
    if !(s > 0.0) {
        return Err(Error::Argument(format!("scale must be positive, got {s}")));
    }
    let k = s * 12f64.sqrt();
    Ok(SmoothLaw {
        name: format!("sym-uniform:{s}"),
        u: Arc::new(move |z| k * (std_normal_cdf(z) - 0.5)),
        u_prime: Arc::new(move |z| k * std_normal_pdf(z)),
        u_second: Arc::new(move |z| -k * z * std_normal_pdf(z)),
        c1: k * SQRT_2PI_INV,
        c2: k * SQRT_2PI_INV / std::f64::consts::E.sqrt(),
        variance: s * s,
    })
}

/// Parses the CLI law names: "gaussian", "uniform", "sym-uniform:s".
pub fn parse_law(s: &str) -> Result<SmoothLaw> {
    match s {
        "gaussian" => Ok(gaussian_law()),
        "uniform" => Ok(uniform_law()),
        other => {
            if let Some(scale) = other.strip_prefix("sym-uniform:") {
                let s: f64 = scale
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad sym-uniform scale '{scale}'")))?;
                scaled_centered_uniform(s)
            } else {
                Err(Error::Parse(format!("unknown law '{other}'")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc;

    #[test]
    fn gaussian_constants_and_moments() {
        let law = gaussian_law();
        assert_eq!(law.c1(), 1.0);
        assert_eq!(law.c2(), 0.0);
        law.certify().unwrap();
        let xs = mc::par_samples(101, 100_000, |rng, _| law.sample(rng));
        assert!(mc::mean(&xs).abs() < 0.02);
    }

    #[test]
    fn uniform_constants_and_moments() {
        let law = uniform_law();
        assert!((law.c1() - (2.0 * std::f64::consts::PI).sqrt().recip()).abs() < 1e-12);
        assert!(
            (law.c2() - (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt().recip()).abs()
                < 1e-12
        );
        law.certify().unwrap();
        let xs = mc::par_samples(102, 100_000, |rng, _| law.sample(rng));
        assert!(xs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!((mc::variance(&xs) - 1.0 / 12.0).abs() < 0.003);
    }

    #[test]
    fn sym_uniform_moments_and_range() {
        let law = scaled_centered_uniform(1.0).unwrap();
        law.certify().unwrap();
        assert_eq!(law.u(0.0), 0.0);
        let xs = mc::par_samples(103, 100_000, |rng, _| law.sample(rng));
        assert!(mc::mean(&xs).abs() < 0.01);
        assert!((mc::variance(&xs) - 1.0).abs() < 0.01);

        let wide = scaled_centered_uniform(2.0).unwrap();
        let ys = mc::par_samples(104, 10_000, |rng, _| wide.sample(rng));
        let cap = 12f64.sqrt();
        assert!(ys.iter().all(|&y| y.abs() <= cap));

        assert!(scaled_centered_uniform(0.0).is_err());
        assert!(scaled_centered_uniform(-1.0).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let law = gaussian_law();
        let mut a = mc::rng_for(7, 0);
        let mut b = mc::rng_for(7, 0);
        for _ in 0..10 {
            assert_eq!(law.sample(&mut a), law.sample(&mut b));
        }
    }

    #[test]
    fn parse_law_names() {
        assert_eq!(parse_law("gaussian").unwrap().name(), "gaussian");
        assert_eq!(parse_law("uniform").unwrap().name(), "uniform");
        let l = parse_law("sym-uniform:2.5").unwrap();
        assert!((l.variance() - 6.25).abs() < 1e-12);
        assert!(parse_law("cauchy").is_err());
        assert!(parse_law("sym-uniform:x").is_err());
    }

    #[test]
    fn gaussian_poincare_empirical() {
        // linear g: Var(g) = ||a||^2 exactly; smooth g: Var <= E||grad||^2 + 3 SE
        let a = [0.5, -1.0, 2.0];
        let g = |x: &[f64]| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>();
        let law = gaussian_law();
        let xs = mc::par_samples(105, 100_000, |rng, _| {
            let x: Vec<f64> = (0..3).map(|_| law.sample(rng)).collect();
            g(&x)
        });
        let norm2: f64 = a.iter().map(|ai| ai * ai).sum();
        let var = mc::variance(&xs);
        assert!((var - norm2).abs() < 0.15);

        // g(x) = sin(x1) + x2^2: E||grad||^2 = E cos^2 + E 4 x^2
        let pairs = mc::par_samples(106, 100_000, |rng, _| {
            let x1 = law.sample(rng);
            let x2 = law.sample(rng);
            let g = x1.sin() + x2 * x2;
            let grad2 = x1.cos().powi(2) + 4.0 * x2 * x2;
            [g, grad2]
        });
        let gs: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
        let grads: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
        let var_g = mc::variance(&gs);
        let e_grad = mc::mean(&grads);
        let se = mc::std_error(&grads);
        assert!(var_g <= e_grad + 3.0 * se);
    }
}
