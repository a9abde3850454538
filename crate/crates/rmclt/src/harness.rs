//! Experiment engine: sample the linear statistic W = Re Tr f(A(X)),
//! estimate its variance and distance to the matched normal, assemble bound
//! reports, and fit decay rates over dimension grids.

use crate::afunc::{parse_polynomial, AnalyticFn};
use crate::ensembles::{
    correlated_gaussian_model, double_wishart_model, toeplitz_model, wigner_model, wishart_model,
    CovarianceSpec, MatrixModel, ModelKind, VarianceProfile,
};
use crate::error::{Error, Result};
use crate::laws::parse_law;
use crate::linalg::cmat_from_real;
use crate::matrixbound::{
    corr_gaussian_bound, double_wishart_bound, estimate_ab, estimate_matrix_kappas,
    toeplitz_var_lower, wigner_bound, wigner_var_lower, wishart_bound, EnsembleBoundInputs,
};
use crate::socp::KappaTriple;
use crate::{mc, laws};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const DEGENERATE_VAR: f64 = 1e-14;
pub const DKW_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub ensemble: String,
    pub n: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none", default)]
    pub big_n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none", default)]
    pub big_m: Option<usize>,
    pub law: String,
    pub f: String,
    /// samples for the kappa / (a, b) moment estimates
    pub mc_kappa: usize,
    /// samples of W for sigma^2 and the empirical distance
    pub mc_sigma: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn build_model(&self) -> Result<MatrixModel> {
        let law = parse_law(&self.law)?;
        match self.ensemble.as_str() {
            "wigner" => wigner_model(self.n, VarianceProfile::unit(self.n), law),
            "corr-gauss" => {
                if self.law != "gaussian" {
                    return Err(Error::Argument(
                        "corr-gauss is a gaussian-entry model; use --law gaussian".into(),
                    ));
                }
                correlated_gaussian_model(self.n, CovarianceSpec::Identity { dim: self.n * self.n })
            }
            "toeplitz" => {
                if self.law != "gaussian" {
                    return Err(Error::Argument(
                        "toeplitz is a gaussian-entry model; use --law gaussian".into(),
                    ));
                }
                toeplitz_model(self.n)
            }
            "wishart" => {
                let big_n = self
                    .big_n
                    .ok_or_else(|| Error::Argument("wishart needs N (--N)".into()))?;
                wishart_model(self.n, big_n, law)
            }
            "double-wishart" => {
                let big_n = self
                    .big_n
                    .ok_or_else(|| Error::Argument("double-wishart needs N (--N)".into()))?;
                let big_m = self
                    .big_m
                    .ok_or_else(|| Error::Argument("double-wishart needs M (--M)".into()))?;
                double_wishart_model(self.n, big_n, big_m, law)
            }
            other => Err(Error::Argument(format!("unknown ensemble '{other}'"))),
        }
    }

    pub fn parse_f(&self) -> Result<AnalyticFn> {
        parse_polynomial(&self.f)
    }
}

/// One draw of W = Re Tr f(A(X)). Degree <= 2 avoids any eigendecomposition;
/// symmetric ensembles use their real spectrum; the rest go through the
/// complex functional calculus.
fn sample_w(model: &MatrixModel, f: &AnalyticFn, a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if f.degree() <= 2 {
        let c = f.coeffs();
        let mut tr = Complex64::new(0.0, 0.0);
        tr += c[0] * n as f64;
        if c.len() > 1 {
            tr += c[1] * a.trace();
        }
        if c.len() > 2 {
            let tr2: f64 = (0..n)
                .map(|i| (0..n).map(|j| a[(i, j)] * a[(j, i)]).sum::<f64>())
                .sum();
            tr += c[2] * tr2;
        }
        return Ok(tr.re);
    }
    match model.kind() {
        ModelKind::Wigner | ModelKind::Toeplitz | ModelKind::Wishart => {
            let eig = a.clone().symmetric_eigen();
            Ok(eig
                .eigenvalues
                .iter()
                .map(|&l| f.eval(Complex64::new(l, 0.0)).re)
                .sum())
        }
        _ => Ok(f.trace_eval(&cmat_from_real(a))?.re),
    }
}

fn draw_statistics(model: &MatrixModel, f: &AnalyticFn, m: usize, seed: u64) -> Result<Vec<f64>> {
    let drawn: Vec<Result<f64>> = mc::par_samples(seed, m, |rng, idx| {
        let x = model.sample_coords(rng);
        let a = model.assemble(&x).map_err(|e| e.at_sample(idx))?;
        let w = sample_w(model, f, &a).map_err(|e| e.at_sample(idx))?;
        if !w.is_finite() {
            return Err(Error::SampleDomain {
                index: idx,
                detail: "non-finite statistic".into(),
            });
        }
        Ok(w)
    });
    drawn.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub variance_ci: [f64; 2],
    pub ks: f64,
    pub dkw: f64,
    pub n_mc: usize,
}

/// m iid samples of W plus moments and the KS distance to
/// N(empirical mean, empirical variance).
pub fn simulate_statistic(spec: &ExperimentSpec) -> Result<SimulationResult> {
    let model = spec.build_model()?;
    let f = spec.parse_f()?;
    if spec.mc_sigma < 2 {
        return Err(Error::Argument("mc_sigma must be at least 2".into()));
    }
    let samples = draw_statistics(&model, &f, spec.mc_sigma, spec.seed)?;
    let mean = mc::mean(&samples);
    let (variance, variance_ci) = mc::variance_with_ci(&samples);
    if variance < DEGENERATE_VAR {
        return Err(Error::Degenerate(format!(
            "statistic variance {variance:.3e} below 1e-14"
        )));
    }
    let ks = ks_distance(&samples, mean, variance)?;
    Ok(SimulationResult {
        dkw: dkw_band(samples.len(), DKW_ALPHA),
        n_mc: samples.len(),
        samples,
        mean,
        variance,
        variance_ci,
        ks,
    })
}

/// sup_x |F_m(x) - Phi((x - mu)/sigma)| by one pass over the sorted sample.
pub fn ks_distance(samples: &[f64], mu: f64, sigma2: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Argument("ks distance needs at least 2 samples".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Argument("ks distance needs sigma2 > 0".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let sigma = sigma2.sqrt();
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let phi = laws::std_normal_cdf((x - mu) / sigma);
        d = d.max(phi - i as f64 / m).max((i + 1) as f64 / m - phi);
    }
    Ok(d)
}

/// DKW envelope half-width sqrt(ln(2/alpha) / (2m)).
pub fn dkw_band(m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub theorem: &'static str,
    pub ensemble: String,
    pub n: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<usize>,
    pub f: String,
    pub law: String,
    pub c1: f64,
    pub c2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_op_norm: Option<f64>,
    pub gamma_method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappas: Option<KappaTriple>,
    #[serde(flatten)]
    pub moments: EnsembleBoundInputs,
    /// variance used in the bound: lower 95% CI endpoint of the MC estimate
    pub sigma2: f64,
    pub sigma2_point: f64,
    pub sigma2_ci: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_floor: Option<f64>,
    pub tv_bound: f64,
    pub n_mc_sigma: usize,
    pub seed: u64,
}

/// Rebuilds tv_bound from the report's own fields; reports are
/// self-contained.
pub fn recompute_bound(r: &BoundReport) -> Result<f64> {
    let (a, b) = (r.moments.a, r.moments.b);
    match r.ensemble.as_str() {
        "wigner" => wigner_bound(r.n, r.c1, r.c2, a, b, r.sigma2),
        "corr-gauss" | "toeplitz" => {
            let sop = r
                .sigma_op_norm
                .ok_or_else(|| Error::Argument("report lacks sigma_op_norm".into()))?;
            corr_gaussian_bound(sop, a, b, r.sigma2, r.n)
        }
        "wishart" => {
            let big_n = r.big_n.ok_or_else(|| Error::Argument("report lacks N".into()))?;
            wishart_bound(r.n, big_n, r.c1, r.c2, a, b, r.sigma2)
        }
        "double-wishart" => {
            let big_n = r.big_n.ok_or_else(|| Error::Argument("report lacks N".into()))?;
            let big_m = r.big_m.ok_or_else(|| Error::Argument("report lacks M".into()))?;
            double_wishart_bound(r.n, big_n, big_m, r.c1, r.c2, a, b, r.sigma2)
        }
        other => Err(Error::Argument(format!("unknown ensemble '{other}'"))),
    }
}

/// Full pipeline: MC moments, MC variance, ensemble-specialized TV bound.
/// The variance enters at its lower CI endpoint, which can only enlarge the
/// reported bound. Monomial statistics also carry the proof-derived
/// variance floor as metadata (for gaussian Toeplitz this enforces the
/// floor's n >= 4p^2 regime).
pub fn run_bound(spec: &ExperimentSpec) -> Result<BoundReport> {
    let model = spec.build_model()?;
    let f = spec.parse_f()?;
    let (c1, c2) = model.law_constants();
    let sim = simulate_statistic(spec)?;
    let sigma2 = sim.variance_ci[0];
    if sigma2 < DEGENERATE_VAR {
        return Err(Error::Degenerate(
            "variance CI reaches zero; more sigma samples needed".into(),
        ));
    }
    let moments = estimate_ab(&model, &f, spec.mc_kappa, spec.seed)?;
    let closed = matches!(
        model.kind(),
        ModelKind::Wigner | ModelKind::Wishart | ModelKind::DoubleWishart
    );
    let kappas = if closed {
        Some(estimate_matrix_kappas(&model, &f, spec.mc_kappa, spec.seed)?)
    } else {
        None
    };
    let sigma_op_norm = model.covariance().map(|c| c.gershgorin_bound());
    let (a, b) = (moments.a, moments.b);
    let tv_bound = match model.kind() {
        ModelKind::Wigner => wigner_bound(spec.n, c1, c2, a, b, sigma2)?,
        ModelKind::CorrGauss | ModelKind::Toeplitz => {
            corr_gaussian_bound(sigma_op_norm.unwrap(), a, b, sigma2, spec.n)?
        }
        ModelKind::Wishart => {
            wishart_bound(spec.n, model.data_cols(), c1, c2, a, b, sigma2)?
        }
        ModelKind::DoubleWishart => double_wishart_bound(
            spec.n,
            model.data_cols(),
            model.denom_cols(),
            c1,
            c2,
            a,
            b,
            sigma2,
        )?,
    };
    let var_floor = match (model.kind(), f.monomial_degree()) {
        (ModelKind::Wigner, Some(p)) if p >= 1 => {
            let c_min = model.profile().map(|pr| pr.bounds().0).unwrap_or(1.0);
            Some(wigner_var_lower(spec.n, p, c_min)?)
        }
        (ModelKind::Toeplitz, Some(p)) if p >= 1 => Some(toeplitz_var_lower(spec.n, p)?),
        _ => None,
    };
    Ok(BoundReport {
        theorem: if closed { "independent" } else { "gaussian-covariance" },
        ensemble: model.kind().tag().to_string(),
        n: spec.n,
        big_n: spec.big_n,
        big_m: spec.big_m,
        f: spec.f.clone(),
        law: spec.law.clone(),
        c1,
        c2,
        sigma_op_norm,
        gamma_method: if closed { "closed-form" } else { "gershgorin" },
        kappas,
        moments,
        sigma2,
        sigma2_point: sim.variance,
        sigma2_ci: sim.variance_ci,
        var_floor,
        tv_bound,
        n_mc_sigma: sim.n_mc,
        seed: spec.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub size: usize,
    pub tv_bound: f64,
    pub log_size: f64,
    pub log_bound: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: Vec<RatePoint>,
}

fn spec_at_size(base: &ExperimentSpec, size: usize) -> ExperimentSpec {
    let mut s = base.clone();
    match base.ensemble.as_str() {
        // the Wishart grids scale the data dimension; n tracks N/2
        "wishart" => {
            s.n = (size / 2).max(1);
            s.big_n = Some(size);
        }
        "double-wishart" => {
            s.n = (size / 2).max(1);
            s.big_n = Some(size);
            s.big_m = Some(2 * size);
        }
        _ => s.n = size,
    }
    s
}

/// Least-squares slope of log tv_bound against log size over a dimension
/// grid. All points must succeed; failures are collected into one error.
pub fn rate_fit(base: &ExperimentSpec, sizes: &[usize]) -> Result<RateFit> {
    if sizes.len() < 4 {
        return Err(Error::Argument(format!(
            "rate fit needs at least 4 grid points, got {}",
            sizes.len()
        )));
    }
    let mut points = Vec::with_capacity(sizes.len());
    let mut failures = Vec::new();
    for &size in sizes {
        match run_bound(&spec_at_size(base, size)) {
            Ok(r) if r.tv_bound > 0.0 => points.push((size, r.tv_bound)),
            Ok(r) => failures.push(format!("size {size}: nonpositive bound {}", r.tv_bound)),
            Err(e) => failures.push(format!("size {size}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Numeric(format!(
            "rate fit: {}/{} grid points failed ({})",
            failures.len(),
            sizes.len(),
            failures.join("; ")
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(s, _)| (s as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, b)| b.ln()).collect();
    let k = xs.len() as f64;
    let xbar = mc::mean(&xs);
    let ybar = mc::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    let table = points
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(&(size, tv_bound), (&lx, &ly))| RatePoint {
            size,
            tv_bound,
            log_size: lx,
            log_bound: ly,
            residual: ly - intercept - slope * lx,
        })
        .collect();
    Ok(RateFit {
        slope,
        stderr,
        intercept,
        points: table,
    })
}

/// Wraps a serializable payload in the report envelope.
pub fn report_envelope<T: Serialize>(spec: &ExperimentSpec, payload: &T) -> Result<serde_json::Value> {
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut value = serde_json::to_value(payload)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Argument("report payload must be a JSON object".into()))?;
    obj.insert("spec".into(), serde_json::to_value(spec)?);
    obj.insert("timestamp".into(), serde_json::Value::from(ts));
    obj.insert(
        "version".into(),
        serde_json::Value::from(env!("CARGO_PKG_VERSION")),
    );
    Ok(value)
}

pub fn write_csv<W: std::io::Write>(out: &mut W, samples: &[f64]) -> Result<()> {
    writeln!(out, "index,W")?;
    for (i, w) in samples.iter().enumerate() {
        writeln!(out, "{i},{w}")?;
    }
    Ok(())
}
