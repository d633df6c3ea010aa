//! Maximum-likelihood baseline: Nelder–Mead on the GEV negative
//! log-likelihood, with standard errors from a finite-difference Hessian.

use nalgebra::Matrix3;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bootstrap::{ConfidenceInterval, IntervalMethod};
use crate::error::{Error, Result};
use crate::gev::{GevParams, GevSample};
use crate::rng::stream_rng;

const EULER_GAMMA: f64 = 0.5772157;
const INITIAL_XI: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Converged once the spread of function values across the simplex is below this.
    pub tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tolerance: 1e-8,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl SimplexOptions {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            self.reflection,
            self.expansion,
            self.contraction,
            self.shrink,
        ];
        if !(self.tolerance > 0.0) || coeffs.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidParameter(
                "simplex coefficients and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Nelder–Mead from `x0` with unit initial steps along each axis.
pub fn nelder_mead<const N: usize, F>(f: F, x0: [f64; N], opts: &SimplexOptions) -> SimplexResult<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    nelder_mead_with_steps(f, x0, [1.0; N], opts)
}

/// Nelder–Mead whose initial simplex is `x0` plus `steps[i]` along axis `i`.
/// Infinite (or NaN) values rank as worst.
pub fn nelder_mead_with_steps<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    steps: [f64; N],
    opts: &SimplexOptions,
) -> SimplexResult<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut eval = |x: &[f64; N]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<[f64; N]> = Vec::with_capacity(N + 1);
    pts.push(x0);
    for i in 0..N {
        let mut p = x0;
        p[i] += steps[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(&mut eval).collect();

    let along = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] {
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        out
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i]).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[N] - vals[0];
        if spread < opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        iterations += 1;

        let mut c = [0.0; N];
        for p in &pts[..N] {
            for k in 0..N {
                c[k] += p[k] / N as f64;
            }
        }
        let worst = pts[N];
        let xr = along(&c, &worst, -opts.reflection);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(&c, &xr, opts.expansion);
            let fe = eval(&xe);
            if fe < fr {
                (pts[N], vals[N]) = (xe, fe);
            } else {
                (pts[N], vals[N]) = (xr, fr);
            }
            continue;
        }
        if fr < vals[N - 1] {
            (pts[N], vals[N]) = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < vals[N] {
            let xc = along(&c, &xr, opts.contraction);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(&c, &worst, opts.contraction);
            let fc = eval(&xc);
            (xc, fc, fc < vals[N])
        };
        if accept {
            (pts[N], vals[N]) = (xc, fc);
            continue;
        }
        let best = pts[0];
        for i in 1..=N {
            pts[i] = along(&best, &pts[i], opts.shrink);
            vals[i] = eval(&pts[i]);
        }
    }
    SimplexResult {
        x: pts[0],
        f: vals[0],
        converged,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MleOptions {
    pub simplex: SimplexOptions,
    /// Extra fits from jittered starting points; the lowest objective wins.
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub params: GevParams,
    pub nll: f64,
    pub converged: bool,
    pub iterations: usize,
    pub std_errors: Option<[f64; 3]>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Gumbel-moment starting point `(μ₀, σ₀, 0.1)`.
pub fn initial_guess(sample: &GevSample) -> Result<[f64; 3]> {
    let y = sample.values();
    if y.len() < 2 {
        return Err(Error::SampleTooSmall { n: y.len(), min: 2 });
    }
    let (mean, sd) = mean_sd(y);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateSample("sample has zero spread".into()));
    }
    let sigma0 = sd * 6f64.sqrt() / std::f64::consts::PI;
    Ok([mean - EULER_GAMMA * sigma0, sigma0, INITIAL_XI])
}

fn objective(y: &[f64]) -> impl Fn(&[f64; 3]) -> f64 + '_ {
    move |t: &[f64; 3]| match GevParams::new(t[0], t[1], t[2]) {
        Ok(p) => p.neg_log_likelihood(y),
        Err(_) => f64::INFINITY,
    }
}

fn feasible(t: &[f64; 3]) -> bool {
    GevParams::new(t[0], t[1], t[2]).is_ok()
}

fn fit_from(
    y: &[f64],
    mut start: [f64; 3],
    sigma0: f64,
    opts: &SimplexOptions,
) -> SimplexResult<3> {
    let f = objective(y);
    if !feasible(&start) || !f(&start).is_finite() {
        start[2] = 0.0;
    }
    nelder_mead_with_steps(&f, start, [0.1 * sigma0, 0.1 * sigma0, 0.1], opts)
}

pub fn fit_mle(sample: &GevSample) -> Result<MleFit> {
    fit_mle_with(sample, &MleOptions::default())
}

pub fn fit_mle_with(sample: &GevSample, opts: &MleOptions) -> Result<MleFit> {
    opts.simplex.validate()?;
    let start = initial_guess(sample)?;
    let y = sample.values();
    let mut best = fit_from(y, start, start[1], &opts.simplex);
    let mut iterations = best.iterations;
    if opts.restarts > 0 {
        let mut rng = stream_rng(opts.seed, 0);
        for _ in 0..opts.restarts {
            let jittered = [
                start[0] + 0.5 * start[1] * rng.random_range(-1.0..1.0),
                start[1] * rng.random_range(0.5f64..2.0),
                rng.random_range(-0.3..0.3),
            ];
            let res = fit_from(y, jittered, jittered[1], &opts.simplex);
            iterations += res.iterations;
            if res.f < best.f {
                best = res;
            }
        }
    }
    let feasible_optimum = feasible(&best.x) && best.f.is_finite();
    let params = GevParams::new_unchecked(best.x[0], best.x[1], best.x[2]);
    let mut fit = MleFit {
        params,
        nll: best.f,
        converged: best.converged && feasible_optimum,
        iterations,
        std_errors: None,
    };
    if fit.converged {
        fit.std_errors = standard_errors(&fit.params, y).ok();
    }
    Ok(fit)
}

/// Central finite-difference Hessian of the negative log-likelihood.
pub fn nll_hessian(theta: &GevParams, y: &[f64]) -> [[f64; 3]; 3] {
    let f = objective(y);
    let t = theta.to_array();
    let h: [f64; 3] = std::array::from_fn(|i| 1e-4 * (1.0 + t[i].abs()));
    let at = |di: [f64; 3]| f(&[t[0] + di[0], t[1] + di[1], t[2] + di[2]]);
    let f0 = f(&t);
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = h[i];
        let neg = e.map(|v| -v);
        hess[i][i] = (at(e) - 2.0 * f0 + at(neg)) / (h[i] * h[i]);
        for j in 0..i {
            let mut pp = [0.0; 3];
            pp[i] = h[i];
            pp[j] = h[j];
            let mut pm = pp;
            pm[j] = -h[j];
            let mp = pm.map(|v| -v);
            let mm = pp.map(|v| -v);
            let v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

/// Square roots of the diagonal of the inverse Hessian.
pub fn standard_errors(theta: &GevParams, y: &[f64]) -> Result<[f64; 3]> {
    let hess = nll_hessian(theta, y);
    let m = Matrix3::from_fn(|i, j| hess[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = m.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let inv = chol.inverse();
    let se = [inv[(0, 0)], inv[(1, 1)], inv[(2, 2)]];
    if se.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(se.map(f64::sqrt))
}

/// Standard normal quantile at `(1 + level) / 2`.
pub fn normal_multiplier(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    Ok(Normal::standard().inverse_cdf(0.5 + 0.5 * level))
}

/// Wald intervals `θ̂ ± z·SE` for each parameter.
pub fn mle_confidence_intervals(
    fit: &MleFit,
    sample: &GevSample,
    level: f64,
) -> Result<[ConfidenceInterval; 3]> {
    let z = normal_multiplier(level)?;
    if !fit.converged {
        return Err(Error::NotConverged(
            "no interval for an unconverged fit".into(),
        ));
    }
    let se = match fit.std_errors {
        Some(se) => se,
        None => standard_errors(&fit.params, sample.values())?,
    };
    let t = fit.params.to_array();
    Ok(std::array::from_fn(|i| ConfidenceInterval {
        lower: t[i] - z * se[i],
        upper: t[i] + z * se[i],
        level,
        method: IntervalMethod::Likelihood,
        replicates: None,
    }))
}
