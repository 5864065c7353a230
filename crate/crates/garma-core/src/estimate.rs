//! Maximum partial likelihood estimation by Fisher scoring with step halving.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{self, ModelSpec, ParamVector, PredictorPath};
use crate::series::SeriesFrame;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_halving_max: usize,
    pub init: Option<ParamVector>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            step_halving_max: 30,
            init: None,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpec("max_iterations must be at least 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidSpec("gradient_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Same options but starting from the given parameters. Used by the
    /// forecaster to warm-start candidate refits.
    pub fn warm_start(&self, init: ParamVector) -> Self {
        let mut opts = self.clone();
        opts.init = Some(init);
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitWarning {
    /// `sum |phi|` or `sum |theta|` exceeds 1; the fitted recursion may not be
    /// stationary.
    NonStationary,
    /// Information matrix was singular at the optimum; no standard errors.
    SingularAtOptimum,
    /// Line search could not improve the likelihood before the gradient
    /// tolerance was reached.
    LineSearchStalled,
}

impl core::fmt::Display for FitWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FitWarning::NonStationary => {
                write!(f, "AR/MA coefficient magnitudes sum above 1; fit may be non-stationary")
            }
            FitWarning::SingularAtOptimum => {
                write!(f, "information matrix singular at the optimum; standard errors unavailable")
            }
            FitWarning::LineSearchStalled => {
                write!(f, "line search stalled before reaching the gradient tolerance")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: ParamVector,
    /// Asymptotic standard errors, absent when the information matrix is
    /// singular at the optimum.
    pub stderr: Option<Vec<f64>>,
    pub deviance: f64,
    pub log_likelihood: f64,
    pub path: PredictorPath,
    /// Conditional information matrix at the optimum.
    pub information: Matrix,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<FitWarning>,
}

/// Maximizes the log partial likelihood.
///
/// Each iteration solves `G delta = score` and applies step halving until the
/// likelihood increases. A singular `G` falls back to a diagonally scaled
/// gradient step; if every iteration is singular the model is declared
/// non-identifiable. Unless overridden, the regression block starts at the
/// plain Poisson regression solution (p=q=0) and the AR/MA blocks at zero.
pub fn fit(spec: &ModelSpec, frame: &SeriesFrame, opts: &FitOptions) -> Result<FittedModel> {
    opts.validate()?;
    spec.check_frame(frame)?;
    if frame.len() <= spec.dim() {
        return Err(Error::InvalidSpec(alloc::format!(
            "{} observations cannot identify {} parameters",
            frame.len(),
            spec.dim()
        )));
    }

    let init = match &opts.init {
        Some(params) => {
            if !params.matches(spec) {
                return Err(Error::InvalidSpec("init parameter shape mismatch".into()));
            }
            params.clone()
        }
        None => initial_params(spec, frame, opts)?,
    };

    let (nu, iterations, stalled) = scoring_loop(spec, frame, opts, init)?;

    let pass = model::score_pass(spec, &nu, frame)?;
    let converged = inf_norm(&pass.score) <= opts.gradient_tolerance;
    let mut warnings = Vec::new();
    if stalled && !converged {
        warnings.push(FitWarning::LineSearchStalled);
    }
    let stderr = match pass.information.inverse_spd() {
        Some(inv) => Some((0..spec.dim()).map(|i| libm::sqrt(inv.get(i, i))).collect()),
        None => {
            warnings.push(FitWarning::SingularAtOptimum);
            None
        }
    };
    let abs_sum = |v: &[f64]| v.iter().map(|x| libm::fabs(*x)).sum::<f64>();
    if abs_sum(&nu.phi) > 1.0 || abs_sum(&nu.theta) > 1.0 {
        warnings.push(FitWarning::NonStationary);
    }
    let deviance = deviance(frame.counts(), &pass.path.lambda);

    Ok(FittedModel {
        spec: *spec,
        params: nu,
        stderr,
        deviance,
        log_likelihood: pass.loglik,
        path: pass.path,
        information: pass.information,
        converged,
        iterations,
        warnings,
    })
}

fn scoring_loop(
    spec: &ModelSpec,
    frame: &SeriesFrame,
    opts: &FitOptions,
    init: ParamVector,
) -> Result<(ParamVector, usize, bool)> {
    let mut nu = init;
    let mut loglik = match model::log_partial_likelihood(spec, &nu, frame) {
        Ok(ll) => ll,
        // a diverging warm start is recoverable; restart from zero
        Err(Error::NumericOverflow { .. }) => {
            nu = ParamVector::zeros(spec);
            model::log_partial_likelihood(spec, &nu, frame)?
        }
        Err(e) => return Err(e),
    };
    let mut singular_streak = 0usize;
    let mut stalled = false;

    for iteration in 0..opts.max_iterations {
        let pass = model::score_pass(spec, &nu, frame)?;
        if inf_norm(&pass.score) <= opts.gradient_tolerance {
            return Ok((nu, iteration, stalled));
        }
        let direction = match pass.information.solve_spd(&pass.score) {
            Some(step) => {
                singular_streak = 0;
                step
            }
            None => {
                singular_streak += 1;
                if singular_streak > 20 {
                    return Err(Error::NonIdentifiable);
                }
                let scale = pass.information.max_diag();
                if !(scale > 0.0) {
                    return Err(Error::NonIdentifiable);
                }
                pass.score.iter().map(|s| s / scale).collect()
            }
        };

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.step_halving_max {
            let candidate = step_from(&nu, &direction, step);
            // halving can shrink the update below f64 resolution; a candidate
            // bit-equal to the current iterate is a fixed point of the loop
            if candidate == nu {
                return Ok((nu, iteration + 1, true));
            }
            match model::log_partial_likelihood(spec, &candidate, frame) {
                Ok(ll) if ll > loglik - 1e-13 => {
                    nu = candidate;
                    loglik = ll;
                    accepted = true;
                    break;
                }
                Ok(_) | Err(Error::NumericOverflow { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            stalled = true;
            return Ok((nu, iteration + 1, stalled));
        }
    }
    Ok((nu, opts.max_iterations, stalled))
}

fn step_from(nu: &ParamVector, direction: &[f64], step: f64) -> ParamVector {
    let k = nu.beta.len();
    let p = nu.phi.len();
    let mut out = nu.clone();
    for (i, b) in out.beta.iter_mut().enumerate() {
        *b += step * direction[i];
    }
    for (i, ph) in out.phi.iter_mut().enumerate() {
        *ph += step * direction[k + i];
    }
    for (i, th) in out.theta.iter_mut().enumerate() {
        *th += step * direction[k + p + i];
    }
    out
}

/// Starting point: regression coefficients from the static (p=q=0) Poisson
/// fit, dynamics at zero.
fn initial_params(spec: &ModelSpec, frame: &SeriesFrame, opts: &FitOptions) -> Result<ParamVector> {
    let mut nu = ParamVector::zeros(spec);
    if spec.k == 0 {
        return Ok(nu);
    }
    let glm_spec = ModelSpec::new(0, 0, spec.k, spec.c)?;
    let glm_opts = FitOptions {
        max_iterations: 100,
        gradient_tolerance: opts.gradient_tolerance.max(1e-10),
        step_halving_max: opts.step_halving_max,
        init: Some(ParamVector::zeros(&glm_spec)),
    };
    let (glm, _, _) = scoring_loop(&glm_spec, frame, &glm_opts, ParamVector::zeros(&glm_spec))?;
    nu.beta = glm.beta;
    Ok(nu)
}

/// Square roots of the diagonal of the inverted information matrix.
pub fn standard_errors(fit: &FittedModel) -> Result<Vec<f64>> {
    let inv = fit.information.inverse_spd().ok_or(Error::SingularInformation)?;
    Ok((0..fit.information.dim()).map(|i| libm::sqrt(inv.get(i, i))).collect())
}

/// Poisson deviance `2 sum[y log(y/lambda) - (y - lambda)]`, with the log
/// term of zero counts defined as 0.
pub fn deviance(counts: &[u64], lambda: &[f64]) -> f64 {
    counts
        .iter()
        .zip(lambda)
        .map(|(&y, &lam)| {
            let y = y as f64;
            let log_part = if y > 0.0 { y * libm::log(y / lam) } else { 0.0 };
            log_part - (y - lam)
        })
        .sum::<f64>()
        * 2.0
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)))
}
