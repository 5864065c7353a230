//! Model definition and the deterministic model math: the linear predictor
//! recursion, log partial likelihood, score, and conditional information.
//!
//! The conditional mean follows
//!
//! ```text
//! log lambda_t = x_t'b + sum_j phi_j * (log y*_{t-j} - x_{t-j}'b)
//!                      + sum_j theta_j * (log y*_{t-j} - eta_{t-j})
//! ```
//!
//! with `y* = max(y, c)`. Terms whose lag reaches before the first
//! observation contribute zero, so the first few predictors are
//! covariate-only.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::SeriesFrame;

/// Linear predictors above this abort instead of overflowing `exp`.
pub const ETA_GUARD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Log,
}

/// Model orders, covariate width, and the zero-count clipping constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub c: f64,
    pub link: Link,
}

impl ModelSpec {
    pub fn new(p: usize, q: usize, k: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidSpec(format!("clipping constant c={c} outside (0,1)")));
        }
        if p + q + k == 0 {
            return Err(Error::InvalidSpec("model has no parameters (p+q+k = 0)".into()));
        }
        Ok(ModelSpec { p, q, k, c, link: Link::Log })
    }

    /// Total parameter count k+p+q.
    pub fn dim(&self) -> usize {
        self.k + self.p + self.q
    }

    pub(crate) fn check_frame(&self, frame: &SeriesFrame) -> Result<()> {
        if frame.covariate_dim() != self.k {
            return Err(Error::InvalidSpec(format!(
                "frame has {} covariates, spec expects {}",
                frame.covariate_dim(),
                self.k
            )));
        }
        if frame.is_empty() {
            return Err(Error::InvalidSpec("empty series".into()));
        }
        Ok(())
    }
}

/// Parameters in the fixed flattening order (beta, phi, theta).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ParamVector {
    pub fn new(beta: Vec<f64>, phi: Vec<f64>, theta: Vec<f64>) -> Self {
        ParamVector { beta, phi, theta }
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        ParamVector {
            beta: vec![0.0; spec.k],
            phi: vec![0.0; spec.p],
            theta: vec![0.0; spec.q],
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len() + self.phi.len() + self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, spec: &ModelSpec) -> bool {
        self.beta.len() == spec.k && self.phi.len() == spec.p && self.theta.len() == spec.q
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.beta);
        out.extend_from_slice(&self.phi);
        out.extend_from_slice(&self.theta);
        out
    }

    pub fn from_flat(spec: &ModelSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.dim() {
            return Err(Error::InvalidSpec(format!(
                "flat parameter length {} does not match k+p+q = {}",
                flat.len(),
                spec.dim()
            )));
        }
        Ok(ParamVector {
            beta: flat[..spec.k].to_vec(),
            phi: flat[spec.k..spec.k + spec.p].to_vec(),
            theta: flat[spec.k + spec.p..].to_vec(),
        })
    }
}

/// Linear predictors and conditional means along the series.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorPath {
    pub eta: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PredictorPath {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Replaces zeros (and anything below `c`) so logs are defined: `max(y, c)`.
pub fn clip_series(counts: &[u64], c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidSpec(format!("clipping constant c={c} outside (0,1)")));
    }
    Ok(counts.iter().map(|&y| (y as f64).max(c)).collect())
}

fn validate(spec: &ModelSpec, params: &ParamVector, frame: &SeriesFrame) -> Result<()> {
    spec.check_frame(frame)?;
    if !params.matches(spec) {
        return Err(Error::InvalidSpec(format!(
            "parameter shape ({},{},{}) does not match spec ({},{},{})",
            params.beta.len(),
            params.phi.len(),
            params.theta.len(),
            spec.k,
            spec.p,
            spec.q
        )));
    }
    Ok(())
}

#[inline]
fn xb_at(frame: &SeriesFrame, beta: &[f64], t: usize) -> f64 {
    frame.row(t).iter().zip(beta).map(|(x, b)| x * b).sum()
}

/// Runs the forward recursion for `eta_t` and `lambda_t`, t = 1..n.
pub fn predictor_path(
    spec: &ModelSpec,
    params: &ParamVector,
    frame: &SeriesFrame,
) -> Result<PredictorPath> {
    validate(spec, params, frame)?;
    let n = frame.len();
    let log_clipped = clip_log(frame, spec.c);
    let mut eta = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    let mut xb = vec![0.0; n];
    for t in 0..n {
        xb[t] = xb_at(frame, &params.beta, t);
        let mut e = xb[t];
        for (j, &phi) in params.phi.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e += phi * (log_clipped[t - lag] - xb[t - lag]);
            }
        }
        for (j, &theta) in params.theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e += theta * (log_clipped[t - lag] - eta[t - lag]);
            }
        }
        if e > ETA_GUARD {
            return Err(Error::NumericOverflow { t: t + 1, eta: e });
        }
        eta[t] = e;
        lambda[t] = libm::exp(e);
    }
    Ok(PredictorPath { eta, lambda })
}

fn clip_log(frame: &SeriesFrame, c: f64) -> Vec<f64> {
    frame
        .counts()
        .iter()
        .map(|&y| libm::log((y as f64).max(c)))
        .collect()
}

/// Log partial likelihood: sum of Poisson log masses along the predictor path.
pub fn log_partial_likelihood(
    spec: &ModelSpec,
    params: &ParamVector,
    frame: &SeriesFrame,
) -> Result<f64> {
    let path = predictor_path(spec, params, frame)?;
    Ok(poisson_loglik(frame.counts(), &path))
}

pub(crate) fn poisson_loglik(counts: &[u64], path: &PredictorPath) -> f64 {
    counts
        .iter()
        .zip(path.eta.iter().zip(&path.lambda))
        .map(|(&y, (&eta, &lam))| -lam + y as f64 * eta - libm::lgamma(y as f64 + 1.0))
        .sum()
}

/// One forward pass producing everything the estimator needs: the path, the
/// score vector, the conditional information matrix, and the log likelihood.
///
/// The gradient of `eta_t` obeys its own recursion: the covariate block gets
/// `x_t - sum_j phi_j x_{t-j}`, the phi entry at lag j gets the AR residual
/// `log y*_{t-j} - x_{t-j}'b`, the theta entry at lag j gets the MA residual
/// `log y*_{t-j} - eta_{t-j}`, and every MA term feeds back the full lagged
/// gradient through `-theta_j * d(eta_{t-j})/d(nu)`.
pub(crate) fn score_pass(
    spec: &ModelSpec,
    params: &ParamVector,
    frame: &SeriesFrame,
) -> Result<ScorePass> {
    validate(spec, params, frame)?;
    let n = frame.len();
    let (k, p, q) = (spec.k, spec.p, spec.q);
    let d = spec.dim();
    let log_clipped = clip_log(frame, spec.c);

    let mut eta = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    let mut xb = vec![0.0; n];
    // gradient history is only consulted q lags back
    let mut grads: Vec<Vec<f64>> = vec![vec![0.0; d]; q.max(1)];
    let mut g = vec![0.0; d];
    let mut score = vec![0.0; d];
    let mut info = Matrix::zeros(d);
    let mut loglik = 0.0;

    for t in 0..n {
        xb[t] = xb_at(frame, &params.beta, t);
        let mut e = xb[t];
        g.fill(0.0);
        g[..k].copy_from_slice(frame.row(t));
        for (j, &phi) in params.phi.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                let residual = log_clipped[t - lag] - xb[t - lag];
                e += phi * residual;
                g[k + j] += residual;
                for (gi, xi) in g[..k].iter_mut().zip(frame.row(t - lag)) {
                    *gi -= phi * xi;
                }
            }
        }
        for (j, &theta) in params.theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                let residual = log_clipped[t - lag] - eta[t - lag];
                e += theta * residual;
                g[k + p + j] += residual;
                let lagged = &grads[(t - lag) % q.max(1)];
                for (gi, &li) in g.iter_mut().zip(lagged) {
                    *gi -= theta * li;
                }
            }
        }
        if e > ETA_GUARD {
            return Err(Error::NumericOverflow { t: t + 1, eta: e });
        }
        eta[t] = e;
        let lam = libm::exp(e);
        lambda[t] = lam;
        let y = frame.count(t) as f64;
        loglik += -lam + y * e - libm::lgamma(y + 1.0);
        for (si, &gi) in score.iter_mut().zip(&g) {
            *si += (y - lam) * gi;
        }
        info.add_scaled_outer(lam, &g);
        if q > 0 {
            grads[t % q].copy_from_slice(&g);
        }
    }

    Ok(ScorePass {
        path: PredictorPath { eta, lambda },
        score,
        information: info,
        loglik,
    })
}

pub(crate) struct ScorePass {
    pub path: PredictorPath,
    pub score: Vec<f64>,
    pub information: Matrix,
    pub loglik: f64,
}

/// Gradient of the log partial likelihood with respect to the flattened
/// parameter vector (beta, phi, theta).
pub fn score(spec: &ModelSpec, params: &ParamVector, frame: &SeriesFrame) -> Result<Vec<f64>> {
    Ok(score_pass(spec, params, frame)?.score)
}

/// Conditional information matrix `G = sum_t lambda_t g_t g_t'` where `g_t`
/// is the gradient of `eta_t`. The asymptotic covariance of the estimator is
/// `G^{-1}`; callers invert as needed.
pub fn conditional_information(
    spec: &ModelSpec,
    params: &ParamVector,
    frame: &SeriesFrame,
) -> Result<Matrix> {
    if frame.len() <= spec.dim() {
        return Err(Error::InvalidSpec(format!(
            "need more than {} observations for a {}-parameter information matrix",
            spec.dim(),
            spec.dim()
        )));
    }
    Ok(score_pass(spec, params, frame)?.information)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_frame(counts: Vec<u64>) -> SeriesFrame {
        let n = counts.len();
        SeriesFrame::new(counts, vec![vec![1.0]; n]).unwrap()
    }

    #[test]
    fn clip_matches_examples() {
        assert_eq!(clip_series(&[0], 0.1).unwrap(), vec![0.1]);
        assert_eq!(clip_series(&[5], 0.1).unwrap(), vec![5.0]);
        assert_eq!(clip_series(&[0, 1, 0, 2], 0.5).unwrap(), vec![0.5, 1.0, 0.5, 2.0]);
        assert!(clip_series(&[1], 0.0).is_err());
        assert!(clip_series(&[1], 1.0).is_err());
    }

    #[test]
    fn zero_predictor_means_unit_rate() {
        let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
        let params = ParamVector::new(vec![0.0], vec![], vec![]);
        let frame = intercept_frame(vec![1, 2, 3]);
        let path = predictor_path(&spec, &params, &frame).unwrap();
        assert_eq!(path.eta, vec![0.0; 3]);
        assert_eq!(path.lambda, vec![1.0; 3]);
    }

    #[test]
    fn ar_term_on_unit_count_vanishes() {
        // phi1 = 0.5, beta = 0, y1 = 1: eta2 = 0.5 * log(1) = 0
        let spec = ModelSpec::new(1, 0, 1, 0.1).unwrap();
        let params = ParamVector::new(vec![0.0], vec![0.5], vec![]);
        let frame = intercept_frame(vec![1, 4]);
        let path = predictor_path(&spec, &params, &frame).unwrap();
        assert_eq!(path.eta[1], 0.0);
        assert_eq!(path.lambda[1], 1.0);
    }

    #[test]
    fn single_observation_likelihoods() {
        let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
        // lambda = 1, y = 0 -> log pmf = -1
        let params = ParamVector::new(vec![0.0], vec![], vec![]);
        let frame = intercept_frame(vec![0]);
        let ll = log_partial_likelihood(&spec, &params, &frame).unwrap();
        assert!((ll + 1.0).abs() < 1e-12);
        // lambda = 2, y = 2 -> -2 + 2 log 2 - log 2
        let params = ParamVector::new(vec![libm::log(2.0)], vec![], vec![]);
        let frame = intercept_frame(vec![2]);
        let ll = log_partial_likelihood(&spec, &params, &frame).unwrap();
        let expect = -2.0 + 2.0 * libm::log(2.0) - libm::log(2.0);
        assert!((ll - expect).abs() < 1e-12);
    }

    #[test]
    fn intercept_score_is_count_minus_rate() {
        let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
        let params = ParamVector::new(vec![0.0], vec![], vec![]);
        let frame = intercept_frame(vec![3, 0, 1]);
        let s = score(&spec, &params, &frame).unwrap();
        // lambda = 1 everywhere: sum(y - 1) = (3-1)+(0-1)+(1-1)
        assert!((s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_information_is_rate_sum() {
        let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
        let params = ParamVector::new(vec![libm::log(2.0)], vec![], vec![]);
        let frame = intercept_frame(vec![1, 2, 3, 4]);
        let info = conditional_information(&spec, &params, &frame).unwrap();
        assert!((info.get(0, 0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn overflow_guard_names_the_time() {
        let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
        let params = ParamVector::new(vec![60.0], vec![], vec![]);
        let frame = intercept_frame(vec![1, 1]);
        match predictor_path(&spec, &params, &frame) {
            Err(Error::NumericOverflow { t: 1, .. }) => {}
            other => panic!("expected overflow at t=1, got {other:?}"),
        }
    }

    #[test]
    fn flatten_round_trip() {
        let spec = ModelSpec::new(2, 1, 3, 0.1).unwrap();
        let params = ParamVector::new(vec![0.1, -0.2, 0.3], vec![0.4, -0.5], vec![0.6]);
        let flat = params.to_flat();
        assert_eq!(flat, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]);
        assert_eq!(ParamVector::from_flat(&spec, &flat).unwrap(), params);
    }
}
