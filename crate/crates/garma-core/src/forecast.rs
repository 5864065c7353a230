//! Profile predictive likelihood forecasting.
//!
//! For each candidate future count the model is refit on the extended series
//! and the maximized joint likelihood recorded; normalizing over candidates
//! gives a forecast distribution supported on the non-negative integers.
//! Point forecasts take the mode, regions take the highest-density set, and
//! multi-step forecasts enumerate intermediate paths and marginalize.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimate::{fit, FitOptions, FittedModel};
use crate::model::{predictor_path, ModelSpec, ParamVector};
use crate::series::SeriesFrame;

/// Stopping rule for candidate enumeration.
///
/// A candidate whose maximized likelihood falls below `relative_floor` times
/// the running maximum counts toward `patience` once the running mode has
/// been passed; enumeration stops after `patience` consecutive sub-floor
/// candidates or at `hard_cap`, whichever comes first.
#[derive(Debug, Clone, Copy)]
pub struct TruncationRule {
    pub relative_floor: f64,
    pub patience: usize,
    pub hard_cap: u64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule { relative_floor: 1e-6, patience: 3, hard_cap: 500 }
    }
}

/// Default cap on the number of complete tuples `m_step_pl` may enumerate.
pub const DEFAULT_TUPLE_BUDGET: usize = 1_000_000;

impl TruncationRule {
    fn validate(&self) -> Result<()> {
        if !(self.relative_floor > 0.0) {
            return Err(Error::InvalidSpec("relative_floor must be positive".into()));
        }
        if self.hard_cap < 1 {
            return Err(Error::InvalidSpec("hard_cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Forecast distribution on the contiguous support `0..=truncation_bound`.
#[derive(Debug, Clone)]
pub struct ForecastDistribution {
    probs: Vec<f64>,
    /// Largest enumerated candidate K.
    pub truncation_bound: u64,
    /// Pre-normalization mass in units of the best candidate's likelihood.
    pub unnormalized_total: f64,
    /// Per-candidate parameter estimates (one-step forecasts only).
    pub per_candidate_fits: Option<Vec<ParamVector>>,
    /// Non-fatal events (failed candidate refits).
    pub warnings: Vec<String>,
}

impl ForecastDistribution {
    /// Normalizes unnormalized log likelihoods for candidates `0..len` into a
    /// distribution. Non-finite entries get zero mass; if none are finite the
    /// forecast has failed.
    pub fn from_log_likelihoods(
        log_liks: &[f64],
        per_candidate_fits: Option<Vec<ParamVector>>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let max = log_liks.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        if !max.is_finite() {
            return Err(Error::ForecastFailed);
        }
        let scaled: Vec<f64> = log_liks
            .iter()
            .map(|&ll| if ll.is_finite() { libm::exp(ll - max) } else { 0.0 })
            .collect();
        let total: f64 = scaled.iter().sum();
        let probs = scaled.iter().map(|s| s / total).collect();
        Ok(ForecastDistribution {
            probs,
            truncation_bound: (log_liks.len() - 1) as u64,
            unnormalized_total: total,
            per_candidate_fits,
            warnings,
        })
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        0..=self.truncation_bound
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, y: u64) -> f64 {
        self.probs.get(y as usize).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Highest-density region at a given level.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrRegion {
    pub level: f64,
    /// Member counts in ascending order.
    pub members: Vec<u64>,
    pub attained_mass: f64,
}

impl HdrRegion {
    pub fn min(&self) -> u64 {
        self.members.first().copied().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.members.last().copied().unwrap_or(0)
    }

    pub fn contains(&self, y: u64) -> bool {
        self.members.binary_search(&y).is_ok()
    }
}

/// One-step-ahead forecast distribution for `y_{n+1}`.
///
/// Every candidate refit warm-starts from the previous candidate's optimum;
/// a candidate whose refit fails is recorded with zero mass and a warning.
pub fn one_step_pl(
    spec: &ModelSpec,
    frame: &SeriesFrame,
    next_covariates: &[f64],
    opts: &FitOptions,
    trunc: &TruncationRule,
) -> Result<ForecastDistribution> {
    trunc.validate()?;
    if next_covariates.len() != spec.k {
        return Err(Error::InvalidSpec(format!(
            "next covariate row has {} entries, spec expects {}",
            next_covariates.len(),
            spec.k
        )));
    }
    let base = fit(spec, frame, opts)?;

    let mut extended = frame.clone();
    extended.push(0, next_covariates)?;
    let last = extended.len() - 1;

    let mut log_liks: Vec<f64> = Vec::new();
    let mut fits: Vec<ParamVector> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut warm = base.params.clone();
    let mut best_ll = f64::NEG_INFINITY;
    let mut mode = 0u64;
    let mut sub_floor_streak = 0usize;

    for candidate in 0..=trunc.hard_cap {
        extended.set_count(last, candidate);
        let ll = match fit(spec, &extended, &opts.warm_start(warm.clone())) {
            Ok(refit) => {
                warm = refit.params.clone();
                fits.push(refit.params);
                refit.log_likelihood
            }
            Err(e) => {
                warnings.push(format!("candidate {candidate} refit failed: {e}"));
                fits.push(warm.clone());
                f64::NEG_INFINITY
            }
        };
        log_liks.push(ll);
        if ll > best_ll {
            best_ll = ll;
            mode = candidate;
        }
        let sub_floor = !ll.is_finite() || libm::exp(ll - best_ll) < trunc.relative_floor;
        if candidate > mode && sub_floor {
            sub_floor_streak += 1;
            if sub_floor_streak >= trunc.patience {
                break;
            }
        } else {
            sub_floor_streak = 0;
        }
    }

    ForecastDistribution::from_log_likelihoods(&log_liks, Some(fits), warnings)
}

/// Mode of the forecast distribution, ties broken toward the smaller count.
pub fn point_forecast(dist: &ForecastDistribution) -> u64 {
    let mut best = 0u64;
    let mut best_p = f64::NEG_INFINITY;
    for (y, &p) in dist.support().zip(dist.probs()) {
        if p > best_p {
            best_p = p;
            best = y;
        }
    }
    best
}

/// Exact discrete highest-density region: support points in descending
/// probability order until the level is reached, admitting equal-probability
/// ties at the threshold together.
pub fn hdr(dist: &ForecastDistribution, level: f64) -> Result<HdrRegion> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidSpec(format!("HDR level {level} outside (0,1)")));
    }
    let mut order: Vec<u64> = dist.support().collect();
    // descending probability, ascending count among equals
    order.sort_by(|&a, &b| {
        dist.prob(b)
            .partial_cmp(&dist.prob(a))
            .unwrap()
            .then_with(|| a.cmp(&b))
    });

    let mut members: Vec<u64> = Vec::new();
    let mut mass = 0.0;
    let mut idx = 0;
    while idx < order.len() && mass < level {
        members.push(order[idx]);
        mass += dist.prob(order[idx]);
        idx += 1;
    }
    // threshold ties join the region
    if idx > 0 {
        let threshold = dist.prob(order[idx - 1]);
        while idx < order.len() && dist.prob(order[idx]) == threshold {
            members.push(order[idx]);
            mass += threshold;
            idx += 1;
        }
    }
    members.sort_unstable();
    Ok(HdrRegion { level, members, attained_mass: mass })
}

/// m-step-ahead forecast by enumeration of intermediate paths.
///
/// Complete tuples `(y_{n+1}, .., y_{n+m})` are enumerated depth-first with
/// the one-step truncation rule applied along each axis; each tuple is refit
/// and its maximized joint likelihood recorded, then mass is summed over the
/// intermediate coordinates and normalized over the final one. Tuples whose
/// likelihood falls below `relative_floor` times the best tuple are pruned
/// from the sums.
pub fn m_step_pl(
    spec: &ModelSpec,
    frame: &SeriesFrame,
    future_covariates: &[Vec<f64>],
    m: usize,
    opts: &FitOptions,
    trunc: &TruncationRule,
    budget: usize,
) -> Result<ForecastDistribution> {
    trunc.validate()?;
    if m < 1 {
        return Err(Error::InvalidSpec("forecast horizon m must be at least 1".into()));
    }
    if future_covariates.len() != m {
        return Err(Error::InvalidSpec(format!(
            "{} future covariate rows supplied for m={m}",
            future_covariates.len()
        )));
    }
    if m == 1 {
        return one_step_pl(spec, frame, &future_covariates[0], opts, trunc);
    }
    let base = fit(spec, frame, opts)?;

    // one working frame per depth: frame plus j+1 future slots
    let mut frames: Vec<SeriesFrame> = Vec::with_capacity(m);
    let mut current = frame.clone();
    for row in future_covariates {
        current.push(0, row)?;
        frames.push(current.clone());
    }

    let mut enumerator = PathEnumerator {
        spec,
        opts,
        trunc,
        budget,
        n: frame.len(),
        frames,
        tuples: Vec::new(),
        warnings: Vec::new(),
        tuple_count: 0,
    };
    enumerator.descend(0, &base.params)?;
    let PathEnumerator { tuples, warnings, .. } = enumerator;

    if tuples.is_empty() {
        return Err(Error::ForecastFailed);
    }
    let best = tuples.iter().fold(f64::NEG_INFINITY, |acc, t| acc.max(t.1));
    let floor = best + libm::log(trunc.relative_floor);
    let max_final = tuples
        .iter()
        .filter(|t| t.1 >= floor)
        .map(|t| t.0)
        .max()
        .unwrap_or(0);

    // sum pruned-tuple mass per final coordinate, in units of the best tuple
    let mut mass = vec![0.0f64; max_final as usize + 1];
    for &(final_y, ll) in &tuples {
        if ll >= floor && final_y <= max_final {
            mass[final_y as usize] += libm::exp(ll - best);
        }
    }
    let total: f64 = mass.iter().sum();
    let probs: Vec<f64> = mass.iter().map(|v| v / total).collect();
    Ok(ForecastDistribution {
        probs,
        truncation_bound: max_final,
        unnormalized_total: total,
        per_candidate_fits: None,
        warnings,
    })
}

struct PathEnumerator<'a> {
    spec: &'a ModelSpec,
    opts: &'a FitOptions,
    trunc: &'a TruncationRule,
    budget: usize,
    n: usize,
    frames: Vec<SeriesFrame>,
    /// (final coordinate, joint log likelihood) per complete tuple.
    tuples: Vec<(u64, f64)>,
    warnings: Vec<String>,
    tuple_count: usize,
}

impl PathEnumerator<'_> {
    fn descend(&mut self, depth: usize, warm: &ParamVector) -> Result<()> {
        let m = self.frames.len();
        let slot = self.n + depth;
        let mut warm = warm.clone();
        let mut best_ll = f64::NEG_INFINITY;
        let mut mode = 0u64;
        let mut sub_floor_streak = 0usize;

        for candidate in 0..=self.trunc.hard_cap {
            // fix the candidate at this depth in every deeper frame
            for frame in &mut self.frames[depth..] {
                frame.set_count(slot, candidate);
            }
            let refit = match fit(self.spec, &self.frames[depth], &self.opts.warm_start(warm.clone())) {
                Ok(f) => {
                    warm = f.params.clone();
                    Some(f)
                }
                Err(e) => {
                    self.warnings
                        .push(format!("depth {} candidate {candidate} refit failed: {e}", depth + 1));
                    None
                }
            };
            let ll = refit.as_ref().map_or(f64::NEG_INFINITY, |f| f.log_likelihood);

            if depth == m - 1 {
                self.tuple_count += 1;
                if self.tuple_count > self.budget {
                    return Err(Error::BudgetExceeded { budget: self.budget });
                }
                if ll.is_finite() {
                    self.tuples.push((candidate, ll));
                }
            } else if let Some(f) = &refit {
                self.descend(depth + 1, &f.params)?;
            }

            if ll > best_ll {
                best_ll = ll;
                mode = candidate;
            }
            let sub_floor =
                !ll.is_finite() || libm::exp(ll - best_ll) < self.trunc.relative_floor;
            if candidate > mode && sub_floor {
                sub_floor_streak += 1;
                if sub_floor_streak >= self.trunc.patience {
                    break;
                }
            } else {
                sub_floor_streak = 0;
            }
        }
        Ok(())
    }
}

/// One rolling evaluation step.
#[derive(Debug, Clone)]
pub struct ForecastStep {
    pub dist: ForecastDistribution,
    pub point: u64,
    pub regions: Vec<HdrRegion>,
    pub realized: u64,
}

/// Rolling one-step forecasts over the final `horizon` observations of the
/// frame: forecast, record, append the realized count, advance.
pub fn rolling_forecast(
    spec: &ModelSpec,
    frame: &SeriesFrame,
    horizon: usize,
    opts: &FitOptions,
    trunc: &TruncationRule,
    levels: &[f64],
) -> Result<Vec<ForecastStep>> {
    if horizon == 0 {
        return Err(Error::InvalidSpec("horizon must be at least 1".into()));
    }
    if horizon >= frame.len() {
        return Err(Error::InvalidSpec(format!(
            "horizon {horizon} leaves no observations to fit (series length {})",
            frame.len()
        )));
    }
    let origin = frame.len() - horizon;
    let mut steps = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let history = frame.prefix(origin + h);
        let next_row = frame.row(origin + h);
        let dist = one_step_pl(spec, &history, next_row, opts, trunc)
            .map_err(|e| step_context(e, h + 1))?;
        let point = point_forecast(&dist);
        let regions = levels
            .iter()
            .map(|&level| hdr(&dist, level))
            .collect::<Result<Vec<_>>>()?;
        steps.push(ForecastStep { dist, point, regions, realized: frame.count(origin + h) });
    }
    Ok(steps)
}

fn step_context(e: Error, step: usize) -> Error {
    match e {
        Error::InvalidSpec(msg) => Error::InvalidSpec(format!("step {step}: {msg}")),
        other => other,
    }
}

/// Delta-method variance of each forecast probability.
///
/// The probability of support point `y` is treated as the Poisson mass at the
/// one-step-ahead rate `lambda_{n+1}(nu)`; its gradient in the parameters is
/// taken by central finite differences around the fitted optimum and the
/// variance is `grad' G^{-1} grad` with `G` the fitted information matrix.
pub fn forecast_density_variance(
    spec: &ModelSpec,
    frame: &SeriesFrame,
    next_covariates: &[f64],
    fitted: &FittedModel,
    dist: &ForecastDistribution,
) -> Result<Vec<f64>> {
    let cov = fitted.information.inverse_spd().ok_or(Error::SingularInformation)?;
    let d = fitted.params.len();

    let mut extended = frame.clone();
    extended.push(0, next_covariates)?;
    let next_rate = |flat: &[f64]| -> Result<f64> {
        let params = ParamVector::from_flat(spec, flat)?;
        let path = predictor_path(spec, &params, &extended)?;
        Ok(path.lambda[extended.len() - 1])
    };

    let center = fitted.params.to_flat();
    let mut rate_plus = vec![0.0; d];
    let mut rate_minus = vec![0.0; d];
    let mut steps = vec![0.0; d];
    for j in 0..d {
        let h = 1e-5 * (1.0 + libm::fabs(center[j]));
        steps[j] = h;
        let mut bumped = center.clone();
        bumped[j] = center[j] + h;
        rate_plus[j] = next_rate(&bumped)?;
        bumped[j] = center[j] - h;
        rate_minus[j] = next_rate(&bumped)?;
    }

    let log_pmf = |y: f64, lam: f64| y * libm::log(lam) - lam - libm::lgamma(y + 1.0);
    let mut variances = Vec::with_capacity(dist.len());
    let mut grad = vec![0.0; d];
    for y in dist.support() {
        let yf = y as f64;
        for j in 0..d {
            let p_plus = libm::exp(log_pmf(yf, rate_plus[j]));
            let p_minus = libm::exp(log_pmf(yf, rate_minus[j]));
            grad[j] = (p_plus - p_minus) / (2.0 * steps[j]);
        }
        variances.push(cov.quad_form(&grad).max(0.0));
    }
    Ok(variances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniformish(probs: Vec<f64>) -> ForecastDistribution {
        ForecastDistribution {
            truncation_bound: (probs.len() - 1) as u64,
            unnormalized_total: probs.iter().sum(),
            probs,
            per_candidate_fits: None,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn point_forecast_breaks_ties_low() {
        let dist = uniformish(vec![0.2, 0.2, 0.3, 0.3]);
        assert_eq!(point_forecast(&dist), 2);
    }

    #[test]
    fn single_point_support() {
        let dist = uniformish(vec![1.0]);
        assert_eq!(point_forecast(&dist), 0);
        let region = hdr(&dist, 0.5).unwrap();
        assert_eq!(region.members, vec![0]);
        assert!((region.attained_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hdr_accumulates_descending_mass() {
        let dist = uniformish(vec![0.05, 0.15, 0.4, 0.25, 0.1, 0.05]);
        let region = hdr(&dist, 0.5).unwrap();
        assert_eq!(region.members, vec![2, 3]);
        assert!((region.attained_mass - 0.65).abs() < 1e-12);
        let wider = hdr(&dist, 0.75).unwrap();
        assert_eq!(wider.members, vec![1, 2, 3]);
        // nesting
        assert!(region.members.iter().all(|m| wider.contains(*m)));
    }

    #[test]
    fn hdr_admits_threshold_ties() {
        let dist = uniformish(vec![0.4, 0.3, 0.3]);
        let region = hdr(&dist, 0.5).unwrap();
        // the two 0.3s are indistinguishable, both join
        assert_eq!(region.members, vec![0, 1, 2]);
        assert!((region.attained_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hdr_level_validated() {
        let dist = uniformish(vec![1.0]);
        assert!(hdr(&dist, 0.0).is_err());
        assert!(hdr(&dist, 1.0).is_err());
    }

    #[test]
    fn near_total_level_takes_whole_support() {
        let dist = uniformish(vec![0.5, 0.3, 0.2]);
        let region = hdr(&dist, 0.999).unwrap();
        assert_eq!(region.members, vec![0, 1, 2]);
    }
}
