//! Seeded sample-path generation.
//!
//! RNG: ChaCha12 (`rand_chacha`), seeded with `seed_from_u64(seed)`; replicate
//! `i` selects stream `i` via `set_stream`, so replicates are independent and
//! the whole collection is reproducible across platforms. `simulate` itself is
//! stream 0 and therefore equals the first replicate.
//!
//! Poisson draws: inversion by sequential search below rate 10, otherwise the
//! PTRS transformed-rejection sampler (Hormann 1993). Uniforms come from
//! `next_u64 >> 11` scaled by 2^-53, so every draw is bit-stable for a given
//! stream position.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::design::HarmonicSchema;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParamVector, ETA_GUARD};
use crate::series::SeriesFrame;

/// Rates above this abort the simulation; counts that large signal an
/// explosive parameter set rather than a usable scenario.
const LAMBDA_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SimScenario {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub schema: HarmonicSchema,
    pub n: usize,
    pub seed: u64,
    /// Absolute time of the observation before the first (0 gives t = 1..n).
    pub time_origin: i64,
}

impl SimScenario {
    pub fn new(
        spec: ModelSpec,
        params: ParamVector,
        schema: HarmonicSchema,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("scenario length must be at least 1".into()));
        }
        if !params.matches(&spec) {
            return Err(Error::InvalidSpec("scenario parameters do not match spec".into()));
        }
        if schema.dim() != spec.k {
            return Err(Error::InvalidSpec(alloc::format!(
                "schema produces {} covariates, spec expects {}",
                schema.dim(),
                spec.k
            )));
        }
        Ok(SimScenario { spec, params, schema, n, seed, time_origin: 0 })
    }
}

/// Draws one series from the scenario (stream 0).
pub fn simulate(scenario: &SimScenario) -> Result<SeriesFrame> {
    simulate_stream(scenario, 0)
}

/// Draws `n0` independent series on streams `0..n0`.
pub fn replicate(scenario: &SimScenario, n0: usize) -> Result<Vec<SeriesFrame>> {
    if n0 == 0 {
        return Err(Error::InvalidSpec("replicate count must be at least 1".into()));
    }
    (0..n0).map(|i| simulate_stream(scenario, i as u64)).collect()
}

/// Draws one series on an explicit stream index.
pub fn simulate_stream(scenario: &SimScenario, stream: u64) -> Result<SeriesFrame> {
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    rng.set_stream(stream);

    let spec = &scenario.spec;
    let n = scenario.n;
    let rows = scenario.schema.materialize(n, scenario.time_origin);

    let mut counts: Vec<u64> = Vec::with_capacity(n);
    let mut log_clipped: Vec<f64> = Vec::with_capacity(n);
    let mut eta: Vec<f64> = Vec::with_capacity(n);
    let mut xb: Vec<f64> = Vec::with_capacity(n);

    for t in 0..n {
        let x = &rows[t];
        let xbt: f64 = x.iter().zip(&scenario.params.beta).map(|(xi, b)| xi * b).sum();
        xb.push(xbt);
        let mut e = xbt;
        for (j, &phi) in scenario.params.phi.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e += phi * (log_clipped[t - lag] - xb[t - lag]);
            }
        }
        for (j, &theta) in scenario.params.theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e += theta * (log_clipped[t - lag] - eta[t - lag]);
            }
        }
        if e > ETA_GUARD {
            return Err(Error::NumericOverflow { t: t + 1, eta: e });
        }
        let lambda = libm::exp(e);
        if lambda > LAMBDA_GUARD {
            return Err(Error::NumericOverflow { t: t + 1, eta: e });
        }
        let y = poisson_draw(&mut rng, lambda);
        eta.push(e);
        counts.push(y);
        log_clipped.push(libm::log((y as f64).max(spec.c)));
    }

    Ok(SeriesFrame::new(counts, rows)?.with_time_origin(scenario.time_origin))
}

#[inline]
fn unit_f64(rng: &mut ChaCha12Rng) -> f64 {
    // 53 random bits into [0, 1)
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Poisson sampler: sequential-search inversion for small rates, PTRS
/// transformed rejection otherwise.
pub(crate) fn poisson_draw(rng: &mut ChaCha12Rng, lambda: f64) -> u64 {
    debug_assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda < 10.0 {
        let u = unit_f64(rng);
        let mut k = 0u64;
        let mut pmf = libm::exp(-lambda);
        let mut cdf = pmf;
        // cdf(200) is beyond 1 - 1e-30 for any lambda < 10
        while u > cdf && k < 200 {
            k += 1;
            pmf *= lambda / k as f64;
            cdf += pmf;
        }
        k
    } else {
        let b = 0.931 + 2.53 * libm::sqrt(lambda);
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let log_lambda = libm::log(lambda);
        loop {
            let u = unit_f64(rng) - 0.5;
            let v = unit_f64(rng);
            let us = 0.5 - libm::fabs(u);
            if us < 1e-12 {
                continue;
            }
            let kf = libm::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if us >= 0.07 && v <= v_r {
                return kf as u64;
            }
            if kf < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v * inv_alpha / (a / (us * us) + b));
            let rhs = kf * log_lambda - lambda - libm::lgamma(kf + 1.0);
            if lhs <= rhs {
                return kf as u64;
            }
        }
    }
}
