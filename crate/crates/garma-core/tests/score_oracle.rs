//! Score and information checks against derivative-free oracles: central
//! finite differences for the gradient, and a Monte Carlo average of
//! finite-difference Hessians for the conditional information matrix.

use garma_core::{
    conditional_information, log_partial_likelihood, score, HarmonicSchema, ModelSpec,
    ParamVector, SeriesFrame, SimScenario,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + u * (hi - lo)
}

/// Central finite differences of the log partial likelihood.
fn fd_score(spec: &ModelSpec, params: &ParamVector, frame: &SeriesFrame) -> Vec<f64> {
    let flat = params.to_flat();
    let mut out = Vec::with_capacity(flat.len());
    for j in 0..flat.len() {
        let h = 1e-6 * (1.0 + flat[j].abs());
        let mut up = flat.clone();
        up[j] += h;
        let mut dn = flat.clone();
        dn[j] -= h;
        let lu = log_partial_likelihood(
            spec,
            &ParamVector::from_flat(spec, &up).unwrap(),
            frame,
        )
        .unwrap();
        let ld = log_partial_likelihood(
            spec,
            &ParamVector::from_flat(spec, &dn).unwrap(),
            frame,
        )
        .unwrap();
        out.push((lu - ld) / (2.0 * h));
    }
    out
}

#[test]
fn score_matches_finite_differences_on_random_configs() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for case in 0..100 {
        let p = (rng.next_u64() % 3) as usize;
        let q = (rng.next_u64() % 3) as usize;
        let k = 1 + (rng.next_u64() % 2) as usize;
        let n = 30 + (rng.next_u64() % 31) as usize;
        let spec = ModelSpec::new(p, q, k, 0.1).unwrap();

        // counts need no relation to the model for the derivative identity
        let counts: Vec<u64> = (0..n).map(|_| rng.next_u64() % 7).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| uniform(&mut rng, -1.0, 1.0)).collect())
            .collect();
        let frame = SeriesFrame::new(counts, rows).unwrap();

        let params = ParamVector::new(
            (0..k).map(|_| uniform(&mut rng, -0.5, 0.5)).collect(),
            (0..p).map(|_| uniform(&mut rng, -0.4, 0.4)).collect(),
            (0..q).map(|_| uniform(&mut rng, -0.4, 0.4)).collect(),
        );

        let exact = score(&spec, &params, &frame).unwrap();
        let approx = fd_score(&spec, &params, &frame);
        for j in 0..exact.len() {
            let err = (exact[j] - approx[j]).abs();
            let scale = exact[j].abs().max(1.0);
            assert!(
                err <= 1e-5 * scale,
                "case {case} (p={p}, q={q}, k={k}, n={n}) coord {j}: {} vs {}",
                exact[j],
                approx[j]
            );
        }
    }
}

#[test]
fn information_matches_monte_carlo_hessian() {
    // GARMA(5,0) on the six-column harmonic design; the average observed
    // information (negative FD Hessian of the score) over replicates should
    // agree with the average reported G at the generating parameters.
    let spec = ModelSpec::new(5, 0, 6, 0.1).unwrap();
    let params = ParamVector::new(
        vec![0.5, 0.002, 0.3, -0.3, 0.2, 0.2],
        vec![0.3, -0.2, 0.1, -0.1, 0.2],
        vec![],
    );
    let schema = HarmonicSchema::new(vec![12, 6], true, 1.0).unwrap();
    let scn = SimScenario::new(spec.clone(), params.clone(), schema, 100, 99).unwrap();

    let d = params.len();
    let reps = 200;
    let mut hess_sum = vec![0.0; d * d];
    let mut info_sum = vec![0.0; d * d];
    let flat = params.to_flat();

    for frame in garma_core::replicate(&scn, reps).unwrap() {
        let info = conditional_information(&spec, &params, &frame).unwrap();
        for i in 0..d {
            for j in 0..d {
                info_sum[i * d + j] += info.get(i, j);
            }
        }
        // Hessian column j from central differences of the exact score
        for j in 0..d {
            let h = 1e-5 * (1.0 + flat[j].abs());
            let mut up = flat.clone();
            up[j] += h;
            let mut dn = flat.clone();
            dn[j] -= h;
            let su = score(&spec, &ParamVector::from_flat(&spec, &up).unwrap(), &frame).unwrap();
            let sd = score(&spec, &ParamVector::from_flat(&spec, &dn).unwrap(), &frame).unwrap();
            for i in 0..d {
                hess_sum[i * d + j] += -(su[i] - sd[i]) / (2.0 * h);
            }
        }
    }

    let scale = (0..d).map(|i| info_sum[i * d + i]).fold(0.0f64, f64::max) / reps as f64;
    for i in 0..d {
        for j in 0..d {
            let a = info_sum[i * d + j] / reps as f64;
            let b = hess_sum[i * d + j] / reps as f64;
            // 10% per entry, with an absolute floor because near-zero
            // off-diagonal entries carry only Monte Carlo noise
            let tol = 0.10 * a.abs().max(b.abs()).max(0.02 * scale);
            assert!((a - b).abs() <= tol, "entry ({i},{j}): G={a}, -H={b}");
        }
    }
}
