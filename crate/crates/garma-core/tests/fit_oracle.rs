//! Fit checks against an independent iteratively reweighted least squares
//! oracle (its own solver, no shared code) plus optimizer contracts.

use garma_core::{
    fit, log_partial_likelihood, replicate, score, simulate, FitOptions, HarmonicSchema,
    ModelSpec, ParamVector, SeriesFrame, SimScenario,
};

/// Gaussian elimination with partial pivoting; good enough for tiny systems.
fn solve_dense(a: &mut [f64], b: &mut [f64], d: usize) {
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i * d + col].abs().partial_cmp(&a[j * d + col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            for j in 0..d {
                a.swap(col * d + j, pivot * d + j);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..d {
            let f = a[row * d + col] / a[col * d + col];
            for j in col..d {
                a[row * d + j] -= f * a[col * d + j];
            }
            b[row] -= f * b[col];
        }
    }
    for row in (0..d).rev() {
        let mut v = b[row];
        for j in row + 1..d {
            v -= a[row * d + j] * b[j];
        }
        b[row] = v / a[row * d + row];
    }
}

/// Textbook Poisson IRLS with log link: working response
/// z = eta + (y - lambda)/lambda, weights lambda.
fn irls_poisson(frame: &SeriesFrame) -> Vec<f64> {
    let n = frame.len();
    let d = frame.covariate_dim();
    let mut beta = vec![0.0; d];
    for _ in 0..50 {
        let mut xtwx = vec![0.0; d * d];
        let mut xtwz = vec![0.0; d];
        for t in 0..n {
            let x = frame.row(t);
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let lam = eta.exp();
            let z = eta + (frame.count(t) as f64 - lam) / lam;
            for i in 0..d {
                for j in 0..d {
                    xtwx[i * d + j] += lam * x[i] * x[j];
                }
                xtwz[i] += lam * x[i] * z;
            }
        }
        let old = beta.clone();
        solve_dense(&mut xtwx, &mut xtwz, d);
        beta = xtwz;
        if beta.iter().zip(&old).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max) < 1e-12 {
            break;
        }
    }
    beta
}

fn poisson_regression_frame(n: usize, seed: u64) -> SeriesFrame {
    let spec = ModelSpec::new(0, 0, 3, 0.1).unwrap();
    let params = ParamVector::new(vec![1.0, 0.4, -0.3], vec![], vec![]);
    let schema = HarmonicSchema::seasonal(vec![12]).unwrap();
    simulate(&SimScenario::new(spec, params, schema, n, seed).unwrap()).unwrap()
}

#[test]
fn static_fit_agrees_with_irls_oracle() {
    let frame = poisson_regression_frame(120, 5);
    let spec = ModelSpec::new(0, 0, 3, 0.1).unwrap();
    let fitted = fit(&spec, &frame, &FitOptions::default()).unwrap();
    assert!(fitted.converged);

    let oracle = irls_poisson(&frame);
    for j in 0..3 {
        assert!(
            (fitted.params.beta[j] - oracle[j]).abs() <= 1e-6,
            "beta[{j}]: {} vs {}",
            fitted.params.beta[j],
            oracle[j]
        );
    }
}

#[test]
fn intercept_recovers_log_mean_on_long_series() {
    let spec = ModelSpec::new(0, 0, 1, 0.1).unwrap();
    let params = ParamVector::new(vec![3.0f64.ln()], vec![], vec![]);
    let schema = HarmonicSchema::seasonal(vec![]).unwrap();
    let frame =
        simulate(&SimScenario::new(spec.clone(), params, schema, 10_000, 42).unwrap()).unwrap();

    let fitted = fit(&spec, &frame, &FitOptions::default()).unwrap();
    let mean = frame.counts().iter().sum::<u64>() as f64 / frame.len() as f64;
    assert!((fitted.params.beta[0] - mean.ln()).abs() <= 1e-9);

    let se = 1.0 / (frame.len() as f64 * mean).sqrt();
    assert!((fitted.params.beta[0] - 3.0f64.ln()).abs() <= 3.0 * se);
}

#[test]
fn column_permutation_permutes_estimates() {
    let frame = poisson_regression_frame(100, 9);
    let spec = ModelSpec::new(0, 0, 3, 0.1).unwrap();
    let base = fit(&spec, &frame, &FitOptions::default()).unwrap();

    let permuted_rows: Vec<Vec<f64>> =
        (0..frame.len()).map(|t| vec![frame.row(t)[2], frame.row(t)[0], frame.row(t)[1]]).collect();
    let permuted = SeriesFrame::new(frame.counts().to_vec(), permuted_rows).unwrap();
    let refit = fit(&spec, &permuted, &FitOptions::default()).unwrap();

    let want = [base.params.beta[2], base.params.beta[0], base.params.beta[1]];
    for j in 0..3 {
        assert!((refit.params.beta[j] - want[j]).abs() <= 1e-7);
    }
}

#[test]
fn fit_never_lands_below_its_starting_point() {
    let spec = ModelSpec::new(1, 1, 3, 0.1).unwrap();
    let gen = ParamVector::new(vec![0.8, 0.3, -0.2], vec![0.3], vec![-0.2]);
    let schema = HarmonicSchema::seasonal(vec![12]).unwrap();
    let frame =
        simulate(&SimScenario::new(spec.clone(), gen, schema, 90, 13).unwrap()).unwrap();

    let starts = [
        ParamVector::zeros(&spec),
        ParamVector::new(vec![0.5, 0.0, 0.0], vec![0.2], vec![0.2]),
        ParamVector::new(vec![-0.5, 0.3, 0.3], vec![-0.3], vec![0.1]),
    ];
    for init in starts {
        let ll0 = log_partial_likelihood(&spec, &init, &frame).unwrap();
        let fitted = fit(&spec, &frame, &FitOptions::default().warm_start(init)).unwrap();
        assert!(fitted.log_likelihood >= ll0 - 1e-10);
        if fitted.converged {
            let s = score(&spec, &fitted.params, &frame).unwrap();
            assert!(s.iter().all(|v| v.abs() <= 1e-8));
        }
    }
}

#[test]
fn doubling_the_sample_shrinks_standard_errors() {
    let spec = ModelSpec::new(0, 2, 3, 0.1).unwrap();
    let gen = ParamVector::new(vec![0.8, 0.4, 0.3], vec![], vec![-0.3, 0.2]);
    let schema = HarmonicSchema::seasonal(vec![12]).unwrap();
    let d = 5;

    let mut med_short = vec![Vec::new(); d];
    let mut med_long = vec![Vec::new(); d];
    for (n, store) in [(80usize, &mut med_short), (160usize, &mut med_long)] {
        let scn = SimScenario::new(spec.clone(), gen.clone(), schema.clone(), n, 77).unwrap();
        for frame in replicate(&scn, 100).unwrap() {
            let fitted = fit(&spec, &frame, &FitOptions::default()).unwrap();
            if let Some(se) = fitted.stderr {
                for j in 0..d {
                    store[j].push(se[j]);
                }
            }
        }
    }

    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    for j in 0..d {
        assert!(med_short[j].len() >= 90, "too many degenerate fits at n=80");
        let short = median(&mut med_short[j]);
        let long = median(&mut med_long[j]);
        assert!(long < short, "coord {j}: stderr {short} at n=80, {long} at n=160");
    }
}
