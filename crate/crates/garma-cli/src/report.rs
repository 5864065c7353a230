//! Machine-readable reports. Serde keeps field order stable, so the
//! pretty-printed JSON is diffable in golden tests.

use std::io::Write;

use anyhow::Result;
use garma_core::{FittedModel, ForecastDistribution, HdrRegion};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub coefficients: Vec<CoefficientRow>,
    pub deviance: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn new(fitted: &FittedModel, n: usize, covariate_names: &[String]) -> Self {
        let mut names: Vec<String> = Vec::with_capacity(fitted.params.len());
        for j in 0..fitted.spec.k {
            names.push(
                covariate_names.get(j).cloned().unwrap_or_else(|| format!("beta[{j}]")),
            );
        }
        for j in 1..=fitted.spec.p {
            names.push(format!("phi[{j}]"));
        }
        for j in 1..=fitted.spec.q {
            names.push(format!("theta[{j}]"));
        }

        let flat = fitted.params.to_flat();
        let coefficients = names
            .into_iter()
            .zip(&flat)
            .enumerate()
            .map(|(j, (name, &estimate))| CoefficientRow {
                name,
                estimate,
                stderr: fitted.stderr.as_ref().map(|se| se[j]),
            })
            .collect();

        FitReport {
            p: fitted.spec.p,
            q: fitted.spec.q,
            n,
            coefficients,
            deviance: fitted.deviance,
            log_likelihood: fitted.log_likelihood,
            converged: fitted.converged,
            iterations: fitted.iterations,
            warnings: fitted.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn print_human(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "GARMA({},{}) fit on {} observations", self.p, self.q, self.n)?;
        writeln!(out, "{:<12} {:>12} {:>12}", "term", "estimate", "stderr")?;
        for row in &self.coefficients {
            match row.stderr {
                Some(se) => {
                    writeln!(out, "{:<12} {:>12.4} {:>12.4}", row.name, row.estimate, se)?
                }
                None => writeln!(out, "{:<12} {:>12.4} {:>12}", row.name, row.estimate, "-")?,
            }
        }
        writeln!(out, "deviance       {:.4}", self.deviance)?;
        writeln!(out, "log likelihood {:.4}", self.log_likelihood)?;
        writeln!(
            out,
            "converged      {} ({} iterations)",
            if self.converged { "yes" } else { "no" },
            self.iterations
        )?;
        for w in &self.warnings {
            writeln!(out, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub level: f64,
    pub members: Vec<u64>,
    pub attained_mass: f64,
}

impl From<&HdrRegion> for RegionReport {
    fn from(r: &HdrRegion) -> Self {
        RegionReport { level: r.level, members: r.members.clone(), attained_mass: r.attained_mass }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionReport {
    pub support_max: u64,
    pub probs: Vec<f64>,
    pub point: u64,
    pub regions: Vec<RegionReport>,
    pub warnings: Vec<String>,
}

impl DistributionReport {
    pub fn new(dist: &ForecastDistribution, point: u64, regions: &[HdrRegion]) -> Self {
        DistributionReport {
            support_max: dist.truncation_bound,
            probs: dist.probs().to_vec(),
            point,
            regions: regions.iter().map(RegionReport::from).collect(),
            warnings: dist.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastStepReport {
    pub step: usize,
    pub realized: Option<u64>,
    #[serde(flatten)]
    pub dist: DistributionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastReport {
    pub horizon: usize,
    pub steps: Vec<ForecastStepReport>,
    /// Root mean squared error of point forecasts against realized counts,
    /// present when every step had a realized value.
    pub rmse: Option<f64>,
}

/// One row per support point, for plotting.
pub fn write_forecast_csv(out: &mut dyn Write, report: &ForecastReport) -> Result<()> {
    writeln!(out, "step,y,prob,is_point,realized")?;
    for step in &report.steps {
        for (y, p) in step.dist.probs.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                step.step,
                y,
                p,
                (y as u64 == step.dist.point) as u8,
                step.realized.map_or(String::new(), |r| r.to_string()),
            )?;
        }
    }
    Ok(())
}
