//! Built-in simulation scenarios and the JSON scenario file format.

use anyhow::{bail, Result};
use garma_core::{HarmonicSchema, ModelSpec, ParamVector, SimScenario};
use serde::{Deserialize, Serialize};

/// Seasonal regression used by both built-in simulation models:
/// intercept, linear trend, and harmonic pairs at periods 12 and 6.
pub fn trend_harmonic_schema() -> HarmonicSchema {
    HarmonicSchema::new(vec![12, 6], true, 1.0).expect("static schema")
}

/// Autoregressive model of order 5 on the seasonal regression.
pub fn model1(n: usize, seed: u64) -> SimScenario {
    let spec = ModelSpec::new(5, 0, 6, 0.1).expect("static spec");
    let params = ParamVector::new(
        vec![0.2, 0.001, 0.5, -0.5, 0.6, 0.7],
        vec![0.5, -0.6, 0.4, -0.6, 0.5],
        vec![],
    );
    SimScenario::new(spec, params, trend_harmonic_schema(), n, seed).expect("static scenario")
}

/// Moving-average model of order 2 on the seasonal regression.
pub fn model2(n: usize, seed: u64) -> SimScenario {
    let spec = ModelSpec::new(0, 2, 6, 0.1).expect("static spec");
    let params = ParamVector::new(
        vec![0.2, 0.01, 0.4, 0.5, 0.5, 0.5],
        vec![],
        vec![-0.5, 0.6],
    );
    SimScenario::new(spec, params, trend_harmonic_schema(), n, seed).expect("static scenario")
}

/// Moving-average model of order 5 whose lag-5 coefficient is small but
/// nonzero; dropping the tail lags looks harmless and is not.
pub fn robustness_truth(n: usize, seed: u64) -> SimScenario {
    let spec = ModelSpec::new(0, 5, 6, 0.1).expect("static spec");
    let params = ParamVector::new(
        vec![0.2, 0.01, 0.4, 0.5, 0.5, 0.5],
        vec![],
        vec![-0.5, 0.6, 0.0, 0.0, 0.01],
    );
    SimScenario::new(spec, params, trend_harmonic_schema(), n, seed).expect("static scenario")
}

/// Covariates for the bundled polio series: intercept plus harmonic pairs at
/// periods 12 and 6, no trend term.
pub fn polio_schema() -> HarmonicSchema {
    HarmonicSchema::new(vec![12, 6], false, 1.0).expect("static schema")
}

pub fn polio_spec() -> ModelSpec {
    ModelSpec::new(0, 2, 5, 0.1).expect("static spec")
}

/// Report labels for the schema's columns, in column order.
pub fn schema_term_names(schema: &HarmonicSchema) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    if schema.include_trend {
        names.push("trend".into());
    }
    for p in &schema.periods {
        names.push(format!("cos{p}"));
        names.push(format!("sin{p}"));
    }
    names
}

pub fn by_name(name: &str, n: usize, seed: u64) -> Result<SimScenario> {
    match name {
        "1" | "model1" => Ok(model1(n, seed)),
        "2" | "model2" => Ok(model2(n, seed)),
        "robustness" => Ok(robustness_truth(n, seed)),
        other => bail!("unknown model `{other}`; expected 1, 2, or robustness"),
    }
}

/// On-disk scenario description accepted by `simulate --scenario`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub p: usize,
    pub q: usize,
    #[serde(default = "default_clip")]
    pub c: f64,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub periods: Vec<u32>,
    #[serde(default)]
    pub include_trend: bool,
    #[serde(default = "default_trend_scale")]
    pub trend_scale: f64,
    pub n: usize,
    pub seed: u64,
}

fn default_clip() -> f64 {
    0.1
}

fn default_trend_scale() -> f64 {
    1.0
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<SimScenario> {
        let schema = HarmonicSchema::new(self.periods.clone(), self.include_trend, self.trend_scale)?;
        let spec = ModelSpec::new(self.p, self.q, schema.dim(), self.c)?;
        if self.beta.len() != schema.dim() {
            bail!(
                "beta has {} entries but the schema produces {} covariates",
                self.beta.len(),
                schema.dim()
            );
        }
        let params = ParamVector::new(self.beta.clone(), self.phi.clone(), self.theta.clone());
        Ok(SimScenario::new(spec, params, schema, self.n, self.seed)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Ok(serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_scenarios_are_well_formed() {
        assert_eq!(model1(100, 1).spec.p, 5);
        assert_eq!(model2(100, 1).spec.q, 2);
        assert_eq!(robustness_truth(100, 1).params.theta.len(), 5);
        assert_eq!(polio_schema().dim(), polio_spec().k);
    }

    #[test]
    fn scenario_file_round_trips() {
        let file = ScenarioFile {
            p: 0,
            q: 2,
            c: 0.1,
            beta: vec![0.2, 0.01, 0.4, 0.5, 0.5, 0.5],
            phi: vec![],
            theta: vec![-0.5, 0.6],
            periods: vec![12, 6],
            include_trend: true,
            trend_scale: 1.0,
            n: 50,
            seed: 7,
        };
        let scn = file.to_scenario().unwrap();
        assert_eq!(scn.spec.k, 6);
        let json = serde_json::to_string(&file).unwrap();
        let back: ScenarioFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.beta, file.beta);
    }

    #[test]
    fn mismatched_beta_is_rejected() {
        let file = ScenarioFile {
            p: 0,
            q: 0,
            c: 0.1,
            beta: vec![0.2, 0.3],
            phi: vec![],
            theta: vec![],
            periods: vec![],
            include_trend: false,
            trend_scale: 1.0,
            n: 10,
            seed: 1,
        };
        assert!(file.to_scenario().is_err());
    }
}
