use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Scenario, MIN_FIT_SAMPLES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::Below => value < threshold,
            Self::AtMost => value <= threshold,
            Self::AtLeast => value >= threshold,
            Self::Above => value > threshold,
        }
    }
}

/// One measured quantity compared against its threshold. NaN never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Self { name: name.into(), value, relation, threshold, passed: relation.holds(value, threshold) }
    }
}

/// Least-squares line through `(log t, log error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn decay_fit(times: &[f64], errors: &[f64]) -> Result<DecayFit> {
    if times.len() != errors.len() || times.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} paired samples (got {} times, {} errors)",
            times.len(),
            errors.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput(format!("decay fit needs positive finite errors, got {e}")));
    }
    if times[0] <= 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidInput("decay fit needs positive, strictly increasing times".into()));
    }
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayFit { times: times.to_vec(), errors: errors.to_vec(), slope, intercept, r_squared })
}

/// Machine-readable outcome of a command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub measurements: BTreeMap<String, f64>,
    pub decay_fit: Option<DecayFit>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub runtime_s: f64,
}

impl Report {
    pub fn new(command: &str, scenario: Option<Scenario>, seed: u64) -> Self {
        Self { command: command.into(), scenario, seed, ..Self::default() }
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, relation: Relation, threshold: f64) {
        self.checks.push(Check::new(name, value, relation, threshold));
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Checks whose name is `prefix` or starts with `prefix.`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks
            .iter()
            .filter(move |c| c.name == prefix || c.name.strip_prefix(prefix).is_some_and(|r| r.starts_with('.')))
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(dir) = path.as_ref().parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
