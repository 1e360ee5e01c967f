//! Run configuration, loaded from JSON and patched by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernel::Vector;
use crate::linesearch::{BroydenProvider, DirectionProvider, LinesearchConfig, ZeroDirection};
use crate::planner::PlanRequest;
use crate::problem::verify::Sampler;
use crate::problem::{instances, ProblemInstance};
use crate::solver::{StopCriteria, TieBreak};

/// Starting pair `(x^{-1}, x^0)`. Missing points are drawn from the seed;
/// a missing `x_minus1` copies `x0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartPoints {
    pub x0: Option<Vec<f64>>,
    pub x_minus1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Broyden,
    Zero,
}

impl std::str::FromStr for ProviderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "broyden" => Ok(ProviderKind::Broyden),
            "zero" => Ok(ProviderKind::Zero),
            other => Err(Error::Config(format!("unknown direction provider '{other}' (expected broyden or zero)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinesearchSection {
    pub enabled: bool,
    pub delta: f64,
    pub provider: ProviderKind,
    pub memory: usize,
    pub tau_min: f64,
    pub max_backtracks: usize,
}

impl Default for LinesearchSection {
    fn default() -> Self {
        let ls = LinesearchConfig::default();
        LinesearchSection {
            enabled: false,
            delta: ls.delta,
            provider: ProviderKind::Broyden,
            memory: 20,
            tau_min: ls.tau_min,
            max_backtracks: ls.max_backtracks,
        }
    }
}

impl LinesearchSection {
    pub fn config(&self) -> LinesearchConfig {
        LinesearchConfig { delta: self.delta, tau_min: self.tau_min, max_backtracks: self.max_backtracks }
    }

    pub fn provider(&self) -> Box<dyn DirectionProvider> {
        match self.provider {
            ProviderKind::Broyden => Box::new(BroydenProvider::new(self.memory)),
            ProviderKind::Zero => Box::new(ZeroDirection),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: String,
    pub instance_params: Value,
    /// Overrides the instance's kernel where the instance allows it.
    pub kernel: Option<String>,
    pub plan: PlanRequest,
    pub start: StartPoints,
    pub stop: StopCriteria,
    pub linesearch: LinesearchSection,
    pub output_dir: PathBuf,
    /// Trace and manifest file stem; defaults to the instance name.
    pub name: Option<String>,
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            instance: String::new(),
            instance_params: Value::Null,
            kernel: None,
            plan: PlanRequest::default(),
            start: StartPoints::default(),
            stop: StopCriteria::default(),
            linesearch: LinesearchSection::default(),
            output_dir: PathBuf::from("."),
            name: None,
            seed: 0,
            tie_break: TieBreak::default(),
        }
    }
}

impl RunConfig {
    pub fn for_instance(name: &str) -> Self {
        RunConfig { instance: name.to_string(), ..Default::default() }
    }

    /// Parse JSON; errors name the offending field path and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn basename(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.instance.clone())
    }

    /// Instance parameters with the kernel override folded in.
    pub fn effective_params(&self) -> Value {
        let mut params = match &self.instance_params {
            Value::Null => Value::Object(Default::default()),
            v => v.clone(),
        };
        if let (Some(k), Value::Object(map)) = (&self.kernel, &mut params) {
            map.insert("kernel".into(), Value::String(k.clone()));
        }
        params
    }

    pub fn build_instance(&self) -> Result<ProblemInstance> {
        if self.instance.is_empty() {
            return Err(Error::Config("no instance given".into()));
        }
        let p = instances::build(&self.instance, &self.effective_params()).map_err(|e| match (&self.kernel, e) {
            (Some(k), Error::Config(msg)) if msg.contains("kernel") => {
                Error::Config(format!("instance '{}' does not accept kernel '{k}': {msg}", self.instance))
            }
            (_, e) => e,
        })?;
        Ok(p)
    }

    /// Resolve `(x^{-1}, x^0)` for `p`.
    pub fn start_points(&self, p: &ProblemInstance) -> Result<(Vector, Vector)> {
        let check = |v: &Vec<f64>, what: &str| -> Result<Vector> {
            if v.len() != p.dimension {
                return Err(Error::Config(format!(
                    "start.{what} has {} entries, instance '{}' has dimension {}",
                    v.len(),
                    p.name,
                    p.dimension
                )));
            }
            Ok(Vector::from_column_slice(v))
        };
        let x0 = match &self.start.x0 {
            Some(v) => check(v, "x0")?,
            None => Sampler::new(p.dimension, 0.5 * p.sample_radius, self.seed).point(),
        };
        let xm = match &self.start.x_minus1 {
            Some(v) => check(v, "x_minus1")?,
            None => x0.clone(),
        };
        Ok((xm, x0))
    }
}
