//! Flat `key = value` configuration files for runs and sweeps.
//!
//! The format is deliberately plain: one `key = value` pair per line, `#`
//! starts a comment, blank lines are ignored. Unknown, duplicate, missing,
//! and malformed keys are all reported by name.

use std::collections::BTreeMap;

use cbf_core::hocbf::LambdaVector;
use cbf_core::plant::{ObstacleSpec, RobotState};
use cbf_core::qp::{InputBounds, Penalties, TrackingReferences};
use cbf_core::sim::{Approach, SimConfig};

use crate::error::CliError;

/// Parsed `key = value` pairs with take-style accessors, so that leftover
/// (unknown) keys can be reported after the expected ones are consumed.
#[derive(Debug)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn take_str(&mut self, key: &str) -> Result<String, CliError> {
        self.values
            .remove(key)
            .ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    pub fn take_f64(&mut self, key: &str) -> Result<f64, CliError> {
        let raw = self.take_str(key)?;
        raw.parse::<f64>()
            .map_err(|_| CliError::Config(format!("key `{key}`: `{raw}` is not a number")))
    }

    /// Like [`Self::take_f64`] but with a default when the key is absent.
    pub fn take_f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("key `{key}`: `{raw}` is not a number"))),
        }
    }

    /// Fails if any keys were never consumed, naming them.
    pub fn finish(self) -> Result<(), CliError> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
            Err(CliError::Config(format!(
                "unknown key(s): {}",
                keys.join(", ")
            )))
        }
    }
}

/// Everything a run or sweep shares: plant, scenario, objective, and
/// timing.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConfig {
    pub obstacle: ObstacleSpec,
    pub initial_state: RobotState,
    pub references: TrackingReferences,
    pub penalties: Penalties,
    pub dt: f64,
    pub duration: f64,
    pub bounds: InputBounds,
}

fn take_base(kv: &mut KeyValues) -> Result<BaseConfig, CliError> {
    let obstacle = ObstacleSpec {
        x_obs: kv.take_f64("obs_x")?,
        y_obs: kv.take_f64("obs_y")?,
        r_obs: kv.take_f64("obs_radius")?,
        r_robot: kv.take_f64("robot_radius")?,
    };
    let initial_state = RobotState {
        x: kv.take_f64("init_x")?,
        y: kv.take_f64("init_y")?,
        vx: kv.take_f64("init_vx")?,
        vy: kv.take_f64("init_vy")?,
    };
    let references = TrackingReferences {
        y_ref: kv.take_f64("y_ref")?,
        vx_ref: kv.take_f64("vx_ref")?,
        vy_ref: kv.take_f64("vy_ref")?,
    };
    let penalties = Penalties {
        p_vx: kv.take_f64("p_vx")?,
        p_vy: kv.take_f64("p_vy")?,
        p_y: kv.take_f64("p_y")?,
    };
    let bounds = InputBounds::symmetric(kv.take_f64("u_min")?, kv.take_f64("u_max")?);
    Ok(BaseConfig {
        obstacle,
        initial_state,
        references,
        penalties,
        dt: kv.take_f64("dt")?,
        duration: kv.take_f64("duration")?,
        bounds,
    })
}

impl BaseConfig {
    pub fn with_approach(&self, approach: Approach) -> SimConfig {
        SimConfig {
            obstacle: self.obstacle,
            initial_state: self.initial_state,
            references: self.references,
            penalties: self.penalties,
            dt: self.dt,
            duration: self.duration,
            approach,
            bounds: self.bounds,
        }
    }
}

/// Parses a single-run configuration, validating it fully.
pub fn sim_config_from_text(text: &str) -> Result<SimConfig, CliError> {
    let mut kv = KeyValues::parse(text)?;
    let base = take_base(&mut kv)?;
    let approach = match kv.take_str("approach")?.as_str() {
        "hocbf" => {
            let lambda1 = kv.take_f64("lambda1")?;
            let lambda2 = kv.take_f64("lambda2")?;
            let lambdas = LambdaVector::new(vec![lambda1, lambda2])
                .map_err(|e| CliError::Config(e.to_string()))?;
            Approach::Hocbf { lambdas }
        }
        "ttcbf" => Approach::Ttcbf {
            lambda1: kv.take_f64("lambda1")?,
            gamma: kv.take_f64_or("gamma", 0.0)?,
        },
        other => {
            return Err(CliError::Config(format!(
                "key `approach`: `{other}` must be `hocbf` or `ttcbf`"
            )))
        }
    };
    kv.finish()?;
    let config = base.with_approach(approach);
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// An inclusive arithmetic grid `min, min + step, …` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn validate(&self, name: &str) -> Result<(), CliError> {
        if !self.min.is_finite() || !self.max.is_finite() || !self.step.is_finite() {
            return Err(CliError::Config(format!("{name} range must be finite")));
        }
        if self.step <= 0.0 {
            return Err(CliError::Config(format!(
                "{name}_step = {} must be strictly positive",
                self.step
            )));
        }
        if self.min > self.max {
            return Err(CliError::Config(format!(
                "{name}_min = {} exceeds {name}_max = {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Grid values `min + i·step`. The count uses a small epsilon so that
    /// decimal endpoints (e.g. 10 from 2.1 by 0.1) stay on the grid despite
    /// binary rounding.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Which family of filters a sweep walks through.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepApproach {
    Hocbf {
        lambda1: GridRange,
        lambda2: GridRange,
    },
    Ttcbf {
        lambda1: GridRange,
        gamma: f64,
    },
}

/// A parsed sweep specification: shared scenario plus parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: BaseConfig,
    pub approach: SweepApproach,
}

/// Parses a sweep specification: the base keys of a run configuration plus
/// `lambda1_min/max/step` (and `lambda2_min/max/step` for the chain
/// approach, or an optional fixed `gamma` for the truncated-Taylor one).
pub fn sweep_spec_from_text(text: &str) -> Result<SweepSpec, CliError> {
    let mut kv = KeyValues::parse(text)?;
    let base = take_base(&mut kv)?;
    let approach = match kv.take_str("approach")?.as_str() {
        "hocbf" => {
            let lambda1 = GridRange {
                min: kv.take_f64("lambda1_min")?,
                max: kv.take_f64("lambda1_max")?,
                step: kv.take_f64("lambda1_step")?,
            };
            let lambda2 = GridRange {
                min: kv.take_f64("lambda2_min")?,
                max: kv.take_f64("lambda2_max")?,
                step: kv.take_f64("lambda2_step")?,
            };
            lambda1.validate("lambda1")?;
            lambda2.validate("lambda2")?;
            for (name, range) in [("lambda1", &lambda1), ("lambda2", &lambda2)] {
                if range.min <= 0.0 {
                    return Err(CliError::Config(format!(
                        "{name}_min = {} must be strictly positive",
                        range.min
                    )));
                }
            }
            SweepApproach::Hocbf { lambda1, lambda2 }
        }
        "ttcbf" => {
            let lambda1 = GridRange {
                min: kv.take_f64("lambda1_min")?,
                max: kv.take_f64("lambda1_max")?,
                step: kv.take_f64("lambda1_step")?,
            };
            lambda1.validate("lambda1")?;
            if !(lambda1.min > 0.0 && lambda1.max <= 1.0) {
                return Err(CliError::Config(format!(
                    "lambda1 grid [{}, {}] must lie inside (0, 1]",
                    lambda1.min, lambda1.max
                )));
            }
            SweepApproach::Ttcbf {
                lambda1,
                gamma: kv.take_f64_or("gamma", 0.0)?,
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "key `approach`: `{other}` must be `hocbf` or `ttcbf`"
            )))
        }
    };
    kv.finish()?;
    Ok(SweepSpec { base, approach })
}
