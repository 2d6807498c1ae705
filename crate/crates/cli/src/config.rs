//! Run configuration: one TOML file with the model, numerics and per-command sections.

use std::path::Path;

use mosq_core::{ModelSpec, Numerics};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
}

/// Trajectories from each initial density up to `t_end` days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub w0: Vec<f64>,
    pub t_end: f64,
    /// Also integrate the model with period-averaged coefficients.
    #[serde(default)]
    pub averaged: bool,
}

/// Uniform grid of initial densities for tabulating `P` and its derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSection {
    pub w_min: f64,
    pub w_max: f64,
    pub points: usize,
}

/// Release-level sweep for the bifurcation diagram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub g0_min: f64,
    pub g0_max: f64,
    pub points: usize,
}

/// Forward limits of the seasonal and averaged models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub w0: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon_periods: usize,
}

fn default_horizon() -> usize {
    Numerics::default().max_periods
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be a positive number (got {v})"))
    }
}

fn densities(name: &str, w0: &[f64]) -> Result<(), String> {
    if w0.is_empty() {
        return Err(format!("{name} needs at least one initial density"));
    }
    match w0.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        Some(w) => Err(format!(
            "{name} contains {w}; densities must be finite and >= 0"
        )),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate().map_err(CliError::Config)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks the numerics and command sections; the model validates itself on load.
    pub fn validate(&self) -> Result<(), String> {
        let n = &self.numerics;
        positive("numerics.rtol", n.rtol)?;
        positive("numerics.atol", n.atol)?;
        positive("numerics.scan_rtol", n.scan_rtol)?;
        positive("numerics.root_rel", n.root_rel)?;
        positive("numerics.touch_rel", n.touch_rel)?;
        positive("numerics.omega_tol", n.omega_tol)?;
        if !(n.eps_crit >= 0.0 && n.tol_mult >= 0.0 && n.p2_deadband >= 0.0) {
            return Err("numerics dead-bands must be >= 0".into());
        }
        if n.scan_points < 4 {
            return Err(format!(
                "numerics.scan_points must be at least 4 (got {})",
                n.scan_points
            ));
        }
        if n.max_periods == 0 {
            return Err("numerics.max_periods must be at least 1".into());
        }
        if let Some(s) = &self.simulate {
            densities("simulate.w0", &s.w0)?;
            positive("simulate.t_end", s.t_end)?;
        }
        if let Some(p) = &self.poincare {
            if !(p.w_min >= 0.0 && p.w_max > p.w_min && p.points >= 2) {
                return Err(format!(
                    "poincare grid needs 0 <= w_min < w_max and points >= 2 (got [{}, {}], {})",
                    p.w_min, p.w_max, p.points
                ));
            }
        }
        if let Some(s) = &self.sweep {
            if !(s.g0_min >= 0.0 && s.g0_max > s.g0_min && s.points >= 2) {
                return Err(format!(
                    "sweep needs 0 <= g0_min < g0_max and points >= 2 (got [{}, {}], {})",
                    s.g0_min, s.g0_max, s.points
                ));
            }
        }
        if let Some(c) = &self.compare {
            densities("compare.w0", &c.w0)?;
            if c.horizon_periods == 0 {
                return Err("compare.horizon_periods must be at least 1".into());
            }
        }
        Ok(())
    }
}
