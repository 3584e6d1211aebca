//! Experiment configuration.
//!
//! A config is one TOML file (JSON is accepted too). Fields left out are
//! filled with per-experiment defaults by [`ExperimentConfig::resolved`]; the
//! resolved config is what a run embeds in its report, so re-running from the
//! embedded copy reproduces the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::negpower::ProbeShape;
use crate::quadrature::default_resolution;
use crate::weights::{ConvexProfile, RadialWeight};

/// A weight selected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightChoice {
    Zero,
    Quadratic,
    CoshMinusOne,
    FlatShoulder { r0: f64 },
    Power { p: f64 },
}

impl WeightChoice {
    pub fn profile(&self) -> Result<ConvexProfile> {
        Ok(match self {
            Self::Zero => ConvexProfile::Zero,
            Self::Quadratic => ConvexProfile::Quadratic,
            Self::CoshMinusOne => ConvexProfile::CoshMinusOne,
            Self::FlatShoulder { r0 } => ConvexProfile::flat_shoulder(*r0)?,
            Self::Power { p } => {
                return Err(LabError::Config(format!(
                    "power weight p={p} is not of the form e^w with w convex"
                )))
            }
        })
    }

    pub fn weight(&self) -> Result<RadialWeight> {
        Ok(match self {
            Self::Power { p } => RadialWeight::power(*p),
            other => RadialWeight::exp_convex(other.profile()?),
        })
    }
}

/// Everything a run needs. `None` means "use the experiment's default".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightChoice>,
    /// Weights for grid experiments (`taylor-identities`, `weight-audit`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<WeightChoice>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Dimensions for grid experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub seed: u64,
    /// Number of seeded samples (perturbations, sets, descents).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalized: Option<PenalizedConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negpower: Option<NegpowerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub eps: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub eccentricities: Vec<f64>,
    pub r_values: Vec<f64>,
    pub delta: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Sphere-rule resolution (points per circle for `n = 2`, Gauss order
    /// for `n = 3`).
    pub resolution: usize,
    pub angular_order: usize,
    pub angular_panels: usize,
    pub radial_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Highest harmonic degree.
    pub max_degree: usize,
    /// Target `max(sup|u|, sup|∇_τ u|)`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenalizedConfig {
    pub alpha: f64,
    /// `Λ₁`; thresholds are used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    pub descents: usize,
    pub steps: usize,
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NegpowerConfig {
    pub p: f64,
    pub alpha: f64,
    /// Number of balls `N`.
    pub count: usize,
    pub mc_samples: usize,
    pub ci_target: f64,
    pub delta_max: f64,
    /// Number of balls whose perimeter is checked by quadrature.
    pub check_balls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeShape>,
}

/// Names accepted by [`crate::runner::run`].
pub const EXPERIMENTS: [&str; 10] = [
    "fuglede",
    "taylor-identities",
    "degenerate-ratio",
    "ellipsoid-sharpness",
    "penalized-min",
    "profile-checks",
    "negpower-deficit",
    "counterexample",
    "divergence-probe",
    "weight-audit",
];

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            seed: 1,
            ..Default::default()
        }
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fills every missing field with the experiment's default.
    pub fn resolved(&self) -> Result<Self> {
        let name = self.experiment.as_str();
        if !EXPERIMENTS.contains(&name) {
            return Err(LabError::UnknownExperiment(self.experiment.clone()));
        }
        let mut c = self.clone();
        let default_weight = match name {
            "degenerate-ratio" => WeightChoice::FlatShoulder { r0: 1.0 },
            "negpower-deficit" | "counterexample" | "divergence-probe" => WeightChoice::Power { p: -4.0 },
            _ => WeightChoice::Quadratic,
        };
        c.weight.get_or_insert(default_weight);
        if let Some(WeightChoice::Power { p }) = &c.weight {
            let neg = c.negpower.get_or_insert_with(Default::default);
            if neg.p == 0.0 {
                neg.p = *p;
            }
        }
        c.n.get_or_insert(2);
        c.r.get_or_insert(1.0);
        let n = c.n.unwrap_or(2);
        match name {
            "taylor-identities" => {
                c.weights.get_or_insert(vec![WeightChoice::Quadratic, WeightChoice::CoshMinusOne]);
                c.dims.get_or_insert(vec![2, 3]);
            }
            "weight-audit" => {
                c.weights.get_or_insert(vec![
                    WeightChoice::Zero,
                    WeightChoice::Quadratic,
                    WeightChoice::CoshMinusOne,
                    WeightChoice::FlatShoulder { r0: 1.0 },
                ]);
            }
            _ => {}
        }
        let samples = match name {
            "fuglede" => 50,
            "penalized-min" | "negpower-deficit" | "profile-checks" => 100,
            _ => 0,
        };
        c.samples.get_or_insert(samples);

        let scan = c.scan.get_or_insert_with(Default::default);
        let fill = |v: &mut Vec<f64>, d: &[f64]| {
            if v.is_empty() {
                v.extend_from_slice(d);
            }
        };
        match name {
            "fuglede" | "negpower-deficit" => fill(&mut scan.amplitudes, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]),
            "degenerate-ratio" => fill(&mut scan.eps, &[0.1, 0.05, 0.02, 0.01]),
            "ellipsoid-sharpness" => {
                fill(&mut scan.eccentricities, &[0.0, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625])
            }
            "counterexample" => {
                fill(&mut scan.r_values, &[1e-1, 1e-2, 1e-3]);
                fill(&mut scan.rho, &[0.1, 0.01]);
            }
            "divergence-probe" => fill(&mut scan.delta, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4]),
            "taylor-identities" => fill(&mut scan.r_values, &[0.5, 1.0, 2.0]),
            _ => {}
        }

        let q = c.quadrature.get_or_insert_with(Default::default);
        if q.resolution == 0 {
            // the descent re-evaluates J many times per step
            q.resolution = if name == "penalized-min" && n == 2 { 128 } else { default_resolution(n) };
        }
        if q.angular_order == 0 {
            q.angular_order = 32;
        }
        if q.angular_panels == 0 {
            q.angular_panels = 8;
        }
        if q.radial_order == 0 {
            q.radial_order = 32;
        }

        if matches!(name, "fuglede" | "negpower-deficit" | "penalized-min") {
            let p = c.perturbation.get_or_insert_with(Default::default);
            if p.max_degree == 0 {
                p.max_degree = if name == "penalized-min" { 8 } else { 6 };
            }
            if p.amplitude == 0.0 {
                p.amplitude = if name == "penalized-min" { 5e-2 } else { 1e-2 };
            }
        }
        if name == "penalized-min" {
            let p = c.penalized.get_or_insert_with(Default::default);
            if p.descents == 0 {
                p.descents = 10;
            }
            if p.steps == 0 {
                p.steps = 2000;
            }
            if p.step_size == 0.0 {
                p.step_size = 1e-2;
            }
        }
        if matches!(name, "negpower-deficit" | "counterexample" | "divergence-probe") {
            let g = c.negpower.get_or_insert_with(Default::default);
            if g.p == 0.0 {
                g.p = -4.0;
            }
            if g.alpha == 0.0 {
                g.alpha = 8.0;
            }
            if g.count == 0 {
                g.count = 200;
            }
            if g.mc_samples == 0 {
                g.mc_samples = 1_000_000;
            }
            if g.ci_target == 0.0 {
                g.ci_target = 1e-2;
            }
            if g.delta_max == 0.0 {
                g.delta_max = 0.5;
            }
            if g.check_balls == 0 {
                g.check_balls = 20;
            }
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(2)
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(1.0)
    }

    pub fn scan(&self) -> ScanConfig {
        self.scan.clone().unwrap_or_default()
    }
}
