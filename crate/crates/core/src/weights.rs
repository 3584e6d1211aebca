//! Radial densities and the admissibility audit for convex profiles.
//!
//! A [`ConvexProfile`] bundles `w` with its first three derivatives in closed
//! form. A [`RadialWeight`] is either `e^{w(t)}` for such a profile or a power
//! `t^p`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::report::ExperimentReport;

/// Absolute tolerance on negative second derivatives.
pub const TOL_CONVEX: f64 = 1e-12;
/// Relative tolerance for finite-difference derivative cross-checks.
pub const TOL_FD: f64 = 1e-5;
/// Step used by the finite-difference cross-check.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C2,
    C3,
}

/// Values `[w, w', w'', w''']` at a point.
pub type Jet = [f64; 4];

/// User supplied profile with its derivative bundle.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    pub smoothness: Smoothness,
    /// Points where some derivative up to the third may be non-smooth.
    pub breakpoints: Vec<f64>,
    jet: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
}

impl CustomProfile {
    pub fn new(
        name: impl Into<String>,
        smoothness: Smoothness,
        jet: impl Fn(f64) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            smoothness,
            breakpoints: Vec::new(),
            jet: Arc::new(jet),
        }
    }
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

/// An even convex function `w` given together with `w'`, `w''`, `w'''`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum ConvexProfile {
    /// `w ≡ 0`.
    Zero,
    /// `w(t) = t²`.
    Quadratic,
    /// `w(t) = cosh(t) − 1`.
    CoshMinusOne,
    /// `w(t) = max(|t| − r0, 0)^4`: flat on `[−r0, r0]`, `w''(r0) = 0`.
    FlatShoulder { r0: f64 },
    #[serde(skip)]
    Custom(CustomProfile),
}

impl ConvexProfile {
    /// Builds the flat-shoulder profile `max(|t| − r0, 0)^4`.
    pub fn flat_shoulder(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(LabError::Argument(format!(
                "flat shoulder radius must be positive, got {r0}"
            )));
        }
        Ok(Self::FlatShoulder { r0 })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Quadratic => "quadratic".into(),
            Self::CoshMinusOne => "cosh-minus-one".into(),
            Self::FlatShoulder { r0 } => format!("flat-shoulder(r0={r0})"),
            Self::Custom(c) => c.name.clone(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            Self::Custom(c) => c.smoothness,
            _ => Smoothness::C3,
        }
    }

    /// Points on `[0, ∞)` where the profile is not analytic.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::FlatShoulder { r0 } => vec![*r0],
            Self::Custom(c) => c.breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    /// `[w, w', w'', w''']` at `t`.
    pub fn jet(&self, t: f64) -> Jet {
        match self {
            Self::Zero => [0.0; 4],
            Self::Quadratic => [t * t, 2.0 * t, 2.0, 0.0],
            Self::CoshMinusOne => [t.cosh() - 1.0, t.sinh(), t.cosh(), t.sinh()],
            Self::FlatShoulder { r0 } => {
                let x = t.abs() - r0;
                if x <= 0.0 {
                    [0.0; 4]
                } else {
                    let s = t.signum();
                    [x.powi(4), s * 4.0 * x.powi(3), 12.0 * x * x, s * 24.0 * x]
                }
            }
            Self::Custom(c) => (c.jet)(t),
        }
    }

    pub fn w(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }

    pub fn dw(&self, t: f64) -> f64 {
        self.jet(t)[1]
    }

    pub fn d2w(&self, t: f64) -> f64 {
        self.jet(t)[2]
    }

    pub fn d3w(&self, t: f64) -> f64 {
        self.jet(t)[3]
    }
}

/// A radial density `W(t)` on `(0, ∞)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialWeight {
    ExpConvex { profile: ConvexProfile },
    Power { p: f64 },
}

impl RadialWeight {
    pub fn exp_convex(profile: ConvexProfile) -> Self {
        Self::ExpConvex { profile }
    }

    pub fn power(p: f64) -> Self {
        Self::Power { p }
    }

    /// Evaluates `W(t)`, checking the domain.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Self::ExpConvex { .. } if t < 0.0 || !t.is_finite() => Err(LabError::Domain(
                format!("exponential weight evaluated at t={t}"),
            )),
            Self::Power { p } if t <= 0.0 || !t.is_finite() => Err(LabError::Domain(format!(
                "power weight t^{p} requires t > 0, got t={t}"
            ))),
            _ => Ok(self.value(t)),
        }
    }

    /// `W(t)` without domain checks; callers guarantee `t > 0`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::ExpConvex { profile } => profile.w(t).exp(),
            Self::Power { p } => t.powf(*p),
        }
    }

    /// `W'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::ExpConvex { profile } => {
                let j = profile.jet(t);
                j[1] * j[0].exp()
            }
            Self::Power { p } => p * t.powf(p - 1.0),
        }
    }

    /// Logarithmic derivative `W'/W`, i.e. `w'` for exponential weights.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match self {
            Self::ExpConvex { profile } => profile.dw(t),
            Self::Power { p } => p / t,
        }
    }

    /// Second derivative of `log W`.
    pub fn log_second_derivative(&self, t: f64) -> f64 {
        match self {
            Self::ExpConvex { profile } => profile.d2w(t),
            Self::Power { p } => -p / (t * t),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::ExpConvex { profile } => profile.breakpoints(),
            Self::Power { .. } => Vec::new(),
        }
    }

    pub fn is_power(&self) -> bool {
        matches!(self, Self::Power { .. })
    }

    pub fn name(&self) -> String {
        match self {
            Self::ExpConvex { profile } => format!("exp({})", profile.name()),
            Self::Power { p } => format!("power(p={p})"),
        }
    }
}

/// Evaluates `W(t)`; see [`RadialWeight::eval`].
pub fn eval_weight(weight: &RadialWeight, t: f64) -> Result<f64> {
    weight.eval(t)
}

/// Flat-shoulder profile `w(t) = max(|t| − r0, 0)^4`.
pub fn make_flat_shoulder_profile(r0: f64) -> Result<ConvexProfile> {
    ConvexProfile::flat_shoulder(r0)
}

/// Audits evenness, convexity and derivative consistency of `w` on a grid.
pub fn check_admissible(w: &ConvexProfile, grid: &[f64]) -> Result<ExperimentReport> {
    if grid.is_empty() {
        return Err(LabError::Argument("admissibility grid is empty".into()));
    }
    let mut evenness: f64 = 0.0;
    let mut min_d2 = f64::INFINITY;
    let mut fd_first: f64 = 0.0;
    let mut fd_second: f64 = 0.0;
    let h = FD_STEP;
    for &t in grid {
        let j = w.jet(t);
        evenness = evenness.max((j[0] - w.w(-t)).abs());
        min_d2 = min_d2.min(j[2]);

        let (wp, wm) = (w.w(t + h), w.w(t - h));
        let d1 = (wp - wm) / (2.0 * h);
        let d2 = (wp - 2.0 * j[0] + wm) / (h * h);
        fd_first = fd_first.max((d1 - j[1]).abs() / j[1].abs().max(1.0));
        fd_second = fd_second.max((d2 - j[2]).abs() / j[2].abs().max(1.0));
    }
    let convexity_residual = (-min_d2).max(0.0);
    let fd_mismatch = fd_first.max(fd_second);

    let mut report = ExperimentReport::new("weight-audit");
    report.param("profile", w.name());
    report.param("grid_points", grid.len());
    report.scalar("max_evenness_residual", evenness, None);
    report.scalar("min_second_derivative", min_d2, None);
    report.scalar("convexity_residual", convexity_residual, None);
    report.scalar("max_fd_mismatch_first", fd_first, None);
    report.scalar("max_fd_mismatch_second", fd_second, None);
    report.verdict(
        "evenness",
        evenness <= TOL_CONVEX,
        format!("max |w(t) - w(-t)| = {evenness:.3e}"),
    );
    report.verdict(
        "convexity",
        min_d2 >= -TOL_CONVEX,
        format!("min w'' = {min_d2:.6e}, tolerance -{TOL_CONVEX:e}"),
    );
    report.verdict(
        "derivative_consistency",
        fd_mismatch <= TOL_FD,
        format!("max relative FD mismatch = {fd_mismatch:.3e}, tolerance {TOL_FD:e}"),
    );
    Ok(report)
}

/// Symmetric grid of `points` samples on `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / m as f64)
        .collect()
}
