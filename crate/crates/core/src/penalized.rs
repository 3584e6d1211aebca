//! Penalized functionals
//! `J(E) = P_w(E) + Λ₁ ||E|_w − |B_r|_w| + Λ₂ ||E △ B_r|_w − α|`
//! over nearly spherical sets, their thresholds, and a descent in harmonic
//! coefficient space.
//!
//! All terms are sphere-rule quadratures, including the symmetric difference
//! (node-wise `|∫_r^{R} s^{n−1} W|`), so `J` is one consistent discrete
//! functional with `J(B_r) = P_w(B_r)` to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harmonics::{eval_all, HarmonicCoefficients};
use crate::measures::radial_mass;
use crate::quadrature::SphereRule;
use crate::report::Table;
use crate::shapes::NearlySphericalSet;
use crate::unit_sphere_area;
use crate::weights::{ConvexProfile, RadialWeight};

/// Smoothing for `|x| ≈ √(x² + δ²)` during descent.
pub const DEFAULT_DELTA: f64 = 1e-8;
/// Default truncation degree for minimization.
pub const DEFAULT_DEGREE: usize = 8;
/// Step and tolerance of the one-sided stationarity test.
pub const STATIONARY_STEP: f64 = 1e-5;
pub const STATIONARY_TOL: f64 = 1e-6;
/// Shapes with `sup|u|` at or above this are rejected during descent.
pub const MAX_SUP_U: f64 = 0.9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenalizedFunctional {
    pub w: ConvexProfile,
    pub r: f64,
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
}

/// `(Λ₁_min, Λ₂_min) = (n − 1 + r w'(r), 2(4(n+1)/r + w'(2r)))`.
pub fn thresholds(w: &ConvexProfile, r: f64, n: usize) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(LabError::Argument(format!("radius must be positive, got {r}")));
    }
    let m = n as f64;
    Ok((m - 1.0 + r * w.dw(r), 2.0 * (4.0 * (m + 1.0) / r + w.dw(2.0 * r))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAudit {
    pub lambda1_min: f64,
    pub lambda2_min: f64,
    pub lambda1_ok: bool,
    pub lambda2_ok: bool,
}

impl ThresholdAudit {
    pub fn satisfied(&self) -> bool {
        self.lambda1_ok && self.lambda2_ok
    }
}

impl PenalizedFunctional {
    pub fn new(w: ConvexProfile, r: f64, n: usize, lambda1: f64, lambda2: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0) || !(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(alpha >= 0.0) {
            return Err(LabError::Argument(format!(
                "penalized functional needs r > 0 and nonnegative Λ₁, Λ₂, α (got r={r}, {lambda1}, {lambda2}, {alpha})"
            )));
        }
        Ok(Self {
            w,
            r,
            n,
            lambda1,
            lambda2,
            alpha,
        })
    }

    /// The functional with `Λ₁, Λ₂` set to their thresholds.
    pub fn at_thresholds(w: ConvexProfile, r: f64, n: usize, alpha: f64) -> Result<Self> {
        let (l1, l2) = thresholds(&w, r, n)?;
        Self::new(w, r, n, l1, l2, alpha)
    }

    pub fn audit(&self) -> Result<ThresholdAudit> {
        let (l1, l2) = thresholds(&self.w, self.r, self.n)?;
        Ok(ThresholdAudit {
            lambda1_min: l1,
            lambda2_min: l2,
            lambda1_ok: self.lambda1 >= l1,
            lambda2_ok: self.lambda2 >= l2,
        })
    }

    fn weight(&self) -> RadialWeight {
        RadialWeight::exp_convex(self.w.clone())
    }

    /// `f(ϱ) + Λ₂ ||Φ(ϱ) − Φ(r)| − α|` for the centered ball `B_ϱ`, where
    /// `f(ϱ) = n ω_n ϱ^{n−1} e^{w(ϱ)} + n ω_n Λ₁ |∫_ϱ^r e^{w(t)} t^{n−1} dt|`.
    pub fn radial_reduction(&self, rho: f64) -> Result<f64> {
        let area = unit_sphere_area(self.n);
        let m = radial_mass(&self.weight(), self.n, rho, self.r)?.abs();
        Ok(area * rho.powi(self.n as i32 - 1) * self.w.w(rho).exp()
            + area * self.lambda1 * m
            + self.lambda2 * (area * m - self.alpha).abs())
    }
}

/// Basis values and tangential gradients at the rule nodes, plus the rule.
struct Evaluator<'a> {
    f: &'a PenalizedFunctional,
    rule: &'a SphereRule,
    count: usize,
    values: Vec<f64>,
    grads: Vec<[f64; 3]>,
    weight: RadialWeight,
}

impl<'a> Evaluator<'a> {
    fn new(f: &'a PenalizedFunctional, max_degree: usize, rule: &'a SphereRule) -> Result<Self> {
        if rule.n != f.n {
            return Err(LabError::Argument(format!(
                "rule dimension {} does not match functional dimension {}",
                rule.n, f.n
            )));
        }
        let count = HarmonicCoefficients::zeros(f.n, max_degree)?.as_slice().len();
        let mut values = vec![0.0; count * rule.len()];
        let mut grads = vec![[0.0; 3]; count * rule.len()];
        for (j, x) in rule.nodes.iter().enumerate() {
            let span = j * count..(j + 1) * count;
            eval_all(f.n, max_degree, x, &mut values[span.clone()], Some(&mut grads[span]));
        }
        Ok(Self {
            f,
            rule,
            count,
            values,
            grads,
            weight: f.weight(),
        })
    }

    /// `J` at coefficients `a`; `delta = None` uses the exact absolute value.
    /// Returns `+∞` for shapes with `sup|u| ≥ MAX_SUP_U`.
    fn objective(&self, a: &[f64], delta: Option<f64>) -> Result<(f64, f64)> {
        let abs = |x: f64| match delta {
            Some(d) => (x * x + d * d).sqrt(),
            None => x.abs(),
        };
        let f = self.f;
        let n = f.n as i32;
        let mut perim = 0.0;
        let mut vol = 0.0;
        let mut sym = 0.0;
        let mut sup = 0.0f64;
        for j in 0..self.rule.len() {
            let base = j * self.count;
            let mut u = 0.0;
            let mut g = [0.0; 3];
            for (i, c) in a.iter().enumerate() {
                if *c != 0.0 {
                    u += c * self.values[base + i];
                    let gi = self.grads[base + i];
                    g[0] += c * gi[0];
                    g[1] += c * gi[1];
                    g[2] += c * gi[2];
                }
            }
            sup = sup.max(u.abs());
            if u.abs() >= MAX_SUP_U {
                return Ok((f64::INFINITY, sup));
            }
            let one_u = 1.0 + u;
            let rad = f.r * one_u;
            let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
            let jac = f.r.powi(n - 1) * one_u.powi(n - 2) * (one_u * one_u + g2).sqrt();
            let wj = self.rule.weights[j];
            perim += wj * jac * self.weight.value(rad);
            let between = if u == 0.0 { 0.0 } else { radial_mass(&self.weight, f.n, f.r, rad)? };
            vol += wj * between;
            sym += wj * abs(between);
        }
        Ok((perim + f.lambda1 * abs(vol) + f.lambda2 * abs(sym - f.alpha), sup))
    }
}

/// `J(E)` with exact absolute values.
pub fn evaluate_j(f: &PenalizedFunctional, set: &NearlySphericalSet, rule: &SphereRule) -> Result<f64> {
    if set.n != f.n || (set.radius - f.r).abs() > 1e-14 * f.r {
        return Err(LabError::Argument(format!(
            "set (n={}, r={}) does not match functional (n={}, r={})",
            set.n, set.radius, f.n, f.r
        )));
    }
    let ev = Evaluator::new(f, set.u.max_degree, rule)?;
    let (j, sup) = ev.objective(set.u.as_slice(), None)?;
    if !j.is_finite() {
        return Err(LabError::DegenerateShape(format!("sup|u| = {sup} too large")));
    }
    Ok(j)
}

/// Directional derivatives `(J(a + h e_i) − J(a − h e_i)) / 2h` along every
/// coefficient axis, with exact absolute values.
pub fn coordinate_derivatives(
    f: &PenalizedFunctional,
    at: &HarmonicCoefficients,
    rule: &SphereRule,
    h: f64,
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(f, at.max_degree, rule)?;
    let mut a = at.as_slice().to_vec();
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let orig = a[i];
        a[i] = orig + h;
        let jp = ev.objective(&a, None)?.0;
        a[i] = orig - h;
        let jm = ev.objective(&a, None)?.0;
        a[i] = orig;
        out.push((jp - jm) / (2.0 * h));
    }
    Ok(out)
}

/// One-sided derivatives `(J(a ± h e_i) − J(a)) / h` along every axis and sign.
pub fn one_sided_derivatives(
    f: &PenalizedFunctional,
    at: &HarmonicCoefficients,
    rule: &SphereRule,
    h: f64,
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(f, at.max_degree, rule)?;
    let mut a = at.as_slice().to_vec();
    let j0 = ev.objective(&a, None)?.0;
    let mut out = Vec::with_capacity(2 * a.len());
    for i in 0..a.len() {
        let orig = a[i];
        for s in [1.0, -1.0] {
            a[i] = orig + s * h;
            out.push((ev.objective(&a, None)?.0 - j0) / h);
        }
        a[i] = orig;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub steps: usize,
    /// Initial trial step of the backtracking line search.
    pub step_size: f64,
    /// Stop once the objective fails to decrease this many steps in a row.
    pub patience: usize,
    pub delta: f64,
    /// Gradient-norm tolerance for convergence.
    pub grad_tol: f64,
    /// Run even when Λ₁ or Λ₂ is below its threshold.
    pub allow_below_threshold: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            steps: 2000,
            step_size: 1e-2,
            patience: 3,
            delta: DEFAULT_DELTA,
            grad_tol: 1e-9,
            allow_below_threshold: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentStatus {
    /// Gradient norm below tolerance, or no coordinate direction decreases
    /// the unsmoothed functional.
    Converged,
    /// No decrease over a full patience window.
    Stalled,
    /// Step budget exhausted.
    MaxSteps,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentOutcome {
    pub coefficients: HarmonicCoefficients,
    /// Columns `step, objective, grad_norm, sup_u`; the objective is the
    /// smoothed functional that is descended.
    pub trace: Table,
    pub status: DescentStatus,
    pub initial_objective: f64,
    /// Unsmoothed `J` at the returned coefficients.
    pub final_objective: f64,
    pub final_sup_u: f64,
    pub steps_taken: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient descent with Armijo backtracking on the smoothed functional,
/// using central-difference gradients.
pub fn minimize_j(
    f: &PenalizedFunctional,
    init: &HarmonicCoefficients,
    rule: &SphereRule,
    opts: &DescentOptions,
) -> Result<DescentOutcome> {
    let audit = f.audit()?;
    if !audit.satisfied() && !opts.allow_below_threshold {
        return Err(LabError::Precondition(format!(
            "thresholds not met: Λ₁ = {} (min {}), Λ₂ = {} (min {})",
            f.lambda1, audit.lambda1_min, f.lambda2, audit.lambda2_min
        )));
    }
    if init.n != f.n {
        return Err(LabError::Argument("initial coefficients have the wrong dimension".into()));
    }
    let ev = Evaluator::new(f, init.max_degree, rule)?;
    let delta = Some(opts.delta);
    let mut a = init.as_slice().to_vec();
    let (mut obj, mut sup) = ev.objective(&a, delta)?;
    if !obj.is_finite() {
        return Err(LabError::DegenerateShape(format!("initial sup|u| = {sup} too large")));
    }
    let initial_objective = ev.objective(&a, None)?.0;
    let mut trace = Table::new("descent_trace", &["step", "objective", "grad_norm", "sup_u"]);
    let mut status = DescentStatus::MaxSteps;
    let mut trial = opts.step_size;
    let mut idle = 0;
    let mut steps_taken = 0;
    let mut grad = vec![0.0; a.len()];

    // A point where no coordinate direction decreases the unsmoothed J is
    // stationary for the nonsmooth functional; smoothing would only shift it.
    let stationary = |a: &[f64]| -> Result<bool> {
        let j0 = ev.objective(a, None)?.0;
        let mut probe = a.to_vec();
        for i in 0..probe.len() {
            let orig = probe[i];
            for s in [1.0, -1.0] {
                probe[i] = orig + s * STATIONARY_STEP;
                if (ev.objective(&probe, None)?.0 - j0) / STATIONARY_STEP < -STATIONARY_TOL {
                    return Ok(false);
                }
            }
            probe[i] = orig;
        }
        Ok(true)
    };
    if stationary(&a)? {
        status = DescentStatus::Converged;
    }

    for step in 0..opts.steps {
        if status == DescentStatus::Converged {
            break;
        }
        let h = (1e-3 * sup).clamp(1e-10, 1e-7);
        for i in 0..a.len() {
            let orig = a[i];
            a[i] = orig + h;
            let jp = ev.objective(&a, delta)?.0;
            a[i] = orig - h;
            let jm = ev.objective(&a, delta)?.0;
            a[i] = orig;
            grad[i] = if jp.is_finite() && jm.is_finite() { (jp - jm) / (2.0 * h) } else { 0.0 };
        }
        let gn = norm(&grad);
        trace.push(vec![step as f64, obj, gn, sup]);
        if gn <= opts.grad_tol {
            status = DescentStatus::Converged;
            break;
        }
        let mut t = trial;
        let mut accepted = false;
        for _ in 0..80 {
            let cand: Vec<f64> = a.iter().zip(&grad).map(|(x, g)| x - t * g).collect();
            let (c, s) = ev.objective(&cand, delta)?;
            if c.is_finite() && c <= obj - 1e-4 * t * gn * gn {
                if c < obj {
                    a = cand;
                    obj = c;
                    sup = s;
                    accepted = true;
                }
                break;
            }
            t *= 0.5;
        }
        steps_taken = step + 1;
        if accepted {
            idle = 0;
            trial = (4.0 * t).min(opts.step_size);
        } else {
            idle += 1;
            trial = opts.step_size;
            if stationary(&a)? {
                status = DescentStatus::Converged;
                break;
            }
            if idle >= opts.patience {
                status = DescentStatus::Stalled;
                break;
            }
        }
    }
    let coefficients = HarmonicCoefficients::from_vec(init.n, init.max_degree, a)?;
    let (final_objective, final_sup_u) = ev.objective(coefficients.as_slice(), None)?;
    trace.push(vec![steps_taken as f64, obj, f64::NAN, final_sup_u]);
    Ok(DescentOutcome {
        coefficients,
        trace,
        status,
        initial_objective,
        final_objective,
        final_sup_u,
        steps_taken,
    })
}
