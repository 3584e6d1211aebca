//! Weighted perimeter and volume of the set models.
//!
//! Every routine takes a [`RadialWeight`], so the exponential and power
//! densities share the same geometry code.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harmonics::synthesize;
use crate::quadrature::{integrate_adaptive, GaussLegendre, SphereRule, Summation, ADAPTIVE_REL_TOL};
use crate::shapes::{surface_elements_nearly_spherical, Ellipsoid, NearlySphericalSet, OffCenterBall};
use crate::weights::{ConvexProfile, RadialWeight};
use crate::{unit_ball_volume, unit_sphere_area};

/// A computed measure with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    pub quadrature_error_estimate: f64,
}

impl MeasureValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            quadrature_error_estimate: 0.0,
        }
    }

    pub fn new(value: f64, error: f64) -> Self {
        Self {
            value,
            quadrature_error_estimate: error.abs(),
        }
    }
}

const RADIAL_ORDER: usize = 24;
const RADIAL_PANEL: f64 = 0.5;

/// Fixed composite Gauss–Legendre on `[a, b]`: split at breakpoints, then into
/// panels no wider than `width`.
fn composite(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    order: usize,
    width: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let gl = GaussLegendre::of_order(order);
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|t| *t > lo && *t < hi).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.push(hi);
    let mut s = Summation::default();
    let mut start = lo;
    for end in cuts {
        let panels = ((end - start) / width).ceil().max(1.0) as usize;
        let h = (end - start) / panels as f64;
        for k in 0..panels {
            let x0 = start + k as f64 * h;
            let x1 = if k + 1 == panels { end } else { x0 + h };
            s.add(gl.integrate(x0, x1, &mut f));
        }
        start = end;
    }
    sign * s.value()
}

/// `∫_a^b s^{n-1} W(s) ds` for `0 ≤ a, b`.
///
/// Power weights use the closed form and fail when the integral diverges.
pub fn radial_mass(w: &RadialWeight, n: usize, a: f64, b: f64) -> Result<f64> {
    let m = n as f64;
    match w {
        RadialWeight::Power { p } => {
            let e = m + p;
            if e == 0.0 {
                if a <= 0.0 || b <= 0.0 {
                    return Err(LabError::Domain(format!(
                        "weighted volume diverges at the origin for p = {p}, n = {n}"
                    )));
                }
                return Ok((b / a).ln());
            }
            if e < 0.0 && (a <= 0.0 || b <= 0.0) {
                return Err(LabError::Domain(format!(
                    "weighted volume diverges at the origin for p = {p} <= -n"
                )));
            }
            Ok((b.powf(e) - a.powf(e)) / e)
        }
        RadialWeight::ExpConvex { profile } => {
            let k = n as i32 - 1;
            Ok(composite(
                |s| s.powi(k) * profile.w(s).exp(),
                a,
                b,
                &profile.breakpoints(),
                RADIAL_ORDER,
                RADIAL_PANEL,
            ))
        }
    }
}

/// Euclidean or weighted radial mass, selected by `weight`.
fn mass_between(weight: Option<&RadialWeight>, n: usize, a: f64, b: f64) -> Result<f64> {
    match weight {
        None => {
            let k = n as i32;
            Ok((b.powi(k) - a.powi(k)) / n as f64)
        }
        Some(w) => radial_mass(w, n, a, b),
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(LabError::Argument(format!("radius must be positive, got {r}")))
    }
}

/// `P_W(B_r) = n ω_n r^{n-1} W(r)`.
pub fn ball_perimeter(w: &RadialWeight, r: f64, n: usize) -> Result<MeasureValue> {
    check_radius(r)?;
    Ok(MeasureValue::exact(
        unit_sphere_area(n) * r.powi(n as i32 - 1) * w.eval(r)?,
    ))
}

/// `|B_r|_W = n ω_n ∫_0^r t^{n-1} W(t) dt`, or `ω_n r^n` when `euclidean`.
pub fn ball_volume(w: &RadialWeight, r: f64, n: usize, euclidean: bool) -> Result<MeasureValue> {
    check_radius(r)?;
    if euclidean {
        return Ok(MeasureValue::exact(unit_ball_volume(n) * r.powi(n as i32)));
    }
    let area = unit_sphere_area(n);
    match w {
        RadialWeight::Power { .. } => Ok(MeasureValue::exact(area * radial_mass(w, n, 0.0, r)?)),
        RadialWeight::ExpConvex { profile } => {
            let k = n as i32 - 1;
            let (v, e) = integrate_adaptive(
                |s| s.powi(k) * profile.w(s).exp(),
                0.0,
                r,
                &profile.breakpoints(),
                ADAPTIVE_REL_TOL,
            );
            Ok(MeasureValue::new(area * v, area * e))
        }
    }
}

fn check_nearly_spherical(set: &NearlySphericalSet, rule: &SphereRule) -> Result<()> {
    let s = set.sample(rule)?;
    let sup = s.sup_abs();
    if sup >= 1.0 {
        return Err(LabError::DegenerateShape(format!(
            "sup|u| = {sup} must be below 1"
        )));
    }
    Ok(())
}

fn perimeter_on_rule(w: &RadialWeight, set: &NearlySphericalSet, rule: &SphereRule) -> Result<f64> {
    let el = surface_elements_nearly_spherical(set, rule)?;
    let values: Vec<f64> = el
        .radii
        .iter()
        .zip(&el.jacobians)
        .map(|(rad, j)| j * w.value(*rad))
        .collect();
    rule.integrate_values(&values)
}

fn volume_on_rule(
    w: &RadialWeight,
    set: &NearlySphericalSet,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<f64> {
    let s = set.sample(rule)?;
    let mut values = Vec::with_capacity(rule.len());
    for (j, u) in s.values.iter().enumerate() {
        let one_u = 1.0 + u;
        if one_u <= 0.0 {
            return Err(LabError::DegenerateShape(format!("1 + u = {one_u} at node {j}")));
        }
        let weight = if euclidean { None } else { Some(w) };
        values.push(mass_between(weight, set.n, 0.0, set.radius * one_u)?);
    }
    rule.integrate_values(&values)
}

/// Weighted perimeter of a nearly spherical set; the error estimate compares
/// against the half-resolution companion rule.
pub fn perimeter_nearly_spherical(
    w: &RadialWeight,
    set: &NearlySphericalSet,
    rule: &SphereRule,
) -> Result<MeasureValue> {
    check_nearly_spherical(set, rule)?;
    let fine = perimeter_on_rule(w, set, rule)?;
    let coarse = perimeter_on_rule(w, set, rule.coarse())?;
    Ok(MeasureValue::new(fine, fine - coarse))
}

/// Perimeter value only, skipping the error estimate.
pub fn perimeter_nearly_spherical_value(
    w: &RadialWeight,
    set: &NearlySphericalSet,
    rule: &SphereRule,
) -> Result<f64> {
    check_nearly_spherical(set, rule)?;
    perimeter_on_rule(w, set, rule)
}

/// `|E|_W = ∫_{S^{n-1}} ∫_0^{r(1+u)} s^{n-1} W(s) ds dH^{n-1}`.
pub fn volume_nearly_spherical(
    w: &RadialWeight,
    set: &NearlySphericalSet,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<MeasureValue> {
    check_nearly_spherical(set, rule)?;
    let fine = volume_on_rule(w, set, rule, euclidean)?;
    let coarse = volume_on_rule(w, set, rule.coarse(), euclidean)?;
    Ok(MeasureValue::new(fine, fine - coarse))
}

pub fn volume_nearly_spherical_value(
    w: &RadialWeight,
    set: &NearlySphericalSet,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<f64> {
    check_nearly_spherical(set, rule)?;
    volume_on_rule(w, set, rule, euclidean)
}

/// Quadrature settings for the axisymmetric off-center reductions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisymmetricRules {
    pub angular_order: usize,
    pub angular_panels: usize,
    pub radial_order: usize,
}

impl Default for AxisymmetricRules {
    fn default() -> Self {
        Self {
            angular_order: 32,
            angular_panels: 8,
            radial_order: 32,
        }
    }
}

impl AxisymmetricRules {
    /// Half the orders, for error estimates.
    pub fn coarse(&self) -> Self {
        Self {
            angular_order: (self.angular_order / 2).max(4),
            angular_panels: self.angular_panels,
            radial_order: (self.radial_order / 2).max(4),
        }
    }
}

/// Integrates `f` over `[a, b]` split at `cuts`, each piece covered by
/// `panels_total` panels distributed in proportion to length.
fn panel_integrate(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    cuts: &[f64],
    order: usize,
    panels_total: usize,
) -> f64 {
    let gl = GaussLegendre::of_order(order);
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > a && *c < b).collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    pts.push(b);
    let mut s = Summation::default();
    let mut start = a;
    for end in pts {
        let share = ((end - start) / (b - a) * panels_total as f64).ceil().max(1.0) as usize;
        let h = (end - start) / share as f64;
        for k in 0..share {
            let x0 = start + k as f64 * h;
            let x1 = if k + 1 == share { end } else { x0 + h };
            s.add(gl.integrate(x0, x1, &mut *f));
        }
        start = end;
    }
    s.value()
}

/// Polar angles in `(0, π)` where `|ρ x + ε e_1|` crosses a profile breakpoint
/// or where the inner radial kink set changes topology.
fn offcenter_angle_cuts(profile: &ConvexProfile, eps: f64, rho: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    if eps == 0.0 {
        return cuts;
    }
    for r0 in profile.breakpoints() {
        let c = (r0 * r0 - rho * rho - eps * eps) / (2.0 * rho * eps);
        if c.abs() < 1.0 {
            cuts.push(c.acos());
        }
        let s = r0 / eps.abs();
        if s < 1.0 {
            let t = s.asin();
            cuts.push(t);
            cuts.push(PI - t);
        }
    }
    cuts
}

/// Weighted perimeter and volume of `B_ρ(ε e_1)` in `R^n` by axial symmetry.
///
/// Perimeter: `(n−1) ω_{n−1} ∫_0^π sin^{n−2}θ ρ^{n−1} e^{w(|y|)} dθ` with
/// `|y|² = ρ² + ε² + 2ρε cos θ`; volume adds the radial layer `t ∈ [0, 1]`.
pub fn offcenter_ball_measures(
    profile: &ConvexProfile,
    eps: f64,
    rho: f64,
    n: usize,
    rules: &AxisymmetricRules,
) -> Result<(MeasureValue, MeasureValue)> {
    let fine = offcenter_raw(profile, eps, rho, n, rules)?;
    let coarse = offcenter_raw(profile, eps, rho, n, &rules.coarse())?;
    Ok((
        MeasureValue::new(fine.0, fine.0 - coarse.0),
        MeasureValue::new(fine.1, fine.1 - coarse.1),
    ))
}

/// Perimeter of `B_ρ(ε e_1)` only (no error estimate).
/// Negative `ε` places the center on the negative axis.
pub fn offcenter_perimeter(
    profile: &ConvexProfile,
    eps: f64,
    rho: f64,
    n: usize,
    rules: &AxisymmetricRules,
) -> Result<f64> {
    validate_offcenter(eps, rho, n)?;
    let factor = axis_factor(n);
    let k = n as i32 - 2;
    let cuts = offcenter_angle_cuts(profile, eps, rho);
    let mut f = |th: f64| {
        let y2 = rho * rho + eps * eps + 2.0 * rho * eps * th.cos();
        th.sin().powi(k) * profile.w(y2.max(0.0).sqrt()).exp()
    };
    let v = panel_integrate(&mut f, 0.0, PI, &cuts, rules.angular_order, rules.angular_panels);
    Ok(factor * rho.powi(n as i32 - 1) * v)
}

/// Weighted volume of `B_ρ(ε e_1)` only.
pub fn offcenter_volume(
    profile: &ConvexProfile,
    eps: f64,
    rho: f64,
    n: usize,
    rules: &AxisymmetricRules,
) -> Result<f64> {
    validate_offcenter(eps, rho, n)?;
    let factor = axis_factor(n);
    let k = n as i32 - 2;
    let m = n as i32 - 1;
    let breaks = profile.breakpoints();
    let cuts = offcenter_angle_cuts(profile, eps, rho);
    let gl = GaussLegendre::of_order(rules.radial_order);
    let mut f = |th: f64| {
        let c = th.cos();
        let mut tcuts = Vec::new();
        for r0 in &breaks {
            // ρ² t² + 2ρε cos θ t + ε² − r0² = 0
            let disc = r0 * r0 - eps * eps * (1.0 - c * c);
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for t in [(-eps * c - sq) / rho, (-eps * c + sq) / rho] {
                    if t > 0.0 && t < 1.0 {
                        tcuts.push(t);
                    }
                }
            }
        }
        tcuts.sort_by(|x, y| x.total_cmp(y));
        tcuts.push(1.0);
        let mut s = Summation::default();
        let mut start = 0.0;
        for end in tcuts {
            s.add(gl.integrate(start, end, |t| {
                let y2 = rho * rho * t * t + eps * eps + 2.0 * rho * t * eps * c;
                t.powi(m) * profile.w(y2.max(0.0).sqrt()).exp()
            }));
            start = end;
        }
        th.sin().powi(k) * s.value()
    };
    let v = panel_integrate(&mut f, 0.0, PI, &cuts, rules.angular_order, rules.angular_panels);
    Ok(factor * rho.powi(n as i32) * v)
}

fn offcenter_raw(
    profile: &ConvexProfile,
    eps: f64,
    rho: f64,
    n: usize,
    rules: &AxisymmetricRules,
) -> Result<(f64, f64)> {
    Ok((
        offcenter_perimeter(profile, eps, rho, n, rules)?,
        offcenter_volume(profile, eps, rho, n, rules)?,
    ))
}

fn validate_offcenter(eps: f64, rho: f64, n: usize) -> Result<()> {
    if n < 2 || !eps.is_finite() || !(rho > 0.0) {
        return Err(LabError::Argument(format!(
            "off-center ball needs n >= 2, finite eps, rho > 0 (got n={n}, eps={eps}, rho={rho})"
        )));
    }
    Ok(())
}

/// `(n−1) ω_{n−1}`, the measure of `S^{n−2}` times the axial reduction.
fn axis_factor(n: usize) -> f64 {
    if n == 2 {
        2.0
    } else {
        unit_sphere_area(n - 1)
    }
}

fn ellipsoid_raw(
    w: &RadialWeight,
    ell: &Ellipsoid,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<(f64, f64)> {
    let n = ell.n();
    let perim = rule.integrate(|x| {
        let y = ell.boundary_point(x);
        let norm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        ell.area_element(x) * w.value(norm)
    })?;
    let weight = if euclidean { None } else { Some(w) };
    let mut masses = Vec::with_capacity(rule.len());
    for x in &rule.nodes {
        masses.push(mass_between(weight, n, 0.0, ell.radial_function(x))?);
    }
    let vol = rule.integrate_values(&masses)?;
    Ok((perim, vol))
}

/// Weighted perimeter and volume of an ellipsoid centered at the origin.
pub fn ellipsoid_measures(
    w: &RadialWeight,
    ell: &Ellipsoid,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<(MeasureValue, MeasureValue)> {
    if ell.n() != rule.n {
        return Err(LabError::Argument(format!(
            "ellipsoid dimension {} does not match rule dimension {}",
            ell.n(),
            rule.n
        )));
    }
    let fine = ellipsoid_raw(w, ell, rule, euclidean)?;
    let coarse = ellipsoid_raw(w, ell, rule.coarse(), euclidean)?;
    Ok((
        MeasureValue::new(fine.0, fine.0 - coarse.0),
        MeasureValue::new(fine.1, fine.1 - coarse.1),
    ))
}

/// Shapes accepted by [`symdiff_measure`]: radial graphs over the origin.
#[derive(Debug, Clone, Copy)]
pub enum StarShape<'a> {
    NearlySpherical(&'a NearlySphericalSet),
    OffCenter(&'a OffCenterBall),
    Ellipsoid(&'a Ellipsoid),
}

impl StarShape<'_> {
    fn n(&self) -> usize {
        match self {
            Self::NearlySpherical(s) => s.n,
            Self::OffCenter(b) => b.n,
            Self::Ellipsoid(e) => e.n(),
        }
    }

    fn radial(&self, x: &[f64; 3]) -> f64 {
        match self {
            Self::NearlySpherical(s) => {
                let u = synthesize(&s.u, std::slice::from_ref(x)).values[0];
                s.radius * (1.0 + u)
            }
            Self::OffCenter(b) => b.radial_function(x[0]),
            Self::Ellipsoid(e) => e.radial_function(x),
        }
    }
}

const SYMDIFF_SCAN: usize = 2048;
const SYMDIFF_ORDER: usize = 24;

/// Angles in `(a, b)` where `g` changes sign, located by a scan and bisection.
fn sign_changes(g: &impl Fn(f64) -> f64, a: f64, b: f64, scan: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (b - a) / scan as f64;
    let mut x0 = a;
    let mut g0 = g(x0);
    for k in 1..=scan {
        let x1 = if k == scan { b } else { a + k as f64 * h };
        let g1 = g(x1);
        if g0 == 0.0 && k > 1 {
            roots.push(x0);
        } else if g0 * g1 < 0.0 {
            let (mut lo, mut hi, mut glo) = (x0, x1, g0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        g0 = g1;
    }
    roots
}

/// `|E △ B_r|_W` for a star-shaped `E`: the integral over `S^{n−1}` of the
/// radial mass between the two profiles. `weight = None` gives the Euclidean
/// measure.
///
/// Off-center balls are integrated in the axial angle for any `n`; other
/// shapes use the polar angle in the plane and the sphere rule in space.
/// Both one-dimensional paths split at the angles where the profiles cross.
pub fn symdiff_measure(
    shape: StarShape<'_>,
    r: f64,
    weight: Option<&RadialWeight>,
    rule: &SphereRule,
) -> Result<MeasureValue> {
    check_radius(r)?;
    let n = shape.n();
    let between = |big: f64| -> Result<f64> {
        let (a, b) = if big < r { (big, r) } else { (r, big) };
        mass_between(weight, n, a, b)
    };
    match shape {
        StarShape::OffCenter(ball) => {
            if !ball.is_star_shaped_about_origin() {
                return Err(LabError::UnsupportedGeometry(format!(
                    "off-center ball with eps = {} >= rho = {} is not a radial graph over the origin",
                    ball.offset, ball.radius
                )));
            }
            let g = |th: f64| ball.radial_function(th.cos()) - r;
            let cuts = sign_changes(&g, 0.0, PI, SYMDIFF_SCAN);
            let k = n as i32 - 2;
            let eval = |order: usize| -> Result<f64> {
                let mut err = None;
                let mut f = |th: f64| match between(ball.radial_function(th.cos())) {
                    Ok(v) => th.sin().powi(k) * v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                };
                let v = panel_integrate(&mut f, 0.0, PI, &cuts, order, 8);
                match err {
                    Some(e) => Err(e),
                    None => Ok(axis_factor(n) * v),
                }
            };
            let fine = eval(SYMDIFF_ORDER)?;
            let coarse = eval(SYMDIFF_ORDER / 2)?;
            Ok(MeasureValue::new(fine, fine - coarse))
        }
        _ if n == 2 => {
            let radial = |th: f64| shape.radial(&[th.cos(), th.sin(), 0.0]);
            let g = |th: f64| radial(th) - r;
            let cuts = sign_changes(&g, 0.0, 2.0 * PI, SYMDIFF_SCAN);
            let eval = |order: usize| -> Result<f64> {
                let mut err = None;
                let mut f = |th: f64| match between(radial(th)) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                };
                let v = panel_integrate(&mut f, 0.0, 2.0 * PI, &cuts, order, 16);
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            };
            let fine = eval(SYMDIFF_ORDER)?;
            let coarse = eval(SYMDIFF_ORDER / 2)?;
            Ok(MeasureValue::new(fine, fine - coarse))
        }
        _ => {
            let on_rule = |rule: &SphereRule| -> Result<f64> {
                let mut vals = Vec::with_capacity(rule.len());
                match shape {
                    StarShape::NearlySpherical(s) => {
                        let syn = s.sample(rule)?;
                        for u in syn.values {
                            vals.push(between(s.radius * (1.0 + u))?);
                        }
                    }
                    _ => {
                        for x in &rule.nodes {
                            vals.push(between(shape.radial(x))?);
                        }
                    }
                }
                rule.integrate_values(&vals)
            };
            if rule.n != n {
                return Err(LabError::Argument(format!(
                    "rule dimension {} does not match shape dimension {n}",
                    rule.n
                )));
            }
            let fine = on_rule(rule)?;
            let coarse = on_rule(rule.coarse())?;
            Ok(MeasureValue::new(fine, fine - coarse))
        }
    }
}

/// Both sides of the two divergence-theorem identities on `B_r`:
///
/// * `(n−1) ∫_{B_r} e^w w'/|x| = w'(r) P_w(B_r) − ∫_{B_r} e^w (w'² + w'')`
/// * `∫_{B_r} e^w |x| w' = r P_w(B_r) − n |B_r|_w`
///
/// Residuals are relative to the largest individual term of each identity,
/// since the right-hand sides are differences that may cancel to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceIdentities {
    pub lhs_first: f64,
    pub rhs_first: f64,
    pub scale_first: f64,
    pub lhs_second: f64,
    pub rhs_second: f64,
    pub scale_second: f64,
}

fn rel_residual(a: f64, b: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

impl DivergenceIdentities {
    pub fn residual_first(&self) -> f64 {
        rel_residual(self.lhs_first, self.rhs_first, self.scale_first)
    }

    pub fn residual_second(&self) -> f64 {
        rel_residual(self.lhs_second, self.rhs_second, self.scale_second)
    }
}

pub fn divergence_identities(profile: &ConvexProfile, r: f64, n: usize) -> Result<DivergenceIdentities> {
    check_radius(r)?;
    let area = unit_sphere_area(n);
    let m = n as f64;
    let k = n as i32;
    let breaks = profile.breakpoints();
    let quad = |f: &dyn Fn(f64) -> f64| {
        integrate_adaptive(f, 0.0, r, &breaks, ADAPTIVE_REL_TOL).0
    };
    let ew = |s: f64| profile.w(s).exp();
    let lhs_first = (m - 1.0) * area * quad(&|s| s.powi(k - 2) * ew(s) * profile.dw(s));
    let jr = profile.jet(r);
    let perim = area * r.powi(k - 1) * jr[0].exp();
    let curv = area
        * quad(&|s| {
            let j = profile.jet(s);
            s.powi(k - 1) * j[0].exp() * (j[1] * j[1] + j[2])
        });
    let rhs_first = jr[1] * perim - curv;
    let lhs_second = area * quad(&|s| s.powi(k) * ew(s) * profile.dw(s));
    let vol = area * quad(&|s| s.powi(k - 1) * ew(s));
    let rhs_second = r * perim - m * vol;
    Ok(DivergenceIdentities {
        lhs_first,
        rhs_first,
        scale_first: lhs_first.abs().max((jr[1] * perim).abs()).max(curv.abs()),
        lhs_second,
        rhs_second,
        scale_second: lhs_second.abs().max(r * perim).max(m * vol),
    })
}
