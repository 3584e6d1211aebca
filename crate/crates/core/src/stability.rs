//! Fuglede deficits, Taylor-coefficient identities, the quantitative ratio,
//! the degenerate translated-ball expansion and the ellipsoid scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harmonics::{eigenvalue, sobolev_norms, HarmonicCoefficients};
use crate::measures::{
    ball_perimeter, ball_volume, ellipsoid_measures, offcenter_ball_measures, offcenter_perimeter,
    perimeter_nearly_spherical, symdiff_measure, volume_nearly_spherical,
    volume_nearly_spherical_value, AxisymmetricRules, MeasureValue, StarShape,
};
use crate::profile::{rho_of_eps, rho_second_derivative, translated_perimeter_second_derivative};
use crate::quadrature::{integrate_adaptive, SphereRule, ADAPTIVE_REL_TOL};
use crate::report::{ExperimentReport, Table};
use crate::shapes::{sample_w1inf, Ellipsoid, NearlySphericalSet, OffCenterBall};
use crate::unit_sphere_area;
use crate::weights::{ConvexProfile, RadialWeight};

/// Relative volume tolerance for the Fuglede precondition.
pub const VOLUME_TOL: f64 = 1e-10;

/// `a = ∫_0^1 t^{n−1} e^{w(rt)}`, `b = ∫ t^n w'(rt) e^{w(rt)}`,
/// `c = ∫ t^{n+1} w''(rt) e^{w(rt)}`, `d = ∫ t^{n+1} w'(rt)² e^{w(rt)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Relative residual of `r b = e^{w(r)} − n a`.
    pub residual_first: f64,
    /// Relative residual of `r²(c + d) = r w'(r) e^{w(r)} − (n+1)(e^{w(r)} − n a)`.
    pub residual_second: f64,
}

pub fn taylor_coefficients(w: &ConvexProfile, r: f64, n: usize) -> Result<TaylorCoefficients> {
    if !(r > 0.0) {
        return Err(LabError::Argument(format!("radius must be positive, got {r}")));
    }
    let m = n as f64;
    let k = n as i32;
    let breaks: Vec<f64> = w.breakpoints().iter().map(|b| b / r).collect();
    let quad = |f: &dyn Fn(f64) -> f64| integrate_adaptive(f, 0.0, 1.0, &breaks, ADAPTIVE_REL_TOL).0;
    let a = quad(&|t| t.powi(k - 1) * w.w(r * t).exp());
    let b = quad(&|t| {
        let j = w.jet(r * t);
        t.powi(k) * j[1] * j[0].exp()
    });
    let c = quad(&|t| {
        let j = w.jet(r * t);
        t.powi(k + 1) * j[2] * j[0].exp()
    });
    let d = quad(&|t| {
        let j = w.jet(r * t);
        t.powi(k + 1) * j[1] * j[1] * j[0].exp()
    });
    let jr = w.jet(r);
    let ew = jr[0].exp();
    let lhs1 = r * b;
    let rhs1 = ew - m * a;
    let scale1 = lhs1.abs().max(ew).max(m * a);
    let lhs2 = r * r * (c + d);
    let rhs2 = r * jr[1] * ew - (m + 1.0) * (ew - m * a);
    let scale2 = lhs2.abs().max((r * jr[1] * ew).abs()).max((m + 1.0) * ew);
    Ok(TaylorCoefficients {
        a,
        b,
        c,
        d,
        residual_first: (lhs1 - rhs1).abs() / scale1,
        residual_second: (lhs2 - rhs2).abs() / scale2,
    })
}

/// `u = amplitude · direction + c₀ Y_{0,1}` with `c₀` chosen so that
/// `|E|_W = |B_r|_W` (Euclidean volumes when `euclidean`).
pub fn volume_matched_perturbation(
    w: &RadialWeight,
    r: f64,
    direction: &HarmonicCoefficients,
    amplitude: f64,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<NearlySphericalSet> {
    let n = direction.n;
    if rule.n != n {
        return Err(LabError::Argument(format!(
            "rule dimension {} does not match direction dimension {n}",
            rule.n
        )));
    }
    let base = direction.scaled(amplitude);
    let sup = NearlySphericalSet::new(r, base.clone())?.sample(rule)?.sup_abs();
    if sup >= 0.5 {
        return Err(LabError::Argument(format!(
            "perturbation too large: sup|u| = {sup} must stay below 1/2"
        )));
    }
    let target = ball_volume(w, r, n, euclidean)?.value;
    let y0 = 1.0 / unit_sphere_area(n).sqrt();
    let build = |c0: f64| -> Result<NearlySphericalSet> {
        let mut u = base.clone();
        let a00 = u.get(0, 1)?;
        u.set(0, 1, a00 + c0)?;
        NearlySphericalSet::new(r, u)
    };
    let g = |c0: f64| -> Result<f64> {
        Ok(volume_nearly_spherical_value(w, &build(c0)?, rule, euclidean)? - target)
    };
    if amplitude == 0.0 || direction.is_zero() {
        return build(0.0);
    }

    // c₀ Y_0 shifts u by c₀ y0; keep 1 + u within (1/4, 7/4).
    let span = (0.75 - sup) / y0;
    let (mut lo, mut hi) = (-span, span);
    let mut c0 = 0.0;
    for _ in 0..100 {
        let set = build(c0)?;
        let v = volume_nearly_spherical_value(w, &set, rule, euclidean)? - target;
        if v.abs() <= 1e-15 * target {
            return Ok(set);
        }
        if v < 0.0 {
            lo = c0;
        } else {
            hi = c0;
        }
        // d|E|/dc₀ = ∫ y0 · R^{n−1} W(R) r dH, R = r(1+u)
        let syn = set.sample(rule)?;
        let deriv: Vec<f64> = syn
            .values
            .iter()
            .map(|u| {
                let rad = r * (1.0 + u);
                let dens = if euclidean { 1.0 } else { w.value(rad) };
                y0 * r * rad.powi(n as i32 - 1) * dens
            })
            .collect();
        let d = rule.integrate_values(&deriv)?;
        let mut next = c0 - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - c0).abs() <= 1e-17 {
            c0 = next;
            break;
        }
        c0 = next;
    }
    let set = build(c0)?;
    let resid = g(c0)?.abs() / target;
    if resid > 1e-12 {
        return Err(LabError::Solver(format!(
            "volume matching stalled: relative residual {resid:.3e}"
        )));
    }
    Ok(set)
}

/// Deficit, asymmetry and ratios for one competitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub deficit: f64,
    pub deficit_error: f64,
    pub grad_sq: f64,
    pub l2_sq: f64,
    pub symdiff: f64,
    pub symdiff_error: f64,
    /// `deficit / (r^{n−1} W(r) ‖∇_τ u‖²)`; `None` when `∇_τ u ≡ 0`.
    pub ratio_fuglede: Option<f64>,
    /// `deficit / symdiff²`; `None` for the reference ball itself.
    pub ratio_quant: Option<f64>,
    pub ratio_quant_error: Option<f64>,
    pub volume_relative_error: f64,
    pub volume_matched: bool,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub degenerate: bool,
}

impl StabilityReport {
    fn ratios(&mut self, fuglede_scale: f64) {
        self.degenerate = self.symdiff == 0.0;
        self.ratio_fuglede = (self.grad_sq > 0.0).then(|| self.deficit / (fuglede_scale * self.grad_sq));
        if self.symdiff > 0.0 {
            let q = self.deficit / (self.symdiff * self.symdiff);
            let rel = if self.deficit != 0.0 {
                self.deficit_error / self.deficit.abs()
            } else {
                f64::INFINITY
            } + 2.0 * self.symdiff_error / self.symdiff;
            self.ratio_quant = Some(q);
            self.ratio_quant_error = Some(q.abs() * rel);
        }
    }
}

fn check_set(r: f64, n: usize, set: &NearlySphericalSet, rule: &SphereRule) -> Result<()> {
    if set.n != n || rule.n != n {
        return Err(LabError::Argument(format!(
            "dimension mismatch: n={n}, set n={}, rule n={}",
            set.n, rule.n
        )));
    }
    if (set.radius - r).abs() > 1e-14 * r {
        return Err(LabError::Argument(format!(
            "set reference radius {} differs from r = {r}",
            set.radius
        )));
    }
    Ok(())
}

/// Fuglede-type report for a volume-matched nearly spherical set.
///
/// Volumes are weighted unless `euclidean` (used for power weights).
pub fn fuglede_report(
    w: &RadialWeight,
    r: f64,
    n: usize,
    set: &NearlySphericalSet,
    rule: &SphereRule,
    euclidean: bool,
) -> Result<StabilityReport> {
    check_set(r, n, set, rule)?;
    let target = ball_volume(w, r, n, euclidean)?.value;
    let vol = volume_nearly_spherical(w, set, rule, euclidean)?;
    let rel = (vol.value - target).abs() / target;
    if rel > VOLUME_TOL {
        return Err(LabError::VolumeMismatch {
            relative: rel,
            tolerance: VOLUME_TOL,
        });
    }
    let perim = perimeter_nearly_spherical(w, set, rule)?;
    let ball = ball_perimeter(w, r, n)?;
    let (l2_sq, grad_sq) = sobolev_norms(&set.u);
    let sym = symdiff_measure(
        StarShape::NearlySpherical(set),
        r,
        if euclidean { None } else { Some(w) },
        rule,
    )?;
    let (sup_u, sup_grad) = sample_w1inf(set, rule)?;
    let mut rep = StabilityReport {
        deficit: perim.value - ball.value,
        deficit_error: perim.quadrature_error_estimate + ball.quadrature_error_estimate,
        grad_sq,
        l2_sq,
        symdiff: sym.value,
        symdiff_error: sym.quadrature_error_estimate,
        ratio_fuglede: None,
        ratio_quant: None,
        ratio_quant_error: None,
        volume_relative_error: rel,
        volume_matched: true,
        sup_u,
        sup_grad,
        degenerate: false,
    };
    rep.ratios(r.powi(n as i32 - 1) * w.value(r));
    Ok(rep)
}

/// Competitors for [`quantitative_ratio`].
#[derive(Debug, Clone, Copy)]
pub enum Competitor<'a> {
    NearlySpherical(&'a NearlySphericalSet),
    /// `B_{ρ(ε)}(ε e_1)` with `ρ(ε)` from the volume constraint.
    Translated { eps: f64 },
}

/// `deficit / |E △ B_r|_w²` with error bars.
pub fn quantitative_ratio(
    w: &ConvexProfile,
    r: f64,
    n: usize,
    competitor: Competitor<'_>,
    rule: &SphereRule,
    rules: &AxisymmetricRules,
) -> Result<StabilityReport> {
    let weight = RadialWeight::exp_convex(w.clone());
    match competitor {
        Competitor::NearlySpherical(set) => fuglede_report(&weight, r, n, set, rule, false),
        Competitor::Translated { eps } => {
            let rho = rho_of_eps(w, r, n, eps, rules)?;
            let (p, v) = offcenter_ball_measures(w, eps, rho, n, rules)?;
            let (p0, v0) = offcenter_ball_measures(w, 0.0, r, n, rules)?;
            let rel = (v.value - v0.value).abs() / v0.value;
            if rel > VOLUME_TOL {
                return Err(LabError::VolumeMismatch {
                    relative: rel,
                    tolerance: VOLUME_TOL,
                });
            }
            let ball = OffCenterBall::new(n, eps, rho)?;
            let sym = symdiff_measure(StarShape::OffCenter(&ball), r, Some(&weight), rule)?;
            let mut rep = StabilityReport {
                deficit: p.value - p0.value,
                deficit_error: p.quadrature_error_estimate + p0.quadrature_error_estimate,
                grad_sq: 0.0,
                l2_sq: 0.0,
                symdiff: sym.value,
                symdiff_error: sym.quadrature_error_estimate,
                ratio_fuglede: None,
                ratio_quant: None,
                ratio_quant_error: None,
                volume_relative_error: rel,
                volume_matched: true,
                sup_u: (rho - r).abs() + eps,
                sup_grad: f64::NAN,
                degenerate: false,
            };
            rep.ratios(1.0);
            rep.ratio_fuglede = None;
            Ok(rep)
        }
    }
}

/// Finite-difference step for the translated-ball expansion.
pub const EXPANSION_STEP: f64 = 1e-3;
/// Tolerance on `|w''(r)|` for the degenerate hypothesis.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Second-order expansion of the translated-ball family at `ε = 0`, requiring
/// `w''(r) = 0`.
pub fn degenerate_expansion_check(
    w: &ConvexProfile,
    r: f64,
    n: usize,
    rules: &AxisymmetricRules,
) -> Result<ExperimentReport> {
    let curv = w.d2w(r);
    if curv.abs() >= DEGENERATE_TOL {
        return Err(LabError::Precondition(format!(
            "degenerate expansion needs |w''(r)| < {DEGENERATE_TOL:e}, got w''({r}) = {curv:e}"
        )));
    }
    translated_ball_expansion(w, r, n, rules, EXPANSION_STEP)
}

/// The same pipeline without the hypothesis check, for controls.
///
/// Reports `ρ'(0)` by a central difference, `ρ''(0)` by quadrature and by a
/// Richardson-extrapolated second difference, and the Richardson second
/// difference of `ε ↦ P_w(B_{ρ(ε)}(ε e_1))` with its error budget.
pub fn translated_ball_expansion(
    w: &ConvexProfile,
    r: f64,
    n: usize,
    rules: &AxisymmetricRules,
    h: f64,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("translated-ball-expansion");
    rep.param("weight", w.name());
    rep.param("r", r);
    rep.param("n", n);
    rep.param("h", h);
    rep.param("rules", rules);

    let rho = |e: f64| rho_of_eps(w, r, n, e, rules);
    let (r0, rp, rm, r2) = (rho(0.0)?, rho(h)?, rho(-h)?, rho(2.0 * h)?);
    let slope = (rp - rm) / (2.0 * h);

    let second = |f0: f64, f1: f64, f2: f64| {
        let d1 = 2.0 * (f1 - f0) / (h * h);
        let d2 = 2.0 * (f2 - f0) / (4.0 * h * h);
        let rich = (4.0 * d1 - d2) / 3.0;
        (rich, (d1 - rich).abs())
    };
    let (rho_fd, rho_trunc) = second(r0, rp, r2);
    let rho_noise = 2.0 * 4.0 * f64::EPSILON * r / (h * h);
    let rho_q = rho_second_derivative(w, r, n)?;

    let perim = |e: f64, radius: f64| -> Result<(f64, f64)> {
        let fine = offcenter_perimeter(w, e, radius, n, rules)?;
        let coarse = offcenter_perimeter(w, e, radius, n, &rules.coarse())?;
        Ok((fine, (fine - coarse).abs()))
    };
    let (p0, e0) = perim(0.0, r0)?;
    let (p1, e1) = perim(h, rp)?;
    let (p2, e2) = perim(2.0 * h, r2)?;
    let (pp_fd, pp_trunc) = second(p0, p1, p2);
    // dP/dρ along the family, for the propagated radius error
    let dp_drho = p0 * ((n as f64 - 1.0) / r + w.dw(r)).abs();
    let quad_noise = e0.max(e1).max(e2).max(4.0 * f64::EPSILON * p0);
    let pp_noise = 2.0 / (h * h) * (2.0 * quad_noise + 2.0 * dp_drho * 4.0 * f64::EPSILON * r) * 2.0;
    let pp_budget = pp_trunc + pp_noise;
    let pp_q = translated_perimeter_second_derivative(w, r, n)?;

    rep.scalar("rho_first_derivative_fd", slope, Some(4.0 * f64::EPSILON * r / h));
    rep.scalar("rho_second_derivative_quadrature", rho_q, None);
    rep.scalar("rho_second_derivative_fd", rho_fd, Some(rho_trunc + rho_noise));
    rep.scalar("perimeter_second_difference", pp_fd, Some(pp_budget));
    rep.scalar("perimeter_second_derivative_quadrature", pp_q, None);
    rep.scalar("perimeter_error_budget", pp_budget, None);

    let mut t = Table::new("translated_family", &["eps", "rho", "perimeter", "quadrature_error"]);
    t.push(vec![0.0, r0, p0, e0]);
    t.push(vec![h, rp, p1, e1]);
    t.push(vec![2.0 * h, r2, p2, e2]);
    rep.table(t);

    let rho_tol = 1e-3 * rho_q.abs().max(1.0 / r);
    rep.verdict(
        "rho_first_derivative_vanishes",
        slope.abs() <= 1e-6,
        format!("|rho'(0)| fd = {:.3e} <= 1e-6", slope.abs()),
    );
    rep.verdict(
        "rho_second_derivative_agrees",
        (rho_fd - rho_q).abs() <= rho_tol,
        format!(
            "fd {rho_fd:.9e} vs quadrature {rho_q:.9e}, |diff| {:.3e} <= {rho_tol:.3e}",
            (rho_fd - rho_q).abs()
        ),
    );
    rep.verdict(
        "perimeter_second_difference_vanishes",
        pp_fd.abs() <= pp_budget,
        format!("|P''| fd = {:.3e} vs budget {pp_budget:.3e}", pp_fd.abs()),
    );
    Ok(rep)
}

/// Quantitative ratio along `B_{ρ(ε)}(ε e_1)` for each `ε`; the verdicts check
/// that the ratio decreases monotonically and by at least `min_drop` overall.
pub fn translated_ratio_scan(
    w: &ConvexProfile,
    r: f64,
    n: usize,
    eps_values: &[f64],
    min_drop: f64,
    rule: &SphereRule,
    rules: &AxisymmetricRules,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("translated-ratio-scan");
    rep.param("weight", w.name());
    rep.param("r", r);
    rep.param("n", n);
    rep.param("eps", eps_values);
    let mut t = Table::new(
        "ratio_vs_eps",
        &["eps", "deficit", "deficit_error", "symdiff", "symdiff_error", "ratio_quant", "ratio_error"],
    );
    let mut ratios = Vec::new();
    for &eps in eps_values {
        let s = quantitative_ratio(w, r, n, Competitor::Translated { eps }, rule, rules)?;
        let q = s.ratio_quant.unwrap_or(f64::NAN);
        ratios.push(q);
        t.push(vec![
            eps,
            s.deficit,
            s.deficit_error,
            s.symdiff,
            s.symdiff_error,
            q,
            s.ratio_quant_error.unwrap_or(f64::NAN),
        ]);
    }
    rep.table(t);
    let mut order: Vec<usize> = (0..eps_values.len()).collect();
    order.sort_by(|a, b| eps_values[*b].total_cmp(&eps_values[*a]));
    let monotone = order.windows(2).all(|p| ratios[p[1]] < ratios[p[0]]);
    let (first, last) = (ratios[order[0]], ratios[*order.last().unwrap_or(&0)]);
    let drop = first / last;
    rep.scalar("ratio_drop", drop, None);
    rep.verdict(
        "ratio_decreases",
        monotone,
        "ratio_quant strictly decreasing as eps decreases",
    );
    rep.verdict(
        "ratio_drop",
        drop >= min_drop,
        format!("ratio(eps_max)/ratio(eps_min) = {drop:.3} >= {min_drop}"),
    );
    rep.verdict("ratios_positive", ratios.iter().all(|q| *q > 0.0), "all ratios > 0");
    Ok(rep)
}

/// Semi-axes `(r s, r s^{−1/(n−1)}, …)` with `s = 1 + t`.
pub fn sharpness_ellipsoid(r: f64, n: usize, t: f64) -> Result<Ellipsoid> {
    let s = 1.0 + t;
    let mut axes = vec![r * s];
    axes.extend(std::iter::repeat_n(r * s.powf(-1.0 / (n as f64 - 1.0)), n - 1));
    Ellipsoid::new(axes)
}

/// Uniform scale `λ` with `|λ E|_W = |B_r|_W`.
fn volume_scale(w: &RadialWeight, ell: &Ellipsoid, r: f64, rule: &SphereRule) -> Result<f64> {
    let n = ell.n();
    let target = ball_volume(w, r, n, false)?.value;
    let vol = |lam: f64| -> Result<f64> {
        Ok(ellipsoid_measures(w, &ell.scaled(lam), rule, false)?.1.value)
    };
    let (mut lo, mut hi) = (0.5, 2.0);
    if vol(lo)? > target || vol(hi)? < target {
        return Err(LabError::Solver("no volume bracket in [0.5, 2] for the ellipsoid scale".into()));
    }
    let mut lam = 1.0;
    for _ in 0..100 {
        let v = vol(lam)? - target;
        if v == 0.0 {
            return Ok(lam);
        }
        if v < 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        // d/dλ |λE| = ∫ λ^{n−1} R^n W(λR) dH
        let scaled = ell.scaled(lam);
        let d = rule.integrate(|x| {
            let rad = scaled.radial_function(x);
            rad.powi(n as i32) * w.value(rad) / lam
        })?;
        let mut next = lam - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lam).abs() <= 2.0 * f64::EPSILON {
            return Ok(next);
        }
        lam = next;
    }
    let resid = (vol(lam)? - target).abs() / target;
    if resid < 1e-12 {
        Ok(lam)
    } else {
        Err(LabError::Solver(format!("ellipsoid scale residual {resid:.3e}")))
    }
}

/// Deficit and `deficit / symdiff²` across volume-corrected ellipsoids.
///
/// Verdicts: the ratios for `t > 0` lie in a band `max/min ≤ band_limit`, and
/// consecutive halvings of `t` scale the deficit by a factor in `[0.2, 0.3]`.
pub fn ellipsoid_sharpness_scan(
    w: &RadialWeight,
    r: f64,
    n: usize,
    eccentricities: &[f64],
    band_limit: f64,
    rule: &SphereRule,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("ellipsoid-sharpness");
    rep.param("weight", w.name());
    rep.param("r", r);
    rep.param("n", n);
    rep.param("eccentricities", eccentricities);
    rep.param("resolution", rule.resolution);
    let ball = ball_perimeter(w, r, n)?.value;
    let mut t = Table::new(
        "ellipsoid_scan",
        &["t", "scale", "deficit", "deficit_error", "symdiff", "symdiff_error", "ratio"],
    );
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &ecc in eccentricities {
        if !(ecc >= 0.0) {
            return Err(LabError::Argument(format!("eccentricity must be >= 0, got {ecc}")));
        }
        let ell = sharpness_ellipsoid(r, n, ecc)?;
        let lam = if ecc == 0.0 { 1.0 } else { volume_scale(w, &ell, r, rule)? };
        let ell = ell.scaled(lam);
        let (p, _) = ellipsoid_measures(w, &ell, rule, false)?;
        let deficit = if ecc == 0.0 { 0.0 } else { p.value - ball };
        let sym = if ecc == 0.0 {
            MeasureValue::exact(0.0)
        } else {
            symdiff_measure(StarShape::Ellipsoid(&ell), r, Some(w), rule)?
        };
        let ratio = if sym.value > 0.0 { deficit / (sym.value * sym.value) } else { f64::NAN };
        t.push(vec![
            ecc,
            lam,
            deficit,
            p.quadrature_error_estimate,
            sym.value,
            sym.quadrature_error_estimate,
            ratio,
        ]);
        if ecc > 0.0 {
            rows.push((ecc, deficit, sym.value, ratio));
        }
    }
    rep.table(t);
    let ratios: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(*q), b.max(*q)));
    let band = hi / lo;
    let syms: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let span = syms.iter().cloned().fold(0.0, f64::max) / syms.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.scalar("ratio_min", lo, None);
    rep.scalar("ratio_max", hi, None);
    rep.scalar("band", band, None);
    rep.scalar("symdiff_span", span, None);
    rep.verdict(
        "ratio_band",
        lo > 0.0 && band <= band_limit,
        format!("ratios in [{lo:.6e}, {hi:.6e}], max/min = {band:.4} <= {band_limit}"),
    );
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut scaling_ok = true;
    let mut worst = 0.25f64;
    for pair in sorted.windows(2) {
        if (pair[1].0 * 2.0 - pair[0].0).abs() <= 1e-12 * pair[0].0 {
            let q = pair[1].1 / pair[0].1;
            scaling_ok &= (0.2..=0.3).contains(&q);
            if (q - 0.25).abs() > (worst - 0.25).abs() {
                worst = q;
            }
        }
    }
    rep.scalar("worst_halving_factor", worst, None);
    rep.verdict(
        "quadratic_deficit",
        scaling_ok,
        format!("deficit(t/2)/deficit(t) within [0.2, 0.3]; worst {worst:.4}"),
    );
    Ok(rep)
}

/// A seeded mean-free direction on `S^{n−1}` with degrees `1..=max_degree`,
/// coefficients decaying like `1/k²`.
pub fn random_direction(n: usize, max_degree: usize, seed: u64) -> Result<HarmonicCoefficients> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = HarmonicCoefficients::zeros(n, max_degree)?;
    let slots: Vec<(usize, usize)> = c.iter().map(|(k, i, _)| (k, i)).collect();
    for (k, i) in slots {
        if k > 0 {
            let v: f64 = rng.gen_range(-1.0..1.0);
            c.set(k, i, v / (k * k) as f64)?;
        }
    }
    Ok(c)
}

/// Rescales `u` so that `max(sup|u|, sup|∇_τ u|)` equals `target` on `rule`.
pub fn scale_to_w1inf(u: &HarmonicCoefficients, target: f64, rule: &SphereRule) -> Result<HarmonicCoefficients> {
    let (su, sg) = sample_w1inf(&NearlySphericalSet::new(1.0, u.clone())?, rule)?;
    let m = su.max(sg);
    if m == 0.0 {
        return Err(LabError::Argument("cannot rescale the zero function".into()));
    }
    Ok(u.scaled(target / m))
}

/// Second-variation prediction of `ratio_fuglede` for a single degree-`k`
/// mode with `W = e^w`: `½ (1 + (1 − n + r² w''(r)) / (k (k + n − 2)))`.
pub fn predicted_fuglede_ratio(w: &RadialWeight, r: f64, n: usize, k: usize) -> f64 {
    let lam = eigenvalue(n, k);
    0.5 * (1.0 + (1.0 - n as f64 + r * r * w.log_second_derivative(r)) / lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_sphere_rule;
    use std::f64::consts::PI;

    fn quad() -> RadialWeight {
        RadialWeight::exp_convex(ConvexProfile::Quadratic)
    }

    #[test]
    fn taylor_zero_weight() {
        let t = taylor_coefficients(&ConvexProfile::Zero, 1.3, 3).unwrap();
        assert!((t.a - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((t.b, t.c, t.d), (0.0, 0.0, 0.0));
        assert!(t.residual_first < 1e-15 && t.residual_second < 1e-15);
    }

    #[test]
    fn taylor_identities_hold() {
        for w in [ConvexProfile::Quadratic, ConvexProfile::CoshMinusOne, ConvexProfile::flat_shoulder(0.8).unwrap()] {
            for r in [0.5, 1.0, 2.0] {
                for n in [2, 3] {
                    let t = taylor_coefficients(&w, r, n).unwrap();
                    assert!(t.residual_first < 1e-10, "{w:?} {r} {n}: {t:?}");
                    assert!(t.residual_second < 1e-10, "{w:?} {r} {n}: {t:?}");
                }
            }
        }
    }

    #[test]
    fn taylor_coefficients_match_closed_form_for_quadratic() {
        // w = t², n = 2, r = 1: a = ∫ t e^{t²} = (e − 1)/2
        let t = taylor_coefficients(&ConvexProfile::Quadratic, 1.0, 2).unwrap();
        assert!((t.a - (std::f64::consts::E - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn volume_matching() {
        let rule = build_sphere_rule(2, 128).unwrap();
        let dir = HarmonicCoefficients::single(2, 4, 2, 1, 1.0).unwrap();
        let zero = volume_matched_perturbation(&quad(), 1.0, &dir, 0.0, &rule, false).unwrap();
        assert!(zero.u.is_zero());
        let set = volume_matched_perturbation(&quad(), 1.0, &dir, 0.01, &rule, false).unwrap();
        let v = volume_nearly_spherical(&quad(), &set, &rule, false).unwrap().value;
        let target = ball_volume(&quad(), 1.0, 2, false).unwrap().value;
        assert!((v - target).abs() < 1e-12 * target);
        assert!(set.u.get(0, 1).unwrap() < 0.0);
    }

    #[test]
    fn volume_matching_constant_is_second_order() {
        let rule = build_sphere_rule(2, 128).unwrap();
        let w = RadialWeight::exp_convex(ConvexProfile::Zero);
        let dir = HarmonicCoefficients::single(2, 4, 3, 2, 1.0).unwrap();
        let c = |a: f64| {
            volume_matched_perturbation(&w, 1.0, &dir, a, &rule, false)
                .unwrap()
                .u
                .get(0, 1)
                .unwrap()
        };
        let (c1, c2) = (c(1e-2), c(1e-3));
        // (1+u)² averages to 1 ⇒ c₀ ≈ −a²/(2√(2π)) · ‖Y‖²
        let expect = -1e-4 / (2.0 * (2.0 * PI).sqrt());
        assert!((c1 - expect).abs() < 1e-3 * expect.abs() + 1e-9);
        assert!((c1 / c2 - 100.0).abs() < 1.0);
    }

    #[test]
    fn fuglede_report_ball_and_mode() {
        let rule = build_sphere_rule(2, 256).unwrap();
        let ball = NearlySphericalSet::ball(2, 1.0, 4).unwrap();
        let rep = fuglede_report(&quad(), 1.0, 2, &ball, &rule, false).unwrap();
        assert_eq!(rep.deficit, 0.0);
        assert!(rep.ratio_fuglede.is_none() && rep.ratio_quant.is_none() && rep.degenerate);

        let dir = HarmonicCoefficients::single(2, 4, 2, 1, 1.0).unwrap();
        let set = volume_matched_perturbation(&quad(), 1.0, &dir, 1e-2, &rule, false).unwrap();
        let big = fuglede_report(&quad(), 1.0, 2, &set, &rule, false).unwrap();
        let ratio = big.ratio_fuglede.unwrap();
        assert!(ratio >= 0.125);
        let predicted = predicted_fuglede_ratio(&quad(), 1.0, 2, 2);
        assert!((ratio - predicted).abs() < 0.02 * predicted, "{ratio} vs {predicted}");
        let set = volume_matched_perturbation(&quad(), 1.0, &dir, 1e-3, &rule, false).unwrap();
        let small = fuglede_report(&quad(), 1.0, 2, &set, &rule, false).unwrap();
        let scale = small.deficit / big.deficit;
        assert!((scale - 1e-2).abs() < 0.05e-2);
    }

    #[test]
    fn fuglede_rejects_unmatched_volume() {
        let rule = build_sphere_rule(2, 64).unwrap();
        let set = NearlySphericalSet::new(1.0, HarmonicCoefficients::single(2, 2, 0, 1, 0.01).unwrap()).unwrap();
        assert!(matches!(
            fuglede_report(&quad(), 1.0, 2, &set, &rule, false),
            Err(LabError::VolumeMismatch { .. })
        ));
    }

    #[test]
    fn translated_ball_ratio_bounded_for_strictly_convex() {
        let rule = build_sphere_rule(2, 64).unwrap();
        let rules = AxisymmetricRules::default();
        let mut qs = Vec::new();
        for eps in [0.05, 0.02, 0.01] {
            let s = quantitative_ratio(&ConvexProfile::Quadratic, 1.0, 2, Competitor::Translated { eps }, &rule, &rules)
                .unwrap();
            qs.push(s.ratio_quant.unwrap());
        }
        assert!(qs.iter().all(|q| *q > 0.0));
        let (lo, hi) = qs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), q| (a.min(*q), b.max(*q)));
        assert!(hi / lo < 1.5, "{qs:?}");
        let s = quantitative_ratio(&ConvexProfile::Quadratic, 1.0, 2, Competitor::Translated { eps: 0.0 }, &rule, &rules)
            .unwrap();
        assert!(s.degenerate && s.ratio_quant.is_none());
    }

    #[test]
    fn degenerate_expansion_flat_shoulder() {
        let w = ConvexProfile::flat_shoulder(1.0).unwrap();
        let rep = degenerate_expansion_check(&w, 1.0, 2, &AxisymmetricRules::default()).unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.verdicts);
        assert!(matches!(
            degenerate_expansion_check(&ConvexProfile::Quadratic, 1.0, 2, &AxisymmetricRules::default()),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn expansion_detects_strict_convexity() {
        let rules = AxisymmetricRules::default();
        let rep = translated_ball_expansion(&ConvexProfile::Quadratic, 1.0, 2, &rules, EXPANSION_STEP).unwrap();
        let pp = rep.get_scalar("perimeter_second_difference").unwrap();
        let q = rep.get_scalar("perimeter_second_derivative_quadrature").unwrap();
        assert!(pp > 0.0);
        assert!(!rep.get_verdict("perimeter_second_difference_vanishes").unwrap().passed);
        assert!((pp - q).abs() < 1e-5 * q);
        assert!(rep.get_verdict("rho_second_derivative_agrees").unwrap().passed);
    }

    #[test]
    fn euclidean_translation_leaves_perimeter_unchanged() {
        let rules = AxisymmetricRules::default();
        let p0 = offcenter_perimeter(&ConvexProfile::Zero, 0.0, 1.0, 2, &rules).unwrap();
        for eps in [0.01, 0.1, 0.5] {
            let rho = rho_of_eps(&ConvexProfile::Zero, 1.0, 2, eps, &rules).unwrap();
            assert_eq!(rho, 1.0);
            let p = offcenter_perimeter(&ConvexProfile::Zero, eps, rho, 2, &rules).unwrap();
            assert!((p - p0).abs() < 1e-14);
        }
    }

    #[test]
    fn ellipsoid_scan_examples() {
        let rule = build_sphere_rule(2, 256).unwrap();
        let rep = ellipsoid_sharpness_scan(&quad(), 1.0, 2, &[0.0, 0.1, 0.05, 0.025], 2.0, &rule).unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.verdicts);
        let t = rep.get_table("ellipsoid_scan").unwrap();
        assert_eq!(t.rows[0][2], 0.0);
    }

    #[test]
    fn random_direction_is_deterministic_and_mean_free() {
        let a = random_direction(3, 5, 7).unwrap();
        assert_eq!(a, random_direction(3, 5, 7).unwrap());
        assert_ne!(a, random_direction(3, 5, 8).unwrap());
        assert_eq!(a.get(0, 1).unwrap(), 0.0);
        let rule = build_sphere_rule(3, 32).unwrap();
        let s = scale_to_w1inf(&a, 1e-2, &rule).unwrap();
        let (su, sg) = sample_w1inf(&NearlySphericalSet::new(1.0, s).unwrap(), &rule).unwrap();
        assert!((su.max(sg) - 1e-2).abs() < 1e-15);
    }
}
