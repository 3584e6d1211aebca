//! Power weights `|x|^p` with `p` very negative: the deficit on star-shaped
//! sets, the ball-union counterexample, the origin density of that union, and
//! the divergence of `P_p` for boundaries through the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::{build_sphere_rule, GaussLegendre, SphereRule, Summation};
use crate::report::{ExperimentReport, Table};
use crate::shapes::{build_counterexample, BallUnion, CounterexampleParams, NearlySphericalSet};
use crate::stability::{fuglede_report, StabilityReport};
use crate::weights::RadialWeight;
use crate::{unit_ball_volume, unit_sphere_area};

/// Deficit report for `P_p` plus the divergence-theorem comparison quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegpowerReport {
    pub stability: StabilityReport,
    /// `|E ∖ B_r|`.
    pub outside_volume: f64,
    /// `r̄ = (r^n + |E ∖ B_r| / ω_n)^{1/n}`.
    pub rbar: f64,
    /// `(n−1+p) ∫_{B_r̄ ∖ B_r} |x|^{p−1} dx = n ω_n (r̄^{n+p−1} − r^{n+p−1})`.
    pub divergence_bound: f64,
}

/// `P_p(E) − P_p(B_r)` for a nearly spherical `E` with `|E| = |B_r|`.
pub fn negpower_deficit(p: f64, set: &NearlySphericalSet, rule: &SphereRule) -> Result<NegpowerReport> {
    let n = set.n;
    let m = n as f64;
    if !(p < -m - 1.0) {
        return Err(LabError::Argument(format!("negpower deficit needs p < -n-1 = {}, got {p}", -m - 1.0)));
    }
    let samples = set.sample(rule)?;
    let sup = samples.sup_abs();
    if sup >= 1.0 {
        return Err(LabError::Domain(format!(
            "origin is not interior: r(1 - sup|u|) = {} <= 0",
            set.radius * (1.0 - sup)
        )));
    }
    let w = RadialWeight::power(p);
    let r = set.radius;
    let stability = fuglede_report(&w, r, n, set, rule, true)?;
    let k = n as i32;
    let outside: Vec<f64> = samples
        .values
        .iter()
        .map(|u| ((r * (1.0 + u)).powi(k) - r.powi(k)).max(0.0) / m)
        .collect();
    let outside_volume = rule.integrate_values(&outside)?;
    let rbar = (r.powi(k) + outside_volume / unit_ball_volume(n)).powf(1.0 / m);
    let e = m + p - 1.0;
    let divergence_bound = unit_sphere_area(n) * (rbar.powf(e) - r.powf(e));
    Ok(NegpowerReport {
        stability,
        outside_volume,
        rbar,
        divergence_bound,
    })
}

/// Closed-form bounds of the counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub r: f64,
    pub count: usize,
    pub seed: u64,
    /// `n − 1 + p/α`.
    pub exponent: f64,
    /// `Σ_{i<N} n ω_n r_i^{n−1+p/α}`.
    pub upper_partial: f64,
    /// `Σ_{i≥N} n ω_n r_i^{n−1+p/α}` (geometric, exact).
    pub upper_tail: f64,
    /// `2^{(n−1+p)/n} n ω_n r^{n−1+p}`.
    pub lower: f64,
    /// `2 ω_n r^n`.
    pub volume_bound: f64,
    /// `U + tail < L`: the union beats the ball of the same volume.
    pub inequality_fails: bool,
    /// `0 < r < 2^{−α}`, required for the construction itself.
    pub construction_admissible: bool,
    /// Radius below which `U + tail < L`.
    pub threshold_r: f64,
}

fn check_counterexample_params(n: usize, p: f64, alpha: f64) -> Result<()> {
    let m = n as f64;
    if n < 2 || !(p < -m - 1.0) {
        return Err(LabError::Argument(format!("counterexample needs n >= 2 and p < -n-1, got n={n}, p={p}")));
    }
    let lb = CounterexampleParams::alpha_lower_bound(n, p);
    if !(alpha > lb) {
        return Err(LabError::Argument(format!("alpha must exceed max(1, -p/(n-1)) = {lb}, got {alpha}")));
    }
    Ok(())
}

/// `r*` with `C r*^{n−1+p/α} = 2^{(n−1+p)/n} n ω_n r*^{n−1+p}` for the full series.
pub fn counterexample_threshold(n: usize, p: f64, alpha: f64) -> Result<f64> {
    check_counterexample_params(n, p, alpha)?;
    let m = n as f64;
    let e = m - 1.0 + p / alpha;
    let q = 2f64.powf(-e / m);
    let gap = -p * (1.0 - 1.0 / alpha);
    Ok((2f64.powf((m - 1.0 + p) / m) * (1.0 - q)).powf(1.0 / gap))
}

/// Evaluates the counterexample bounds for any `r > 0`.
pub fn counterexample_demo(n: usize, p: f64, alpha: f64, r: f64, count: usize, seed: u64) -> Result<CounterexampleReport> {
    check_counterexample_params(n, p, alpha)?;
    if !(r > 0.0) || count == 0 {
        return Err(LabError::Argument(format!("need r > 0 and N >= 1, got r={r}, N={count}")));
    }
    let m = n as f64;
    let area = unit_sphere_area(n);
    let e = m - 1.0 + p / alpha;
    let q = 2f64.powf(-e / m);
    let mut partial = Summation::default();
    for i in 0..count {
        partial.add(area * (r * 2f64.powf(-(i as f64) / m)).powf(e));
    }
    let upper_partial = partial.value();
    let upper_tail = area * r.powf(e) * q.powi(count as i32) / (1.0 - q);
    let lower = 2f64.powf((m - 1.0 + p) / m) * area * r.powf(m - 1.0 + p);
    Ok(CounterexampleReport {
        n,
        p,
        alpha,
        r,
        count,
        seed,
        exponent: e,
        upper_partial,
        upper_tail,
        lower,
        volume_bound: 2.0 * unit_ball_volume(n) * r.powi(n as i32),
        inequality_fails: upper_partial + upper_tail < lower,
        construction_admissible: r < 2f64.powf(-alpha),
        threshold_r: counterexample_threshold(n, p, alpha)?,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Linear least squares `y ≈ a + b x`; returns `(a, b, max |residual|)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let b = slope(xs, ys);
    let k = xs.len() as f64;
    let a = (ys.iter().sum::<f64>() - b * xs.iter().sum::<f64>()) / k;
    let res = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).abs()).fold(0.0, f64::max);
    (a, b, res)
}

/// Scans `r`, reporting the bounds, the threshold and the log-log slopes.
///
/// Where the construction is admissible the union is built and each of the
/// first `check_balls` balls has its weighted perimeter compared with the
/// series term `n ω_n r_i^{n−1+p/α}` by sphere quadrature.
pub fn counterexample_scan(
    n: usize,
    p: f64,
    alpha: f64,
    r_values: &[f64],
    count: usize,
    seed: u64,
    check_balls: usize,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("counterexample");
    rep.param("n", n);
    rep.param("p", p);
    rep.param("alpha", alpha);
    rep.param("r_values", r_values);
    rep.param("count", count);
    rep.param("seed", seed);
    let mut t = Table::new(
        "counterexample_scan",
        &["r", "upper_partial", "upper_tail", "lower", "volume_bound", "inequality_fails", "admissible"],
    );
    let mut reports = Vec::new();
    for &r in r_values {
        let c = counterexample_demo(n, p, alpha, r, count, seed)?;
        t.push(vec![
            r,
            c.upper_partial,
            c.upper_tail,
            c.lower,
            c.volume_bound,
            c.inequality_fails as u8 as f64,
            c.construction_admissible as u8 as f64,
        ]);
        reports.push(c);
    }
    rep.table(t);
    let threshold = counterexample_threshold(n, p, alpha)?;
    rep.scalar("threshold_r", threshold, None);
    let largest_failing = reports
        .iter()
        .filter(|c| c.inequality_fails)
        .map(|c| c.r)
        .fold(f64::NAN, f64::max);
    rep.scalar("largest_scanned_r_with_failure", largest_failing, None);
    let e = reports.first().map(|c| c.exponent).unwrap_or(f64::NAN);

    let mut sorted = reports.clone();
    sorted.sort_by(|a, b| b.r.total_cmp(&a.r));
    let mut seen_fail = false;
    let mut monotone = true;
    for c in &sorted {
        if seen_fail && !c.inequality_fails {
            monotone = false;
        }
        seen_fail |= c.inequality_fails;
    }
    rep.verdict("monotone_in_r", monotone, "once U + tail < L, it stays so for smaller r");
    let below: Vec<&CounterexampleReport> = reports.iter().filter(|c| c.r < threshold).collect();
    rep.verdict(
        "fails_below_threshold",
        !below.is_empty() && below.iter().all(|c| c.inequality_fails),
        format!("U + tail < L for every scanned r below r* = {threshold:.6e}"),
    );
    rep.verdict(
        "volume_bound",
        reports.iter().all(|c| c.volume_bound > 0.0),
        "2 omega_n r^n bounds the union volume",
    );

    if reports.len() >= 2 {
        let lx: Vec<f64> = reports.iter().map(|c| c.r.ln()).collect();
        let lu: Vec<f64> = reports.iter().map(|c| (c.upper_partial + c.upper_tail).ln()).collect();
        let ll: Vec<f64> = reports.iter().map(|c| c.lower.ln()).collect();
        let (su, sl) = (slope(&lx, &lu), slope(&lx, &ll));
        let el = n as f64 - 1.0 + p;
        rep.scalar("slope_upper", su, None);
        rep.scalar("slope_lower", sl, None);
        rep.verdict(
            "slope_upper",
            (su - e).abs() <= 0.01 * e.abs(),
            format!("slope {su:.6} vs n-1+p/alpha = {e}"),
        );
        rep.verdict(
            "slope_lower",
            (sl - el).abs() <= 0.01 * el.abs(),
            format!("slope {sl:.6} vs n-1+p = {el}"),
        );
    }

    let mut build = Table::new("construction", &["r", "ball", "radius", "center_norm", "perimeter", "bound"]);
    let mut bounded = true;
    let mut tre = true;
    for c in reports.iter().filter(|c| c.construction_admissible) {
        let mut params = CounterexampleParams::new(n, p, alpha, c.r);
        params.count = count;
        params.seed = seed;
        let union = build_counterexample(params)?;
        tre &= union.condition_holds;
        if n <= 3 && check_balls > 0 {
            let rule = build_sphere_rule(n, if n == 2 { 256 } else { 48 })?;
            for (i, b) in union.balls.iter().take(check_balls).enumerate() {
                let perim = ball_power_perimeter(&b.center, b.radius, p, &rule)?;
                let bound = unit_sphere_area(n) * b.radius.powf(c.exponent);
                bounded &= perim <= bound;
                build.push(vec![c.r, i as f64, b.radius, b.center_norm(), perim, bound]);
            }
        }
    }
    rep.table(build);
    rep.verdict("construction_condition", tre, "|q_i|^alpha > 2^alpha r_i for every built ball");
    rep.verdict("per_ball_perimeter_bound", bounded, "P_p(B_{r_i}(q_i)) <= n omega_n r_i^{n-1+p/alpha}");
    Ok(rep)
}

/// `∫_{∂B_ρ(q)} |x|^p dH^{n−1}` by sphere quadrature.
pub fn ball_power_perimeter(center: &[f64], radius: f64, p: f64, rule: &SphereRule) -> Result<f64> {
    let n = rule.n;
    let v = rule.integrate(|x| {
        let d2: f64 = (0..n).map(|k| (center[k] + radius * x[k]).powi(2)).sum();
        d2.powf(0.5 * p)
    })?;
    Ok(radius.powi(n as i32 - 1) * v)
}

/// Balls sorted by `|q| − ρ`, for fast membership tests by radius.
struct ShellIndex<'a> {
    balls: Vec<(f64, usize)>,
    union: &'a BallUnion,
    max_diameter: f64,
}

impl<'a> ShellIndex<'a> {
    fn new(union: &'a BallUnion) -> Self {
        let mut balls: Vec<(f64, usize)> = union
            .balls
            .iter()
            .enumerate()
            .map(|(i, b)| (b.center_norm() - b.radius, i))
            .collect();
        balls.sort_by(|a, b| a.0.total_cmp(&b.0));
        let max_diameter = union.balls.iter().map(|b| 2.0 * b.radius).fold(0.0, f64::max);
        Self {
            balls,
            union,
            max_diameter,
        }
    }

    fn contains(&self, x: &[f64], norm: f64) -> bool {
        let hi = self.balls.partition_point(|(lo, _)| *lo < norm);
        let lo = self.balls[..hi].partition_point(|(l, _)| *l < norm - self.max_diameter);
        self.balls[lo..hi].iter().any(|(_, i)| self.union.balls[*i].contains(x))
    }
}

/// Default number of radial strata for the density estimate.
pub const DENSITY_STRATA: usize = 64;
const Z95: f64 = 1.96;

/// Monte Carlo estimate of `|E ∩ B_ρ| / (ω_n ρ^n)` for each `ρ`, against the
/// bound `2 ρ^{n(α−1)}`.
///
/// Points are drawn in equal-volume radial shells of `B_ρ`, one seeded stream
/// per shell; hit counts are integers, so the result does not depend on the
/// thread schedule. Fails with an accuracy error if `mc_samples` cannot reach
/// `ci_target` even in the worst case (`0.98/√N`).
pub fn origin_density_curve(
    union: &BallUnion,
    alpha: f64,
    rho_samples: &[f64],
    mc_samples: usize,
    seed: u64,
    ci_target: f64,
) -> Result<ExperimentReport> {
    let n = union.n();
    let worst = Z95 * 0.5 / (mc_samples as f64).sqrt();
    if mc_samples == 0 || worst > ci_target {
        return Err(LabError::Accuracy(format!(
            "{mc_samples} samples give a worst-case 95% half-width {worst:.3e} above the target {ci_target:.3e}"
        )));
    }
    let mut rep = ExperimentReport::new("origin-density");
    rep.param("n", n);
    rep.param("alpha", alpha);
    rep.param("rho", rho_samples);
    rep.param("mc_samples", mc_samples);
    rep.param("seed", seed);
    rep.param("strata", DENSITY_STRATA);
    let index = ShellIndex::new(union);
    let per = mc_samples.div_ceil(DENSITY_STRATA);
    let mut t = Table::new("origin_density", &["rho", "estimate", "half_width", "bound", "samples"]);
    let mut all = true;
    for (ri, &rho) in rho_samples.iter().enumerate() {
        if !(rho > 0.0) {
            return Err(LabError::Argument(format!("rho samples must be positive, got {rho}")));
        }
        let hits: Vec<u64> = (0..DENSITY_STRATA)
            .into_par_iter()
            .map(|k| {
                let stream = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((ri as u64) << 32)
                    .wrapping_add(k as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(stream);
                let mut count = 0u64;
                let mut x = vec![0.0; n];
                for _ in 0..per {
                    let frac: f64 = (k as f64 + rng.gen::<f64>()) / DENSITY_STRATA as f64;
                    let s = rho * frac.powf(1.0 / n as f64);
                    loop {
                        let mut nn = 0.0f64;
                        for xi in x.iter_mut() {
                            *xi = rng.gen_range(-1.0..1.0);
                            nn += *xi * *xi;
                        }
                        if nn > 1e-12 && nn <= 1.0 {
                            let scale = s / nn.sqrt();
                            x.iter_mut().for_each(|xi| *xi *= scale);
                            break;
                        }
                    }
                    if index.contains(&x, s) {
                        count += 1;
                    }
                }
                count
            })
            .collect();
        let total = (per * DENSITY_STRATA) as f64;
        let hit_sum: u64 = hits.iter().sum();
        let estimate = hit_sum as f64 / total;
        let var: f64 = hits
            .iter()
            .map(|h| {
                let pk = *h as f64 / per as f64;
                pk * (1.0 - pk) / per as f64
            })
            .sum::<f64>()
            / (DENSITY_STRATA * DENSITY_STRATA) as f64;
        let half = if hit_sum == 0 { 3.0 / total } else { Z95 * var.sqrt() };
        let bound = 2.0 * rho.powf(n as f64 * (alpha - 1.0));
        all &= estimate <= (bound + half).min(1.0);
        t.push(vec![rho, estimate, half, bound, total]);
    }
    rep.table(t);
    rep.verdict(
        "density_below_bound",
        all,
        "estimate <= 2 rho^{n(alpha-1)} + half-width at every rho",
    );
    Ok(rep)
}

/// Boundaries through the origin used by [`divergence_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ProbeShape {
    /// A hyperplane through the origin.
    Hyperplane,
    /// The sphere of radius `radius` centered at `radius e_1`.
    TangentSphere { radius: f64 },
}

/// `∫_{∂E ∩ (B_Δ ∖ B_δ)} |x|^p dH^{n−1}`.
pub fn truncated_power_perimeter(shape: ProbeShape, n: usize, p: f64, delta: f64, delta_max: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < delta_max) {
        return Err(LabError::Argument(format!("need 0 < delta < delta_max, got {delta}, {delta_max}")));
    }
    let m = n as f64;
    let sphere = if n == 2 { 2.0 } else { unit_sphere_area(n - 1) };
    match shape {
        ProbeShape::Hyperplane => {
            let e = m - 1.0 + p;
            Ok(if e == 0.0 {
                sphere * (delta_max / delta).ln()
            } else {
                sphere * (delta_max.powf(e) - delta.powf(e)) / e
            })
        }
        ProbeShape::TangentSphere { radius } => {
            if !(delta_max <= 2.0 * radius) {
                return Err(LabError::DegenerateShape(format!(
                    "delta_max = {delta_max} exceeds the sphere diameter {}",
                    2.0 * radius
                )));
            }
            // distance s from the origin; sin φ = (s/R)√(1 − s²/4R²), dφ = ds / (R√(1 − s²/4R²))
            let integrand = |s: f64| {
                let c = (1.0 - s * s / (4.0 * radius * radius)).max(0.0).sqrt();
                let sin_phi = s / radius * c;
                s.powf(p) * sphere * radius.powi(n as i32 - 1) * sin_phi.powi(n as i32 - 2) / (radius * c)
            };
            let (a, b) = (delta.ln(), delta_max.ln());
            let panels = ((b - a) / 0.25).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            let gl = GaussLegendre::of_order(20);
            let mut s = Summation::default();
            for k in 0..panels {
                let y0 = a + k as f64 * h;
                s.add(gl.integrate(y0, y0 + h, |y| {
                    let t = y.exp();
                    t * integrand(t)
                }));
            }
            Ok(s.value())
        }
    }
}

/// Truncated weighted perimeters over `δ` and the fitted growth law.
///
/// For `p < 1 − n` the log-log slope of `I(δ)` must equal `n − 1 + p` within
/// 2%. For `p = 1 − n` the growth is logarithmic: `I(δ)` is fitted linearly
/// in `ln δ`, and the slope must match `−|S^{n−2}|` within 2%.
pub fn divergence_probe(
    p: f64,
    n: usize,
    shape: ProbeShape,
    delta_samples: &[f64],
    delta_max: f64,
) -> Result<ExperimentReport> {
    let m = n as f64;
    if p > 1.0 - m {
        return Err(LabError::Argument(format!("divergence probe needs p <= 1-n = {}, got {p}", 1.0 - m)));
    }
    if delta_samples.len() < 2 {
        return Err(LabError::Argument("divergence probe needs at least two delta samples".into()));
    }
    let mut rep = ExperimentReport::new("divergence-probe");
    rep.param("p", p);
    rep.param("n", n);
    rep.param("shape", shape);
    rep.param("delta", delta_samples);
    rep.param("delta_max", delta_max);
    let mut t = Table::new("divergence_probe", &["delta", "truncated_perimeter"]);
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for &d in delta_samples {
        let v = truncated_power_perimeter(shape, n, p, d, delta_max)?;
        t.push(vec![d, v]);
        xs.push(d.ln());
        vals.push(v);
    }
    rep.table(t);
    let e = m - 1.0 + p;
    if e == 0.0 {
        let (_, b, res) = linear_fit(&xs, &vals);
        let sphere = if n == 2 { 2.0 } else { unit_sphere_area(n - 1) };
        let ls: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        rep.scalar("log_slope", b, None);
        rep.scalar("power_slope", slope(&xs, &ls), None);
        rep.scalar("log_fit_residual", res, None);
        rep.verdict(
            "logarithmic_divergence",
            (b + sphere).abs() <= 0.02 * sphere,
            format!("I(delta) ~ {b:.6} ln(delta); expected slope {}", -sphere),
        );
    } else {
        let ls: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        let s = slope(&xs, &ls);
        rep.scalar("slope", s, None);
        rep.scalar("expected_slope", e, None);
        rep.verdict(
            "slope_matches",
            (s - e).abs() <= 0.02 * e.abs(),
            format!("log-log slope {s:.6} vs n-1+p = {e}"),
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::HarmonicCoefficients;
    use crate::quadrature::integrate_adaptive;
    use crate::stability::volume_matched_perturbation;
    use std::f64::consts::PI;

    fn matched(amp: f64) -> NearlySphericalSet {
        let rule = build_sphere_rule(2, 256).unwrap();
        let dir = HarmonicCoefficients::single(2, 4, 2, 1, 1.0).unwrap();
        volume_matched_perturbation(&RadialWeight::power(-4.0), 1.0, &dir, amp, &rule, true).unwrap()
    }

    #[test]
    fn deficit_examples() {
        let rule = build_sphere_rule(2, 256).unwrap();
        let ball = NearlySphericalSet::ball(2, 1.0, 4).unwrap();
        let rep = negpower_deficit(-4.0, &ball, &rule).unwrap();
        assert_eq!(rep.stability.deficit, 0.0);
        assert_eq!(rep.divergence_bound, 0.0);

        let a = negpower_deficit(-4.0, &matched(1e-2), &rule).unwrap();
        assert!(a.stability.deficit > 0.0);
        assert!(a.stability.ratio_quant.unwrap() > 0.0);
        assert!(a.divergence_bound < 0.0 && a.rbar > 1.0);
        let b = negpower_deficit(-4.0, &matched(5e-3), &rule).unwrap();
        let q = b.stability.deficit / a.stability.deficit;
        assert!((q - 0.25).abs() < 0.025, "{q}");
        assert!(negpower_deficit(-2.5, &ball, &rule).is_err());
    }

    #[test]
    fn counterexample_bounds() {
        let c = counterexample_demo(2, -6.0, 8.0, 1e-3, 200, 1).unwrap();
        assert!(c.inequality_fails && c.construction_admissible);
        assert!((c.exponent - 0.25).abs() < 1e-15);
        assert!(c.upper_tail > 0.0 && c.upper_partial > 0.0);
        assert!((c.volume_bound - 2.0 * PI * 1e-6).abs() < 1e-20);
        // threshold separates pass from fail
        let t = c.threshold_r;
        assert!(counterexample_demo(2, -6.0, 8.0, 0.99 * t, 200, 1).unwrap().inequality_fails);
        assert!(!counterexample_demo(2, -6.0, 8.0, 1.01 * t, 200, 1).unwrap().inequality_fails);
        assert!(counterexample_demo(2, -6.0, 4.0, 1e-3, 200, 1).is_err());
    }

    #[test]
    fn counterexample_scan_examples() {
        let rep = counterexample_scan(2, -6.0, 8.0, &[1e-1, 1e-2, 1e-3], 200, 5, 20).unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.verdicts);
        let rep = counterexample_scan(2, -4.0, 8.0, &[1.0, 1e-1, 1e-2, 1e-3], 200, 5, 20).unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.verdicts);
        assert!((rep.get_scalar("threshold_r").unwrap() - 0.439).abs() < 1e-3);
    }

    #[test]
    fn density_examples() {
        let mut params = CounterexampleParams::new(2, -4.0, 8.0, 1e-3);
        params.seed = 11;
        let union = build_counterexample(params).unwrap();
        let rep = origin_density_curve(&union, 8.0, &[0.1, 0.01], 1_000_000, 3, 1e-2).unwrap();
        assert!(rep.all_passed());
        let t = rep.get_table("origin_density").unwrap();
        assert_eq!(t.rows[0][1], 0.0);
        // the bound drops by 10^{n(α−1)} per decade of ρ
        assert!((t.rows[0][3] / t.rows[1][3] - 1e14).abs() < 1e14 * 1e-12);
        // containment: a ball around every center covers a positive fraction
        let b = &union.balls[0];
        let rho = b.center_norm() + b.radius + 1e-9;
        let rep = origin_density_curve(&union, 8.0, &[rho], 200_000, 3, 1e-2).unwrap();
        let est = rep.get_table("origin_density").unwrap().rows[0][1];
        assert!(est < 1.0);
        assert!(origin_density_curve(&union, 8.0, &[0.1], 100, 3, 1e-3).is_err());
    }

    #[test]
    fn density_is_deterministic() {
        let union = build_counterexample(CounterexampleParams::new(2, -4.0, 8.0, 1e-3)).unwrap();
        let a = origin_density_curve(&union, 8.0, &[0.5], 100_000, 9, 1e-2).unwrap();
        let b = origin_density_curve(&union, 8.0, &[0.5], 100_000, 9, 1e-2).unwrap();
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn hyperplane_closed_form() {
        let v = truncated_power_perimeter(ProbeShape::Hyperplane, 2, -4.0, 0.1, 1.0).unwrap();
        // 2 ∫_δ^Δ t^{-4} dt
        assert!((v - 2.0 * (1e3 - 1.0) / 3.0).abs() < 1e-10);
        let deltas = [1e-2, 5e-3, 2e-3, 1e-3];
        let rep = divergence_probe(-4.0, 2, ProbeShape::Hyperplane, &deltas, 1.0).unwrap();
        assert!(rep.all_passed());
        let s = rep.get_scalar("slope").unwrap();
        assert!((s + 3.0).abs() < 1e-3);
    }

    #[test]
    fn tangent_circle_matches_arc_quadrature() {
        // circle |x − e_1| = 1: x(φ) = (1 − cos φ, sin φ), |x| = 2 sin(φ/2)
        let (d, dm) = (0.01, 0.5);
        let (a, b) = (2.0 * (d / 2.0f64).asin(), 2.0 * (dm / 2.0f64).asin());
        let (oracle, _) = integrate_adaptive(|phi| 2.0 * (2.0 * (phi / 2.0).sin()).powf(-4.0), a, b, &[], 1e-14);
        let v = truncated_power_perimeter(ProbeShape::TangentSphere { radius: 1.0 }, 2, -4.0, d, dm).unwrap();
        assert!((v - oracle).abs() < 1e-10 * oracle);
        let rep = divergence_probe(-4.0, 2, ProbeShape::TangentSphere { radius: 1.0 }, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4], 0.5)
            .unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.scalars);
    }

    #[test]
    fn tangent_sphere_in_three_dimensions() {
        // sphere |x − e_1| = 1 in R^3: area element 2π sin φ dφ
        let (d, dm) = (0.01, 0.5);
        let (a, b) = (2.0 * (d / 2.0f64).asin(), 2.0 * (dm / 2.0f64).asin());
        let (oracle, _) = integrate_adaptive(
            |phi| 2.0 * PI * phi.sin() * (2.0 * (phi / 2.0).sin()).powf(-5.0),
            a,
            b,
            &[],
            1e-14,
        );
        let v = truncated_power_perimeter(ProbeShape::TangentSphere { radius: 1.0 }, 3, -5.0, d, dm).unwrap();
        assert!((v - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn logarithmic_case() {
        let rep = divergence_probe(-1.0, 2, ProbeShape::TangentSphere { radius: 1.0 }, &[1e-2, 1e-3, 1e-4, 1e-5], 0.1)
            .unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.scalars);
        assert!(rep.get_scalar("power_slope").unwrap().abs() < 0.5);
        assert!(divergence_probe(0.5, 2, ProbeShape::Hyperplane, &[1e-2, 1e-3], 1.0).is_err());
    }
}
