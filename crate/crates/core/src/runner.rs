//! Runs a configured experiment and writes its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, WeightChoice};
use crate::error::{LabError, Result};
use crate::harmonics::HarmonicCoefficients;
use crate::measures::{divergence_identities, AxisymmetricRules};
use crate::negpower::{counterexample_scan, divergence_probe, negpower_deficit, origin_density_curve, ProbeShape};
use crate::penalized::{evaluate_j, minimize_j, DescentOptions, DescentStatus, PenalizedFunctional};
use crate::profile::{check_profile_inequality, Profile};
use crate::quadrature::SphereRule;
use crate::report::{ExperimentReport, Table};
use crate::shapes::{build_counterexample, CounterexampleParams, NearlySphericalSet};
use crate::stability::{
    degenerate_expansion_check, ellipsoid_sharpness_scan, fuglede_report, predicted_fuglede_ratio, random_direction,
    scale_to_w1inf, taylor_coefficients, translated_ratio_scan, volume_matched_perturbation,
};
use crate::weights::{check_admissible, symmetric_grid};

/// One catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub module: &'static str,
    pub description: &'static str,
    /// The result the experiment probes.
    pub anchor: &'static str,
    /// Tables written as `<table>.csv` and their columns.
    pub csv: &'static [(&'static str, &'static str)],
}

const CATALOG: [CatalogEntry; 10] = [
    CatalogEntry {
        name: "fuglede",
        module: "stability_lab",
        description: "Deficit and Fuglede ratio for seeded volume-matched nearly spherical sets",
        anchor: "Fuglede-type estimate for nearly spherical sets",
        csv: &[
            (
                "fuglede_samples",
                "seed, deficit, deficit_error, grad_sq, ratio_fuglede, ratio_quant, symdiff, sup_u, sup_grad, volume_relative_error",
            ),
            ("amplitude_scaling", "seed, amplitude, deficit, deficit_over_amplitude_sq"),
        ],
    },
    CatalogEntry {
        name: "taylor-identities",
        module: "stability_lab",
        description: "Taylor coefficients of the ball and both integration-by-parts identities, plus the two divergence identities",
        anchor: "Taylor coefficients a, b, c, d and the ball divergence identities",
        csv: &[
            ("taylor", "weight, n, r, a, b, c, d, residual_first, residual_second"),
            ("divergence", "weight, n, r, lhs_first, rhs_first, residual_first, lhs_second, rhs_second, residual_second"),
        ],
    },
    CatalogEntry {
        name: "degenerate-ratio",
        module: "stability_lab",
        description: "Translated balls for a weight with w''(r) = 0: expansion at eps = 0 and the ratio-vs-eps table",
        anchor: "Necessity of w''(r) > 0",
        csv: &[
            ("expansion.translated_family", "eps, rho, perimeter, quadrature_error"),
            ("ratio.ratio_vs_eps", "eps, deficit, deficit_error, symdiff, symdiff_error, ratio_quant, ratio_error"),
        ],
    },
    CatalogEntry {
        name: "ellipsoid-sharpness",
        module: "stability_lab",
        description: "Deficit over squared asymmetry along volume-corrected ellipsoids",
        anchor: "Sharpness of the quadratic exponent via ellipsoids",
        csv: &[("ellipsoid_scan", "t, scale, deficit, deficit_error, symdiff, symdiff_error, ratio")],
    },
    CatalogEntry {
        name: "penalized-min",
        module: "penalized_min",
        description: "Thresholds, sampled sets and gradient descents for the penalized functional J",
        anchor: "Penalized functional and its explicit thresholds",
        csv: &[
            ("sampled_sets", "seed, j, j_ball, sup_u"),
            ("radial_reduction", "rho, f"),
            ("descent_summary", "seed, initial_objective, final_objective, final_sup_u, steps, status (0 converged, 1 stalled, 2 max steps)"),
            ("descent.seed<k>.descent_trace", "step, objective, grad_norm, sup_u"),
        ],
    },
    CatalogEntry {
        name: "profile-checks",
        module: "profile",
        description: "Psi(Phi(s)) = s, the Psi' identity and the profile inequality",
        anchor: "Isoperimetric profile Phi, its inverse Psi and the profile inequality",
        csv: &[
            ("psi_checks", "s, t, psi_error, psi_derivative, psi_derivative_fd, derivative_error"),
            ("profile_inequality", "t, psi, bound, ratio"),
        ],
    },
    CatalogEntry {
        name: "negpower-deficit",
        module: "negpower_lab",
        description: "Deficit of P_p on volume-matched star-shaped sets with p < -n-1",
        anchor: "Local minimality of centered balls for |x|^p, p < -n-1",
        csv: &[(
            "negpower_samples",
            "seed, amplitude, deficit, deficit_error, symdiff, ratio_quant, outside_volume, divergence_bound",
        )],
    },
    CatalogEntry {
        name: "counterexample",
        module: "negpower_lab",
        description: "Ball-union counterexample: perimeter series, ball lower bound, r-threshold and origin density",
        anchor: "Ball-union counterexample for negative powers",
        csv: &[
            ("counterexample_scan", "r, upper_partial, upper_tail, lower, volume_bound, inequality_fails, admissible"),
            ("construction", "r, ball, radius, center_norm, perimeter, bound"),
            ("density.origin_density", "rho, estimate, half_width, bound, samples"),
        ],
    },
    CatalogEntry {
        name: "divergence-probe",
        module: "negpower_lab",
        description: "Truncated P_p of boundaries through the origin and their growth rate",
        anchor: "Divergence of P_p when the origin lies on the boundary",
        csv: &[("<shape>.divergence_probe", "delta, truncated_perimeter")],
    },
    CatalogEntry {
        name: "weight-audit",
        module: "weights",
        description: "Evenness, convexity and derivative consistency of the built-in profiles",
        anchor: "Standing hypotheses on w",
        csv: &[],
    },
];

/// The available experiments.
pub fn list_experiments() -> &'static [CatalogEntry] {
    &CATALOG
}

/// Runs `config` (after resolving defaults). The report embeds the resolved
/// config and the elapsed time.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let c = config.resolved()?;
    let start = Instant::now();
    let mut rep = match c.experiment.as_str() {
        "fuglede" => fuglede(&c),
        "taylor-identities" => taylor(&c),
        "degenerate-ratio" => degenerate(&c),
        "ellipsoid-sharpness" => sharpness(&c),
        "penalized-min" => penalized(&c),
        "profile-checks" => profile_checks(&c),
        "negpower-deficit" => negpower(&c),
        "counterexample" => counterexample(&c),
        "divergence-probe" => probe(&c),
        "weight-audit" => audit(&c),
        other => Err(LabError::UnknownExperiment(other.to_string())),
    }?;
    rep.experiment = c.experiment.clone();
    rep.config = serde_json::to_value(&c)?;
    rep.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    Ok(rep)
}

/// Runs and writes `report.json`, `scalars.csv`, one CSV per table and the
/// resolved `config.toml` into `dir`. On failure writes `error.json` instead.
pub fn run_to_dir(config: &ExperimentConfig, dir: &Path) -> Result<(ExperimentReport, Vec<PathBuf>)> {
    match run(config) {
        Ok(rep) => {
            let mut files = rep.write_to(dir)?;
            let path = dir.join("config.toml");
            std::fs::write(&path, config.resolved()?.to_toml()?)?;
            files.push(path);
            Ok((rep, files))
        }
        Err(e) => {
            std::fs::create_dir_all(dir)?;
            let body = serde_json::json!({
                "experiment": config.experiment,
                "error": e.to_string(),
                "kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or_default(),
                "config": config,
            });
            std::fs::write(dir.join("error.json"), serde_json::to_string_pretty(&body)?)?;
            Err(e)
        }
    }
}

fn sphere_rule(c: &ExperimentConfig, n: usize) -> Result<SphereRule> {
    let q = c.quadrature.unwrap_or_default();
    SphereRule::new(n, q.resolution)
}

fn axisymmetric(c: &ExperimentConfig) -> AxisymmetricRules {
    let q = c.quadrature.unwrap_or_default();
    AxisymmetricRules {
        angular_order: q.angular_order,
        angular_panels: q.angular_panels,
        radial_order: q.radial_order,
    }
}

fn weight_choice(c: &ExperimentConfig) -> WeightChoice {
    c.weight.clone().unwrap_or(WeightChoice::Quadratic)
}

fn seed_of(c: &ExperimentConfig, i: usize) -> u64 {
    c.seed.wrapping_add(i as u64)
}

/// Checks that consecutive halvings scale `values` by `1/4` within `tol`.
fn halving_factors(amplitudes: &[f64], values: &[f64]) -> Vec<f64> {
    amplitudes
        .windows(2)
        .zip(values.windows(2))
        .map(|(a, v)| {
            let expected = (a[1] / a[0]).powi(2);
            v[1] / v[0] / expected
        })
        .collect()
}

fn fuglede(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let choice = weight_choice(c);
    let profile = choice.profile()?;
    let w = choice.weight()?;
    let (n, r) = (c.n(), c.r());
    let rule = sphere_rule(c, n)?;
    let pert = c.perturbation.unwrap_or_default();
    let amps = c.scan().amplitudes;
    let amp = pert.amplitude;
    let samples = c.samples.unwrap_or(0);
    let mut rep = ExperimentReport::new("fuglede");

    let rows: Vec<Result<(u64, crate::stability::StabilityReport)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(c, i);
            let dir = scale_to_w1inf(&random_direction(n, pert.max_degree, seed)?, 0.98 * amp, &rule)?;
            let set = volume_matched_perturbation(&w, r, &dir, 1.0, &rule, false)?;
            Ok((seed, fuglede_report(&w, r, n, &set, &rule, false)?))
        })
        .collect();
    let mut t = Table::new(
        "fuglede_samples",
        &[
            "seed",
            "deficit",
            "deficit_error",
            "grad_sq",
            "ratio_fuglede",
            "ratio_quant",
            "symdiff",
            "sup_u",
            "sup_grad",
            "volume_relative_error",
        ],
    );
    let (mut nonneg, mut w1inf) = (true, true);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        let (seed, s) = row?;
        let rf = s.ratio_fuglede.unwrap_or(f64::NAN);
        nonneg &= s.deficit >= 0.0;
        w1inf &= s.sup_u.max(s.sup_grad) <= amp;
        rmin = rmin.min(rf);
        rmax = rmax.max(rf);
        t.push(vec![
            seed as f64,
            s.deficit,
            s.deficit_error,
            s.grad_sq,
            rf,
            s.ratio_quant.unwrap_or(f64::NAN),
            s.symdiff,
            s.sup_u,
            s.sup_grad,
            s.volume_relative_error,
        ]);
    }
    rep.table(t);
    rep.scalar("ratio_fuglede_min", rmin, None);
    rep.scalar("ratio_fuglede_max", rmax, None);
    for k in 1..=pert.max_degree {
        rep.scalar(&format!("predicted_ratio_k{k}"), predicted_fuglede_ratio(&w, r, n, k), None);
    }
    rep.verdict("deficit_nonnegative", nonneg, format!("deficit >= 0 for all {samples} samples"));
    rep.verdict("w1inf_bound", w1inf, format!("max(sup|u|, sup|grad u|) <= {amp:e}"));
    // a positive floor is expected only when w''(r) > 0
    let floor = if profile.d2w(r) > 0.0 { 1e-2 } else { 0.0 };
    rep.verdict(
        "ratio_fuglede_floor",
        samples == 0 || rmin >= floor,
        format!("min ratio_fuglede = {rmin:.6e}, floor {floor:e}"),
    );

    let scaled: Vec<Result<Vec<(f64, f64)>>> = (0..samples.min(5))
        .into_par_iter()
        .map(|i| {
            let dir = scale_to_w1inf(&random_direction(n, pert.max_degree, seed_of(c, i))?, 1.0, &rule)?;
            amps.iter()
                .map(|&a| {
                    let set = volume_matched_perturbation(&w, r, &dir, a, &rule, false)?;
                    Ok((a, fuglede_report(&w, r, n, &set, &rule, false)?.deficit))
                })
                .collect()
        })
        .collect();
    let mut t = Table::new("amplitude_scaling", &["seed", "amplitude", "deficit", "deficit_over_amplitude_sq"]);
    let mut worst: f64 = 0.0;
    for (i, rows) in scaled.into_iter().enumerate() {
        let rows = rows?;
        for (a, d) in &rows {
            t.push(vec![seed_of(c, i) as f64, *a, *d, d / (a * a)]);
        }
        let (a, d): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        for f in halving_factors(&a, &d) {
            worst = worst.max((f - 1.0).abs());
        }
    }
    rep.table(t);
    rep.scalar("worst_scaling_deviation", worst, None);
    rep.verdict(
        "quadratic_scaling",
        worst <= 0.1,
        format!("deficit(a')/deficit(a) within 10% of (a'/a)^2; worst deviation {worst:.3e}"),
    );
    Ok(rep)
}

fn taylor(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let weights = c.weights.clone().unwrap_or_default();
    let dims = c.dims.clone().unwrap_or_default();
    let radii = c.scan().r_values;
    let mut rep = ExperimentReport::new("taylor-identities");
    let mut taylor = Table::new(
        "taylor",
        &["weight", "n", "r", "a", "b", "c", "d", "residual_first", "residual_second"],
    );
    let mut div = Table::new(
        "divergence",
        &[
            "weight",
            "n",
            "r",
            "lhs_first",
            "rhs_first",
            "residual_first",
            "lhs_second",
            "rhs_second",
            "residual_second",
        ],
    );
    let (mut t1, mut t2, mut d1, mut d2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (wi, choice) in weights.iter().enumerate() {
        let w = choice.profile()?;
        for &n in &dims {
            for &r in &radii {
                let tc = taylor_coefficients(&w, r, n)?;
                taylor.push(vec![wi as f64, n as f64, r, tc.a, tc.b, tc.c, tc.d, tc.residual_first, tc.residual_second]);
                t1 = t1.max(tc.residual_first);
                t2 = t2.max(tc.residual_second);
                let di = divergence_identities(&w, r, n)?;
                div.push(vec![
                    wi as f64,
                    n as f64,
                    r,
                    di.lhs_first,
                    di.rhs_first,
                    di.residual_first(),
                    di.lhs_second,
                    di.rhs_second,
                    di.residual_second(),
                ]);
                d1 = d1.max(di.residual_first());
                d2 = d2.max(di.residual_second());
            }
        }
    }
    rep.table(taylor);
    rep.table(div);
    for (name, v) in [
        ("taylor_first", t1),
        ("taylor_second", t2),
        ("divergence_first", d1),
        ("divergence_second", d2),
    ] {
        rep.scalar(&format!("max_residual_{name}"), v, None);
        rep.verdict(name, v <= 1e-8, format!("max relative residual {v:.3e} <= 1e-8"));
    }
    Ok(rep)
}

fn degenerate(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let w = weight_choice(c).profile()?;
    let (n, r) = (c.n(), c.r());
    let rules = axisymmetric(c);
    let rule = sphere_rule(c, n)?;
    let mut rep = ExperimentReport::new("degenerate-ratio");
    rep.merge("expansion", degenerate_expansion_check(&w, r, n, &rules)?);
    rep.merge("ratio", translated_ratio_scan(&w, r, n, &c.scan().eps, 10.0, &rule, &rules)?);
    Ok(rep)
}

fn sharpness(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let w = weight_choice(c).weight()?;
    let (n, r) = (c.n(), c.r());
    let rule = sphere_rule(c, n)?;
    let mut rep = ellipsoid_sharpness_scan(&w, r, n, &c.scan().eccentricities, 2.0, &rule)?;
    let span = rep.get_scalar("symdiff_span").unwrap_or(0.0);
    rep.verdict("symdiff_spans_two_decades", span >= 100.0, format!("max/min symdiff = {span:.3e}"));
    Ok(rep)
}

fn penalized(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let w = weight_choice(c).profile()?;
    let (n, r) = (c.n(), c.r());
    let rule = sphere_rule(c, n)?;
    let pc = c.penalized.unwrap_or_default();
    let pert = c.perturbation.unwrap_or_default();
    let mut f = PenalizedFunctional::at_thresholds(w, r, n, pc.alpha)?;
    if let Some(l1) = pc.lambda1 {
        f.lambda1 = l1;
    }
    if let Some(l2) = pc.lambda2 {
        f.lambda2 = l2;
    }
    let audit = f.audit()?;
    let mut rep = ExperimentReport::new("penalized-min");
    rep.scalar("lambda1", f.lambda1, None);
    rep.scalar("lambda2", f.lambda2, None);
    rep.scalar("lambda1_min", audit.lambda1_min, None);
    rep.scalar("lambda2_min", audit.lambda2_min, None);
    rep.verdict(
        "thresholds_satisfied",
        audit.satisfied(),
        format!("Λ₁ = {} >= {}, Λ₂ = {} >= {}", f.lambda1, audit.lambda1_min, f.lambda2, audit.lambda2_min),
    );

    let j_ball = evaluate_j(&f, &NearlySphericalSet::ball(n, r, pert.max_degree)?, &rule)?;
    rep.scalar("j_ball", j_ball, None);
    let init = |seed: u64| -> Result<HarmonicCoefficients> {
        let mut u = random_direction(n, pert.max_degree, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        u.set(0, 1, rng.gen_range(-0.5..0.5))?;
        scale_to_w1inf(&u, pert.amplitude, &rule)
    };
    let samples = c.samples.unwrap_or(0);
    let sets: Vec<Result<(u64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(c, i);
            let set = NearlySphericalSet::new(r, init(seed)?)?;
            let sup = set.sample(&rule)?.sup_abs();
            Ok((seed, evaluate_j(&f, &set, &rule)?, sup))
        })
        .collect();
    let mut t = Table::new("sampled_sets", &["seed", "j", "j_ball", "sup_u"]);
    let mut above = true;
    for s in sets {
        let (seed, j, sup) = s?;
        above &= j >= j_ball;
        t.push(vec![seed as f64, j, j_ball, sup]);
    }
    rep.table(t);
    rep.verdict("sampled_sets_above_ball", above, format!("J(E) >= J(B_r) = {j_ball:.12e} for {samples} sets"));

    if r == 1.0 {
        let at_r = f.radial_reduction(r)?;
        let mut t = Table::new("radial_reduction", &["rho", "f"]);
        let mut ok = true;
        for i in 0..=300 {
            let rho = r * (0.5 + 1.5 * i as f64 / 300.0);
            let v = f.radial_reduction(rho)?;
            ok &= v >= at_r - 1e-12 * at_r;
            t.push(vec![rho, v]);
        }
        rep.table(t);
        rep.verdict("radial_minimum_at_r", ok, "centered balls B_rho, rho in [r/2, 2r], never beat B_r");
    }

    let opts = DescentOptions {
        steps: pc.steps,
        step_size: pc.step_size,
        ..Default::default()
    };
    let outs: Vec<Result<_>> = (0..pc.descents)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(c, 1000 + i);
            Ok((seed, minimize_j(&f, &init(seed)?, &rule, &opts)?))
        })
        .collect();
    let mut t = Table::new(
        "descent_summary",
        &["seed", "initial_objective", "final_objective", "final_sup_u", "steps", "status"],
    );
    let mut returned = true;
    let mut traces = ExperimentReport::new("descent");
    for o in outs {
        let (seed, out) = o?;
        returned &= out.final_sup_u < 1e-3;
        let status = match out.status {
            DescentStatus::Converged => 0.0,
            DescentStatus::Stalled => 1.0,
            DescentStatus::MaxSteps => 2.0,
        };
        t.push(vec![
            seed as f64,
            out.initial_objective,
            out.final_objective,
            out.final_sup_u,
            out.steps_taken as f64,
            status,
        ]);
        let mut trace = out.trace;
        trace.name = format!("seed{seed}.{}", trace.name);
        traces.table(trace);
    }
    rep.table(t);
    rep.merge("descent", traces);
    rep.verdict(
        "descent_returns_to_ball",
        returned,
        format!("final sup|u| < 1e-3 for all {} descents", pc.descents),
    );
    Ok(rep)
}

fn profile_checks(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let w = weight_choice(c).profile()?;
    let n = c.n();
    let p = Profile::new(w, n)?;
    let samples = c.samples.unwrap_or(100).max(1);
    let mut rep = ExperimentReport::new("profile-checks");
    let mut t = Table::new(
        "psi_checks",
        &["s", "t", "psi_error", "psi_derivative", "psi_derivative_fd", "derivative_error"],
    );
    let (mut inv, mut der) = (0.0f64, 0.0f64);
    for i in 1..=samples {
        let s = 3.0 * i as f64 / samples as f64;
        let t_val = p.phi(s);
        let e = (p.psi(t_val)? - s).abs() / s;
        let h = 1e-4 * t_val;
        let fd = (p.psi(t_val + h)? - p.psi(t_val - h)?) / (2.0 * h);
        let exact = p.psi_derivative(t_val)?;
        let de = (fd - exact).abs() / exact.abs();
        inv = inv.max(e);
        der = der.max(de);
        t.push(vec![s, t_val, e, exact, fd, de]);
    }
    rep.table(t);
    rep.scalar("max_psi_error", inv, None);
    rep.scalar("max_derivative_error", der, None);
    rep.verdict("psi_inverts_phi", inv <= 1e-10, format!("max |Psi(Phi(s)) - s|/s = {inv:.3e} on (0, 3]"));
    rep.verdict(
        "psi_derivative_identity",
        der <= 1e-6,
        format!("max relative FD mismatch of Psi' = {der:.3e}"),
    );
    let top = p.phi(3.0);
    let ts: Vec<f64> = (1..=samples).map(|i| top * i as f64 / samples as f64).collect();
    let ineq = check_profile_inequality(&p, &ts)?;
    for s in ineq.scalars {
        rep.scalar(&s.name, s.value, s.error);
    }
    ineq.tables.into_iter().for_each(|t| rep.table(t));
    for v in ineq.verdicts {
        rep.verdict(&v.name, v.passed, v.detail);
    }
    Ok(rep)
}

fn negpower(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let g = c.negpower.unwrap_or_default();
    let (n, r) = (c.n(), c.r());
    let rule = sphere_rule(c, n)?;
    let pert = c.perturbation.unwrap_or_default();
    let amps = c.scan().amplitudes;
    let w = crate::weights::RadialWeight::power(g.p);
    let samples = c.samples.unwrap_or(0);
    let rows: Vec<Result<Vec<[f64; 8]>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(c, i);
            let dir = scale_to_w1inf(&random_direction(n, pert.max_degree, seed)?, 0.98 * pert.amplitude, &rule)?;
            let a0 = amps.first().copied().unwrap_or(pert.amplitude);
            amps.iter()
                .map(|&a| {
                    let set = volume_matched_perturbation(&w, r, &dir, a / a0, &rule, true)?;
                    let d = negpower_deficit(g.p, &set, &rule)?;
                    let s = d.stability;
                    Ok([
                        seed as f64,
                        a,
                        s.deficit,
                        s.deficit_error,
                        s.symdiff,
                        s.ratio_quant.unwrap_or(f64::NAN),
                        d.outside_volume,
                        d.divergence_bound,
                    ])
                })
                .collect()
        })
        .collect();
    let mut rep = ExperimentReport::new("negpower-deficit");
    let mut t = Table::new(
        "negpower_samples",
        &[
            "seed",
            "amplitude",
            "deficit",
            "deficit_error",
            "symdiff",
            "ratio_quant",
            "outside_volume",
            "divergence_bound",
        ],
    );
    let mut nonneg = true;
    let mut worst: f64 = 0.0;
    for row in rows {
        let row = row?;
        nonneg &= row.iter().all(|x| x[2] >= 0.0);
        let a: Vec<f64> = row.iter().map(|x| x[1]).collect();
        let d: Vec<f64> = row.iter().map(|x| x[2]).collect();
        for f in halving_factors(&a, &d) {
            worst = worst.max((f - 1.0).abs());
        }
        row.into_iter().for_each(|x| t.push(x.to_vec()));
    }
    rep.table(t);
    rep.scalar("worst_scaling_deviation", worst, None);
    rep.verdict("deficit_nonnegative", nonneg, format!("P_p(E) >= P_p(B_r) for {samples} seeds"));
    rep.verdict(
        "quadratic_scaling",
        worst <= 0.1,
        format!("deficit(a')/deficit(a) within 10% of (a'/a)^2; worst deviation {worst:.3e}"),
    );
    Ok(rep)
}

fn counterexample(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let g = c.negpower.unwrap_or_default();
    let n = c.n();
    let scan = c.scan();
    let mut rep = counterexample_scan(n, g.p, g.alpha, &scan.r_values, g.count, c.seed, g.check_balls)?;
    let admissible = scan
        .r_values
        .iter()
        .copied()
        .filter(|r| *r < 2f64.powf(-g.alpha))
        .fold(f64::NAN, f64::max);
    if admissible.is_finite() && !scan.rho.is_empty() {
        let mut params = CounterexampleParams::new(n, g.p, g.alpha, admissible);
        params.count = g.count;
        params.seed = c.seed;
        let union = build_counterexample(params)?;
        rep.scalar("density_r", admissible, None);
        rep.merge(
            "density",
            origin_density_curve(&union, g.alpha, &scan.rho, g.mc_samples, c.seed, g.ci_target)?,
        );
    }
    Ok(rep)
}

fn probe(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let g = c.negpower.unwrap_or_default();
    let shapes = match g.probe {
        Some(s) => vec![s],
        None => vec![ProbeShape::Hyperplane, ProbeShape::TangentSphere { radius: 1.0 }],
    };
    let mut rep = ExperimentReport::new("divergence-probe");
    for s in shapes {
        let name = match s {
            ProbeShape::Hyperplane => "hyperplane",
            ProbeShape::TangentSphere { .. } => "tangent-sphere",
        };
        rep.merge(name, divergence_probe(g.p, c.n(), s, &c.scan().delta, g.delta_max)?);
    }
    Ok(rep)
}

fn slug(choice: &WeightChoice) -> String {
    let text = serde_json::to_value(choice)
        .ok()
        .and_then(|v| v.get("name").and_then(|n| n.as_str()).map(str::to_string))
        .unwrap_or_default();
    text.chars().filter(|ch| ch.is_ascii_alphanumeric() || *ch == '-').collect()
}

fn audit(c: &ExperimentConfig) -> Result<ExperimentReport> {
    let grid = symmetric_grid(3.0, 601);
    let mut rep = ExperimentReport::new("weight-audit");
    for (i, choice) in c.weights.clone().unwrap_or_default().iter().enumerate() {
        let prefix = format!("w{i}-{}", slug(choice));
        match choice {
            WeightChoice::Power { p } => {
                let w = choice.weight()?;
                let ts: Vec<f64> = (1..=1000).map(|k| 0.01 * k as f64).collect();
                let mut sub = ExperimentReport::new("power-audit");
                let dec = ts.windows(2).all(|t| w.value(t[1]) < w.value(t[0]));
                sub.verdict("strictly_decreasing", *p >= 0.0 || dec, format!("t^{p} sampled on [0.01, 10]"));
                rep.merge(&prefix, sub);
            }
            _ => rep.merge(&prefix, check_admissible(&choice.profile()?, &grid)?),
        }
    }
    Ok(rep)
}
